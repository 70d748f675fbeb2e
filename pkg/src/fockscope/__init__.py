"""fockscope: simulate and reconstruct heralded single-photon homodyne data in real time."""

from .fock import (
    EfficiencyBudget,
    FockDiagonal,
    HeraldParams,
    SqueezeParam,
    effective_single_photon,
    fidelity,
    herald,
    heralded_loss_truncated,
    heralded_lossy_state,
    loss_channel,
    overall_efficiency,
    pair_distribution,
    visibility_to_mode_match,
)
from .quadrature import (
    QuadratureBatch,
    WignerSection,
    calibrate,
    fock_marginal,
    marginal_density,
    sample_quadratures,
    wigner_section,
)

__version__ = "0.1.0"

__all__ = [
    "EfficiencyBudget",
    "FockDiagonal",
    "HeraldParams",
    "QuadratureBatch",
    "SqueezeParam",
    "WignerSection",
    "calibrate",
    "effective_single_photon",
    "fidelity",
    "fock_marginal",
    "herald",
    "heralded_loss_truncated",
    "heralded_lossy_state",
    "loss_channel",
    "marginal_density",
    "overall_efficiency",
    "pair_distribution",
    "sample_quadratures",
    "visibility_to_mode_match",
    "wigner_section",
]
