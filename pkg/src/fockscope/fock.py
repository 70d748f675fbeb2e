"""Photon-number-diagonal state algebra: pair source, heralding, loss, efficiency budget."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NORM_TOL = 1e-12


class InvalidParameter(ValueError):
    pass


class NoHeraldPossible(ValueError):
    """Trigger click probability is zero for every photon number."""


@dataclass(frozen=True)
class FockDiagonal:
    """Truncated photon-number distribution p_0..p_{n_max}."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 3:
            raise InvalidParameter("diagonal needs at least p_0..p_2 (n_max >= 2)")
        if np.any(arr < 0.0):
            raise InvalidParameter("negative probability")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise InvalidParameter(f"probabilities sum to {arr.sum()!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def from_weights(cls, weights) -> "FockDiagonal":
        w = np.asarray(weights, dtype=np.float64)
        tot = w.sum()
        if tot <= 0.0:
            raise InvalidParameter("weights sum to zero")
        return cls(w / tot)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def mean_photons(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def __eq__(self, other) -> bool:
        return isinstance(other, FockDiagonal) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class SqueezeParam:
    """Pair amplitude of the down-conversion source; pair-number weights go as gamma^(2n)."""

    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidParameter(f"gamma must be in [0, 1), got {self.gamma}")

    @classmethod
    def from_gamma_sq(cls, gamma_sq: float) -> "SqueezeParam":
        if gamma_sq < 0.0:
            raise InvalidParameter("gamma_sq must be nonnegative")
        return cls(float(np.sqrt(gamma_sq)))

    @property
    def gamma_sq(self) -> float:
        return self.gamma * self.gamma


@dataclass(frozen=True)
class HeraldParams:
    """Trigger-channel detection efficiency, channel losses included."""

    eta_t: float

    def __post_init__(self):
        if not 0.0 <= self.eta_t <= 1.0:
            raise InvalidParameter(f"eta_t must be in [0, 1], got {self.eta_t}")


@dataclass(frozen=True)
class EfficiencyBudget:
    """Per-stage transmissions whose product is the overall efficiency."""

    eta_p: float
    eta_m: float
    eta_l: float
    eta_d: float
    eta_el: float

    def __post_init__(self):
        for name in ("eta_p", "eta_m", "eta_l", "eta_d", "eta_el"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{name} must be in [0, 1], got {v}")


@lru_cache(maxsize=8)
def _binomial_triangle(size: int) -> np.ndarray:
    # multiplicative recurrence keeps everything in float64; exact for n <= 64
    c = np.zeros((size, size))
    c[:, 0] = 1.0
    for n in range(1, size):
        for m in range(1, n + 1):
            c[n, m] = c[n, m - 1] * (n - m + 1) / m
    return c


def pair_distribution(gamma: SqueezeParam, n_max: int = 10) -> FockDiagonal:
    """Pair-number distribution of the source: p_n proportional to gamma^(2n), renormalized."""
    if n_max < 2:
        raise InvalidParameter("n_max must be at least 2")
    g2 = gamma.gamma_sq
    w = g2 ** np.arange(n_max + 1, dtype=np.float64)
    return FockDiagonal.from_weights(w)


def herald(pairs: FockDiagonal, h: HeraldParams) -> FockDiagonal:
    """Signal-mode distribution conditioned on at least one trigger click.

    Weights are p_n * (1 - (1 - eta_t)^n), the exact click probability.
    """
    n = np.arange(pairs.probs.size, dtype=np.float64)
    w = pairs.probs * (1.0 - (1.0 - h.eta_t) ** n)
    if w.sum() <= 0.0:
        raise NoHeraldPossible("trigger never fires for this source")
    return FockDiagonal.from_weights(w)


def loss_channel(state: FockDiagonal, eta: float) -> FockDiagonal:
    """Binomial loss map: each photon independently survives with probability eta."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameter(f"eta must be in [0, 1], got {eta}")
    if eta == 1.0:
        return FockDiagonal(state.probs.copy())
    size = state.probs.size
    if eta == 0.0:
        out = np.zeros(size)
        out[0] = 1.0
        return FockDiagonal(out)
    c = _binomial_triangle(size)
    n = np.arange(size, dtype=np.float64)
    # transfer[m, k] = C(k, m) eta^m (1-eta)^(k-m); C is zero for m > k
    transfer = c.T * eta ** n[:, None] * (1.0 - eta) ** np.clip(n[None, :] - n[:, None], 0.0, None)
    out = transfer @ state.probs
    return FockDiagonal.from_weights(out)


def effective_single_photon(eta: float) -> FockDiagonal:
    """Two-level model (1-eta)|0><0| + eta|1><1| that ignores multipair events."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameter(f"eta must be in [0, 1], got {eta}")
    return FockDiagonal(np.array([1.0 - eta, eta, 0.0]))


def heralded_lossy_state(gamma_sq: float, eta_t: float, eta: float, n_max: int = 10) -> FockDiagonal:
    """Full source chain: pair source, trigger heralding, then optical loss."""
    pairs = pair_distribution(SqueezeParam.from_gamma_sq(gamma_sq), n_max)
    return loss_channel(herald(pairs, HeraldParams(eta_t)), eta)


def heralded_loss_truncated(eta: float, gamma_sq: float) -> FockDiagonal:
    """Heralded-and-lossy diagonal truncated at order gamma^4 (weak-trigger limit).

    Weights: (1-eta)g + 2(1-eta)^2 g^2, eta g + 4 eta (1-eta) g^2, 2 eta^2 g^2
    with g = gamma_sq. This is the three-level model inverted by
    :func:`fockscope.tomography.extract_eta_gamma`.
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameter(f"eta must be in [0, 1], got {eta}")
    if gamma_sq < 0.0:
        raise InvalidParameter("gamma_sq must be nonnegative")
    g = gamma_sq
    w = np.array([
        (1.0 - eta) * g + 2.0 * (1.0 - eta) ** 2 * g * g,
        eta * g + 4.0 * eta * (1.0 - eta) * g * g,
        2.0 * eta * eta * g * g,
    ])
    return FockDiagonal.from_weights(w)


def overall_efficiency(budget: EfficiencyBudget) -> float:
    return budget.eta_p * budget.eta_m * budget.eta_l * budget.eta_d * budget.eta_el


def visibility_to_mode_match(v: float) -> float:
    """Mode-matching efficiency from interference visibility: eta_m = v^2."""
    if not 0.0 <= v <= 1.0:
        raise InvalidParameter(f"visibility must be in [0, 1], got {v}")
    return v * v


def fidelity(state: FockDiagonal, n: int) -> float:
    """Overlap with Fock state |n> (equals p_n for a diagonal state)."""
    if n < 0 or n > state.n_max:
        raise InvalidParameter(f"n={n} outside 0..{state.n_max}")
    return float(state.probs[n])
