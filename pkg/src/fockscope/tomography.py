"""State estimation from quadrature data.

Maximum-likelihood reconstruction of the photon-number diagonal uses the
mixture expectation-maximization update

    p_n <- p_n * (1/N) * sum_j pi_n(q_j) / Pr(q_j),    Pr(q) = sum_n p_n pi_n(q)

with pi_n(q) the number-state quadrature density. For a phase-randomized
measurement this has the same fixed points as the iterative operator update
on the diagonal while guaranteeing a non-decreasing likelihood; the operator
form is kept in the test suite as a cross-check. Per-element uncertainties
come from the observed Fisher information at the estimate, projected onto
the tangent space of the probability simplex.

The streaming estimator implements the live display: the variance of
calibrated quadratures minus 1/2 estimates the overall efficiency under the
two-level model (and the mean photon number in general), emitted once per
block of segments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from . import kernels
from .fock import FockDiagonal, InvalidParameter, heralded_loss_truncated, loss_channel
from .quadrature import QuadratureBatch, wavefunction_sq

BOUNDARY_EPS = 1e-12


class CalibrationRequired(ValueError):
    pass


class ModelMismatch(RuntimeError):
    pass


class VarianceEstimate(NamedTuple):
    eta: float
    sigma: float


class EtaGammaEstimate(NamedTuple):
    eta: float
    gamma_sq: float
    gamma_identifiable: bool


@dataclass(frozen=True)
class MaxLikConfig:
    n_max: int = 4
    tol: float = 1e-10
    max_iter: int = 5000

    def __post_init__(self):
        if self.n_max < 2:
            raise InvalidParameter("n_max must be at least 2")
        if not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be at least 1")


@dataclass
class ReconstructionResult:
    state: FockDiagonal
    sigma: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    ll_trace: np.ndarray = field(repr=False, default=None)


def eta_from_variance(batch: QuadratureBatch) -> VarianceEstimate:
    """Variance-based efficiency estimate: var(q) - 1/2 with its standard error.

    Under the two-level model this is the overall efficiency; for a general
    diagonal state it estimates the mean photon number.
    """
    if not batch.calibrated:
        raise CalibrationRequired("variance estimator needs calibrated quadratures")
    v = batch.values
    if v.size < 100:
        raise InvalidParameter(f"need at least 100 samples, got {v.size}")
    centered = v - v.mean()
    m2 = float(np.mean(centered ** 2))
    m4 = float(np.mean(centered ** 4))
    se = np.sqrt(max(m4 - m2 * m2, 0.0) / v.size)
    return VarianceEstimate(m2 - 0.5, se)


class StreamingEstimator:
    """Tumbling-block moment accumulator behind the live efficiency display.

    Single writer; ``latest_eta`` may be read concurrently from other threads.
    """

    def __init__(self, block_size: int = 5000):
        if not 1000 <= block_size <= 100_000:
            raise InvalidParameter("block_size must be in [1000, 100000]")
        self.block_size = block_size
        self.count = 0
        self.sum_q = 0.0
        self.sum_q2 = 0.0
        self.latest_eta: float | None = None
        self.updates_emitted = 0

    def reset(self) -> None:
        self.count = 0
        self.sum_q = 0.0
        self.sum_q2 = 0.0

    def update(self, new_samples) -> list[float]:
        """Accumulate samples; returns one eta per completed block (possibly none)."""
        x = np.asarray(new_samples, dtype=np.float64)
        emitted = []
        pos = 0
        while pos < x.size:
            take = min(self.block_size - self.count, x.size - pos)
            chunk = x[pos:pos + take]
            self.count += take
            self.sum_q += float(chunk.sum())
            self.sum_q2 += float((chunk * chunk).sum())
            pos += take
            if self.count == self.block_size:
                mean = self.sum_q / self.count
                eta = (self.sum_q2 / self.count - mean * mean) - 0.5
                self.latest_eta = eta
                self.updates_emitted += 1
                emitted.append(eta)
                self.reset()
        return emitted


def maxlik_diag(batch: QuadratureBatch, config: MaxLikConfig = MaxLikConfig()) -> ReconstructionResult:
    """EM maximum-likelihood fit of the photon-number diagonal to quadrature data.

    Stops when the relative log-likelihood change drops below ``config.tol``
    or after ``config.max_iter`` updates (``converged`` is False in the
    latter case; the estimate is still returned).
    """
    if not batch.calibrated:
        raise CalibrationRequired("reconstruction needs calibrated quadratures")
    n = len(batch)
    if n < 10 * config.n_max:
        raise InvalidParameter(f"need at least {10 * config.n_max} samples, got {n}")

    pi = np.ascontiguousarray(wavefunction_sq(batch.values, config.n_max))
    p = np.full(config.n_max + 1, 1.0 / (config.n_max + 1))

    trace = []
    ll_prev = None
    converged = False
    iterations = 0
    for _ in range(config.max_iter):
        p_next, ll = kernels.em_step(pi, p)
        trace.append(ll)
        iterations += 1
        p = p_next
        if ll_prev is not None and abs(ll - ll_prev) < config.tol * abs(ll_prev):
            converged = True
            ll_prev = ll
            break
        ll_prev = ll

    state = FockDiagonal.from_weights(p)
    result = ReconstructionResult(
        state=state,
        sigma=np.array([]),
        log_likelihood=kernels.log_likelihood(pi, state.probs),
        iterations=iterations,
        converged=converged,
        ll_trace=np.asarray(trace),
    )
    result.sigma = fisher_sigma(state, batch, _pi=pi)
    return result


def fisher_sigma(state: FockDiagonal, batch: QuadratureBatch, _pi: np.ndarray = None) -> np.ndarray:
    """Per-element standard deviations from the observed Fisher information.

    The normalization constraint is eliminated by dropping one element of the
    support; its variance is recovered from the covariance of the rest. For a
    boundary estimate (some p_n = 0) the information is evaluated on the
    reduced support and zeros are reported elsewhere.
    """
    if not batch.calibrated:
        raise CalibrationRequired("fisher_sigma needs calibrated quadratures")
    k = state.n_max + 1
    pi = _pi if _pi is not None else np.ascontiguousarray(wavefunction_sq(batch.values, state.n_max))
    info = kernels.fisher_information(pi, state.probs)

    support = np.flatnonzero(state.probs > BOUNDARY_EPS)
    sigma = np.zeros(k)
    if support.size < 2:
        return sigma
    last = support[-1]
    rest = support[:-1]
    reduced = (
        info[np.ix_(rest, rest)]
        - info[np.ix_(rest, [last])]
        - info[np.ix_([last], rest)]
        + info[last, last]
    )
    cov = np.linalg.inv(reduced)
    sigma[rest] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    sigma[last] = np.sqrt(max(cov.sum(), 0.0))
    return sigma


def _truncated_ratios(eta: float, g: float) -> np.ndarray:
    d = heralded_loss_truncated(eta, g).probs
    return np.array([d[1] / d[0], d[2] / d[0]])


def _exact_ratios(eta: float, g: float, n_max: int = 14) -> np.ndarray:
    # weak-trigger limit of the heralded source: weights n * g^n, then loss
    n = np.arange(n_max + 1, dtype=np.float64)
    heralded = FockDiagonal.from_weights(n * g ** n)
    d = loss_channel(heralded, eta).probs
    return np.array([d[1] / d[0], d[2] / d[0]])


def extract_eta_gamma(state: FockDiagonal, model: str = "truncated") -> EtaGammaEstimate:
    """Solve the heralded-loss model for (eta, gamma^2) from a reconstructed diagonal.

    ``model="truncated"`` inverts the order-gamma^4 three-level expansion;
    ``model="exact"`` inverts the full heralding-plus-loss chain in the
    weak-trigger limit. With rho_22 = 0 the pair amplitude is unidentifiable:
    eta falls back to the two-level value and the flag is cleared.
    """
    p = state.probs
    if p[1] <= 0.0:
        raise InvalidParameter("rho_11 must be positive")
    if model not in ("truncated", "exact"):
        raise InvalidParameter(f"unknown model {model!r}")
    if p[2] <= 0.0:
        return EtaGammaEstimate(float(p[1] / (p[0] + p[1])), 0.0, False)
    if p[0] <= 0.0:
        raise ModelMismatch("rho_00 = 0 has no solution with eta < 1")

    target = np.array([p[1] / p[0], p[2] / p[0]])
    ratios = _truncated_ratios if model == "truncated" else _exact_ratios

    eta0 = float(np.clip(p[1] / (p[0] + p[1]), 1e-3, 1 - 1e-3))
    g0 = float(np.clip(p[2] / p[1] / (2.0 * eta0), 1e-5, 0.24))

    # solve in logistic coordinates so the search space is exactly
    # (0, 1) x (0, 0.25) and the residual stays smooth
    def unpack(x):
        return 1.0 / (1.0 + np.exp(-x[0])), 0.25 / (1.0 + np.exp(-x[1]))

    def residual(x):
        eta, g = unpack(x)
        return ratios(eta, g) - target

    x0 = [np.log(eta0 / (1.0 - eta0)), np.log(g0 / (0.25 - g0))]
    sol = optimize.root(residual, x0=x0, method="hybr", tol=1e-12)
    eta, g = unpack(sol.x)
    scale = np.abs(target) + 1.0
    if np.max(np.abs(residual(sol.x)) / scale) > 1e-10:
        raise ModelMismatch("no (eta, gamma^2) solves the heralded-loss model for this diagonal")
    return EtaGammaEstimate(float(eta), float(g), True)
