"""Quadrature statistics of Fock-diagonal states.

Marginal distributions use the scaling convention <Q^2> = 1/2 for vacuum, so
the number-state marginal is |psi_n(q)|^2 = H_n(q)^2 exp(-q^2) / (2^n n! sqrt(pi)).
The wavefunctions are evaluated with the normalized two-term recurrence

    phi_0 = pi^(-1/4) exp(-q^2/2)
    phi_{n+1} = q sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1}

which never overflows; phi_n^2 is the marginal directly.

Sampling draws the photon number from the diagonal and then the quadrature
through a tabulated inverse CDF (4096 points per photon number, linear
interpolation), which keeps the inner loop branch-free for the streaming
pipeline. Wigner cross-sections use W_n(r) = (-1)^n L_n(2 r^2) exp(-r^2)/pi,
normalized so the vacuum gives 1/pi at the origin and the full function
integrates to one over the phase plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .fock import FockDiagonal, InvalidParameter

GRID_POINTS = 4096
MIN_CALIBRATION_SAMPLES = 100


class CalibrationFailed(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureBatch:
    """Quadrature samples plus the vacuum-reference scaling metadata."""

    values: np.ndarray
    calibrated: bool = False
    vacuum_variance_ref: float = float("nan")

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def variance(self) -> float:
        return float(np.var(self.values))


@dataclass(frozen=True)
class WignerSection:
    """Radial cross-section W(r) of a phase-randomized Wigner function."""

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.array(self.radii, dtype=np.float64)
        w = np.array(self.values, dtype=np.float64)
        r.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", w)


def wavefunction_sq(q, n_max: int) -> np.ndarray:
    """Matrix of |psi_n(q)|^2 for n = 0..n_max, one row per q value."""
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    out = np.empty((q.size, n_max + 1))
    prev = np.pi ** -0.25 * np.exp(-0.5 * q * q)
    out[:, 0] = prev * prev
    if n_max >= 1:
        cur = np.sqrt(2.0) * q * prev
        out[:, 1] = cur * cur
        for n in range(1, n_max):
            nxt = q * np.sqrt(2.0 / (n + 1)) * cur - np.sqrt(n / (n + 1.0)) * prev
            prev, cur = cur, nxt
            out[:, n + 1] = cur * cur
    return out


def fock_marginal(n: int, q):
    """Quadrature density |psi_n(q)|^2 of the number state |n>."""
    if n < 0:
        raise InvalidParameter("photon number must be nonnegative")
    vals = wavefunction_sq(q, n)[:, n]
    return float(vals[0]) if np.isscalar(q) else vals


def marginal_density(state: FockDiagonal, q):
    """Phase-randomized quadrature density sum_n p_n |psi_n(q)|^2."""
    vals = wavefunction_sq(q, state.n_max) @ state.probs
    return float(vals[0]) if np.isscalar(q) else vals


def grid_span(n: int) -> float:
    """Half-width of the sampling grid for photon number n."""
    return 8.0 + 2.0 * np.sqrt(n)


@lru_cache(maxsize=16)
def _sampling_tables(n_max: int):
    """Per-photon-number (q grid, CDF) tables for inverse-CDF sampling."""
    qgrid = np.empty((n_max + 1, GRID_POINTS))
    cdf = np.empty((n_max + 1, GRID_POINTS))
    for n in range(n_max + 1):
        span = grid_span(n)
        g = np.linspace(-span, span, GRID_POINTS)
        pdf = wavefunction_sq(g, n)[:, n]
        c = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(g))))
        c /= c[-1]
        c[-1] = 1.0
        qgrid[n] = g
        cdf[n] = c
    qgrid.setflags(write=False)
    cdf.setflags(write=False)
    return qgrid, cdf


def draw_quadratures(state: FockDiagonal, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw quadrature samples from a diagonal state using an existing generator."""
    qgrid, cdf = _sampling_tables(state.n_max)
    cum = np.cumsum(state.probs)
    cum[-1] = 1.0
    comp = np.searchsorted(cum, rng.random(count), side="right").astype(np.int64)
    u = rng.random(count)
    return kernels.sample_inverse_cdf(comp, u, qgrid, cdf)


def sample_quadratures(state: FockDiagonal, count: int, seed: int) -> QuadratureBatch:
    """I.i.d. quadrature samples; bit-identical for a fixed seed."""
    if count < 1:
        raise InvalidParameter("count must be at least 1")
    rng = np.random.default_rng(seed)
    values = draw_quadratures(state, count, rng)
    return QuadratureBatch(values, calibrated=True, vacuum_variance_ref=0.5)


def calibrate(signal_raw: QuadratureBatch, vacuum_raw: QuadratureBatch) -> QuadratureBatch:
    """Rescale raw samples so the accompanying vacuum reference has variance 1/2."""
    if len(vacuum_raw) < MIN_CALIBRATION_SAMPLES:
        raise CalibrationFailed(
            f"need at least {MIN_CALIBRATION_SAMPLES} vacuum samples, got {len(vacuum_raw)}"
        )
    var = vacuum_raw.variance()
    if var <= 0.0:
        raise CalibrationFailed("vacuum variance is not positive")
    scale = np.sqrt(0.5 / var)
    return QuadratureBatch(signal_raw.values * scale, calibrated=True, vacuum_variance_ref=var)


def laguerre_values(x, n_max: int) -> np.ndarray:
    """Laguerre polynomials L_0..L_{n_max} at x via the three-term recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty((x.size, n_max + 1))
    out[:, 0] = 1.0
    if n_max >= 1:
        out[:, 1] = 1.0 - x
        for k in range(1, n_max):
            out[:, k + 1] = ((2 * k + 1 - x) * out[:, k] - k * out[:, k - 1]) / (k + 1)
    return out


def wigner_section(state: FockDiagonal, radii) -> WignerSection:
    """Radial Wigner cross-section W(r) = sum_n p_n (-1)^n L_n(2 r^2) exp(-r^2) / pi."""
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    lag = laguerre_values(2.0 * r * r, state.n_max)
    signs = (-1.0) ** np.arange(state.n_max + 1)
    w = (lag * signs) @ state.probs * np.exp(-r * r) / np.pi
    return WignerSection(r, w)
