"""Waveform-level model of the pulsed homodyne detector and digitizer.

Each laser pulse deposits its quadrature value through a single-pole low-pass
impulse response (time constant set by the -3 dB bandwidth); the responses of
consecutive pulses overlap, which is what produces the residual correlations
between neighboring pulse windows. Additive Gaussian electronic noise is
scaled so that the shot-to-electronic power ratio of an integrated window
matches ``snr_db``, and the trace is quantized to ``adc_bits`` levels over a
fixed full-scale range before integration.

Integration windows tile the segment: each pulse owns the samples closer to
its center than to any neighbor, one pulse period wide on average. Response
rows are normalized so an isolated noiseless pulse integrates to exactly its
quadrature value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .fock import InvalidParameter

CLIP_FLAG_FRACTION = 0.001
MIN_CROSSTALK_SEGMENTS = 10_000


class InvalidTrace(ValueError):
    pass


class EstimationFailed(ValueError):
    pass


class IllConditionedModel(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    rep_rate: float = 76e6
    bandwidth_3db: float = 90e6
    segment_length: float = 128e-9
    neighbor_pulses: int = 8
    sample_rate: float = 500e6
    adc_bits: int = 8
    snr_db: float = 14.0
    # Digitizer range in units of the peak-sample shot-noise std. The card's
    # range must absorb residual common-mode swing, so the difference signal
    # only occupies a small slice of it; 40 makes 8-bit quantization leave a
    # visible non-Gaussian excess in the vacuum marginal while 12+ bits do not.
    full_scale_sigmas: float = 40.0

    def __post_init__(self):
        if self.rep_rate <= 0 or self.bandwidth_3db <= 0 or self.sample_rate <= 0:
            raise InvalidParameter("rates must be positive")
        if self.segment_length < (self.neighbor_pulses + 1) / self.rep_rate:
            raise InvalidParameter("segment too short for the pulse train")
        if not 4 <= self.adc_bits <= 24:
            raise InvalidParameter(f"adc_bits must be in [4, 24], got {self.adc_bits}")
        if self.full_scale_sigmas <= 0:
            raise InvalidParameter("full_scale_sigmas must be positive")

    @property
    def n_pulses(self) -> int:
        return self.neighbor_pulses + 1

    @property
    def signal_index(self) -> int:
        return self.neighbor_pulses // 2

    @property
    def n_samples(self) -> int:
        return int(round(self.segment_length * self.sample_rate))


@dataclass
class SegmentTrace:
    """One digitized segment: samples plus pulse bookkeeping."""

    samples: np.ndarray
    pulse_centers: np.ndarray
    signal_index: int
    clipped: bool = False

    def __post_init__(self):
        centers = np.asarray(self.pulse_centers, dtype=np.int64)
        if np.any(np.diff(centers) <= 0):
            raise InvalidTrace("pulse centers must be strictly increasing")
        if not 0 <= self.signal_index < centers.size:
            raise InvalidTrace("signal index out of range")
        self.pulse_centers = centers
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass(frozen=True)
class CrosstalkModel:
    """Leakage coefficients c_k, k = -K..K, of pulse k into window 0; c_0 = 1."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64)
        if c.size % 2 != 1:
            raise InvalidParameter("coefficient array must have odd length")
        k = c.size // 2
        if c[k] != 1.0:
            raise InvalidParameter("center coefficient must be 1")
        side = np.delete(c, k)
        if np.any(np.abs(side) >= 1.0):
            raise InvalidParameter("off-center coefficients must have magnitude < 1")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def identity(cls, max_lag: int = 0) -> "CrosstalkModel":
        c = np.zeros(2 * max_lag + 1)
        c[max_lag] = 1.0
        return cls(c)

    @property
    def max_lag(self) -> int:
        return self.coefficients.size // 2


def window_bounds(centers: np.ndarray, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Tile the segment into per-pulse windows split at midpoints between centers."""
    centers = np.asarray(centers, dtype=np.int64)
    mids = (centers[:-1] + centers[1:] + 1) // 2
    period = int(round(float(np.mean(np.diff(centers))))) if centers.size > 1 else n_samples
    lo = np.concatenate(([centers[0] - period // 2], mids))
    hi = np.concatenate((mids, [centers[-1] + (period - period // 2)]))
    if lo[0] < 0 or hi[-1] > n_samples:
        raise InvalidTrace("integration windows fall outside the segment")
    return lo.astype(np.int64), hi.astype(np.int64)


@lru_cache(maxsize=8)
def _geometry(config: DetectorConfig):
    """Precomputed response matrix, windows, noise sigma and quantizer for a config."""
    n_samples = config.n_samples
    n_pulses = config.n_pulses
    period = config.sample_rate / config.rep_rate
    tau = config.sample_rate / (2.0 * math.pi * config.bandwidth_3db)

    span = (n_pulses - 1) * period
    offset = (n_samples - span) / 2.0
    times = offset + period * np.arange(n_pulses)
    centers = np.round(times).astype(np.int64)
    lo, hi = window_bounds(centers, n_samples)

    idx = np.arange(n_samples, dtype=np.float64)
    dt = idx[None, :] - times[:, None]
    resp = np.where(dt >= 0.0, np.exp(-np.maximum(dt, 0.0) / tau), 0.0)
    own = np.array([resp[k, lo[k]:hi[k]].sum() for k in range(n_pulses)])
    resp /= own[:, None]

    if math.isinf(config.snr_db):
        noise_sigma = 0.0
    else:
        window_var = 0.5 * 10.0 ** (-config.snr_db / 10.0)
        noise_sigma = math.sqrt(window_var / float(np.mean(hi - lo)))

    peak = float(resp.max())
    sample_sigma = math.sqrt(0.5 * peak * peak + noise_sigma * noise_sigma)
    full_scale = config.full_scale_sigmas * sample_sigma
    half_levels = 1 << (config.adc_bits - 1)
    step = full_scale / half_levels

    resp.setflags(write=False)
    return resp, centers, lo, hi, noise_sigma, step, half_levels


def pulse_response(config: DetectorConfig) -> np.ndarray:
    """Normalized per-pulse response matrix (n_pulses x n_samples)."""
    return _geometry(config)[0]


def expected_crosstalk(config: DetectorConfig, lag: int = 1) -> float:
    """Window-sum leakage of a pulse into the window ``lag`` periods later."""
    resp, _, lo, hi, _, _, _ = _geometry(config)
    ks = np.arange(config.n_pulses - lag)
    vals = [resp[k, lo[k + lag]:hi[k + lag]].sum() for k in ks]
    return float(np.mean(vals))


def _noise_matrix(config: DetectorConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    _, _, _, _, sigma, _, _ = _geometry(config)
    if sigma == 0.0:
        return np.zeros((count, config.n_samples))
    return rng.normal(0.0, sigma, size=(count, config.n_samples))


def synthesize_segment(config: DetectorConfig, pulse_quadratures, seed: int) -> SegmentTrace:
    """Render one segment waveform for the given per-pulse quadratures."""
    q = np.asarray(pulse_quadratures, dtype=np.float64)
    if q.shape != (config.n_pulses,):
        raise InvalidParameter(f"expected {config.n_pulses} pulse quadratures, got {q.shape}")
    resp, centers, _, _, _, step, half_levels = _geometry(config)
    rng = np.random.default_rng(seed)
    trace = q @ resp + _noise_matrix(config, 1, rng)[0]
    code = np.rint(trace / step)
    n_clipped = int(((code > half_levels - 1) | (code < -half_levels)).sum())
    np.clip(code, -half_levels, half_levels - 1, out=code)
    return SegmentTrace(
        samples=code * step,
        pulse_centers=centers,
        signal_index=config.signal_index,
        clipped=n_clipped > CLIP_FLAG_FRACTION * config.n_samples,
    )


def integrate_segment(trace: SegmentTrace) -> np.ndarray:
    """One raw quadrature per pulse: windowed sample sums around each center."""
    lo, hi = window_bounds(trace.pulse_centers, trace.samples.size)
    return np.array([trace.samples[lo[k]:hi[k]].sum() for k in range(lo.size)])


def run_segments(config: DetectorConfig, quads: np.ndarray, seed: int = None, rng: np.random.Generator = None):
    """Synthesize, quantize and integrate a batch of segments in one fused pass.

    ``quads`` has one row per segment and one column per pulse. Pass either a
    seed or an existing generator. Returns the matrix of raw window
    quadratures and the per-segment clipped-sample count.
    """
    quads = np.ascontiguousarray(quads, dtype=np.float64)
    if quads.ndim != 2 or quads.shape[1] != config.n_pulses:
        raise InvalidParameter("quadrature matrix must be (segments, pulses)")
    resp, _, lo, hi, _, step, half_levels = _geometry(config)
    if rng is None:
        rng = np.random.default_rng(seed)
    noise = _noise_matrix(config, quads.shape[0], rng)
    return kernels.run_segments(quads, np.ascontiguousarray(resp), noise, step, half_levels, lo, hi)


def estimate_crosstalk(vacuum_quadratures: np.ndarray, max_lag: int) -> CrosstalkModel:
    """Fit leakage coefficients from lag correlations of vacuum pulse windows.

    The mixing is causal (a pulse leaks into later windows only), so the
    measured lag-k covariance is attributed to c_{-k}. The moment equations
    of the moving-average model are solved by fixed-point iteration.
    """
    x = np.asarray(vacuum_quadratures, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidParameter("vacuum quadratures must be a (segments, pulses) matrix")
    n_seg, n_pulses = x.shape
    if n_seg < MIN_CROSSTALK_SEGMENTS:
        raise EstimationFailed(f"need at least {MIN_CROSSTALK_SEGMENTS} segments, got {n_seg}")
    if max_lag < 0 or max_lag > n_pulses // 2:
        raise InvalidParameter("max_lag must be between 0 and half the pulse count")
    if max_lag == 0:
        return CrosstalkModel.identity()

    x = x - x.mean(axis=0, keepdims=True)
    var = float(np.mean(x * x))
    rho = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        rho[k - 1] = float(np.mean(x[:, :-k] * x[:, k:])) / var

    c = rho.copy()
    for _ in range(100):
        norm = 1.0 + float(c @ c)
        nxt = np.empty_like(c)
        for k in range(1, max_lag + 1):
            cross = sum(c[m - 1] * c[m + k - 1] for m in range(1, max_lag - k + 1))
            nxt[k - 1] = rho[k - 1] * norm - cross
        if np.max(np.abs(nxt - c)) < 1e-14:
            c = nxt
            break
        c = nxt
    if np.any(np.abs(c) >= 1.0):
        raise EstimationFailed("estimated leakage magnitude >= 1")

    coeff = np.zeros(2 * max_lag + 1)
    coeff[max_lag] = 1.0
    coeff[:max_lag] = c[::-1]
    return CrosstalkModel(coeff)


def mixing_matrix(model: CrosstalkModel, n_pulses: int) -> np.ndarray:
    k = model.max_lag
    a = np.zeros((n_pulses, n_pulses))
    for i in range(n_pulses):
        for j in range(max(0, i - k), min(n_pulses, i + k + 1)):
            a[i, j] = model.coefficients[k + (j - i)]
    return a


def decorrelate(raw: np.ndarray, model: CrosstalkModel) -> np.ndarray:
    """Invert the window mixing for each segment (banded solve over pulse index)."""
    raw = np.asarray(raw, dtype=np.float64)
    single = raw.ndim == 1
    y = raw[None, :] if single else raw
    a = mixing_matrix(model, y.shape[1])
    if np.linalg.cond(a) > 1e4:
        raise IllConditionedModel("crosstalk model is not invertible")
    out = np.linalg.solve(a, y.T).T
    return out[0] if single else out


def mix(raw: np.ndarray, model: CrosstalkModel) -> np.ndarray:
    """Apply the forward window mixing (inverse of :func:`decorrelate`)."""
    raw = np.asarray(raw, dtype=np.float64)
    single = raw.ndim == 1
    y = raw[None, :] if single else raw
    a = mixing_matrix(model, y.shape[1])
    out = y @ a.T
    return out[0] if single else out


def snr_to_eta_el(snr_db: float) -> float:
    """Equivalent-loss efficiency of additive electronic noise: 1 - 10^(-snr/10)."""
    if not snr_db > 0:
        raise InvalidParameter("snr_db must be positive")
    return 1.0 - 10.0 ** (-snr_db / 10.0)
