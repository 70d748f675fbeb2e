"""Live acquisition session: paced segment pipeline with streaming telemetry.

One engine owns one simulated run. A chunk of segments is produced per step:
signal and vacuum-neighbor quadratures are drawn from the source model, run
through the detector waveform simulation, calibrated against the in-segment
vacuum windows, folded into the streaming efficiency estimator, and every
couple of simulated seconds a maximum-likelihood reconstruction of a rolling
sample window is published.

Telemetry message envelope: {"kind", "seq", "t_ms", "payload"} with a
strictly increasing per-subscriber seq. ``t_ms`` is simulated time
(segments / nominal rate), which keeps streams reproducible for a fixed seed
and knob history; the only wall-clock quantity is the measured
``segments_per_s`` inside rate-update payloads.

Knob changes are applied between chunks under the session lock, so every
segment is generated under exactly one knob configuration; estimator state,
the reconstruction window and the last reconstruction are dropped on every
change.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, fields, replace

import numpy as np

from . import detector, kernels, report
from .fock import InvalidParameter, heralded_lossy_state, visibility_to_mode_match
from .quadrature import QuadratureBatch, _sampling_tables, wigner_section
from .tomography import MaxLikConfig, StreamingEstimator, extract_eta_gamma, maxlik_diag


class NotReady(RuntimeError):
    pass


@dataclass(frozen=True)
class AlignmentKnobs:
    """Operator-adjustable parameters of the simulated apparatus."""

    pump_power_scale: float = 1.0
    visibility: float = 0.85
    eta_l: float = 0.96
    eta_p: float = 0.98
    eta_t: float = 0.07
    snr_db: float = 14.0
    adc_bits: int = 8

    def __post_init__(self):
        if self.pump_power_scale < 0:
            raise InvalidParameter("pump_power_scale must be nonnegative")
        for name in ("visibility", "eta_l", "eta_p", "eta_t"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{name} must be in [0, 1], got {v}")
        if not self.snr_db > 0:
            raise InvalidParameter("snr_db must be positive")
        if not 4 <= int(self.adc_bits) <= 24:
            raise InvalidParameter("adc_bits must be in [4, 24]")


KNOB_NAMES = tuple(f.name for f in fields(AlignmentKnobs))


class Subscriber:
    """Per-client telemetry queue: lossy ring for quad batches, lossless for the rest."""

    LOSSY_KINDS = ("quad-batch",)

    def __init__(self, max_lossy: int = 256):
        self._lossless = deque()
        self._lossy = deque(maxlen=max_lossy)
        self._cond = threading.Condition()

    def put(self, msg: dict) -> None:
        with self._cond:
            if msg["kind"] in self.LOSSY_KINDS:
                self._lossy.append(msg)
            else:
                self._lossless.append(msg)
            self._cond.notify()

    def get(self, timeout: float | None = None):
        """Next message in seq order, or None on timeout."""
        with self._cond:
            if not self._lossless and not self._lossy:
                self._cond.wait(timeout)
            if self._lossless and self._lossy:
                src = self._lossless if self._lossless[0]["seq"] < self._lossy[0]["seq"] else self._lossy
            elif self._lossless:
                src = self._lossless
            elif self._lossy:
                src = self._lossy
            else:
                return None
            return src.popleft()

    def drain(self):
        out = []
        while True:
            msg = self.get(timeout=0.0)
            if msg is None:
                return out
            out.append(msg)


class SessionEngine:
    """Single simulated acquisition run with alignment knobs and telemetry fan-out."""

    def __init__(
        self,
        knobs: AlignmentKnobs = AlignmentKnobs(),
        seed: int = 0,
        *,
        base_gamma_sq: float = 0.016,
        eta_d: float = 0.85,
        rep_rate: float = 76e6,
        block_size: int = 5000,
        chunk_size: int = 500,
        target_rate: float = 25_000.0,
        recon_interval_s: float = 2.0,
        recon_window: int = 50_000,
        recon_n_max: int = 4,
        sim_n_max: int = 10,
    ):
        self._lock = threading.RLock()
        self._rng = np.random.default_rng(seed)
        self.seed = seed
        self.base_gamma_sq = base_gamma_sq
        self.eta_d = eta_d
        self.rep_rate = rep_rate
        self.chunk_size = chunk_size
        self.target_rate = target_rate
        self.recon_every = int(round(recon_interval_s * target_rate))
        self.recon_window = recon_window
        self.recon_config = MaxLikConfig(n_max=recon_n_max, tol=1e-9, max_iter=2000)
        self.sim_n_max = sim_n_max

        self.estimator = StreamingEstimator(block_size)
        self.segments_total = 0
        self.segments_since_reset = 0
        self.wall_clock_rate = 0.0
        self.last_reconstruction = None
        self._recon_summary = None
        self._seq = 0
        self._subscribers: list[Subscriber] = []
        self._window = deque()
        self._window_count = 0
        self._rate_mark = (0, time.perf_counter())

        self.knobs = None
        self._apply_knobs(knobs)
        kernels.warmup()

    # -- configuration ------------------------------------------------------

    def _apply_knobs(self, knobs: AlignmentKnobs) -> None:
        gamma_sq = self.base_gamma_sq * knobs.pump_power_scale
        if gamma_sq >= 1.0:
            raise InvalidParameter("pump power implies pair amplitude >= 1")
        eta_m = visibility_to_mode_match(knobs.visibility)
        self.eta_optical = knobs.eta_p * eta_m * knobs.eta_l * self.eta_d
        self.gamma_sq = gamma_sq
        self.trigger_rate = knobs.eta_t * gamma_sq * self.rep_rate
        if gamma_sq > 0.0:
            self.derived_state = heralded_lossy_state(gamma_sq, knobs.eta_t, self.eta_optical, self.sim_n_max)
        else:
            self.derived_state = None
        self.detector_config = detector.DetectorConfig(
            rep_rate=self.rep_rate, adc_bits=int(knobs.adc_bits), snr_db=knobs.snr_db
        )
        self.knobs = knobs

    def set_knob(self, name: str, value) -> dict:
        """Atomically reconfigure one knob; returns the acknowledgment payload."""
        if name not in KNOB_NAMES:
            raise InvalidParameter(f"unknown knob {name!r}")
        with self._lock:
            old = self.knobs
            new = replace(old, **{name: type(getattr(old, name))(value)})
            self._apply_knobs(new)  # validates; raises without touching counters
            self.estimator.reset()
            self.estimator.latest_eta = None
            self._window.clear()
            self._window_count = 0
            self.segments_since_reset = 0
            self.last_reconstruction = None
            self._recon_summary = None
            return {"name": name, "value": getattr(new, name), "eta_derived": self.eta_optical}

    # -- telemetry ----------------------------------------------------------

    def subscribe(self, max_lossy: int = 256) -> Subscriber:
        sub = Subscriber(max_lossy)
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def next_seq(self) -> int:
        with self._lock:
            self._seq += 1
            return self._seq

    def sim_time_ms(self) -> float:
        return self.segments_total / self.target_rate * 1000.0

    def envelope(self, kind: str, payload: dict) -> dict:
        return {"kind": kind, "seq": self.next_seq(), "t_ms": self.sim_time_ms(), "payload": payload}

    def _emit(self, kind: str, payload: dict) -> None:
        msg = self.envelope(kind, payload)
        for sub in self._subscribers:
            sub.put(msg)

    # -- pipeline -----------------------------------------------------------

    def step(self) -> int:
        """Produce and process one chunk; returns the number of segments emitted."""
        with self._lock:
            if self.derived_state is None:
                self._emit("rate-update", {
                    "segments_per_s": 0.0,
                    "trigger_rate_hz": self.trigger_rate,
                    "segments": self.segments_total,
                })
                return 0

            cfg = self.detector_config
            n = self.chunk_size
            n_pulses = cfg.n_pulses
            sig_idx = cfg.signal_index

            qgrid, cdf = _sampling_tables(self.sim_n_max)
            cum = np.cumsum(self.derived_state.probs)
            cum[-1] = 1.0
            comps = np.zeros((n, n_pulses), dtype=np.int64)
            comps[:, sig_idx] = np.searchsorted(cum, self._rng.random(n), side="right")
            u = self._rng.random((n, n_pulses))
            quads = kernels.sample_inverse_cdf(comps.ravel(), u.ravel(), qgrid, cdf).reshape(n, n_pulses)

            raw, _ = detector.run_segments(cfg, quads, rng=self._rng)
            vac = np.delete(raw, sig_idx, axis=1)
            vac_var = float(np.var(vac))
            scale = np.sqrt(0.5 / vac_var)
            sig_cal = raw[:, sig_idx] * scale

            self.segments_total += n
            self.segments_since_reset += n

            self._window.append(sig_cal)
            self._window_count += n
            while self._window_count - len(self._window[0]) >= self.recon_window:
                self._window_count -= len(self._window.popleft())

            stride = max(1, n // 50)
            self._emit("quad-batch", {
                "values": [round(float(v), 6) for v in sig_cal[::stride]],
                "segments": n,
            })

            for eta in self.estimator.update(sig_cal):
                self._emit("eta-update", {
                    "eta": eta,
                    "block": self.estimator.updates_emitted,
                    "segments": self.segments_total,
                })

            crossed = lambda every: self.segments_total // every > (self.segments_total - n) // every
            if crossed(self.recon_every) and self.segments_since_reset >= self.estimator.block_size:
                self._reconstruct()

            if crossed(int(self.target_rate)):
                prev_seg, prev_t = self._rate_mark
                now = time.perf_counter()
                dt = max(now - prev_t, 1e-9)
                self.wall_clock_rate = (self.segments_total - prev_seg) / dt
                self._rate_mark = (self.segments_total, now)
                self._emit("rate-update", {
                    "segments_per_s": self.wall_clock_rate,
                    "trigger_rate_hz": self.trigger_rate,
                    "segments": self.segments_total,
                })
            return n

    def _reconstruct(self) -> None:
        values = np.concatenate(list(self._window))[-self.recon_window:]
        batch = QuadratureBatch(values, calibrated=True, vacuum_variance_ref=0.5)
        result = maxlik_diag(batch, self.recon_config)
        self.last_reconstruction = result
        try:
            est = extract_eta_gamma(result.state)
            eta_hat, gamma_hat = est.eta, est.gamma_sq
        except Exception:
            p = result.state.probs
            eta_hat, gamma_hat = float(p[1] / (p[0] + p[1])), 0.0
        # count-rate quantities come from the configured source; (eta, gamma^2)
        # are inferred from the reconstruction like an experimenter would
        self._recon_summary = report.RunSummary(
            rep_rate=self.rep_rate,
            trigger_rate=self.trigger_rate,
            p_t=self.trigger_rate / self.rep_rate,
            eta_t=self.knobs.eta_t,
            state=result.state,
            sigma=tuple(float(s) for s in result.sigma),
            eta=eta_hat,
            gamma_sq=gamma_hat,
            fidelity=float(result.state.probs[1]),
            contamination=report.contamination_fraction(self.gamma_sq, self.knobs.eta_t),
        )
        radii = np.linspace(0.0, 3.0, 61)
        ws = wigner_section(result.state, radii)
        self._emit("recon-update", {
            "diagonals": [float(p) for p in result.state.probs],
            "sigmas": [float(s) for s in result.sigma],
            "iterations": result.iterations,
            "converged": result.converged,
            "window": int(len(batch)),
            "wigner": {"radii": [float(r) for r in ws.radii], "values": [float(v) for v in ws.values]},
        })

    # -- queries ------------------------------------------------------------

    @property
    def latest_eta(self):
        return self.estimator.latest_eta

    def state_view(self) -> dict:
        with self._lock:
            return {
                "knobs": {name: getattr(self.knobs, name) for name in KNOB_NAMES},
                "eta": self.latest_eta,
                "eta_derived": self.eta_optical,
                "gamma_sq": self.gamma_sq,
                "trigger_rate_hz": self.trigger_rate,
                "segments": self.segments_total,
                "segments_per_s": self.wall_clock_rate,
                "backend": kernels.get_backend(),
            }

    def snapshot(self) -> report.RunSummary:
        """Report of the data accumulated since the last knob change."""
        with self._lock:
            if self._recon_summary is None:
                raise NotReady("no reconstruction completed yet")
            return self._recon_summary


class SessionRunner:
    """Background thread that paces a SessionEngine at the target segment rate."""

    def __init__(self, engine: SessionEngine, paced: bool = True):
        self.engine = engine
        self.paced = paced
        self._stop = threading.Event()
        self._thread = None

    def start(self) -> "SessionRunner":
        self._thread = threading.Thread(target=self._loop, name="fockscope-session", daemon=True)
        self._thread.start()
        return self

    def _loop(self) -> None:
        chunk_interval = self.engine.chunk_size / self.engine.target_rate
        next_due = time.perf_counter()
        while not self._stop.is_set():
            self.engine.step()
            if self.paced:
                next_due += chunk_interval
                delay = next_due - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_due = time.perf_counter()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
