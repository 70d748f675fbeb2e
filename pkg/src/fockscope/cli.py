"""Command-line front door: simulate, reconstruct, bench, serve.

Quadrature file format (text, bit-exact):
  line 1:           fockscope-quad/1
  header lines:     "# key=value" for count, seed, convention, calibrated
  records:          signal quadrature (9 significant digits), optionally a
                    second column with the raw quadrature of the vacuum
                    neighbor pulse immediately preceding the signal pulse

Exit codes: 0 success, 1 usage error, 2 data error, 3 reconstruction did not
converge (the report is still printed).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import detector, kernels, report, tomography
from .fock import FockDiagonal, InvalidParameter, heralded_lossy_state, visibility_to_mode_match
from .quadrature import QuadratureBatch, calibrate, draw_quadratures, _sampling_tables
from .session import AlignmentKnobs, SessionEngine

FILE_MAGIC = "fockscope-quad/1"
CONVENTION = "vacuum-variance-half"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOCONV = 3


class QuadratureFileError(ValueError):
    def __init__(self, message: str, line: int = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


# ---------------------------------------------------------------------------
# quadrature file I/O
# ---------------------------------------------------------------------------

def write_quadrature_file(path, signal, vacuum=None, *, seed: int, calibrated: bool = False) -> None:
    signal = np.asarray(signal, dtype=np.float64)
    lines = [
        FILE_MAGIC,
        f"# count={signal.size}",
        f"# seed={seed}",
        f"# convention={CONVENTION}",
        f"# calibrated={'true' if calibrated else 'false'}",
    ]
    if vacuum is None:
        lines.extend(f"{v:.8e}" for v in signal)
    else:
        vacuum = np.asarray(vacuum, dtype=np.float64)
        if vacuum.shape != signal.shape:
            raise InvalidParameter("signal and vacuum columns must have equal length")
        lines.extend(f"{v:.8e} {w:.8e}" for v, w in zip(signal, vacuum))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_quadrature_file(path):
    """Returns (header dict, signal array, vacuum array or None)."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise QuadratureFileError(str(exc))
    lines = text.splitlines()
    if not lines or lines[0].strip() != FILE_MAGIC:
        raise QuadratureFileError(f"expected magic {FILE_MAGIC!r}", line=1)

    header = {}
    body_start = 1
    for i, line in enumerate(lines[1:], start=2):
        if not line.startswith("#"):
            body_start = i - 1
            break
        body_start = i
        key, sep, value = line[1:].strip().partition("=")
        if not sep:
            raise QuadratureFileError("header line is not key=value", line=i)
        header[key.strip()] = value.strip()

    for key in ("count", "seed", "convention", "calibrated"):
        if key not in header:
            raise QuadratureFileError(f"missing header key {key!r}")
    if header["convention"] != CONVENTION:
        raise QuadratureFileError(f"unknown convention {header['convention']!r}")
    try:
        count = int(header["count"])
    except ValueError:
        raise QuadratureFileError(f"bad count {header['count']!r}")
    calibrated = header["calibrated"] == "true"

    records = [(i, line) for i, line in enumerate(lines[body_start:], start=body_start + 1) if line.strip()]
    if len(records) != count:
        raise QuadratureFileError(f"header declares {count} records, found {len(records)}")
    header["count"] = count
    header["calibrated"] = calibrated
    if count == 0:
        return header, np.array([]), None

    ncols = len(records[0][1].split())
    if ncols not in (1, 2):
        raise QuadratureFileError("records must have 1 or 2 columns", line=records[0][0])
    sig = np.empty(count)
    vac = np.empty(count) if ncols == 2 else None
    for k, (lineno, line) in enumerate(records):
        parts = line.split()
        if len(parts) != ncols:
            raise QuadratureFileError(f"expected {ncols} columns, got {len(parts)}", line=lineno)
        try:
            sig[k] = float(parts[0])
            if ncols == 2:
                vac[k] = float(parts[1])
        except ValueError:
            raise QuadratureFileError(f"not a number: {line!r}", line=lineno)
    return header, sig, vac


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    eta_m = visibility_to_mode_match(args.visibility)
    eta_optical = args.eta_p * eta_m * args.eta_l * args.eta_d

    if args.count == 0:
        write_quadrature_file(args.out, np.array([]), None, seed=args.seed, calibrated=False)
        print(f"wrote 0 records to {args.out}")
        return EXIT_OK

    rng = np.random.default_rng(args.seed)
    state = heralded_lossy_state(args.gamma_sq, args.eta_t, eta_optical, n_max=10)

    use_detector = args.snr_db is not None or args.adc_bits is not None
    if use_detector:
        cfg = detector.DetectorConfig(
            snr_db=args.snr_db if args.snr_db is not None else 14.0,
            adc_bits=args.adc_bits if args.adc_bits is not None else 8,
        )
        sig_idx = cfg.signal_index
        qgrid, cdf = _sampling_tables(10)
        cum = np.cumsum(state.probs)
        cum[-1] = 1.0
        sig = np.empty(args.count)
        vac = np.empty(args.count)
        chunk = 50_000
        for s in range(0, args.count, chunk):
            n = min(chunk, args.count - s)
            comps = np.zeros((n, cfg.n_pulses), dtype=np.int64)
            comps[:, sig_idx] = np.searchsorted(cum, rng.random(n), side="right")
            u = rng.random((n, cfg.n_pulses))
            quads = kernels.sample_inverse_cdf(comps.ravel(), u.ravel(), qgrid, cdf).reshape(n, cfg.n_pulses)
            raw, _ = detector.run_segments(cfg, quads, rng=rng)
            sig[s:s + n] = raw[:, sig_idx]
            vac[s:s + n] = raw[:, sig_idx - 1]
    else:
        vacuum = FockDiagonal(np.array([1.0, 0.0, 0.0]))
        sig = draw_quadratures(state, args.count, rng)
        vac = draw_quadratures(vacuum, args.count, rng)

    write_quadrature_file(args.out, sig, vac, seed=args.seed, calibrated=False)
    print(f"wrote {args.count} records to {args.out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    try:
        header, sig, vac = read_quadrature_file(args.path)
    except QuadratureFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if sig.size == 0:
        print("error: file contains no records", file=sys.stderr)
        return EXIT_DATA

    if header["calibrated"]:
        batch = QuadratureBatch(sig, calibrated=True, vacuum_variance_ref=0.5)
    else:
        if vac is None:
            print("error: uncalibrated file lacks the vacuum column", file=sys.stderr)
            return EXIT_DATA
        if args.decorrelate:
            sig, vac_var = _decorrelate_columns(sig, vac)
            scale = math.sqrt(0.5 / vac_var)
            batch = QuadratureBatch(sig * scale, calibrated=True, vacuum_variance_ref=vac_var)
        else:
            batch = calibrate(
                QuadratureBatch(sig),
                QuadratureBatch(vac),
            )

    config = tomography.MaxLikConfig(n_max=args.n_max, tol=args.tol, max_iter=args.max_iter)
    result = tomography.maxlik_diag(batch, config)
    try:
        est = tomography.extract_eta_gamma(result.state)
        eta_hat, gamma_hat = est.eta, est.gamma_sq
    except (tomography.ModelMismatch, InvalidParameter):
        p = result.state.probs
        eta_hat, gamma_hat = float(p[1] / (p[0] + p[1])), 0.0
    summary = report.summarize(
        state=result.state,
        sigma=result.sigma,
        eta=eta_hat,
        gamma_sq=gamma_hat,
        eta_t=args.eta_t,
        rep_rate=args.rep_rate,
    )
    print(report.render_report(summary, args.format), end="")
    if not result.converged:
        print(f"warning: not converged after {result.iterations} iterations", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def _decorrelate_columns(sig: np.ndarray, vac: np.ndarray):
    """Remove the leading-neighbor leakage using the persisted vacuum column.

    The vacuum column is the raw quadrature of the pulse right before the
    signal pulse, so cov(sig, vac)/var(vac) estimates the nearest-neighbor
    leakage. The vacuum windows share the same mixing statistics, so the
    calibration reference variance is deflated by the fitted (1 + c^2).
    """
    sig_c = sig - sig.mean()
    vac_c = vac - vac.mean()
    var_vac = float(np.mean(vac_c * vac_c))
    c = float(np.mean(sig_c * vac_c)) / var_vac
    corrected = sig - c * vac
    return corrected, var_vac / (1.0 + c * c)


def cmd_bench(args) -> int:
    if args.backend != "auto":
        kernels.set_backend(args.backend)
    engine = SessionEngine(AlignmentKnobs(), seed=args.seed, block_size=args.block)
    sub = engine.subscribe(max_lossy=1)

    target_segments = 1_000_000
    t0 = time.perf_counter()
    while True:
        engine.step()
        elapsed = time.perf_counter() - t0
        if engine.segments_total >= target_segments and elapsed >= args.duration:
            break
    elapsed = time.perf_counter() - t0
    rate = engine.segments_total / elapsed
    emissions = engine.estimator.updates_emitted
    sub.drain()
    print(f"backend={kernels.get_backend()} segments={engine.segments_total} "
          f"elapsed={elapsed:.2f}s rate={rate:,.0f} segments/s eta_updates={emissions}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    knobs = AlignmentKnobs(
        visibility=args.visibility,
        eta_l=args.eta_l,
        eta_p=args.eta_p,
        eta_t=args.eta_t,
        snr_db=args.snr_db if args.snr_db is not None else 14.0,
        adc_bits=args.adc_bits if args.adc_bits is not None else 8,
    )
    engine = SessionEngine(knobs, seed=args.seed, base_gamma_sq=args.gamma_sq, eta_d=args.eta_d)
    dashboard = args.dashboard
    if dashboard is None and Path("frontend/index.html").is_file():
        dashboard = "frontend"
    print(f"serving on {args.host}:{args.port} (paced={not args.unpaced}, seed={args.seed}, "
          f"dashboard={dashboard or 'off'})")
    serve(engine, host=args.host, port=args.port, paced=not args.unpaced, dashboard_dir=dashboard)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source_flags(p, with_detector_defaults=False):
    p.add_argument("--gamma-sq", type=float, default=0.016, help="pair amplitude squared")
    p.add_argument("--eta-t", type=float, default=0.07, help="trigger detection efficiency")
    p.add_argument("--visibility", type=float, default=0.85, help="signal/LO interference visibility")
    p.add_argument("--eta-l", type=float, default=0.96, help="linear optics transmission")
    p.add_argument("--eta-p", type=float, default=0.98, help="preparation efficiency")
    p.add_argument("--eta-d", type=float, default=0.85, help="photodiode quantum efficiency")
    p.add_argument("--snr-db", type=float, default=None,
                   help="shot-to-electronic noise ratio; enables the detector waveform layer")
    p.add_argument("--adc-bits", type=int, default=None,
                   help="digitizer resolution; enables the detector waveform layer")


def build_parser() -> _Parser:
    parser = _Parser(prog="fockscope", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a quadrature dataset")
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--count", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=12345)
    _add_source_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct a state from a quadrature file")
    p.add_argument("path", help="quadrature file")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--decorrelate", action="store_true",
                   help="remove neighbor-pulse leakage before calibration")
    p.add_argument("--eta-t", type=float, default=0.07)
    p.add_argument("--rep-rate", type=float, default=76e6)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bench", help="measure unpaced pipeline throughput")
    p.add_argument("--duration", type=float, default=5.0, help="minimum wall time in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block", type=int, default=5000)
    p.add_argument("--backend", choices=("auto",) + kernels.available_backends(), default="auto")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--host", default=os.environ.get("FOCKSCOPE_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("FOCKSCOPE_PORT", "8765")))
    p.add_argument("--seed", type=int, default=int(os.environ.get("FOCKSCOPE_SEED", "0")))
    p.add_argument("--unpaced", action="store_true", default=os.environ.get("FOCKSCOPE_UNPACED", "") == "1",
                   help="run as fast as possible instead of pacing to 25k segments/s")
    p.add_argument("--dashboard", default=os.environ.get("FOCKSCOPE_DASHBOARD"),
                   help="directory with the built dashboard (default: ./frontend when present)")
    _add_source_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
