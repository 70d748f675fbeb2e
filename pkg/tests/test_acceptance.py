"""Acceptance criteria for the full artifact, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS line and the
measured value for every criterion.
"""

import functools
import time

import numpy as np
import pytest
from scipy import integrate, stats

from fockscope import kernels
from fockscope.detector import CrosstalkModel, DetectorConfig, decorrelate, estimate_crosstalk, mix, run_segments
from fockscope.fock import (
    FockDiagonal,
    SqueezeParam,
    heralded_lossy_state,
    loss_channel,
    pair_distribution,
    visibility_to_mode_match,
)
from fockscope.quadrature import QuadratureBatch, marginal_density, sample_quadratures, wigner_section
from fockscope.report import trigger_bookkeeping
from fockscope.session import SessionEngine, SessionRunner
from fockscope.tomography import MaxLikConfig, eta_from_variance, extract_eta_gamma, maxlik_diag
from conftest import REF_DIAG, REF_ETA, REF_ETA_T, REF_GAMMA_SQ
from oracles import grid_search_loglik, wigner_scipy

ACCEPTANCE_SEED = 17


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS" + (f" ({detail})" if detail else ""))
        return run
    return wrap


@pytest.fixture(scope="module")
def ref_batch_1m(ref_state5):
    return sample_quadratures(ref_state5, 1_000_000, seed=ACCEPTANCE_SEED)


@pytest.fixture(scope="module")
def ref_reconstruction(ref_batch_1m):
    t0 = time.perf_counter()
    result = maxlik_diag(ref_batch_1m, MaxLikConfig(n_max=4))
    result.runtime_s = time.perf_counter() - t0
    return result


@criterion("forward-model")
def test_forward_model_reproduces_reference_diagonals():
    state = heralded_lossy_state(REF_GAMMA_SQ, REF_ETA_T, REF_ETA, n_max=10)
    for n in range(3):
        assert abs(state.probs[n] - REF_DIAG[n]) < 5e-4, f"rho_{n}{n} = {state.probs[n]}"
    return "diagonals " + np.array2string(state.probs[:3], precision=4)


@criterion("inverse-extraction")
def test_inverse_extraction_recovers_source_parameters(ref_state):
    est = extract_eta_gamma(ref_state)
    assert abs(est.eta - REF_ETA) < 0.003, est
    assert abs(est.gamma_sq - REF_GAMMA_SQ) < 0.0015, est
    return f"eta={est.eta:.4f}, gamma^2={est.gamma_sq:.4f}"


@criterion("tomography-roundtrip")
def test_tomography_roundtrip_one_million_samples(ref_reconstruction):
    result = ref_reconstruction
    truth = np.concatenate([REF_DIAG, [0.0, 0.0]])
    for n in range(5):
        bound = 3.0 * result.sigma[n] if result.sigma[n] > 0 else 1e-6
        assert abs(result.state.probs[n] - truth[n]) <= bound, (
            f"rho_{n}{n}: {result.state.probs[n]} vs {truth[n]} (sigma {result.sigma[n]})"
        )
    assert 0.0008 <= result.sigma[1] <= 0.0015, result.sigma
    assert result.runtime_s < 60.0, f"runtime {result.runtime_s:.1f}s"
    return (
        f"sigma11={result.sigma[1]:.4f}, {result.iterations} iterations, "
        f"{result.runtime_s:.1f}s"
    )


@criterion("variance-estimator")
def test_variance_estimator(ref_batch_1m):
    est = eta_from_variance(ref_batch_1m)
    assert abs(est.eta - 0.5966) < 0.004, est
    vacuum = sample_quadratures(FockDiagonal(np.array([1.0, 0.0, 0.0])), 1_000_000, seed=ACCEPTANCE_SEED)
    vac_est = eta_from_variance(vacuum)
    assert abs(vac_est.eta) < 0.0015, vac_est
    return f"signal {est.eta:.4f}, vacuum {vac_est.eta:+.5f}"


@criterion("trigger-arithmetic")
def test_trigger_arithmetic():
    p_t, eta_t = trigger_bookkeeping(88e3, 76e6, REF_GAMMA_SQ)
    assert p_t == pytest.approx(1.158e-3, abs=1e-6)
    assert eta_t == pytest.approx(0.0724, abs=5e-4)
    return f"p_t={p_t:.4e}, eta_t={eta_t:.4f}"


@criterion("mode-matching")
def test_mode_matching():
    eta_m = visibility_to_mode_match(0.85)
    assert eta_m == pytest.approx(0.7225, abs=1e-12)
    return f"eta_m={eta_m}"


@criterion("wigner-negativity")
def test_wigner_negativity(ref_state):
    w0 = wigner_section(ref_state, [0.0]).values[0]
    assert abs(w0 - (-0.0483)) < 0.002, w0
    assert w0 < 0.0
    oracle = wigner_scipy(REF_DIAG, np.array([0.0]))[0]
    assert w0 == pytest.approx(oracle, rel=1e-12)
    return f"W(0)={w0:.4f}"


@criterion("throughput")
def test_throughput_and_emission_cadence():
    engine = SessionEngine(seed=3)
    t0 = time.perf_counter()
    while engine.segments_total < 1_000_000:
        engine.step()
    elapsed = time.perf_counter() - t0
    rate = engine.segments_total / elapsed
    assert rate >= 25_000, f"unpaced rate {rate:,.0f}/s"
    assert elapsed < 120.0, f"bench took {elapsed:.0f}s"

    paced = SessionEngine(seed=4, block_size=5000)
    runner = SessionRunner(paced, paced=True).start()
    try:
        time.sleep(0.5)  # settle pacing
        start, t_start = paced.estimator.updates_emitted, time.perf_counter()
        time.sleep(2.6)
        emitted = paced.estimator.updates_emitted - start
        cadence = emitted / (time.perf_counter() - t_start)
    finally:
        runner.stop()
    assert 3.8 <= cadence <= 5.6, f"emission cadence {cadence:.2f} Hz"
    return f"{rate:,.0f} segments/s unpaced, {cadence:.1f} Hz emissions paced"


@criterion("property-suite")
def test_property_suite_composite(ref_state5):
    # loss-channel composition
    base = pair_distribution(SqueezeParam.from_gamma_sq(0.2), 10)
    for a, b in ((0.3, 0.9), (0.8, 0.5), (1.0, 0.25)):
        two = loss_channel(loss_channel(base, a), b)
        one = loss_channel(base, a * b)
        assert np.max(np.abs(two.probs - one.probs)) < 1e-12

    # EM monotone likelihood
    batch = sample_quadratures(ref_state5, 50_000, seed=8)
    res = maxlik_diag(batch, MaxLikConfig(n_max=4, tol=1e-12, max_iter=600))
    assert np.all(np.diff(res.ll_trace) >= -1e-9 * np.abs(res.ll_trace[:-1]))

    # brute-force MLE equivalence at n_max = 2
    small_state = FockDiagonal(np.array([0.45, 0.50, 0.05]))
    small = sample_quadratures(small_state, 10_000, seed=9)
    em = maxlik_diag(small, MaxLikConfig(n_max=2, tol=1e-12, max_iter=20_000))
    ll_grid, _ = grid_search_loglik(small.values)
    assert abs(em.log_likelihood - ll_grid) / len(small) < 1e-6

    # decorrelation round trip
    rng = np.random.default_rng(10)
    q = rng.normal(0, 1, size=(400, 9))
    model = CrosstalkModel(np.array([0.0, 0.1, 1.0, 0.0, 0.0]))
    assert np.max(np.abs(decorrelate(mix(q, model), model) - q)) < 1e-6

    # sampling chi-squared against the marginal density
    n = 100_000
    sample = sample_quadratures(ref_state5, n, seed=31).values
    edges = np.linspace(-4, 4, 51)
    observed, _ = np.histogram(sample, bins=edges)
    expected = np.array([
        n * integrate.quad(lambda x: marginal_density(ref_state5, x), lo, hi)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    keep = expected >= 5
    chi2 = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
    assert stats.chi2.sf(chi2, keep.sum() - 1) > 0.001

    # qualitative: positive efficiency gain correcting injected crosstalk
    cfg = DetectorConfig(bandwidth_3db=45e6, snr_db=float("inf"), adc_bits=24)
    state = heralded_lossy_state(REF_GAMMA_SQ, REF_ETA_T, REF_ETA)
    rng = np.random.default_rng(34)
    quads = rng.normal(0, np.sqrt(0.5), size=(60_000, 9))
    from fockscope.quadrature import draw_quadratures

    quads[:, cfg.signal_index] = draw_quadratures(state, 60_000, rng)
    raw, _ = run_segments(cfg, quads, seed=35)

    def eta_of(matrix):
        vac = np.delete(matrix, cfg.signal_index, axis=1)
        return matrix[:, cfg.signal_index].var() * (0.5 / vac.var()) - 0.5

    xt = estimate_crosstalk(np.delete(raw, cfg.signal_index, axis=1), 2)
    gain = eta_of(decorrelate(raw, xt)) - eta_of(raw)
    assert gain > 0.0

    # qualitative: non-Gaussian vacuum excess at 8-bit quantization
    vac_quads = np.random.default_rng(51).normal(0, np.sqrt(0.5), size=(400_000, 9))
    raw8, _ = run_segments(DetectorConfig(adc_bits=8), vac_quads, seed=52)
    sig = raw8[:, 4] * np.sqrt(0.5 / np.delete(raw8, 4, axis=1).var())
    c = sig - sig.mean()
    kurt = float((c ** 4).mean() / (c * c).mean() ** 2 - 3.0)
    assert abs(kurt) > 5.0 * np.sqrt(24 / 400_000)

    return f"crosstalk gain {gain:+.4f}, 8-bit kurtosis {kurt:+.4f}"
