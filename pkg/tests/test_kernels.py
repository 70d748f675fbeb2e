"""Backend parity: the numba kernels and the numpy fallbacks must agree."""

import numpy as np
import pytest

from fockscope import kernels
from fockscope.quadrature import _sampling_tables, wavefunction_sq

needs_both = pytest.mark.skipif(
    len(kernels.available_backends()) < 2, reason="numba backend unavailable"
)


@pytest.fixture
def em_inputs():
    rng = np.random.default_rng(3)
    q = rng.normal(0, 1.05, 150_000)
    pi = np.ascontiguousarray(wavefunction_sq(q, 4))
    p = np.full(5, 0.2)
    return pi, p


def run_on(backend, fn, *args):
    prev = kernels.set_backend(backend)
    try:
        return fn(*args)
    finally:
        kernels.set_backend(prev)


@needs_both
class TestParity:
    def test_em_step(self, em_inputs):
        pi, p = em_inputs
        p_nb, ll_nb = run_on("numba", kernels.em_step, pi, p)
        p_np, ll_np = run_on("numpy", kernels.em_step, pi, p)
        np.testing.assert_allclose(p_nb, p_np, rtol=1e-12)
        assert ll_nb == pytest.approx(ll_np, rel=1e-12)

    def test_log_likelihood(self, em_inputs):
        pi, p = em_inputs
        a = run_on("numba", kernels.log_likelihood, pi, p)
        b = run_on("numpy", kernels.log_likelihood, pi, p)
        assert a == pytest.approx(b, rel=1e-12)

    def test_fisher_information(self, em_inputs):
        pi, p = em_inputs
        a = run_on("numba", kernels.fisher_information, pi, p)
        b = run_on("numpy", kernels.fisher_information, pi, p)
        np.testing.assert_allclose(a, b, rtol=1e-11)

    def test_sampling_bit_identical(self):
        qgrid, cdf = _sampling_tables(6)
        rng = np.random.default_rng(5)
        comp = rng.integers(0, 7, 100_000)
        u = rng.random(100_000)
        a = run_on("numba", kernels.sample_inverse_cdf, comp, u, qgrid, cdf)
        b = run_on("numpy", kernels.sample_inverse_cdf, comp, u, qgrid, cdf)
        np.testing.assert_array_equal(a, b)

    def test_run_segments_unquantized(self):
        rng = np.random.default_rng(6)
        quads = rng.normal(0, 0.7, size=(300, 9))
        resp = np.ascontiguousarray(rng.random((9, 64)) * 0.2)
        noise = rng.normal(0, 0.05, size=(300, 64))
        lo = np.arange(9, dtype=np.int64) * 7
        hi = lo + 7
        a, ca = run_on("numba", kernels.run_segments, quads, resp, noise, 0.0, 0, lo, hi)
        b, cb = run_on("numpy", kernels.run_segments, quads, resp, noise, 0.0, 0, lo, hi)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
        np.testing.assert_array_equal(ca, cb)

    def test_run_segments_quantized_statistics(self):
        rng = np.random.default_rng(7)
        quads = rng.normal(0, 0.7, size=(2000, 9))
        resp = np.ascontiguousarray(rng.random((9, 64)) * 0.2)
        noise = rng.normal(0, 0.05, size=(2000, 64))
        lo = np.arange(9, dtype=np.int64) * 7
        hi = lo + 7
        step = 0.01
        a, _ = run_on("numba", kernels.run_segments, quads, resp, noise, step, 128, lo, hi)
        b, _ = run_on("numpy", kernels.run_segments, quads, resp, noise, step, 128, lo, hi)
        # quantized lattices agree except at half-ulp rounding boundaries
        assert np.mean(np.abs(a - b) > step / 2) < 1e-4


class TestBlockReduction:
    def test_results_independent_of_block_boundaries(self, em_inputs):
        # summing a prefix and suffix separately must match kernel block merges
        pi, p = em_inputs
        _, ll = kernels.em_step(pi, p)
        manual = float(np.log(pi @ p).sum())
        assert ll == pytest.approx(manual, rel=1e-11)

    def test_deterministic_repeat(self, em_inputs):
        pi, p = em_inputs
        p1, ll1 = kernels.em_step(pi, p)
        p2, ll2 = kernels.em_step(pi, p)
        np.testing.assert_array_equal(p1, p2)
        assert ll1 == ll2

    @needs_both
    def test_reproducible_across_thread_counts(self, em_inputs):
        import numba

        pi, p = em_inputs
        prev = kernels.set_backend("numba")
        n_threads = numba.get_num_threads()
        try:
            numba.set_num_threads(1)
            p1, ll1 = kernels.em_step(pi, p)
            i1 = kernels.fisher_information(pi, p)
            numba.set_num_threads(max(n_threads, 2))
            p2, ll2 = kernels.em_step(pi, p)
            i2 = kernels.fisher_information(pi, p)
        finally:
            numba.set_num_threads(n_threads)
            kernels.set_backend(prev)
        np.testing.assert_array_equal(p1, p2)
        assert ll1 == ll2
        np.testing.assert_array_equal(i1, i2)


class TestBackendSelection:
    def test_roundtrip(self):
        current = kernels.get_backend()
        other = "numpy"
        prev = kernels.set_backend(other)
        assert prev == current
        assert kernels.get_backend() == other
        kernels.set_backend(current)

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            kernels.set_backend("cuda")
