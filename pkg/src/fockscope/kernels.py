"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The active backend is picked at import time from the ``FOCKSCOPE_BACKEND``
environment variable ("numba" or "numpy"; default numba when importable)
and can be swapped at runtime with :func:`set_backend` — the benchmark and
the backend-parity tests rely on that.

Every kernel reduces over samples in fixed blocks of ``BLOCK`` and merges
partial results in block order, so results are reproducible regardless of
thread count.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

BLOCK = 65536

# Probability floor guarding log/div against tail underflow.
_PR_FLOOR = 1e-300
_LN2 = 0.6931471805599453


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _em_step_np(pi, p):
    n = pi.shape[0]
    tot = np.zeros(pi.shape[1])
    ll = 0.0
    for s in range(0, n, BLOCK):
        blk = pi[s:s + BLOCK]
        pr = blk @ p
        np.maximum(pr, _PR_FLOOR, out=pr)
        ll += float(np.log(pr).sum())
        tot += np.einsum("jm,j->m", blk, 1.0 / pr)
    newp = p * tot / n
    newp /= newp.sum()
    return newp, ll


def _log_likelihood_np(pi, p):
    ll = 0.0
    for s in range(0, pi.shape[0], BLOCK):
        pr = pi[s:s + BLOCK] @ p
        np.maximum(pr, _PR_FLOOR, out=pr)
        ll += float(np.log(pr).sum())
    return ll


def _fisher_information_np(pi, p):
    k = pi.shape[1]
    info = np.zeros((k, k))
    for s in range(0, pi.shape[0], BLOCK):
        blk = pi[s:s + BLOCK]
        pr = blk @ p
        np.maximum(pr, _PR_FLOOR, out=pr)
        info += np.einsum("jm,j,jn->mn", blk, 1.0 / (pr * pr), blk)
    return info


def _sample_inverse_cdf_np(comp, u, qgrid, cdf):
    out = np.empty(u.shape[0])
    for n in np.unique(comp):
        sel = comp == n
        us = u[sel]
        i = np.searchsorted(cdf[n], us, side="right")
        c0 = cdf[n][i - 1]
        c1 = cdf[n][i]
        g0 = qgrid[n][i - 1]
        g1 = qgrid[n][i]
        dc = c1 - c0
        q = np.where(dc > 0.0, g0 + (us - c0) * (g1 - g0) / np.where(dc > 0.0, dc, 1.0), g0)
        out[sel] = q
    return out


def _run_segments_np(quads, resp, noise, step, half_levels, win_lo, win_hi):
    tr = quads @ resp + noise
    if step > 0.0:
        code = np.rint(tr / step)
        nclip = ((code > half_levels - 1) | (code < -half_levels)).sum(axis=1).astype(np.int64)
        np.clip(code, -half_levels, half_levels - 1, out=code)
        tr = code * step
    else:
        nclip = np.zeros(quads.shape[0], np.int64)
    raw = np.empty_like(quads)
    for i in range(win_lo.shape[0]):
        raw[:, i] = tr[:, win_lo[i]:win_hi[i]].sum(axis=1)
    return raw, nclip


_NUMPY_IMPLS = {
    "em_step": _em_step_np,
    "log_likelihood": _log_likelihood_np,
    "fisher_information": _fisher_information_np,
    "sample_inverse_cdf": _sample_inverse_cdf_np,
    "run_segments": _run_segments_np,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _em_step_nb(pi, p):
        n, k = pi.shape
        nblocks = (n + BLOCK - 1) // BLOCK
        acc = np.zeros((nblocks, k))
        lls = np.zeros(nblocks)
        for b in prange(nblocks):
            s = b * BLOCK
            e = min(s + BLOCK, n)
            a = np.zeros(k)
            mant = 1.0
            ex = 0.0
            cnt = 0
            for j in range(s, e):
                pr = 0.0
                for m in range(k):
                    pr += pi[j, m] * p[m]
                if pr < _PR_FLOOR:
                    pr = _PR_FLOOR
                inv = 1.0 / pr
                for m in range(k):
                    a[m] += pi[j, m] * inv
                mant *= pr
                cnt += 1
                if cnt == 8:
                    m2, e2 = math.frexp(mant)
                    mant = m2
                    ex += e2
                    cnt = 0
            m2, e2 = math.frexp(mant)
            lls[b] = math.log(m2) + (ex + e2) * _LN2
            for m in range(k):
                acc[b, m] = a[m]
        tot = np.zeros(k)
        ll = 0.0
        for b in range(nblocks):
            ll += lls[b]
            for m in range(k):
                tot[m] += acc[b, m]
        newp = p * tot / n
        newp /= newp.sum()
        return newp, ll

    @njit(cache=True, parallel=True)
    def _log_likelihood_nb(pi, p):
        n, k = pi.shape
        nblocks = (n + BLOCK - 1) // BLOCK
        lls = np.zeros(nblocks)
        for b in prange(nblocks):
            s = b * BLOCK
            e = min(s + BLOCK, n)
            mant = 1.0
            ex = 0.0
            cnt = 0
            for j in range(s, e):
                pr = 0.0
                for m in range(k):
                    pr += pi[j, m] * p[m]
                if pr < _PR_FLOOR:
                    pr = _PR_FLOOR
                mant *= pr
                cnt += 1
                if cnt == 8:
                    m2, e2 = math.frexp(mant)
                    mant = m2
                    ex += e2
                    cnt = 0
            m2, e2 = math.frexp(mant)
            lls[b] = math.log(m2) + (ex + e2) * _LN2
        ll = 0.0
        for b in range(nblocks):
            ll += lls[b]
        return ll

    @njit(cache=True, parallel=True)
    def _fisher_information_nb(pi, p):
        n, k = pi.shape
        nblocks = (n + BLOCK - 1) // BLOCK
        acc = np.zeros((nblocks, k, k))
        for b in prange(nblocks):
            s = b * BLOCK
            e = min(s + BLOCK, n)
            a = np.zeros((k, k))
            for j in range(s, e):
                pr = 0.0
                for m in range(k):
                    pr += pi[j, m] * p[m]
                if pr < _PR_FLOOR:
                    pr = _PR_FLOOR
                inv2 = 1.0 / (pr * pr)
                for m in range(k):
                    w = pi[j, m] * inv2
                    for n2 in range(m, k):
                        a[m, n2] += w * pi[j, n2]
            acc[b] = a
        info = np.zeros((k, k))
        for b in range(nblocks):
            for m in range(k):
                for n2 in range(m, k):
                    info[m, n2] += acc[b, m, n2]
        for m in range(k):
            for n2 in range(m + 1, k):
                info[n2, m] = info[m, n2]
        return info

    @njit(cache=True)
    def _sample_inverse_cdf_nb(comp, u, qgrid, cdf):
        out = np.empty(u.shape[0])
        npts = cdf.shape[1]
        for j in range(u.shape[0]):
            n = comp[j]
            uj = u[j]
            lo = 0
            hi = npts - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if cdf[n, mid] > uj:
                    hi = mid
                else:
                    lo = mid + 1
            i = lo
            c0 = cdf[n, i - 1]
            c1 = cdf[n, i]
            g0 = qgrid[n, i - 1]
            g1 = qgrid[n, i]
            dc = c1 - c0
            if dc > 0.0:
                out[j] = g0 + (uj - c0) * (g1 - g0) / dc
            else:
                out[j] = g0
        return out

    @njit(cache=True, parallel=True)
    def _run_segments_nb(quads, resp, noise, step, half_levels, win_lo, win_hi):
        nb_, np_ = quads.shape
        ns = resp.shape[1]
        raw = np.empty((nb_, np_))
        nclip = np.zeros(nb_, np.int64)
        for b in prange(nb_):
            tr = np.empty(ns)
            for s in range(ns):
                v = noise[b, s]
                for pp in range(np_):
                    v += quads[b, pp] * resp[pp, s]
                tr[s] = v
            if step > 0.0:
                for s in range(ns):
                    code = np.rint(tr[s] / step)
                    if code > half_levels - 1:
                        code = half_levels - 1
                        nclip[b] += 1
                    elif code < -half_levels:
                        code = -half_levels
                        nclip[b] += 1
                    tr[s] = code * step
            for pp in range(np_):
                acc = 0.0
                for s in range(win_lo[pp], win_hi[pp]):
                    acc += tr[s]
                raw[b, pp] = acc
        return raw, nclip

    _NUMBA_IMPLS = {
        "em_step": _em_step_nb,
        "log_likelihood": _log_likelihood_nb,
        "fisher_information": _fisher_information_nb,
        "sample_inverse_cdf": _sample_inverse_cdf_nb,
        "run_segments": _run_segments_nb,
    }
else:
    _NUMBA_IMPLS = {}


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_BACKENDS = {"numpy": _NUMPY_IMPLS}
if HAS_NUMBA:
    _BACKENDS["numba"] = _NUMBA_IMPLS

_DEFAULT = os.environ.get("FOCKSCOPE_BACKEND", "numba" if HAS_NUMBA else "numpy").lower()
if _DEFAULT not in _BACKENDS:
    _DEFAULT = "numba" if HAS_NUMBA else "numpy"

_active_name = _DEFAULT
_active = _BACKENDS[_active_name]


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active_name


def set_backend(name: str) -> str:
    """Activate a kernel backend; returns the previously active name."""
    global _active_name, _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    prev = _active_name
    _active_name = name
    _active = _BACKENDS[name]
    return prev


def em_step(pi, p):
    """One EM reweighting pass: returns (updated weights, log-likelihood of input weights)."""
    return _active["em_step"](pi, p)


def log_likelihood(pi, p) -> float:
    return float(_active["log_likelihood"](pi, p))


def fisher_information(pi, p):
    """Observed information matrix sum_j pi_m pi_n / Pr_j^2 (unprojected)."""
    return _active["fisher_information"](pi, p)


def sample_inverse_cdf(comp, u, qgrid, cdf):
    """Map uniform draws through per-component tabulated inverse CDFs."""
    return _active["sample_inverse_cdf"](comp, u, qgrid, cdf)


def run_segments(quads, resp, noise, step, half_levels, win_lo, win_hi):
    """Fused trace synthesis, quantization and window integration for a batch.

    Returns (raw quadratures per pulse, clipped-sample count per segment).
    """
    return _active["run_segments"](quads, resp, noise, step, half_levels, win_lo, win_hi)


def warmup() -> None:
    """Force JIT compilation of all kernels on tiny inputs."""
    pi = np.full((4, 3), 1.0 / 3)
    p = np.full(3, 1.0 / 3)
    em_step(pi, p)
    log_likelihood(pi, p)
    fisher_information(pi, p)
    qg = np.vstack([np.linspace(-1.0, 1.0, 8)] * 2)
    cdf = np.vstack([np.linspace(0.0, 1.0, 8)] * 2)
    sample_inverse_cdf(np.zeros(4, np.int64), np.full(4, 0.5), qg, cdf)
    quads = np.zeros((2, 3))
    resp = np.zeros((3, 12))
    noise = np.zeros((2, 12))
    lo = np.array([0, 4, 8], np.int64)
    hi = np.array([4, 8, 12], np.int64)
    run_segments(quads, resp, noise, 0.0, 0, lo, hi)
    run_segments(quads, resp, noise, 0.125, 128, lo, hi)
