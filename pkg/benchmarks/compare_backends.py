#!/usr/bin/env python3
"""Side-by-side benchmark: numba kernels vs the pure-numpy fallback.

Measures the two hot paths (streaming segment pipeline, EM reconstruction)
on each available backend and validates that both produce matching results.
"""

import time

import numpy as np

from fockscope import kernels
from fockscope.quadrature import QuadratureBatch, sample_quadratures, wavefunction_sq
from fockscope.session import SessionEngine
from fockscope.tomography import MaxLikConfig, maxlik_diag
from fockscope.fock import FockDiagonal

PIPELINE_SEGMENTS = 200_000
EM_SAMPLES = 400_000
REF = FockDiagonal(np.array([0.4138, 0.5758, 0.0104, 0.0, 0.0]))

print(f"available backends: {kernels.available_backends()}")
print("warming up JIT compilation...")
t0 = time.perf_counter()
kernels.warmup()
print(f"warmup: {time.perf_counter() - t0:.1f}s\n")

batch = sample_quadratures(REF, EM_SAMPLES, seed=1)

results = {}
for backend in kernels.available_backends():
    kernels.set_backend(backend)

    engine = SessionEngine(seed=2)
    t0 = time.perf_counter()
    while engine.segments_total < PIPELINE_SEGMENTS:
        engine.step()
    pipeline_rate = engine.segments_total / (time.perf_counter() - t0)

    t0 = time.perf_counter()
    recon = maxlik_diag(batch, MaxLikConfig(n_max=4))
    em_time = time.perf_counter() - t0

    results[backend] = (pipeline_rate, em_time, recon)
    print(f"{backend:>6}: pipeline {pipeline_rate:>9,.0f} segments/s | "
          f"EM {em_time:6.2f}s ({recon.iterations} iterations)")

if len(results) == 2:
    nb, np_ = results["numba"], results["numpy"]
    print(f"\nspeedup numba/numpy: pipeline {nb[0] / np_[0]:.1f}x, EM {np_[1] / nb[1]:.1f}x")
    diff = np.max(np.abs(nb[2].state.probs - np_[2].state.probs))
    print(f"max diagonal difference between backends: {diff:.2e}")
    assert diff < 1e-9, "backends disagree"
    print("backends agree")
