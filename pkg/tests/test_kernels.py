import os
import subprocess
import sys

import numpy as np

from mflqg import SimConfig, optimal_feedback, scalar_preset, simulate_mc, solve_riccati
from mflqg._kernels import (BACKEND, _mc_chunk_loops, _mc_chunk_numpy,
                            _partial_chunk_loops, _partial_chunk_numpy,
                            mc_chunk, partial_chunk)


def test_backend_is_selected():
    assert BACKEND in ("numba", "numpy")
    if os.environ.get("MFLQG_BACKEND") == "numpy":
        assert BACKEND == "numpy"


def _random_mc_inputs(rng, n=64, k=5):
    x = rng.normal(size=n)
    run = np.zeros(n)
    z = rng.normal(size=(k, n))
    coefs = [rng.uniform(0.1, 1.0, k) for _ in range(6)]
    return x, run, z, coefs


def test_mc_chunk_implementations_agree():
    rng = np.random.default_rng(0)
    x, run, z, (a, b, s, q, al, be) = _random_mc_inputs(rng)
    dt = 1e-2
    x1, run1 = x.copy(), run.copy()
    m1a, m2a = np.empty(5), np.empty(5)
    _mc_chunk_loops(x1, run1, z, a, b, s, q, al, be, dt, m1a, m2a)
    x2, run2 = x.copy(), run.copy()
    m1b, m2b = np.empty(5), np.empty(5)
    _mc_chunk_numpy(x2, run2, z, a, b, s, q, al, be, dt, m1b, m2b)
    assert np.allclose(x1, x2, rtol=1e-12, atol=1e-14)
    assert np.allclose(run1, run2, rtol=1e-12, atol=1e-14)
    assert np.allclose(m1a, m1b, rtol=1e-12, atol=1e-14)
    assert np.allclose(m2a, m2b, rtol=1e-12, atol=1e-14)


def test_mc_chunk_single_step_formulas():
    # one particle, one step: everything is checkable by hand
    x = np.array([2.0])
    run = np.zeros(1)
    z = np.array([[0.5]])
    one = np.ones(1)
    dt = 0.1
    m1, m2 = np.empty(1), np.empty(1)
    # a=1, b=1, s*sqrt(dt)=0.3, q*dt=0.2, alpha=-1, beta=0.5
    mc_chunk(x, run, z, one, one, 0.3 * one, 0.2 * one, -1.0 * one,
             0.5 * one, dt, m1, m2)
    assert m1[0] == 2.0 and m2[0] == 4.0  # pre-step moments
    u = -1.0 * 2.0 + 0.5 * 2.0  # alpha x + beta m1 = -1
    assert run[0] == 0.2 * u * u
    assert x[0] == 2.0 + (1.0 * 2.0 + 1.0 * u) * dt + 0.3 * 0.5


def test_partial_chunk_implementations_agree():
    rng = np.random.default_rng(1)
    n, k = 64, 4
    xh = rng.normal(size=n)
    e = rng.normal(size=n)
    run = np.zeros(n)
    zh = rng.normal(size=(k, n))
    zt = rng.normal(size=(k, n))
    al = rng.uniform(-1.0, 0.0, k)
    be = rng.uniform(-1.0, 0.0, k)
    args = (0.2, 0.1, al, be, 1e-2)
    xh1, e1, run1 = xh.copy(), e.copy(), run.copy()
    outs1 = [np.empty(k) for _ in range(3)]
    _partial_chunk_loops(xh1, e1, run1, zh, zt, *args, *outs1)
    xh2, e2, run2 = xh.copy(), e.copy(), run.copy()
    outs2 = [np.empty(k) for _ in range(3)]
    _partial_chunk_numpy(xh2, e2, run2, zh, zt, *args, *outs2)
    assert np.allclose(xh1, xh2, rtol=1e-12, atol=1e-14)
    assert np.allclose(e1, e2, rtol=1e-12, atol=1e-14)
    assert np.allclose(run1, run2, rtol=1e-12, atol=1e-14)
    for o1, o2 in zip(outs1, outs2):
        assert np.allclose(o1, o2, rtol=1e-12, atol=1e-14)


def test_partial_chunk_error_accumulates_independently():
    # alpha = beta = 0: xh moves only by its noise, e only by its own
    n, k = 8, 3
    rng = np.random.default_rng(2)
    xh = np.zeros(n)
    e = np.zeros(n)
    run = np.zeros(n)
    zh = rng.normal(size=(k, n))
    zt = rng.normal(size=(k, n))
    zeros = np.zeros(k)
    outs = [np.empty(k) for _ in range(3)]
    partial_chunk(xh, e, run, zh, zt, 1.0, 2.0, zeros, zeros, 0.25, *outs)
    assert np.allclose(xh, zh.sum(axis=0))
    assert np.allclose(e, 2.0 * zt.sum(axis=0))
    assert run.max() == 0.0


def test_backends_agree_on_full_simulation():
    # run the same seeded simulation under the other backend in a subprocess
    spec = scalar_preset("example1")
    sol = solve_riccati(spec, 200)
    law = optimal_feedback(spec, sol)
    here = simulate_mc(spec, law, 1.0, SimConfig(5000, 5e-3, 31))
    other = "numpy" if BACKEND == "numba" else "numba"
    code = (
        "from mflqg import *\n"
        "spec = scalar_preset('example1')\n"
        "law = optimal_feedback(spec, solve_riccati(spec, 200))\n"
        "r = simulate_mc(spec, law, 1.0, SimConfig(5000, 5e-3, 31))\n"
        "print(repr(r.total), repr(r.std_error))\n"
    )
    env = dict(os.environ, MFLQG_BACKEND=other)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    total, se = (float(tok) for tok in out.stdout.split())
    # same increments on both paths; only reduction order differs
    assert abs(total - here.total) <= 1e-9 * max(1.0, abs(here.total))
    assert abs(se - here.std_error) <= 1e-9
