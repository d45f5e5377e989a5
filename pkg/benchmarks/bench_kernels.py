"""Benchmark the particle-update kernels: numba JIT vs numpy fallback.

Both backends consume identical Philox-seeded increments, so their outputs
must agree to floating-point reduction order; the script reports the max
discrepancy alongside the timings.

    python3 benchmarks/bench_kernels.py --paths 100000 --steps 1000 --repeats 3
"""

import argparse
import time

import numpy as np

from mflqg._kernels import (_mc_chunk_loops, _mc_chunk_numpy,
                            _partial_chunk_loops, _partial_chunk_numpy)

try:
    from numba import njit
except ImportError:
    njit = None

CHUNK_ELEMENTS = 8_000_000


def run_mc(kernel, n, steps, dt, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    x = np.ones(n)
    run = np.zeros(n)
    # example-1-like inputs: A = 0, B = 1, sigma = 1, Q = 1, beta = 0
    ts = np.arange(steps) * dt
    a = np.zeros(steps)
    b = np.ones(steps)
    s_sqdt = np.full(steps, np.sqrt(dt))
    q_dt = np.full(steps, dt)
    al = -1.0 / (1.0 + steps * dt - ts)
    be = np.zeros(steps)
    m1 = np.empty(steps)
    m2 = np.empty(steps)
    chunk = max(1, CHUNK_ELEMENTS // n)
    start = time.perf_counter()
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        z = rng.standard_normal((k, n))
        sl = slice(done, done + k)
        kernel(x, run, z, a[sl], b[sl], s_sqdt[sl], q_dt[sl],
               al[sl], be[sl], dt, m1[sl], m2[sl])
        done += k
    elapsed = time.perf_counter() - start
    return elapsed, x, run, m1, m2


def run_partial(kernel, n, steps, dt, seed):
    ss = np.random.SeedSequence(seed).spawn(2)
    rng_h = np.random.Generator(np.random.Philox(ss[0]))
    rng_t = np.random.Generator(np.random.Philox(ss[1]))
    xh = np.ones(n)
    e = np.zeros(n)
    run = np.zeros(n)
    ts = np.arange(steps) * dt
    al = -1.0 / (1.0 + steps * dt - ts)
    be = np.zeros(steps)
    sh_sqdt = np.sqrt(0.5) * np.sqrt(dt)
    st_sqdt = np.sqrt(0.5) * np.sqrt(dt)
    m1h = np.empty(steps)
    m2h = np.empty(steps)
    m2x = np.empty(steps)
    chunk = max(1, CHUNK_ELEMENTS // (2 * n))
    start = time.perf_counter()
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        zh = rng_h.standard_normal((k, n))
        zt = rng_t.standard_normal((k, n))
        sl = slice(done, done + k)
        kernel(xh, e, run, zh, zt, sh_sqdt, st_sqdt, al[sl], be[sl], dt,
               m1h[sl], m2h[sl], m2x[sl])
        done += k
    elapsed = time.perf_counter() - start
    return elapsed, xh, run, m1h, m2x


def best_time(runner, kernel, n, steps, dt, seed, repeats):
    best = None
    outputs = None
    for _ in range(repeats):
        elapsed, *outs = runner(kernel, n, steps, dt, seed)
        if best is None or elapsed < best:
            best = elapsed
        outputs = outs
    return best, outputs


def max_gap(a, b):
    return max(float(np.abs(x - y).max()) for x, y in zip(a, b))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    dt = 1.0 / args.steps

    if njit is None:
        print("numba not importable; benchmarking the numpy fallback only")
        jobs = [("mc_chunk", run_mc, [("numpy", _mc_chunk_numpy)]),
                ("partial_chunk", run_partial, [("numpy", _partial_chunk_numpy)])]
    else:
        mc_jit = njit(cache=True)(_mc_chunk_loops)
        partial_jit = njit(cache=True)(_partial_chunk_loops)
        # compile outside the timed region
        run_mc(mc_jit, 16, 4, dt, args.seed)
        run_partial(partial_jit, 16, 4, dt, args.seed)
        jobs = [("mc_chunk", run_mc,
                 [("numba", mc_jit), ("numpy", _mc_chunk_numpy)]),
                ("partial_chunk", run_partial,
                 [("numba", partial_jit), ("numpy", _partial_chunk_numpy)])]

    print(f"paths={args.paths} steps={args.steps} dt={dt:g} "
          f"repeats={args.repeats} (best-of)")
    print(f"{'kernel':<15}{'backend':<9}{'seconds':>9}{'speedup':>9}")
    for name, runner, backends in jobs:
        results = {}
        for backend, kernel in backends:
            elapsed, outputs = best_time(runner, kernel, args.paths,
                                         args.steps, dt, args.seed,
                                         args.repeats)
            results[backend] = (elapsed, outputs)
        base = results.get("numpy", next(iter(results.values())))[0]
        for backend, (elapsed, _) in results.items():
            print(f"{name:<15}{backend:<9}{elapsed:>9.3f}{base / elapsed:>9.2f}x")
        if len(results) == 2:
            gap = max_gap(results["numba"][1], results["numpy"][1])
            print(f"{'':<15}max |numba - numpy| across outputs: {gap:.3e}")


if __name__ == "__main__":
    main()
