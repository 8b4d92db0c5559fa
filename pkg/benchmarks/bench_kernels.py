#!/usr/bin/env python3
"""Compare the numba and numpy propagator kernels.

Runs both kernels on the same random batches, checks that they agree, and
prints the best-of-``repeat`` time per call and the speedup.  The shapes
mirror real workloads: a 1-D area scan, a 201 x 201 error map and a
Monte-Carlo curve with 100 trials per point.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --threads 1 --repeat 7
"""
import argparse
import time
import timeit

import numpy as np

from dmcp import _accel

WORKLOADS = (
    ("area scan, N=3", 1001, 3),
    ("error map, N=3", 201 * 201, 3),
    ("error map, N=9", 201 * 201, 9),
    ("Monte Carlo, N=5", 41 * 100, 5),
    ("long sequence, N=64", 10_000, 64),
)


def batch(m, n, seed=0):
    rng = np.random.default_rng(seed)
    omega = rng.uniform(0.5, 1.5, (m, n))
    delta = rng.uniform(-5.0, 5.0, (m, n))
    duration = np.pi / np.hypot(omega, delta) * rng.uniform(0.8, 1.2, (m, n))
    return omega, delta, duration


def best_time(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threads", type=int, default=None, help="numba thread count")
    args = parser.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    import numba

    if args.threads is not None:
        numba.set_num_threads(args.threads)

    t0 = time.perf_counter()
    _accel.compose_batch_numba(*batch(2, 2))
    print(f"numba first call (compile or cache load): {time.perf_counter() - t0:.3f} s, "
          f"{numba.get_num_threads()} threads")
    print(f"{'workload':<22}{'rows':>8}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'max diff':>12}")
    for name, m, n in WORKLOADS:
        arrays = batch(m, n)
        ref = _accel.compose_batch_numpy(*arrays)
        fast = _accel.compose_batch_numba(*arrays)
        diff = float(np.max(np.abs(ref - fast)))
        t_np = best_time(lambda: _accel.compose_batch_numpy(*arrays), args.repeat)
        t_nb = best_time(lambda: _accel.compose_batch_numba(*arrays), args.repeat)
        print(f"{name:<22}{m:>8}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
