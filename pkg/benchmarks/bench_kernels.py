"""Time the numba kernels against their numpy twins.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--rows 20000]

Prints one line per kernel (best of ``--repeat`` runs, after a warm-up
call that triggers compilation) and an end-to-end random-forest fit under
each dispatch mode.
"""

import argparse
import time
import timeit

import numpy as np

from flowgauntlet import _accel, kernels
from flowgauntlet.models import RfParams, train_random_forest
from flowgauntlet.pipeline import SyntheticSpec, generate_synthetic_flows


def best_of(fn, repeat):
    fn()  # warm-up / compile
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rows, rng):
    xs = np.sort(rng.normal(size=rows))
    ys = (rng.random(rows) < 0.5).astype(np.float64)
    x = rng.normal(size=rows)
    y = rng.integers(0, 2, rows)
    # a full binary tree of depth 10 over 9 columns
    depth, n_int = 10, 2 ** 10 - 1
    n_nodes = 2 * n_int + 1
    left = np.full(n_nodes, -1, np.int64)
    right = np.full(n_nodes, -1, np.int64)
    left[:n_int] = 2 * np.arange(n_int) + 1
    right[:n_int] = 2 * np.arange(n_int) + 2
    feature = rng.integers(0, 9, n_nodes)
    threshold = rng.normal(size=n_nodes)
    X = rng.normal(size=(rows, 9))
    return {
        "best_split": ((xs, ys, 1.0, kernels.GINI),),
        "apply_tree": ((X, feature, threshold, left, right),),
        "bin_contingency": ((x, y, 10),),
    }, depth


def forest_fit(rows, repeat):
    ds = generate_synthetic_flows(SyntheticSpec(n_benign=rows // 2, n_malware=rows - rows // 2))
    out = {}
    for mode in ("jit", "numpy"):
        _accel.USE_JIT = mode == "jit"
        out[mode] = best_of(lambda: train_random_forest(ds, RfParams(n_estimators=10)), repeat)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--forest-rows", type=int, default=2_000)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    cases, depth = kernel_cases(args.rows, rng)
    print(f"{'kernel':<18}{'jit [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (call_args,) in cases.items():
        jit_fn = getattr(kernels, f"{name}_jit")
        np_fn = getattr(kernels, f"{name}_numpy")
        t0 = time.perf_counter()
        jit_fn(*call_args)
        compile_s = time.perf_counter() - t0
        tj = best_of(lambda: jit_fn(*call_args), args.repeat)
        tn = best_of(lambda: np_fn(*call_args), args.repeat)
        print(f"{name:<18}{tj * 1e3:>12.3f}{tn * 1e3:>12.3f}{tn / tj:>9.1f}x"
              f"   (first call {compile_s:.2f}s)")

    saved = _accel.USE_JIT
    try:
        fit = forest_fit(args.forest_rows, max(1, args.repeat // 2))
    finally:
        _accel.USE_JIT = saved
    print(f"{'forest fit (10)':<18}{fit['jit'] * 1e3:>12.1f}{fit['numpy'] * 1e3:>12.1f}"
          f"{fit['numpy'] / fit['jit']:>9.1f}x")
    print(f"rows={args.rows}, tree depth={depth}, forest rows={args.forest_rows}")


if __name__ == "__main__":
    main()
