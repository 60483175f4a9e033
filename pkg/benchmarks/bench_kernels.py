"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--rows 756]

Both backends are fed identical inputs and must return identical output;
the script checks that before printing timings.
"""
import argparse
import time

import numpy as np

from mobweigh._kernels import backends
from mobweigh.models.svr import SvrConfig, kernel_matrix


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rows", type=int, default=756)
    ap.add_argument("--features", type=int, default=10)
    ap.add_argument("--trees", type=int, default=20)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    X = rng.uniform(size=(args.rows, args.features))
    y = np.sin(4 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.05 * rng.normal(size=args.rows)
    samples = [rng.integers(0, args.rows, args.rows) for _ in range(args.trees)]
    mtry = max(1, -(-args.features // 3))
    svr_n = min(args.rows, 400)
    K = kernel_matrix(X[:svr_n], X[:svr_n], SvrConfig(kernel="rbf", gamma=1.0))

    cases = {
        f"forest build ({args.trees} trees, {args.rows} rows)":
            lambda b: [b.build_tree(X, y, s, -1, 2, mtry, i) for i, s in enumerate(samples)],
        f"svr dual solve ({svr_n} rows, C=10)":
            lambda b: b.smo_solve(K, y[:svr_n], 10.0, 0.01, 1e-3, 200 * svr_n, 0),
    }
    found = backends()
    print(f"backends: {', '.join(sorted(found))}")
    for name, case in cases.items():
        results = {}
        for label, mod in sorted(found.items()):
            elapsed, out = best_of(lambda: case(mod), args.repeat)
            results[label] = (elapsed, out)
        outs = [r[1] for r in results.values()]
        same = all(_equal(outs[0], o) for o in outs[1:])
        line = "  ".join(f"{label}={t * 1e3:9.1f} ms" for label, (t, _) in results.items())
        speed = ""
        if "cython" in results:
            speed = f"  speedup x{results['python'][0] / results['cython'][0]:.1f}"
        print(f"{name:40s} {line}{speed}  identical={same}")


def _equal(a, b):
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_equal(u, v) for u, v in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


if __name__ == "__main__":
    main()
