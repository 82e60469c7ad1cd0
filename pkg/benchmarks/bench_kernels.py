"""Time the compiled kernels against the NumPy fallback.

Usage::

    python3 benchmarks/bench_kernels.py --sizes 2000 8000 --out bench.csv
"""
import argparse
import csv
import sys
import time

import numpy as np

from gecc.kernels import get_backend
from gecc.synth import SyntheticSpec, make_sbm

COLUMNS = ["kernel", "n", "backend", "best_seconds", "speedup_vs_python"]


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n, dim, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, dim))
    C = X[rng.choice(n, size=k, replace=False)].copy()
    labels = rng.integers(0, k, size=n)
    spec = SyntheticSpec(classes=4, nodes_per_class=n // 4, p_in=40.0 / n, p_out=2.0 / n,
                         dim=dim)
    g = make_sbm(spec, seed).graph
    Xg = rng.normal(size=(g.num_nodes, dim))
    return {
        "spmm_csr": lambda B: B.spmm_csr(g.indptr, g.indices, g.data, Xg),
        "assign_nearest": lambda B: B.assign_nearest(X, C),
        "sq_dist_to_point": lambda B: B.sq_dist_to_point(X, C[0]),
        "cluster_sums": lambda B: B.cluster_sums(X, labels, k),
        "fcm_memberships": lambda B: B.fcm_memberships(X, C, 1.1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000, 16000])
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--k", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    args = ap.parse_args(argv)

    try:
        backends = {"python": get_backend("python"), "cython": get_backend("cython")}
    except ImportError:
        print("compiled extension not built; timing the fallback only", file=sys.stderr)
        backends = {"python": get_backend("python")}

    rows = []
    for n in args.sizes:
        for name, fn in cases(n, args.dim, args.k, args.seed).items():
            times = {b: _best(lambda: fn(mod), args.repeat) for b, mod in backends.items()}
            for b, t in times.items():
                rows.append([name, n, b, f"{t:.6g}", f"{times['python'] / t:.3g}"])

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
