"""Compare the numba and numpy kernel backends on representative shapes.

Run as a script:

    python benchmarks/bench_kernels.py --rows 4000 --dim 384

The numbers are per-call wall times (best of --repeats), plus the numba
speedup. With HFO_NO_NUMBA=1 only the numpy column is produced.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from hfo.kernels import NUMBA_IMPLS, NUMPY_IMPLS


def _timed(fn, args, repeats):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeats))


def _cases(rows, dim, tree_rows, rng):
    refs = rng.normal(size=(rows, dim))
    q = rng.normal(size=dim)
    norms = np.sqrt(np.einsum("ij,ij->i", refs, refs))
    xs = rng.integers(0, 40, size=(tree_rows, 15)).astype(np.float64)
    ys = (xs[:, 0] + xs[:, 3] > 40).astype(np.int64)
    tree = NUMPY_IMPLS["build_tree"](xs, ys, 0, 1)
    return [
        ("row_norms", "row_norms", (refs,)),
        ("minkowski p=2", "minkowski_distances", (refs, q, 2.0)),
        ("minkowski p=1", "minkowski_distances", (refs, q, 1.0)),
        ("cosine", "cosine_distances", (refs, norms, q)),
        ("build_tree", "build_tree", (xs, ys, 0, 1)),
        ("tree_apply", "tree_apply", (*tree, xs)),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=4000, help="reference rows for distance kernels")
    parser.add_argument("--dim", type=int, default=384, help="feature dimension for distance kernels")
    parser.add_argument("--tree-rows", type=int, default=8000, help="training rows for tree kernels")
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = _cases(args.rows, args.dim, args.tree_rows, rng)

    if NUMBA_IMPLS:
        for _, key, call_args in cases:
            NUMBA_IMPLS[key](*call_args)  # compile before timing

    header = f"{'kernel':<16} {'numpy':>12}"
    if NUMBA_IMPLS:
        header += f" {'numba':>12} {'speedup':>9}"
    print(f"distance shape ({args.rows}, {args.dim}); tree shape ({args.tree_rows}, 15)")
    print(header)
    print("-" * len(header))
    for name, key, call_args in cases:
        t_np = _timed(NUMPY_IMPLS[key], call_args, args.repeats)
        line = f"{name:<16} {t_np * 1e3:>10.3f}ms"
        if NUMBA_IMPLS:
            t_nb = _timed(NUMBA_IMPLS[key], call_args, args.repeats)
            line += f" {t_nb * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
