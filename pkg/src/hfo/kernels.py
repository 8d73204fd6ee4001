"""Hot numeric kernels with two interchangeable backends.

The numba backend compiles the loop kernels with @njit; the numpy backend
serves the same contracts with vectorized array code (distances) or the
interpreted loop source (tree building). Selection happens once at import:
set HFO_NO_NUMBA=1 to force the numpy backend even when numba is installed.

Determinism contract: tree construction is bit-identical across backends.
Split scores are computed from integer class counts in float64 with a fixed
operation order (exact below 2**53), candidate thresholds are midpoints of
adjacent distinct values, and ties are broken by the lowest feature index and
then the lowest threshold. Random feature subsets for forests come from a
small inline LCG seeded per tree, not from the host RNG, so both backends
draw the same subsets. Distance kernels may differ between backends in the
last float64 ulp because vectorized reductions associate differently.

benchmarks/bench_kernels.py compares the two backends via the NUMPY_IMPLS
and NUMBA_IMPLS registries.
"""

from __future__ import annotations

import os

import numpy as np

NO_NUMBA_ENV = "HFO_NO_NUMBA"

HAS_NUMBA = False
if os.environ.get(NO_NUMBA_ENV, "") in ("", "0"):
    try:
        from numba import njit as _njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False

NUMPY_IMPLS: dict = {}
NUMBA_IMPLS: dict = {}


# ---------------------------------------------------------------------------
# distances


def _minkowski_numpy(refs: np.ndarray, q: np.ndarray, p: float) -> np.ndarray:
    diff = np.abs(refs - q)
    if p == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if p == 1.0:
        return diff.sum(axis=1)
    return np.power((diff**p).sum(axis=1), 1.0 / p)


def _minkowski_loop(refs, q, p):  # pragma: no cover - numba source
    n, d = refs.shape
    out = np.empty(n, dtype=np.float64)
    if p == 2.0:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                t = refs[i, j] - q[j]
                acc += t * t
            out[i] = np.sqrt(acc)
    elif p == 1.0:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += abs(refs[i, j] - q[j])
            out[i] = acc
    else:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += abs(refs[i, j] - q[j]) ** p
            out[i] = acc ** (1.0 / p)
    return out


def _cosine_numpy(refs: np.ndarray, ref_norms: np.ndarray, q: np.ndarray) -> np.ndarray:
    qn = float(np.sqrt(q @ q))
    out = np.ones(refs.shape[0], dtype=np.float64)
    if qn == 0.0:
        return out
    ok = ref_norms > 0.0
    dots = refs[ok] @ q
    out[ok] = 1.0 - dots / (ref_norms[ok] * qn)
    return out


def _cosine_loop(refs, ref_norms, q):  # pragma: no cover - numba source
    n, d = refs.shape
    out = np.empty(n, dtype=np.float64)
    qn = 0.0
    for j in range(d):
        qn += q[j] * q[j]
    qn = np.sqrt(qn)
    for i in range(n):
        if qn == 0.0 or ref_norms[i] == 0.0:
            out[i] = 1.0
        else:
            dot = 0.0
            for j in range(d):
                dot += refs[i, j] * q[j]
            out[i] = 1.0 - dot / (ref_norms[i] * qn)
    return out


def _row_norms_numpy(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", x, x))


def _row_norms_loop(x):  # pragma: no cover - numba source
    n, d = x.shape
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += x[i, j] * x[i, j]
        out[i] = np.sqrt(acc)
    return out


# ---------------------------------------------------------------------------
# CART tree with Gini impurity
#
# Node arrays: feature[i] == -1 marks a leaf; leaf_p[i] is the failed-class
# probability at the node (populated for every node, used at leaves).
# Candidate thresholds sit halfway between adjacent distinct sorted values.
# A node splits only when some candidate strictly lowers the weighted Gini
# score; scanning features in ascending order and thresholds in ascending
# value order with strictly-better acceptance yields the pinned tie-break.


def _build_tree_impl(xs, ys, mtry, seed):
    n, d = xs.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    leaf_p = np.zeros(cap, dtype=np.float64)

    idx = np.arange(n, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    perm = np.empty(d, dtype=np.int64)
    chosen = np.empty(d, dtype=np.int64)

    # explicit DFS stack: (node id, lo, hi) ranges into idx
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1

    # 32-bit LCG for per-node feature subsets; identical in both backends
    state = np.int64(seed) & np.int64(0xFFFFFFFF)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo

        c1 = np.int64(0)
        for i in range(lo, hi):
            c1 += ys[idx[i]]
        c0 = m - c1
        leaf_p[node] = c1 / m
        if c0 == 0 or c1 == 0:
            continue

        # parent-weighted score; a split must beat this strictly
        best_g = (float(c0) * float(c0) + float(c1) * float(c1)) / m
        best_feat = -1
        best_thr = 0.0

        n_feats = d
        if 0 < mtry < d:
            for j in range(d):
                perm[j] = j
            for j in range(mtry):
                state = (np.int64(1664525) * state + np.int64(1013904223)) & np.int64(0xFFFFFFFF)
                k = j + int((state * np.int64(d - j)) >> np.int64(32))
                t = perm[j]
                perm[j] = perm[k]
                perm[k] = t
            for j in range(mtry):
                chosen[j] = perm[j]
            chosen[:mtry].sort()
            n_feats = mtry
        else:
            for j in range(d):
                chosen[j] = j

        vals = np.empty(m, dtype=np.float64)
        labs = np.empty(m, dtype=np.int64)
        for fi in range(n_feats):
            f = chosen[fi]
            for i in range(m):
                vals[i] = xs[idx[lo + i], f]
            order = np.argsort(vals)
            l0 = np.int64(0)
            l1 = np.int64(0)
            for i in range(m):
                labs[i] = ys[idx[lo + order[i]]]
            prev = vals[order[0]]
            for i in range(m - 1):
                if labs[i] == 1:
                    l1 += 1
                else:
                    l0 += 1
                cur = vals[order[i + 1]]
                if cur > prev:
                    nl = i + 1
                    nr = m - nl
                    r0 = c0 - l0
                    r1 = c1 - l1
                    g = (float(l0) * float(l0) + float(l1) * float(l1)) / nl + (
                        float(r0) * float(r0) + float(r1) * float(r1)
                    ) / nr
                    if g > best_g:
                        best_g = g
                        best_feat = f
                        best_thr = (prev + cur) * 0.5
                    prev = cur

        if best_feat < 0:
            continue

        # stable two-way partition of idx[lo:hi] on the chosen split
        nl = 0
        for i in range(lo, hi):
            if xs[idx[i], best_feat] <= best_thr:
                buf[lo + nl] = idx[i]
                nl += 1
        nr = 0
        for i in range(lo, hi):
            if xs[idx[i], best_feat] > best_thr:
                buf[lo + nl + nr] = idx[i]
                nr += 1
        for i in range(lo, hi):
            idx[i] = buf[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_node[top + 1] = n_nodes + 1
        stack_lo[top + 1] = lo + nl
        stack_hi[top + 1] = hi
        top += 2
        n_nodes += 2

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], leaf_p[:n_nodes]


def _tree_apply_impl(feature, threshold, left, right, leaf_p, xs):
    n = xs.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if xs[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = leaf_p[node]
    return out


NUMPY_IMPLS["minkowski_distances"] = _minkowski_numpy
NUMPY_IMPLS["cosine_distances"] = _cosine_numpy
NUMPY_IMPLS["row_norms"] = _row_norms_numpy
NUMPY_IMPLS["build_tree"] = _build_tree_impl
NUMPY_IMPLS["tree_apply"] = _tree_apply_impl

if HAS_NUMBA:
    _sig_kwargs = {"cache": True, "nogil": True}
    NUMBA_IMPLS["minkowski_distances"] = _njit(**_sig_kwargs)(_minkowski_loop)
    NUMBA_IMPLS["cosine_distances"] = _njit(**_sig_kwargs)(_cosine_loop)
    NUMBA_IMPLS["row_norms"] = _njit(**_sig_kwargs)(_row_norms_loop)
    NUMBA_IMPLS["build_tree"] = _njit(**_sig_kwargs)(_build_tree_impl)
    NUMBA_IMPLS["tree_apply"] = _njit(**_sig_kwargs)(_tree_apply_impl)
    _ACTIVE = NUMBA_IMPLS
else:
    _ACTIVE = NUMPY_IMPLS

BACKEND = "numba" if HAS_NUMBA else "numpy"

minkowski_distances = _ACTIVE["minkowski_distances"]
cosine_distances = _ACTIVE["cosine_distances"]
row_norms = _ACTIVE["row_norms"]
build_tree = _ACTIVE["build_tree"]
tree_apply = _ACTIVE["tree_apply"]


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed paths run warm."""
    xs = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0]])
    ys = np.array([0, 1, 0, 1], dtype=np.int64)
    q = np.array([0.5, 0.5])
    minkowski_distances(xs, q, 2.0)
    minkowski_distances(xs, q, 3.0)
    cosine_distances(xs, row_norms(xs), q)
    f, t, l, r, p = build_tree(xs, ys, 0, 1)
    tree_apply(f, t, l, r, p, xs)
    f, t, l, r, p = build_tree(xs, ys, 1, 1)
    tree_apply(f, t, l, r, p, xs)
