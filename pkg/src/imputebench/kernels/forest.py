"""Bagged regression trees (CART, variance-reduction splits).

Each tree trains on a bootstrap sample whose PRNG stream is seeded from
the forest seed plus the tree index, so fitting is reproducible and
independent of how trees are scheduled across threads. Splits are
greedy: at every node a fresh draw of mtry features (without
replacement) is scanned for the threshold minimizing the summed child
SSE, with both children forced to hold at least min_leaf rows. Nodes
stop splitting below 2*min_leaf rows or at zero variance; no pruning.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange, uint64

from ..errors import DimensionMismatchError, TooFewRowsError

_U64_GOLDEN = uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = uint64(0x94D049BB133111EB)


@njit(cache=True)
def _next_u64(state):
    # splitmix64
    state[0] = state[0] + _U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> uint64(30))) * _U64_MIX1
    z = (z ^ (z >> uint64(27))) * _U64_MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True)
def _rand_below(state, n):
    # unbiased bounded draw (rejection form of Lemire's method)
    n_u = uint64(n)
    threshold = (uint64(0) - n_u) % n_u
    while True:
        r = _next_u64(state)
        if r >= threshold:
            return int(r % n_u)


@njit(cache=True)
def _build_tree(cols, shared_order, y, tree_seed, mtry, min_leaf,
                boot, feature, threshold, left, right, value):
    p, n = cols.shape
    state = np.empty(1, dtype=np.uint64)
    state[0] = uint64(tree_seed)

    for i in range(n):
        boot[i] = _rand_below(state, n)

    # materialize the bootstrap sample; sorted orders per feature come
    # from the forest-level presort expanded by bootstrap multiplicity
    # (counting sort), and splits maintain them by stable partition, so
    # no node ever sorts
    xb = np.empty((p, n), dtype=np.float64)
    yb = np.empty(n, dtype=np.float64)
    for i in range(n):
        yb[i] = y[boot[i]]
    for f in range(p):
        src = cols[f]
        row = xb[f]
        for i in range(n):
            row[i] = src[boot[i]]

    # bucket bootstrap positions by source row
    count = np.zeros(n + 1, dtype=np.int32)
    for i in range(n):
        count[boot[i] + 1] += 1
    for r in range(n):
        count[r + 1] += count[r]
    positions = np.empty(n, dtype=np.int32)
    cursor = count[:n].copy()
    for i in range(n):
        r = boot[i]
        positions[cursor[r]] = i
        cursor[r] += 1
    orders = np.empty((p, n), dtype=np.int32)
    for f in range(p):
        out = orders[f]
        so = shared_order[f]
        k = 0
        for t in range(n):
            r = so[t]
            for c in range(count[r], count[r + 1]):
                out[k] = positions[c]
                k += 1

    flags = np.empty(n, dtype=np.uint8)
    scratch = np.empty(n, dtype=np.int32)
    perm = np.arange(p)

    cap = feature.shape[0]
    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        nid = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        m = end - start

        seg = orders[0]
        s = 0.0
        s2 = 0.0
        for i in range(start, end):
            yv = yb[seg[i]]
            s += yv
            s2 += yv * yv
        mean = s / m
        sse = 0.0
        for i in range(start, end):
            d = yb[seg[i]] - mean
            sse += d * d

        value[nid] = mean
        feature[nid] = -1
        if m < 2 * min_leaf or sse <= 1e-12 * m * max(1.0, s2 / m):
            continue

        # child-SSE sum = sse - ls^2 * m / (cnt * (m - cnt)) on centered
        # y, so the best split maximizes ls^2 / (cnt * (m - cnt));
        # compared by cross-multiplication to stay division-free
        best_feat = -1
        best_thr = 0.0
        best_cnt = 0
        best_num = -1.0
        best_den = 1.0
        for t in range(mtry):
            j = t + _rand_below(state, p - t)
            perm[t], perm[j] = perm[j], perm[t]
            f = perm[t]
            ord_f = orders[f]
            col = xb[f]
            ls = 0.0
            for i in range(start, start + min_leaf - 1):
                ls += yb[ord_f[i]] - mean
            for i in range(start + min_leaf - 1, start + m - min_leaf):
                ls += yb[ord_f[i]] - mean
                lo = col[ord_f[i]]
                hi = col[ord_f[i + 1]]
                if lo == hi:
                    continue
                cnt = i + 1 - start
                num = ls * ls
                den = float(cnt) * float(m - cnt)
                if num * best_den > best_num * den:
                    best_num = num
                    best_den = den
                    best_cnt = cnt
                    best_feat = f
                    thr = 0.5 * (lo + hi)
                    if thr >= hi:  # rounding with adjacent floats
                        thr = lo
                    best_thr = thr

        if best_feat < 0:
            continue

        ord_best = orders[best_feat]
        for i in range(start, start + best_cnt):
            flags[ord_best[i]] = 1
        for i in range(start + best_cnt, end):
            flags[ord_best[i]] = 0
        for g in range(p):
            if g == best_feat:  # already partitioned by construction
                continue
            og = orders[g]
            nl = 0
            nr = best_cnt
            for i in range(start, end):
                r = og[i]
                if flags[r] == 1:
                    scratch[nl] = r
                    nl += 1
                else:
                    scratch[nr] = r
                    nr += 1
            for i in range(m):
                og[start + i] = scratch[i]

        feature[nid] = best_feat
        threshold[nid] = best_thr
        left[nid] = n_nodes
        right[nid] = n_nodes + 1
        stack_node[top] = n_nodes
        stack_start[top] = start
        stack_end[top] = start + best_cnt
        stack_node[top + 1] = n_nodes + 1
        stack_start[top + 1] = start + best_cnt
        stack_end[top + 1] = end
        top += 2
        n_nodes += 2

    return n_nodes


@njit(cache=True, parallel=True)
def _fit_forest(cols, y, n_trees, mtry, min_leaf, seed):
    p, n = cols.shape
    shared_order = np.empty((p, n), dtype=np.int32)
    for f in prange(p):
        shared_order[f] = np.argsort(cols[f]).astype(np.int32)
    cap = 2 * (n // min_leaf) + 4
    feature = np.empty((n_trees, cap), dtype=np.int64)
    threshold = np.zeros((n_trees, cap), dtype=np.float64)
    left = np.zeros((n_trees, cap), dtype=np.int64)
    right = np.zeros((n_trees, cap), dtype=np.int64)
    value = np.zeros((n_trees, cap), dtype=np.float64)
    boot = np.empty((n_trees, n), dtype=np.int64)
    n_nodes = np.empty(n_trees, dtype=np.int64)
    for t in prange(n_trees):
        n_nodes[t] = _build_tree(
            cols, shared_order, y, uint64(seed) + uint64(t), mtry, min_leaf,
            boot[t], feature[t], threshold[t], left[t], right[t], value[t],
        )
    return feature, threshold, left, right, value, boot, n_nodes


@njit(cache=True, parallel=True)
def _predict(feature, threshold, left, right, value, cols):
    n_trees = feature.shape[0]
    n = cols.shape[1]
    out = np.empty(n, dtype=np.float64)
    for r in prange(n):
        acc = 0.0
        for t in range(n_trees):
            node = 0
            while feature[t, node] >= 0:
                if cols[feature[t, node], r] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            acc += value[t, node]
        out[r] = acc / n_trees
    return out


@dataclass
class Tree:
    """Split records of one regression tree; feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    bootstrap_idx: np.ndarray


@dataclass
class Forest:
    trees: list
    tree_count: int
    mtry: int
    min_leaf: int
    n_features: int


def fit_forest(X, y, tree_count: int = 64, mtry: int | None = None,
               min_leaf: int = 5, seed: int = 0) -> Forest:
    """Fit a bagged regression forest; deterministic given the seed."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise DimensionMismatchError(f"X has {n} rows but y has {y.shape}")
    if tree_count < 1:
        raise ValueError("tree_count must be >= 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if n < 2 * min_leaf:
        raise TooFewRowsError(f"need at least {2 * min_leaf} rows, got {n}")
    if mtry is None:
        mtry = max(1, p // 3)
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must be in [1, {p}]")
    cols = np.ascontiguousarray(X.T)
    feature, threshold, left, right, value, boot, n_nodes = _fit_forest(
        cols, y, tree_count, mtry, min_leaf, np.uint64(seed & ((1 << 64) - 1))
    )
    trees = [
        Tree(
            feature[t, : n_nodes[t]],
            threshold[t, : n_nodes[t]],
            left[t, : n_nodes[t]],
            right[t, : n_nodes[t]],
            value[t, : n_nodes[t]],
            boot[t],
        )
        for t in range(tree_count)
    ]
    return Forest(trees, tree_count, mtry, min_leaf, p)


def predict_forest(forest: Forest, X) -> np.ndarray:
    """Mean of per-tree predictions, row by row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != forest.n_features:
        raise DimensionMismatchError(
            f"forest was trained on {forest.n_features} features, X has {X.shape[1]}"
        )
    cap = max(t.feature.shape[0] for t in forest.trees)
    n_trees = len(forest.trees)
    feature = np.full((n_trees, cap), -1, dtype=np.int64)
    threshold = np.zeros((n_trees, cap), dtype=np.float64)
    left = np.zeros((n_trees, cap), dtype=np.int64)
    right = np.zeros((n_trees, cap), dtype=np.int64)
    value = np.zeros((n_trees, cap), dtype=np.float64)
    for t, tree in enumerate(forest.trees):
        k = tree.feature.shape[0]
        feature[t, :k] = tree.feature
        threshold[t, :k] = tree.threshold
        left[t, :k] = tree.left
        right[t, :k] = tree.right
        value[t, :k] = tree.value
    return _predict(feature, threshold, left, right, value, np.ascontiguousarray(X.T))
