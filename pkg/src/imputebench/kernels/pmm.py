"""Predictive mean matching: donate an observed value whose model
prediction is nearest to the missing cell's prediction."""

import numpy as np

from ..errors import EmptyDonorPoolError


def pmm_match(
    predicted_missing: float,
    predicted_observed,
    observed_values,
    k: int,
    seed: int,
) -> float:
    """Return one donor value drawn uniformly among the k nearest donors.

    Nearness is |predicted_observed - predicted_missing|; ties break
    toward the lower donor index. k=1 is deterministic.
    """
    predicted_observed = np.asarray(predicted_observed, dtype=np.float64)
    observed_values = np.asarray(observed_values, dtype=np.float64)
    if predicted_observed.shape != observed_values.shape:
        raise ValueError("donor predictions and values must align")
    n = predicted_observed.size
    if k < 1 or n < k:
        raise EmptyDonorPoolError(f"need k={k} donors, pool has {n}")
    dist = np.abs(predicted_observed - predicted_missing)
    donors = np.lexsort((np.arange(n), dist))[:k]
    pick = 0 if k == 1 else int(np.random.default_rng(seed).integers(0, k))
    return float(observed_values[donors[pick]])


def pmm_match_many(
    predicted_missing,
    predicted_observed,
    observed_values,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized pmm_match over many missing cells against one donor pool.

    Cell-for-cell equivalent to calling pmm_match per prediction: same
    nearest-k sets, same lower-index tie policy, uniform donor draw.
    """
    predicted_missing = np.asarray(predicted_missing, dtype=np.float64)
    predicted_observed = np.asarray(predicted_observed, dtype=np.float64)
    observed_values = np.asarray(observed_values, dtype=np.float64)
    n = predicted_observed.size
    if k < 1 or n < k:
        raise EmptyDonorPoolError(f"need k={k} donors, pool has {n}")
    m = predicted_missing.size
    if m == 0:
        return np.empty(0)

    # the k nearest donors always sit among the k sorted neighbors on
    # each side of the insertion point, so a 2k window bounds the k-th
    # distance; exact ties at that distance are resolved afterwards
    order = np.lexsort((np.arange(n), predicted_observed))
    sorted_preds = predicted_observed[order]
    pos = np.searchsorted(sorted_preds, predicted_missing)
    win = pos[:, None] + np.arange(-k, k)[None, :]
    oob = (win < 0) | (win >= n)
    win_clipped = np.clip(win, 0, n - 1)
    dist = np.abs(sorted_preds[win_clipped] - predicted_missing[:, None])
    dist[oob] = np.inf
    part = np.argpartition(dist, k - 1, axis=1)[:, :k]
    kth = np.take_along_axis(dist, part, axis=1).max(axis=1)

    # candidate span: every donor whose prediction lies within kth
    lo = np.searchsorted(sorted_preds, predicted_missing - kth, side="left")
    hi = np.searchsorted(sorted_preds, predicted_missing + kth, side="right")
    picks = np.zeros(m, dtype=np.int64) if k == 1 else rng.integers(0, k, size=m)
    chosen = np.empty(m, dtype=np.int64)
    exact = hi - lo == k
    if exact.any():
        rows = np.flatnonzero(exact)
        span = lo[rows, None] + np.arange(k)[None, :]
        cand = order[span]
        d = np.abs(sorted_preds[span] - predicted_missing[rows, None])
        # order the k candidates by (distance, donor index)
        idx_order = np.argsort(cand, axis=1)
        cand = np.take_along_axis(cand, idx_order, axis=1)
        d = np.take_along_axis(d, idx_order, axis=1)
        ranked = np.take_along_axis(cand, np.argsort(d, axis=1, kind="stable"), axis=1)
        chosen[rows] = ranked[np.arange(rows.size), picks[rows]]
    for i in np.flatnonzero(~exact):
        cand = order[lo[i]:hi[i]]
        d = np.abs(predicted_observed[cand] - predicted_missing[i])
        sel = np.lexsort((cand, d))
        chosen[i] = cand[sel[picks[i]]]
    return observed_values[chosen]
