"""Minimum-cost bipartite assignment (Hungarian method with potentials)."""

from __future__ import annotations

import numpy as np


def _hungarian_rows(cost: np.ndarray) -> np.ndarray:
    """Optimal column for every row of an n x m matrix with n <= m.

    Shortest-augmenting-path Hungarian algorithm with row/column potentials,
    O(n^2 m). Rows are inserted in index order, which makes the result
    deterministic for tied costs.
    """
    n, m = cost.shape
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) matched to column j; 0 = free
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col


def hungarian_assign(cost, gate: float = np.inf) -> list[tuple[int, int]]:
    """Minimum-cost one-to-one assignment restricted to entries ``<= gate``.

    Entries above ``gate`` (or non-finite) are forbidden and never returned.
    Among assignments the number of matched pairs is maximised first, then
    the total cost minimised. Returns (row, col) pairs sorted by row.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost must be a 2-D matrix, got shape {cost.shape}")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    allowed = np.isfinite(cost) & (cost <= gate)
    if not allowed.any():
        return []
    lo = cost[allowed].min()
    shifted = np.where(allowed, cost - lo, 0.0)
    # a forbidden pair must cost more than any complete set of allowed pairs
    big = shifted.max() * min(n, m) + 1.0
    work = np.where(allowed, shifted, big)
    transpose = n > m
    if transpose:
        work = work.T
    row_to_col = _hungarian_rows(work)
    pairs = []
    for r, c in enumerate(row_to_col):
        if c < 0:
            continue
        i, j = (c, r) if transpose else (r, c)
        if allowed[i, j]:
            pairs.append((int(i), int(j)))
    return sorted(pairs)
