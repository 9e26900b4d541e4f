"""Exact minimum spanning tree over the implicit mutual-reachability graph.

Prim's algorithm with distances computed on the fly: O(n^2) time, O(n)
memory, never materializing the full pairwise matrix.  Both paths scan
candidates in index order and keep the first minimum, so they produce
the identical edge list.
"""

import numpy as np

from ..accel import NUMBA_ENABLED


def _mst_numpy(points, core):
    n = points.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_from = np.zeros(n, dtype=np.int64)
    edges = np.empty((n - 1, 2), dtype=np.int64)
    weights = np.empty(n - 1)
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        diff = points - points[current]
        d = np.sqrt(np.sum(diff * diff, axis=1))
        d_mr = np.maximum(np.maximum(d, core), core[current])
        update = ~in_tree & (d_mr < best)
        best[update] = d_mr[update]
        best_from[update] = current
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        edges[step, 0] = best_from[nxt]
        edges[step, 1] = nxt
        weights[step] = best[nxt]
        in_tree[nxt] = True
        current = nxt
    return edges, weights


if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _mst_numba(points, core):
        n = points.shape[0]
        dim = points.shape[1]
        in_tree = np.zeros(n, dtype=np.uint8)
        best = np.full(n, np.inf)
        best_from = np.zeros(n, dtype=np.int64)
        edges = np.empty((n - 1, 2), dtype=np.int64)
        weights = np.empty(n - 1)
        current = 0
        in_tree[0] = 1
        for step in range(n - 1):
            nxt = -1
            nxt_w = np.inf
            for j in range(n):
                if in_tree[j]:
                    continue
                acc = 0.0
                for t in range(dim):
                    delta = points[current, t] - points[j, t]
                    acc += delta * delta
                d = np.sqrt(acc)
                if core[j] > d:
                    d = core[j]
                if core[current] > d:
                    d = core[current]
                if d < best[j]:
                    best[j] = d
                    best_from[j] = current
                if best[j] < nxt_w:
                    nxt_w = best[j]
                    nxt = j
            edges[step, 0] = best_from[nxt]
            edges[step, 1] = nxt
            weights[step] = nxt_w
            in_tree[nxt] = 1
            current = nxt
        return edges, weights


def mst_mutual_reachability(points, core):
    """Exact MST under d_mr(a, b) = max(core(a), core(b), d(a, b)).

    Returns (edges, weights): an (n-1, 2) int64 array of endpoint pairs
    and the matching mutual-reachability weights.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    core = np.ascontiguousarray(core, dtype=np.float64)
    if NUMBA_ENABLED:
        return _mst_numba(points, core)
    return _mst_numpy(points, core)
