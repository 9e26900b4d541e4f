"""Stochastic layout optimization for the neighbor-embedding reducer.

The njit path sweeps edges sequentially, mirroring the classic per-edge SGD
schedule. The numpy fallback batches each epoch's active edges; updates are
accumulated with np.add.at, so within an epoch gradients see slightly stale
coordinates. Both paths are deterministic for a fixed seed.

Negative samples are drawn uniformly but skipped when they land on a graph
neighbor: repulsion only ever applies to pairs with zero membership weight.
A fully-connected graph therefore optimizes under attraction alone.
"""

from __future__ import annotations

import numpy as np

from ..accel import NUMBA_ENABLED

_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407


def _optimize_layout_numpy(
    embedding,
    head,
    tail,
    adj_indptr,
    adj_indices,
    n_epochs,
    epochs_per_sample,
    a,
    b,
    gamma,
    initial_alpha,
    negative_sample_rate,
    seed,
):
    n_points, dim = embedding.shape
    rng = np.random.default_rng([seed, 0x1A70])
    # edge lookup keyed by i*n+j for the neighbor-exclusion test
    rows = np.repeat(
        np.arange(n_points, dtype=np.int64), np.diff(adj_indptr).astype(np.int64)
    )
    edge_keys = np.sort(rows * n_points + adj_indices.astype(np.int64))
    eps_neg = epochs_per_sample / negative_sample_rate
    next_sample = epochs_per_sample.copy()
    next_neg = eps_neg.copy()
    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        active = np.nonzero(next_sample <= epoch)[0]
        if active.size == 0:
            continue
        h = head[active]
        t = tail[active]
        diff = embedding[h] - embedding[t]
        d2 = np.sum(diff * diff, axis=1, dtype=np.float64)
        coeff = np.zeros_like(d2)
        pos = d2 > 0.0
        coeff[pos] = (-2.0 * a * b * d2[pos] ** (b - 1.0)) / (a * d2[pos] ** b + 1.0)
        grad = np.clip(coeff[:, None] * diff, -4.0, 4.0) * alpha
        np.add.at(embedding, h, grad)
        np.add.at(embedding, t, -grad)
        next_sample[active] += epochs_per_sample[active]

        n_neg = ((epoch - next_neg[active]) / eps_neg[active]).astype(np.int64)
        n_neg = np.maximum(n_neg, 0)
        total = int(n_neg.sum())
        if total > 0:
            rep_h = np.repeat(h, n_neg).astype(np.int64)
            ks = rng.integers(0, n_points, size=total)
            keys = rep_h * n_points + ks
            slot = np.minimum(np.searchsorted(edge_keys, keys), edge_keys.size - 1)
            keep = (ks != rep_h) & (edge_keys[slot] != keys)
            rep_h, ks = rep_h[keep], ks[keep]
            diff = embedding[rep_h] - embedding[ks]
            d2 = np.sum(diff * diff, axis=1, dtype=np.float64)
            pos = d2 > 0.0
            coeff = np.zeros_like(d2)
            coeff[pos] = (2.0 * gamma * b) / ((0.001 + d2[pos]) * (a * d2[pos] ** b + 1.0))
            grad = np.clip(coeff[:, None] * diff, -4.0, 4.0)
            np.add.at(embedding, rep_h, grad * alpha)
        next_neg[active] += n_neg * eps_neg[active]
    return embedding


if NUMBA_ENABLED:
    from numba import njit, prange

    @njit(cache=True)
    def _is_neighbor(adj_indptr, adj_indices, i, k):
        lo = adj_indptr[i]
        hi = adj_indptr[i + 1]
        while lo < hi:
            mid = (lo + hi) // 2
            v = adj_indices[mid]
            if v == k:
                return True
            if v < k:
                lo = mid + 1
            else:
                hi = mid
        return False

    @njit(cache=True)
    def _optimize_layout_numba(
        embedding,
        head,
        tail,
        adj_indptr,
        adj_indices,
        n_epochs,
        epochs_per_sample,
        a,
        b,
        gamma,
        initial_alpha,
        negative_sample_rate,
        seed,
    ):  # pragma: no cover - exercised via optimize_layout
        n_points, dim = embedding.shape
        n_edges = head.shape[0]
        eps_neg = epochs_per_sample / negative_sample_rate
        next_sample = epochs_per_sample.copy()
        next_neg = eps_neg.copy()
        state = np.uint64(seed * 2862933555777941757 + 3037000493)
        mult = np.uint64(_LCG_MULT)
        inc = np.uint64(_LCG_INC)
        shift = np.uint64(33)
        for epoch in range(n_epochs):
            alpha = initial_alpha * (1.0 - epoch / n_epochs)
            for e in range(n_edges):
                if next_sample[e] > epoch:
                    continue
                i = head[e]
                j = tail[e]
                d2 = 0.0
                for d in range(dim):
                    diff = embedding[i, d] - embedding[j, d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
                    for d in range(dim):
                        g = coeff * (embedding[i, d] - embedding[j, d])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        embedding[i, d] += g * alpha
                        embedding[j, d] -= g * alpha
                next_sample[e] += epochs_per_sample[e]

                n_neg = int((epoch - next_neg[e]) / eps_neg[e])
                if n_neg < 0:
                    n_neg = 0
                for _s in range(n_neg):
                    state = state * mult + inc
                    k = int(state >> shift) % n_points
                    if k == i or _is_neighbor(adj_indptr, adj_indices, i, k):
                        continue
                    d2 = 0.0
                    for d in range(dim):
                        diff = embedding[i, d] - embedding[k, d]
                        d2 += diff * diff
                    if d2 > 0.0:
                        coeff = (2.0 * gamma * b) / (
                            (0.001 + d2) * (a * d2**b + 1.0)
                        )
                        for d in range(dim):
                            g = coeff * (embedding[i, d] - embedding[k, d])
                            if g > 4.0:
                                g = 4.0
                            elif g < -4.0:
                                g = -4.0
                            embedding[i, d] += g * alpha
                next_neg[e] += n_neg * eps_neg[e]
        return embedding

    @njit(cache=True, parallel=True)
    def _optimize_layout_numba_parallel(
        embedding,
        head,
        tail,
        adj_indptr,
        adj_indices,
        n_epochs,
        epochs_per_sample,
        a,
        b,
        gamma,
        initial_alpha,
        negative_sample_rate,
        seed,
    ):  # pragma: no cover - nondeterministic path, exercised via optimize_layout
        n_points, dim = embedding.shape
        n_edges = head.shape[0]
        eps_neg = epochs_per_sample / negative_sample_rate
        next_sample = epochs_per_sample.copy()
        next_neg = eps_neg.copy()
        mult = np.uint64(_LCG_MULT)
        inc = np.uint64(_LCG_INC)
        shift = np.uint64(33)
        for epoch in range(n_epochs):
            alpha = initial_alpha * (1.0 - epoch / n_epochs)
            for e in prange(n_edges):
                if next_sample[e] > epoch:
                    continue
                # per-edge stream so threads never share RNG state
                state = np.uint64(seed) * mult + np.uint64(epoch * n_edges + e)
                i = head[e]
                j = tail[e]
                d2 = 0.0
                for d in range(dim):
                    diff = embedding[i, d] - embedding[j, d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (a * d2**b + 1.0)
                    for d in range(dim):
                        g = coeff * (embedding[i, d] - embedding[j, d])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        embedding[i, d] += g * alpha
                        embedding[j, d] -= g * alpha
                next_sample[e] += epochs_per_sample[e]

                n_neg = int((epoch - next_neg[e]) / eps_neg[e])
                if n_neg < 0:
                    n_neg = 0
                for _s in range(n_neg):
                    state = state * mult + inc
                    k = int(state >> shift) % n_points
                    if k == i or _is_neighbor(adj_indptr, adj_indices, i, k):
                        continue
                    d2 = 0.0
                    for d in range(dim):
                        diff = embedding[i, d] - embedding[k, d]
                        d2 += diff * diff
                    if d2 > 0.0:
                        coeff = (2.0 * gamma * b) / (
                            (0.001 + d2) * (a * d2**b + 1.0)
                        )
                        for d in range(dim):
                            g = coeff * (embedding[i, d] - embedding[k, d])
                            if g > 4.0:
                                g = 4.0
                            elif g < -4.0:
                                g = -4.0
                            embedding[i, d] += g * alpha
                next_neg[e] += n_neg * eps_neg[e]
        return embedding


def optimize_layout(
    embedding,
    head,
    tail,
    adj_indptr,
    adj_indices,
    n_epochs,
    epochs_per_sample,
    a,
    b,
    gamma,
    initial_alpha,
    negative_sample_rate,
    seed,
    parallel=False,
):
    args = (
        embedding,
        head,
        tail,
        adj_indptr,
        adj_indices,
        n_epochs,
        epochs_per_sample,
        a,
        b,
        gamma,
        initial_alpha,
        negative_sample_rate,
        seed,
    )
    if NUMBA_ENABLED:
        if parallel:
            return _optimize_layout_numba_parallel(*args)
        return _optimize_layout_numba(*args)
    return _optimize_layout_numpy(*args)
