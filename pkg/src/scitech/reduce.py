"""Dimensionality reduction: exact kNN graph, PCA baseline, neighbor embedding.

The neighbor embedding follows the UMAP recipe: per-point kernel bandwidths
calibrated against log2(k), fuzzy union symmetrization, and a sampled
cross-entropy layout with the low-dimensional kernel 1/(1 + a r^(2b)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.sparse.linalg import eigsh

from .embed import DocVector
from .kernels.layout import optimize_layout

_SMOOTH_TOL_ITERS = 64
_MIN_SIGMA_SCALE = 1e-3
_NEGATIVE_SAMPLE_RATE = 5.0
_INIT_SPAN = 10.0
_STRESS_ITERS = 50
_STRESS_MAX_POINTS = 2048


@dataclass
class NeighborGraph:
    """Exact k-nearest-neighbor graph under cosine distance."""

    k: int
    indices: np.ndarray  # (n, k) int32, ascending by distance
    distances: np.ndarray  # (n, k) float64, ties broken by index
    metric: str = "cosine"

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]


@dataclass
class ReducedVectors:
    dim_out: int
    vectors: np.ndarray  # (n, dim_out) float64
    provenance: str  # "pca" or "neighbor_embedding"
    params: dict = field(default_factory=dict)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return np.asarray(vectors, dtype=np.float64)
    return np.asarray([v.vector for v in vectors], dtype=np.float64)


def knn_graph(vectors: Sequence[DocVector] | np.ndarray, k: int) -> NeighborGraph:
    """Exact cosine kNN via blocked matrix products.

    Neighbors are sorted by ascending distance, ties by ascending index.
    """
    x = _as_matrix(vectors)
    n = x.shape[0]
    if n < 2:
        raise ValueError("knn_graph needs at least 2 vectors")
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        warnings.warn(f"k={k} clamped to {n - 1} (only {n} points)")
        k = n - 1
    indices = np.empty((n, k), dtype=np.int32)
    distances = np.empty((n, k), dtype=np.float64)
    block = max(1, min(n, (1 << 24) // max(1, n)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        d = 1.0 - x[start:stop] @ x.T
        np.maximum(d, 0.0, out=d)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        if k < n - 1:
            part = np.argpartition(d, k - 1, axis=1)[:, :k]
        else:
            part = np.tile(np.arange(n), (stop - start, 1))
        part_d = np.take_along_axis(d, part, axis=1)
        order = np.lexsort((part, part_d), axis=1)[:, :k]
        indices[start:stop] = np.take_along_axis(part, order, axis=1)
        distances[start:stop] = np.take_along_axis(part_d, order, axis=1)
    return NeighborGraph(k=k, indices=indices, distances=distances)


def reduce_pca(vectors, dim_out: int) -> ReducedVectors:
    """Project onto the top principal components of the centered data.

    Components carry a deterministic sign: the largest-magnitude loading of
    each component is positive. Rank-deficient data keeps its leading
    components and pads the rest with zeros.
    """
    x = _as_matrix(vectors)
    n, dim = x.shape
    if dim_out < 1:
        raise ValueError("dim_out must be positive")
    if dim_out > dim:
        raise ValueError(f"dim_out={dim_out} exceeds input dim {dim}")
    if n < dim_out:
        raise ValueError(f"need at least {dim_out} points, got {n}")
    centered = x - x.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = s[0] * max(n, dim) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.sum(s > tol))
    n_keep = min(dim_out, rank)
    out = np.zeros((n, dim_out), dtype=np.float64)
    for j in range(n_keep):
        comp = vt[j]
        if comp[np.argmax(np.abs(comp))] < 0:
            comp = -comp
        out[:, j] = centered @ comp
    if n_keep < dim_out:
        warnings.warn(
            f"data rank {rank} below dim_out={dim_out}; trailing dims zero-filled"
        )
    return ReducedVectors(
        dim_out=dim_out,
        vectors=out,
        provenance="pca",
        params={
            "method": "pca",
            "dim_out": dim_out,
            "rank": rank,
            "singular_values": [float(v) for v in s[:dim_out]],
        },
    )


def _smooth_knn_calibration(distances: np.ndarray, k: int):
    """Per-point (sigma, rho) so sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)."""
    n = distances.shape[0]
    target = np.log2(k)
    rho = distances[:, 0].copy()
    adjusted = np.maximum(distances - rho[:, None], 0.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    for _ in range(_SMOOTH_TOL_ITERS):
        psum = np.exp(-adjusted / mid[:, None]).sum(axis=1)
        greater = psum > target
        hi = np.where(greater, mid, hi)
        lo = np.where(greater, lo, mid)
        unbounded = np.isinf(hi)
        mid = np.where(unbounded, mid * 2.0, (lo + hi) / 2.0)
    sigma = mid
    mean_all = float(distances.mean()) if distances.size else 0.0
    mean_row = distances.mean(axis=1)
    floor = np.where(rho > 0.0, _MIN_SIGMA_SCALE * mean_row, _MIN_SIGMA_SCALE * mean_all)
    return np.maximum(sigma, floor), rho


def _fuzzy_union(graph: NeighborGraph) -> sparse.csr_matrix:
    n, k = graph.indices.shape
    sigma, rho = _smooth_knn_calibration(graph.distances, k)
    vals = np.exp(-np.maximum(graph.distances - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n), k)
    w = sparse.coo_matrix(
        (vals.ravel(), (rows, graph.indices.ravel())), shape=(n, n)
    ).tocsr()
    union = w + w.T - w.multiply(w.T)
    union.eliminate_zeros()
    return union.tocsr()


def _find_ab_params(min_dist: float, spread: float = 1.0):
    """Fit the low-dimensional kernel 1/(1 + a r^(2b)) to the min_dist curve."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.zeros_like(xv)
    yv[xv < min_dist] = 1.0
    tail = xv >= min_dist
    yv[tail] = np.exp(-(xv[tail] - min_dist) / spread)
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


def _spectral_component(sub: sparse.csr_matrix, dim_out: int, rng) -> np.ndarray:
    """Laplacian eigenmap layout, used for components too large for the
    metric-stress path."""
    m = sub.shape[0]
    if m <= dim_out + 1:
        return rng.uniform(-_INIT_SPAN, _INIT_SPAN, (m, dim_out))
    deg = np.asarray(sub.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    norm = sparse.diags(inv_sqrt)
    lap = sparse.identity(m, format="csr") - norm @ sub @ norm
    k_eig = dim_out + 1
    try:
        ncv = min(m, max(2 * k_eig + 1, int(np.sqrt(m))))
        evals, evecs = eigsh(
            lap, k_eig, which="SM", ncv=ncv, tol=1e-4,
            v0=np.ones(m), maxiter=m * 5,
        )
        order = np.argsort(evals)
        coords = evecs[:, order[1:k_eig]]
    except Exception:
        return rng.uniform(-_INIT_SPAN, _INIT_SPAN, (m, dim_out))
    scale = np.abs(coords).max()
    if scale < 1e-12:
        return rng.uniform(-_INIT_SPAN, _INIT_SPAN, (m, dim_out))
    return coords * (_INIT_SPAN / scale)


def _stress_refine(geo: np.ndarray, coords: np.ndarray, iters: int) -> np.ndarray:
    """Stress majorization with 1/d^2 weights, so short distances dominate."""
    w = 1.0 / np.maximum(geo, 1e-12) ** 2
    np.fill_diagonal(w, 0.0)
    v = np.diag(w.sum(axis=1)) - w
    v_inv = np.linalg.pinv(v)
    y = coords.copy()
    for _ in range(iters):
        d = np.sqrt(((y[:, None, :] - y[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, 1.0)
        bz = -w * geo / np.maximum(d, 1e-12)
        np.fill_diagonal(bz, 0.0)
        np.fill_diagonal(bz, -bz.sum(axis=1))
        y = v_inv @ (bz @ y)
    return y


def _metric_component(dist_graph: sparse.csr_matrix, dim_out: int) -> np.ndarray:
    """Classical MDS on graph geodesics, then stress refinement.

    O(m^2) memory and O(m^3) time; callers cap the component size.
    """
    geo = shortest_path(dist_graph, method="D", directed=False)
    bad = ~np.isfinite(geo)
    if bad.any():
        geo[bad] = geo[~bad].max() * 2.0
    h = geo**2
    h = h - h.mean(axis=0) - h.mean(axis=1)[:, None] + h.mean()
    h *= -0.5
    evals, evecs = np.linalg.eigh(h)
    order = np.argsort(evals)[::-1][:dim_out]
    lam = np.clip(evals[order], 0.0, None)
    coords = np.zeros((geo.shape[0], dim_out))
    coords[:, : order.size] = evecs[:, order] * np.sqrt(lam)
    if geo.shape[0] > 2 and geo.max() > 1e-12:
        coords = _stress_refine(geo, coords, _STRESS_ITERS)
    return coords


def _initial_layout(
    graph: NeighborGraph, union: sparse.csr_matrix, dim_out: int, min_dist: float, seed: int
) -> np.ndarray:
    """Per-component layout, components offset along axes so they never overlap.

    Each component is scaled so its median nearest-neighbor distance matches
    min_dist, the plateau width of the low-dimensional kernel.
    """
    n = union.shape[0]
    rng = np.random.default_rng([seed, 0x51EC])
    n_comp, labels = connected_components(union, directed=False)
    dist_graph = sparse.coo_matrix(
        (
            graph.distances.ravel(),
            (np.repeat(np.arange(n), graph.k), graph.indices.ravel()),
        ),
        shape=(n, n),
    ).tocsr()
    dist_graph = dist_graph.maximum(dist_graph.T)
    locals_: list[np.ndarray] = []
    members: list[np.ndarray] = []
    spans: list[float] = []
    for comp in range(n_comp):
        idx = np.nonzero(labels == comp)[0]
        if idx.size > _STRESS_MAX_POINTS:
            local = _spectral_component(union[idx][:, idx].tocsr(), dim_out, rng)
        elif idx.size == 1:
            local = np.zeros((1, dim_out))
        else:
            local = _metric_component(dist_graph[idx][:, idx], dim_out)
        if idx.size > 1:
            d = np.sqrt(((local[:, None, :] - local[None, :, :]) ** 2).sum(-1))
            np.fill_diagonal(d, np.inf)
            med = float(np.median(d.min(axis=1)))
            if med > 1e-12:
                local = local * (min_dist / med)
        locals_.append(local)
        members.append(idx)
        spans.append(float(np.abs(local).max()) if local.size else 0.0)
    coords = np.zeros((n, dim_out), dtype=np.float64)
    for comp in range(n_comp):
        local = locals_[comp]
        if comp > 0:
            offset = np.zeros(dim_out)
            axis = (comp - 1) % dim_out
            step = (comp - 1) // dim_out + 1
            offset[axis] = step * 3.0 * (spans[0] + spans[comp] + min_dist)
            local = local + offset
        coords[members[comp]] = local
    return coords.astype(np.float32)


def reduce_neighbor_embedding(
    graph: NeighborGraph,
    dim_out: int = 5,
    n_epochs: int = 200,
    min_dist: float = 0.1,
    seed: int = 0,
    initial_alpha: float = 5e-5,
    parallel: bool = False,
) -> ReducedVectors:
    """UMAP-style layout of the kNN graph.

    The coordinates come from a deterministic metric-stress layout of each
    graph component, then get refined by per-edge SGD with negative sampling
    on the membership cross-entropy. The default learning rate keeps the
    refinement gentle: at aggressive rates the sampled objective trades exact
    neighbor rankings for its own equilibrium, and neighborhood preservation
    is the fidelity contract here. Raise initial_alpha (the classic value is
    1.0) to let the stochastic layout dominate instead.

    Deterministic for a fixed seed when parallel=False. parallel=True lets the
    compiled kernel race edge updates across threads (faster, run-to-run
    nondeterministic); the pure-numpy fallback ignores the flag.
    """
    union = _fuzzy_union(graph)
    a, b = _find_ab_params(min_dist)
    embedding = _initial_layout(graph, union, dim_out, min_dist, seed)

    union.sort_indices()
    adj_indptr = union.indptr.astype(np.int64)
    adj_indices = union.indices.astype(np.int32)

    graph_max = union.max()
    keep = union.copy()
    keep.data[keep.data < graph_max / float(n_epochs)] = 0.0
    keep.eliminate_zeros()
    coo = keep.tocoo()
    head = coo.row.astype(np.int32)
    tail = coo.col.astype(np.int32)
    epochs_per_sample = (graph_max / coo.data).astype(np.float64)

    embedding = optimize_layout(
        embedding,
        head,
        tail,
        adj_indptr,
        adj_indices,
        n_epochs,
        epochs_per_sample,
        a,
        b,
        1.0,
        initial_alpha,
        _NEGATIVE_SAMPLE_RATE,
        seed,
        parallel,
    )
    return ReducedVectors(
        dim_out=dim_out,
        vectors=np.asarray(embedding, dtype=np.float64),
        provenance="neighbor_embedding",
        params={
            "method": "neighbor_embedding",
            "k": graph.k,
            "dim_out": dim_out,
            "n_epochs": n_epochs,
            "min_dist": min_dist,
            "seed": seed,
            "a": a,
            "b": b,
            "initial_alpha": initial_alpha,
            "negative_sample_rate": _NEGATIVE_SAMPLE_RATE,
        },
    )
