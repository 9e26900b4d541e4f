"""Density clustering of reduced vectors and topic-level aggregation.

HDBSCAN assembled from its primitive steps: core distances, mutual
reachability, an exact minimum spanning tree, a single-linkage merge
tree, the condensed tree, and excess-of-mass cluster selection.  Topic
centroids live in the original embedding space; the dendrogram over
centroids uses average linkage under cosine distance.
"""

import json
import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed import DocVector
from .ingest import PublicationRecord
from .kernels.mst import mst_mutual_reachability
from .reduce import ReducedVectors

logger = logging.getLogger(__name__)

# distance-matrix blocks stay under (1 << 24) float64 entries
_BLOCK_ENTRIES = 1 << 24


@dataclass
class ClusterAssignment:
    """Per-point cluster labels with selection stabilities.

    labels holds one integer per point, -1 for noise.  stabilities maps
    each cluster label to the sum over its member points of
    (lambda_point - lambda_birth) from the condensed tree.
    """

    labels: np.ndarray
    n_clusters: int
    stabilities: dict[int, float]
    params: dict[str, int]


@dataclass
class Topic:
    """A cluster of publications with its original-space centroid."""

    topic_id: int
    member_doc_ids: list[str]
    centroid: np.ndarray
    size: int
    yearly_counts: dict[int, int]


@dataclass
class Dendrogram:
    """Ordered average-linkage merges over topic centroids.

    Leaf nodes carry topic ids; merged nodes are numbered sequentially
    starting above the largest topic id.  Each merge is
    (node_a, node_b, height, new_node) with node_a < node_b.
    """

    merges: list[tuple[int, int, float, int]] = field(default_factory=list)

    @property
    def heights(self) -> list[float]:
        return [m[2] for m in self.merges]


def _core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest neighbor."""
    n = points.shape[0]
    sq = np.sum(points * points, axis=1)
    core = np.empty(n)
    block = max(1, min(n, _BLOCK_ENTRIES // max(1, n)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        d2 = sq[start:stop, None] - 2.0 * (points[start:stop] @ points.T)
        d2 += sq[None, :]
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(stop - start)
        d2[rows, rows + start] = np.inf
        part = np.partition(d2, min_samples - 1, axis=1)[:, min_samples - 1]
        core[start:stop] = np.sqrt(part)
    return core


def _single_linkage(edges: np.ndarray, weights: np.ndarray, n: int):
    """Merge tree from MST edges, scipy layout: points 0..n-1, then n+step.

    Ties in weight break by (endpoint a, endpoint b) so reruns agree.
    """
    order = np.lexsort((edges[:, 1], edges[:, 0], weights))
    uf_parent = np.arange(n, dtype=np.int64)
    comp_node = np.arange(n, dtype=np.int64)
    comp_size = np.ones(n, dtype=np.int64)
    merges = np.empty((n - 1, 2), dtype=np.int64)
    heights = np.empty(n - 1)
    sizes = np.empty(n - 1, dtype=np.int64)

    def find(i: int) -> int:
        root = i
        while uf_parent[root] != root:
            root = uf_parent[root]
        while uf_parent[i] != root:
            uf_parent[i], i = root, uf_parent[i]
        return root

    for step, e in enumerate(order):
        ra = find(int(edges[e, 0]))
        rb = find(int(edges[e, 1]))
        merges[step, 0] = comp_node[ra]
        merges[step, 1] = comp_node[rb]
        heights[step] = weights[e]
        sizes[step] = comp_size[ra] + comp_size[rb]
        uf_parent[rb] = ra
        comp_node[ra] = n + step
        comp_size[ra] = sizes[step]
    return merges, heights, sizes


def _subtree_leaves(merges: np.ndarray, n: int, node: int) -> list[int]:
    out = []
    stack = [node]
    while stack:
        v = stack.pop()
        if v < n:
            out.append(v)
        else:
            stack.append(int(merges[v - n, 0]))
            stack.append(int(merges[v - n, 1]))
    return out


def _condense_tree(merges, heights, sizes, n: int, min_cluster_size: int):
    """Condensed tree rows (parent, child, lambda, size).

    Children below min_cluster_size fall out as points at the lambda of
    the split; a split into two large-enough children births two new
    clusters.  Cluster ids start at n (the root); children are numbered
    after their parents, so descending id order is leaves-to-root.
    """
    parents: list[int] = []
    childs: list[int] = []
    lams: list[float] = []
    child_sizes: list[int] = []
    next_cluster = n + 1
    work = [(2 * n - 2, n)]
    while work:
        node, cluster = work.pop()
        while True:
            left = int(merges[node - n, 0])
            right = int(merges[node - n, 1])
            h = heights[node - n]
            lam = 1.0 / h if h > 0.0 else np.inf
            size_l = 1 if left < n else int(sizes[left - n])
            size_r = 1 if right < n else int(sizes[right - n])
            if size_l >= min_cluster_size and size_r >= min_cluster_size:
                for child, size in ((left, size_l), (right, size_r)):
                    cid = next_cluster
                    next_cluster += 1
                    parents.append(cluster)
                    childs.append(cid)
                    lams.append(lam)
                    child_sizes.append(size)
                    work.append((child, cid))
                break
            if size_l < min_cluster_size and size_r < min_cluster_size:
                for child in (left, right):
                    for p in _subtree_leaves(merges, n, child):
                        parents.append(cluster)
                        childs.append(p)
                        lams.append(lam)
                        child_sizes.append(1)
                break
            big, small = (left, right) if size_l >= size_r else (right, left)
            for p in _subtree_leaves(merges, n, small):
                parents.append(cluster)
                childs.append(p)
                lams.append(lam)
                child_sizes.append(1)
            node = big
    return (
        np.asarray(parents, dtype=np.int64),
        np.asarray(childs, dtype=np.int64),
        np.asarray(lams),
        np.asarray(child_sizes, dtype=np.int64),
    )


def _cluster_stabilities(parents, childs, lams, child_sizes, n: int) -> dict[int, float]:
    """Stability per condensed cluster: sum of (lambda - lambda_birth) * size.

    Splitting a cluster into two surviving children contributes the split
    lambda for every point passed down, which equals summing over member
    points the lambda at which each leaves the cluster.
    """
    births: dict[int, float] = {}
    for p, c, lam in zip(parents, childs, lams):
        if c >= n:
            births[int(c)] = float(lam)
    root = n
    root_rows = parents == root
    births[root] = float(lams[root_rows].min()) if root_rows.any() else 0.0
    stab = {cid: 0.0 for cid in births}
    for p, lam, size in zip(parents, lams, child_sizes):
        stab[int(p)] += (float(lam) - births[int(p)]) * int(size)
    return stab


def _select_eom(parents, childs, stab: dict[int, float], n: int) -> list[int]:
    """Excess-of-mass: the antichain maximizing summed stability.

    Bottom-up dynamic program; a parent replaces its children only when
    strictly more stable, so ties keep the finer clusters.  The root is
    never selected.
    """
    children_of: dict[int, list[int]] = {cid: [] for cid in stab}
    for p, c in zip(parents, childs):
        if c >= n:
            children_of[int(p)].append(int(c))
    root = n
    chosen: dict[int, bool] = {}
    subtree_best: dict[int, float] = {}
    for cid in sorted(stab, reverse=True):
        child_sum = sum(subtree_best[k] for k in children_of[cid])
        if cid != root and stab[cid] > child_sum:
            chosen[cid] = True
            subtree_best[cid] = stab[cid]
        else:
            chosen[cid] = False
            subtree_best[cid] = child_sum
    final: list[int] = []
    work = [root]
    while work:
        cid = work.pop()
        if chosen[cid]:
            final.append(cid)
        else:
            work.extend(children_of[cid])
    return sorted(final)


def _label_points(parents, childs, selected: list[int], n: int) -> np.ndarray:
    parent_of = {int(c): int(p) for p, c in zip(parents, childs) if c >= n}
    label_of = {cid: i for i, cid in enumerate(selected)}
    chosen = set(selected)
    labels = np.full(n, -1, dtype=np.int32)
    for p, c in zip(parents, childs):
        if c >= n:
            continue
        cid = int(p)
        while cid not in chosen:
            if cid not in parent_of:
                cid = -1
                break
            cid = parent_of[cid]
        if cid != -1:
            labels[int(c)] = label_of[cid]
    return labels


def hdbscan_fit(
    vectors: ReducedVectors | np.ndarray,
    min_cluster_size: int = 50,
    min_samples: int | None = None,
) -> ClusterAssignment:
    """Cluster reduced vectors by density, labeling outliers -1.

    Follows the canonical recipe: core distance of each point is the
    distance to its min_samples-th nearest neighbor, mutual reachability
    is max(core(a), core(b), d(a, b)), an exact MST over that metric is
    condensed by pruning components below min_cluster_size, and clusters
    are selected by excess of mass.  min_samples defaults to
    min_cluster_size.

    Fewer than min_cluster_size points cannot form any cluster: all
    points come back as noise with a warning.
    """
    points = vectors.vectors if isinstance(vectors, ReducedVectors) else vectors
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("expected a 2-d array of points")
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be at least 2")
    if min_samples is None:
        min_samples = min_cluster_size
    if min_samples < 1:
        raise ValueError("min_samples must be positive")
    n = points.shape[0]
    params = {"min_cluster_size": min_cluster_size, "min_samples": min_samples}
    if n < min_cluster_size:
        warnings.warn(
            f"{n} points cannot form a cluster of size {min_cluster_size}; "
            "labeling all points as noise",
            stacklevel=2,
        )
        return ClusterAssignment(
            labels=np.full(n, -1, dtype=np.int32),
            n_clusters=0,
            stabilities={},
            params=params,
        )
    core = _core_distances(points, min(min_samples, n - 1))
    edges, weights = mst_mutual_reachability(points, core)
    merges, heights, sizes = _single_linkage(edges, weights, n)
    parents, childs, lams, child_sizes = _condense_tree(
        merges, heights, sizes, n, min_cluster_size
    )
    stab = _cluster_stabilities(parents, childs, lams, child_sizes, n)
    selected = _select_eom(parents, childs, stab, n)
    labels = _label_points(parents, childs, selected, n)
    stabilities = {label_of: float(stab[cid]) for label_of, cid in enumerate(selected)}
    return ClusterAssignment(
        labels=labels,
        n_clusters=len(selected),
        stabilities=stabilities,
        params=params,
    )


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.where(norms > 0.0, norms, 1.0)


def extract_topics(
    assignment: ClusterAssignment,
    docs: Sequence[PublicationRecord],
    full_vectors: Sequence[DocVector],
    catch_all_size_ratio: float = 3.0,
    catch_all_dispersion_ratio: float = 1.5,
) -> list[Topic]:
    """Turn cluster labels into topics with original-space centroids.

    The centroid is the L2-normalized mean of the members' full
    document vectors, not their reduced coordinates.  The largest
    cluster is dropped as a catch-all when it is both oversized (more
    than catch_all_size_ratio times the second largest) and diffuse
    (mean member-to-centroid cosine distance more than
    catch_all_dispersion_ratio times the across-topic median); the
    exclusion is logged.
    """
    labels = np.asarray(assignment.labels)
    if not (len(docs) == labels.shape[0] == len(full_vectors)):
        raise ValueError("assignment, docs, and vectors must align")
    topics: list[Topic] = []
    dispersions: dict[int, float] = {}
    for label in sorted(int(v) for v in set(labels.tolist()) if v != -1):
        idx = np.where(labels == label)[0]
        members = np.stack([np.asarray(full_vectors[i].vector, dtype=np.float64) for i in idx])
        centroid = members.mean(axis=0)
        norm = np.linalg.norm(centroid)
        if norm > 0.0:
            centroid = centroid / norm
        cos_dist = 1.0 - _unit_rows(members) @ centroid
        dispersions[label] = float(np.mean(cos_dist))
        years = Counter(int(docs[i].year) for i in idx)
        topics.append(
            Topic(
                topic_id=label,
                member_doc_ids=[docs[i].doc_id for i in idx],
                centroid=centroid.astype(np.float32),
                size=int(idx.shape[0]),
                yearly_counts=dict(sorted(years.items())),
            )
        )
    if len(topics) >= 2:
        by_size = sorted(topics, key=lambda t: t.size, reverse=True)
        largest, second = by_size[0], by_size[1]
        median_disp = float(np.median([dispersions[t.topic_id] for t in topics]))
        if (
            largest.size > catch_all_size_ratio * second.size
            and dispersions[largest.topic_id] > catch_all_dispersion_ratio * median_disp
        ):
            logger.info(
                "excluding catch-all cluster %d: size %d exceeds %.1fx the "
                "second largest (%d) and dispersion %.4f exceeds %.1fx the "
                "median (%.4f)",
                largest.topic_id,
                largest.size,
                catch_all_size_ratio,
                second.size,
                dispersions[largest.topic_id],
                catch_all_dispersion_ratio,
                median_disp,
            )
            topics = [t for t in topics if t.topic_id != largest.topic_id]
    return topics


def agglomerate_topics(topics: Sequence[Topic]) -> Dendrogram:
    """Average-linkage dendrogram over topic centroids, cosine distance.

    Equal-height candidates break toward the smallest (node_a, node_b)
    pair.  Fewer than two topics yield an empty merge list.
    """
    ordered = sorted(topics, key=lambda t: t.topic_id)
    count = len(ordered)
    if count < 2:
        return Dendrogram(merges=[])
    units = _unit_rows(np.stack([t.centroid for t in ordered]).astype(np.float64))
    gram = units @ units.T
    dist = 1.0 - (gram + gram.T) * 0.5
    np.clip(dist, 0.0, None, out=dist)

    node_ids = [t.topic_id for t in ordered]
    sizes = [1] * count
    active = list(range(count))
    next_node = max(node_ids) + 1
    merges: list[tuple[int, int, float, int]] = []
    prev_height = -np.inf
    for _ in range(count - 1):
        best = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                i, j = active[ai], active[bi]
                d = dist[i, j]
                pair = (min(node_ids[i], node_ids[j]), max(node_ids[i], node_ids[j]))
                if best is None or d < best[0] or (d == best[0] and pair < best[1]):
                    best = (d, pair, ai, bi)
        height, pair, ai, bi = best
        i, j = active[ai], active[bi]
        # average linkage never decreases; tolerate only rounding slack
        assert height >= prev_height - 1e-12, "non-monotone merge height"
        prev_height = height
        merged = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i] = merged
        dist[:, i] = merged
        dist[i, i] = 0.0
        merges.append((pair[0], pair[1], float(height), next_node))
        node_ids[i] = next_node
        sizes[i] += sizes[j]
        next_node += 1
        active.pop(bi)
    return Dendrogram(merges=merges)


def save_assignment(assignment: ClusterAssignment, path: str | Path) -> None:
    """Write an assignment as JSONL: one meta line, then one per point."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        meta = {
            "record": "meta",
            "n_clusters": assignment.n_clusters,
            "params": assignment.params,
            "stabilities": {str(k): v for k, v in assignment.stabilities.items()},
        }
        handle.write(json.dumps(meta, sort_keys=True) + "\n")
        for index, label in enumerate(assignment.labels.tolist()):
            handle.write(
                json.dumps({"record": "point", "index": index, "label": int(label)})
                + "\n"
            )


def load_assignment(path: str | Path) -> ClusterAssignment:
    path = Path(path)
    labels: list[int] = []
    meta: dict = {}
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if row.get("record") == "meta":
                meta = row
            else:
                labels.append(int(row["label"]))
    return ClusterAssignment(
        labels=np.asarray(labels, dtype=np.int32),
        n_clusters=int(meta.get("n_clusters", 0)),
        stabilities={int(k): float(v) for k, v in meta.get("stabilities", {}).items()},
        params=dict(meta.get("params", {})),
    )


def save_topics(topics: Sequence[Topic], path: str | Path) -> None:
    """Write topics as JSONL, one topic per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for topic in topics:
            row = {
                "topic_id": topic.topic_id,
                "member_doc_ids": topic.member_doc_ids,
                "centroid": [float(v) for v in topic.centroid],
                "size": topic.size,
                "yearly_counts": {str(k): v for k, v in topic.yearly_counts.items()},
            }
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def load_topics(path: str | Path) -> list[Topic]:
    path = Path(path)
    topics: list[Topic] = []
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            topics.append(
                Topic(
                    topic_id=int(row["topic_id"]),
                    member_doc_ids=list(row["member_doc_ids"]),
                    centroid=np.asarray(row["centroid"], dtype=np.float32),
                    size=int(row["size"]),
                    yearly_counts={int(k): int(v) for k, v in row["yearly_counts"].items()},
                )
            )
    return topics


def save_dendrogram(dendrogram: Dendrogram, path: str | Path) -> None:
    """Write the merge list as JSON, directly renderable by a client."""
    path = Path(path)
    payload = {
        "merges": [
            {"node_a": a, "node_b": b, "height": h, "new_node": m}
            for a, b, h, m in dendrogram.merges
        ]
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_dendrogram(path: str | Path) -> Dendrogram:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    merges = [
        (int(m["node_a"]), int(m["node_b"]), float(m["height"]), int(m["new_node"]))
        for m in payload.get("merges", [])
    ]
    return Dendrogram(merges=merges)
