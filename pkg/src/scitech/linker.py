"""Topic-to-patent linking: keyword queries, ANN index, search, matches.

The index is a forest of random-hyperplane binary trees over unit
vectors under cosine distance 1 - a.b. Search traverses all trees with
a shared margin-priority queue, then re-ranks the exact distances of
the candidate union, so a budget covering the whole index degenerates
to exact kNN.

Index file layout ("AIDX", version 1, all integers little-endian):
  bytes 0..3   magic "AIDX"
  u32          version (= 1)
  u32          dim
  u32          n_trees
  u64          item count
  per item     u16 id length, id bytes UTF-8, dim x f32
  per tree     u32 node count, then nodes in index order:
               u8 kind (0 = split, 1 = leaf)
               split: dim x f32 normal, f32 offset, u32 left, u32 right
               leaf:  u32 count, count x u32 item indices
Root is node 0 of each tree. Build parameters (leaf capacity, seed) are
not part of the serialized form; the stored geometry is self-contained.
"""

import heapq
import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embed import DocVector
from .errors import VectorFormatError
from .keywords import TopicKeywordProfile, normalize_keyword

_AIDX_MAGIC = b"AIDX"
_AIDX_VERSION = 1
_AIDX_HEADER = struct.Struct("<4sIIIQ")
_IDLEN = struct.Struct("<H")
_U32 = struct.Struct("<I")
_F32 = struct.Struct("<f")

DEFAULT_N_TREES = 50
DEFAULT_LEAF_CAPACITY = 32
DEFAULT_RESULTS_PER_QUERY = 100


@dataclass
class SearchQuery:
    topic_id: int
    seq: int
    keywords: list[str]
    vector: DocVector | None = None


@dataclass(frozen=True)
class PatentMatch:
    patent_id: str
    topic_id: int
    distance: float
    hit_count: int


@dataclass
class AnnIndex:
    """Immutable after build; safe for concurrent searches."""

    dim: int
    n_trees: int
    doc_ids: list[str]
    vectors: np.ndarray  # (n, dim) float32
    trees: list[list[tuple]] = field(default_factory=list)
    metric: str = "cosine"

    @property
    def n_items(self) -> int:
        return len(self.doc_ids)


def generate_queries(
    profile: TopicKeywordProfile,
    top_k: int = 100,
    queries_per_topic: int = 50,
    query_length: int = 25,
    seed: int = 0,
) -> list[SearchQuery]:
    """Random keyword queries mixing Method and Task pools evenly.

    Pools are the top ceil(top_k/2) keywords per label; each query
    samples ceil(L/2) from one pool and floor(L/2) from the other, the
    larger share alternating by query parity (even seq: Method). Query
    RNG streams are seeded by (seed, topic_id, seq), so lists are
    reproducible query by query.

    Pools thinner than their per-query quota shrink the query length to
    2 x min(pool sizes) with a warning. When only Other keywords exist
    (the statistical-extraction fallback), both halves draw from the
    Other ranking and even mixing is waived. No usable pool skips the
    topic with a warning.
    """
    if top_k < 1 or queries_per_topic < 1 or query_length < 1:
        raise ValueError("top_k, queries_per_topic, query_length must be positive")
    half_pool = math.ceil(top_k / 2)
    method_pool = [kw for kw, _ in profile.ranked.get("Method", [])[:half_pool]]
    seen = {normalize_keyword(kw) for kw in method_pool}
    task_pool = []
    for kw, _ in profile.ranked.get("Task", [])[:half_pool]:
        if normalize_keyword(kw) not in seen:
            task_pool.append(kw)
            seen.add(normalize_keyword(kw))

    single_pool: list[str] | None = None
    if not method_pool and not task_pool:
        single_pool = [kw for kw, _ in profile.ranked.get("Other", [])[:top_k]]
        if not single_pool:
            warnings.warn(
                f"topic {profile.topic_id} has no keywords in any pool; skipped",
                stacklevel=2,
            )
            return []

    if single_pool is not None:
        length = min(query_length, len(single_pool))
        if length < query_length:
            warnings.warn(
                f"topic {profile.topic_id}: Other pool supports only "
                f"length-{length} queries (asked {query_length})",
                stacklevel=2,
            )
        queries = []
        for seq in range(queries_per_topic):
            rng = np.random.default_rng([seed, profile.topic_id, seq])
            picks = rng.choice(len(single_pool), size=length, replace=False)
            queries.append(
                SearchQuery(
                    topic_id=profile.topic_id,
                    seq=seq,
                    keywords=[single_pool[i] for i in picks],
                )
            )
        return queries

    length = query_length
    smallest = min(len(method_pool), len(task_pool))
    if smallest < math.ceil(length / 2):
        length = 2 * smallest
        warnings.warn(
            f"topic {profile.topic_id}: pool sizes {len(method_pool)}/"
            f"{len(task_pool)} shrink query length to {length}",
            stacklevel=2,
        )
        if length == 0:
            return []
    queries = []
    for seq in range(queries_per_topic):
        rng = np.random.default_rng([seed, profile.topic_id, seq])
        method_quota = math.ceil(length / 2) if seq % 2 == 0 else length // 2
        task_quota = length - method_quota
        m_picks = rng.choice(len(method_pool), size=method_quota, replace=False)
        t_picks = rng.choice(len(task_pool), size=task_quota, replace=False)
        keywords = [method_pool[i] for i in m_picks] + [task_pool[i] for i in t_picks]
        order = rng.permutation(len(keywords))
        queries.append(
            SearchQuery(
                topic_id=profile.topic_id,
                seq=seq,
                keywords=[keywords[i] for i in order],
            )
        )
    return queries


def _build_tree(matrix: np.ndarray, leaf_capacity: int, rng) -> list[tuple]:
    nodes: list[tuple] = []

    def build(idx: np.ndarray) -> int:
        pos = len(nodes)
        nodes.append(())
        if idx.size <= leaf_capacity:
            nodes[pos] = ("leaf", np.sort(idx).astype(np.uint32))
            return pos
        normal = None
        for _ in range(3):
            a, b = rng.choice(idx, size=2, replace=False)
            w = matrix[a] - matrix[b]
            norm = np.linalg.norm(w)
            if norm > 0.0:
                normal = (w / norm).astype(np.float32)
                offset = np.float32(normal @ ((matrix[a] + matrix[b]) * 0.5))
                break
        if normal is None:
            # duplicate-heavy region: no separating plane, split by permutation
            perm = rng.permutation(idx.size)
            side = perm < idx.size // 2
            left = build(idx[side])
            right = build(idx[~side])
            nodes[pos] = (
                "split",
                np.zeros(matrix.shape[1], dtype=np.float32),
                np.float32(0.0),
                left,
                right,
            )
            return pos
        margins = matrix[idx] @ normal - offset
        side = margins > 0.0
        ties = margins == 0.0
        if ties.any():
            side[ties] = rng.random(int(ties.sum())) < 0.5
        if side.all() or not side.any():
            perm = rng.permutation(idx.size)
            side = perm < idx.size // 2
        left = build(idx[side])
        right = build(idx[~side])
        nodes[pos] = ("split", normal, offset, left, right)
        return pos

    build(np.arange(matrix.shape[0], dtype=np.int64))
    return nodes


def build_index(
    vectors: Sequence[DocVector],
    n_trees: int = DEFAULT_N_TREES,
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
    seed: int = 0,
) -> AnnIndex:
    """Forest of random-hyperplane trees over unit vectors.

    Each tree recursively splits on the perpendicular bisector of two
    randomly chosen items until nodes hold at most leaf_capacity items;
    zero-margin items fall to a random side. Tree t uses the RNG stream
    (seed, t), so trees are independent and the build is reproducible.
    """
    if n_trees < 1 or leaf_capacity < 1:
        raise ValueError("n_trees and leaf_capacity must be positive")
    if not vectors:
        matrix = np.zeros((0, 1), dtype=np.float32)
        dim = 1
    else:
        dim = len(np.asarray(vectors[0].vector).ravel())
        matrix = np.stack(
            [np.asarray(v.vector, dtype=np.float32).ravel() for v in vectors]
        )
        if matrix.shape[1] != dim:
            raise ValueError("inconsistent vector dimensions")
    doc_ids = [v.doc_id for v in vectors]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("duplicate doc ids in index input")
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t])
        trees.append(_build_tree(matrix, leaf_capacity, rng))
    return AnnIndex(dim=dim, n_trees=n_trees, doc_ids=doc_ids, vectors=matrix, trees=trees)


def search(
    index: AnnIndex,
    query: DocVector,
    k: int = DEFAULT_RESULTS_PER_QUERY,
    search_budget: int | None = None,
) -> list[tuple[str, float]]:
    """Top k items by exact cosine distance over an ANN candidate union.

    All trees share one priority queue keyed by a margin bound: the near
    child inherits its parent's bound, the far child's bound rises to at
    least the split margin, and nodes pop in ascending bound order, so
    the home leaf of every tree drains before any far branch. Collection
    stops once at least search_budget unique candidates (default
    n_trees x k) are gathered; the union is then re-ranked exactly.
    Result ties order by ascending patent id.
    """
    if k < 1:
        raise ValueError("k must be positive")
    n = index.n_items
    if n == 0:
        warnings.warn("search against an empty index", stacklevel=2)
        return []
    if k > n:
        warnings.warn(f"k={k} exceeds index size {n}; returning all items", stacklevel=2)
    budget = index.n_trees * k if search_budget is None else search_budget
    q = np.asarray(query.vector, dtype=np.float64).ravel()
    if q.shape[0] != index.dim:
        raise ValueError(f"query dim {q.shape[0]} != index dim {index.dim}")
    norm = np.linalg.norm(q)
    if norm > 0.0:
        q = q / norm
    q32 = q.astype(np.float32)
    seen = np.zeros(n, dtype=bool)
    collected = 0
    target = min(budget, n)
    counter = 0
    heap: list[tuple[float, int, int, int]] = []
    for t in range(index.n_trees):
        heapq.heappush(heap, (0.0, counter, t, 0))
        counter += 1
    while heap and collected < target:
        bound, _, t, node_idx = heapq.heappop(heap)
        node = index.trees[t][node_idx]
        if node[0] == "leaf":
            for item in node[1]:
                if not seen[item]:
                    seen[item] = True
                    collected += 1
            continue
        _, normal, offset, left, right = node
        margin = float(normal @ q32) - float(offset)
        near, far = (left, right) if margin >= 0.0 else (right, left)
        heapq.heappush(heap, (bound, counter, t, near))
        counter += 1
        heapq.heappush(heap, (max(bound, abs(margin)), counter, t, far))
        counter += 1
    candidates = np.flatnonzero(seen)
    dists = 1.0 - index.vectors[candidates].astype(np.float64) @ q
    ranked = sorted(
        ((float(d), index.doc_ids[i]) for d, i in zip(dists, candidates)),
        key=lambda pair: (pair[0], pair[1]),
    )
    return [(doc_id, d) for d, doc_id in ranked[:k]]


def aggregate_matches(
    results: Iterable[Sequence[tuple[str, float]]], topic_id: int
) -> list[PatentMatch]:
    """Deduplicate per-query results: min distance, retrieval count.

    Output is sorted by ascending distance, ties by patent id; its
    length equals the number of distinct patents retrieved.
    """
    best: dict[str, float] = {}
    hits: dict[str, int] = {}
    for result in results:
        for patent_id, distance in result:
            hits[patent_id] = hits.get(patent_id, 0) + 1
            if patent_id not in best or distance < best[patent_id]:
                best[patent_id] = distance
    matches = [
        PatentMatch(patent_id=pid, topic_id=topic_id, distance=best[pid], hit_count=hits[pid])
        for pid in best
    ]
    matches.sort(key=lambda m: (m.distance, m.patent_id))
    return matches


def save_queries(queries: Sequence[SearchQuery], path) -> None:
    """Audit log of generated queries, one JSONL row each."""
    with open(path, "w", encoding="utf-8") as fh:
        for query in queries:
            row = {"topic_id": query.topic_id, "seq": query.seq, "keywords": query.keywords}
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def load_queries(path) -> list[SearchQuery]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                row = json.loads(line)
                out.append(
                    SearchQuery(
                        topic_id=int(row["topic_id"]),
                        seq=int(row["seq"]),
                        keywords=list(row["keywords"]),
                    )
                )
    return out


def save_matches(matches: Sequence[PatentMatch], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in matches:
            row = {
                "patent_id": m.patent_id,
                "topic_id": m.topic_id,
                "distance": m.distance,
                "hit_count": m.hit_count,
            }
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def load_matches(path) -> list[PatentMatch]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                row = json.loads(line)
                out.append(
                    PatentMatch(
                        patent_id=str(row["patent_id"]),
                        topic_id=int(row["topic_id"]),
                        distance=float(row["distance"]),
                        hit_count=int(row["hit_count"]),
                    )
                )
    return out


def save_index(index: AnnIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _AIDX_HEADER.pack(
                _AIDX_MAGIC, _AIDX_VERSION, index.dim, index.n_trees, index.n_items
            )
        )
        for i, doc_id in enumerate(index.doc_ids):
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise VectorFormatError(f"id too long: {doc_id[:40]}...", 0)
            fh.write(_IDLEN.pack(len(raw)))
            fh.write(raw)
            fh.write(np.ascontiguousarray(index.vectors[i], dtype="<f4").tobytes())
        for tree in index.trees:
            fh.write(_U32.pack(len(tree)))
            for node in tree:
                if node[0] == "leaf":
                    fh.write(b"\x01")
                    items = np.ascontiguousarray(node[1], dtype="<u4")
                    fh.write(_U32.pack(items.size))
                    fh.write(items.tobytes())
                else:
                    _, normal, offset, left, right = node
                    fh.write(b"\x00")
                    fh.write(np.ascontiguousarray(normal, dtype="<f4").tobytes())
                    fh.write(_F32.pack(float(offset)))
                    fh.write(_U32.pack(left))
                    fh.write(_U32.pack(right))


def load_index(path) -> AnnIndex:
    """Parse an AIDX file; structural defects are fatal with a byte offset."""
    data = Path(path).read_bytes()
    if len(data) < _AIDX_HEADER.size:
        raise VectorFormatError("truncated header", len(data))
    magic, version, dim, n_trees, count = _AIDX_HEADER.unpack_from(data, 0)
    if magic != _AIDX_MAGIC:
        raise VectorFormatError(f"bad magic {magic!r}", 0)
    if version != _AIDX_VERSION:
        raise VectorFormatError(f"unsupported version {version}", 4)
    offset = _AIDX_HEADER.size
    doc_ids: list[str] = []
    matrix = np.zeros((count, dim), dtype=np.float32)
    vec_bytes = 4 * dim
    for i in range(count):
        if offset + _IDLEN.size > len(data):
            raise VectorFormatError("truncated item (id length)", offset)
        (id_len,) = _IDLEN.unpack_from(data, offset)
        offset += _IDLEN.size
        if offset + id_len + vec_bytes > len(data):
            raise VectorFormatError("truncated item (payload)", offset)
        doc_ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        matrix[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
    trees: list[list[tuple]] = []
    for _ in range(n_trees):
        if offset + _U32.size > len(data):
            raise VectorFormatError("truncated tree header", offset)
        (n_nodes,) = _U32.unpack_from(data, offset)
        offset += _U32.size
        nodes: list[tuple] = []
        for _ in range(n_nodes):
            if offset + 1 > len(data):
                raise VectorFormatError("truncated node kind", offset)
            kind = data[offset]
            offset += 1
            if kind == 1:
                if offset + _U32.size > len(data):
                    raise VectorFormatError("truncated leaf count", offset)
                (n_leaf,) = _U32.unpack_from(data, offset)
                offset += _U32.size
                if offset + 4 * n_leaf > len(data):
                    raise VectorFormatError("truncated leaf items", offset)
                items = np.frombuffer(data, dtype="<u4", count=n_leaf, offset=offset).copy()
                offset += 4 * n_leaf
                nodes.append(("leaf", items))
            elif kind == 0:
                need = vec_bytes + _F32.size + 2 * _U32.size
                if offset + need > len(data):
                    raise VectorFormatError("truncated split node", offset)
                normal = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
                offset += vec_bytes
                (plane_offset,) = _F32.unpack_from(data, offset)
                offset += _F32.size
                (left,) = _U32.unpack_from(data, offset)
                offset += _U32.size
                (right,) = _U32.unpack_from(data, offset)
                offset += _U32.size
                nodes.append(("split", normal, np.float32(plane_offset), left, right))
            else:
                raise VectorFormatError(f"unknown node kind {kind}", offset - 1)
        trees.append(nodes)
    if offset != len(data):
        raise VectorFormatError("trailing bytes after last tree", offset)
    return AnnIndex(dim=dim, n_trees=n_trees, doc_ids=doc_ids, vectors=matrix, trees=trees)
