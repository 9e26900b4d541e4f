"""Shared fixtures and reference implementations used across test modules."""

import shutil
import time

import numpy as np
import pytest
from hypothesis import settings
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import pdist, squareform

from scitech.config import PipelineConfig
from scitech.fixtures import write_fixture_inputs
from scitech.pipeline import STAGES, run_stage

# wall-clock deadlines turn load spikes into spurious failures; keep
# example counts as the budget instead
settings.register_profile("no_deadline", deadline=None)
settings.load_profile("no_deadline")


def adjusted_rand(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    m = np.zeros((len(ua), len(ub)), dtype=np.int64)
    np.add.at(m, (ia, ib), 1)

    def comb2(v):
        return v * (v - 1) / 2.0

    sum_ij = comb2(m).sum()
    sum_a = comb2(m.sum(axis=1)).sum()
    sum_b = comb2(m.sum(axis=0)).sum()
    total = comb2(len(a))
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def make_blobs(rng, n_blobs, n_total, dim=2, spread=1.0, box=30.0):
    """Gaussian blobs with well-separated centers; returns (points, labels)."""
    centers = rng.uniform(-box, box, size=(n_blobs, dim))
    counts = np.full(n_blobs, n_total // n_blobs)
    counts[: n_total % n_blobs] += 1
    pts, gt = [], []
    for i in range(n_blobs):
        pts.append(centers[i] + rng.normal(0, spread, size=(counts[i], dim)))
        gt.extend([i] * counts[i])
    return np.vstack(pts), np.array(gt)


def reference_hdbscan(x, mcs, ms=None):
    """Brute-force density clustering reference, independent of the package.

    All-pairs mutual reachability matrix, scipy single linkage, a recursive
    condensed tree, and exhaustive enumeration of every antichain for the
    cluster selection (no greedy shortcut). Returns labels with -1 noise;
    label numbering is arbitrary, so compare via adjusted Rand.
    """
    if ms is None:
        ms = mcs
    n = x.shape[0]
    d = squareform(pdist(x))
    dd = d.copy()
    np.fill_diagonal(dd, np.inf)
    core = np.sort(dd, axis=1)[:, min(ms, n - 1) - 1]
    dmr = np.maximum(d, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(dmr, 0.0)
    z = linkage(squareform(dmr, checks=False), method="single")

    def leaves(node):
        if node < n:
            return [node]
        a, b = int(z[node - n, 0]), int(z[node - n, 1])
        return leaves(a) + leaves(b)

    def size(node):
        return 1 if node < n else int(z[node - n, 3])

    rows = []  # (parent cluster, ("c"|"p", id), lambda, size)
    parent_of = {}
    counter = [0]

    def new_cluster(parent):
        counter[0] += 1
        parent_of[counter[0]] = parent
        return counter[0]

    def condense(node, cid):
        while True:
            a, b = int(z[node - n, 0]), int(z[node - n, 1])
            h = z[node - n, 2]
            lam = 1.0 / h if h > 0 else np.inf
            sa, sb = size(a), size(b)
            if sa >= mcs and sb >= mcs:
                for child in (a, b):
                    sub = new_cluster(cid)
                    rows.append((cid, ("c", sub), lam, size(child)))
                    condense(child, sub)
                return
            if sa < mcs and sb < mcs:
                for child in (a, b):
                    for p in leaves(child):
                        rows.append((cid, ("p", p), lam, 1))
                return
            big, small = (a, b) if sa >= sb else (b, a)
            for p in leaves(small):
                rows.append((cid, ("p", p), lam, 1))
            node = big

    root = new_cluster(None)
    condense(2 * n - 2, root)

    births = {root: 0.0}
    for (_, child, lam, _) in rows:
        if child[0] == "c":
            births[child[1]] = lam
    stability = {cid: 0.0 for cid in births}
    for (parent, _, lam, s) in rows:
        stability[parent] += (lam - births[parent]) * s

    kids = {cid: [] for cid in births}
    for (parent, child, _, _) in rows:
        if child[0] == "c":
            kids[parent].append(child[1])

    def antichains(cid):
        options = [[]]
        if cid != root:
            options.append([cid])
        combos = [[]]
        for child in kids[cid]:
            sub = antichains(child)
            combos = [a + b for a in combos for b in sub]
        options.extend(c for c in combos if c)
        seen, out = set(), []
        for opt in options:
            key = tuple(sorted(opt))
            if key not in seen:
                seen.add(key)
                out.append(opt)
        return out

    best_set, best_val = [], -1.0
    for chain in antichains(root):
        val = sum(stability[c] for c in chain)
        if val > best_val + 1e-12:
            best_val = val
            best_set = chain
    selected = set(best_set)

    labels = np.full(n, -1, dtype=int)
    label_of = {cid: i for i, cid in enumerate(sorted(selected))}
    for (parent, child, _, _) in rows:
        if child[0] != "p":
            continue
        cur = parent
        while cur is not None and cur not in selected:
            cur = parent_of[cur]
        if cur is not None:
            labels[child[1]] = label_of[cur]
    return labels


def reference_average_linkage(centroids, ids):
    """O(T^3) agglomeration oracle over cosine distances of unit centroids.

    Heights recomputed from the original leaf pairs at every step; merge
    choice by (height, (min id, max id)) with new nodes numbered from
    max(ids) + 1. Returns [(id_a, id_b, height, new_id), ...].
    """
    c = np.asarray(centroids, dtype=np.float64)
    c = c / np.linalg.norm(c, axis=1, keepdims=True)
    g = c @ c.T
    dist = 1.0 - (g + g.T) * 0.5
    np.clip(dist, 0.0, None, out=dist)
    clusters = [(ids[i], [i]) for i in range(len(ids))]
    next_node = max(ids) + 1
    merges = []
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                ia, la = clusters[a]
                ib, lb = clusters[b]
                h = np.mean([dist[p, q] for p in la for q in lb])
                pair = (min(ia, ib), max(ia, ib))
                if best is None or h < best[0] or (h == best[0] and pair < best[1]):
                    best = (h, pair, a, b)
        h, pair, a, b = best
        merged = (next_node, clusters[a][1] + clusters[b][1])
        merges.append((pair[0], pair[1], float(h), next_node))
        next_node += 1
        clusters = [cl for i, cl in enumerate(clusters) if i not in (a, b)] + [merged]
    return merges


class FixtureRun:
    """A completed full-pipeline run on the bundled synthetic corpus."""

    def __init__(self, run_dir, corpus, elapsed_s, reports):
        self.run_dir = run_dir
        self.corpus = corpus
        self.elapsed_s = elapsed_s
        self.reports = reports


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory) -> FixtureRun:
    """Run all 9 stages once per session; tests must not mutate this dir."""
    run_dir = tmp_path_factory.mktemp("fixture_run")
    corpus = write_fixture_inputs(run_dir / "input", seed=0)
    config = PipelineConfig()
    t0 = time.perf_counter()
    reports = [run_stage(stage, config, run_dir) for stage in STAGES]
    elapsed = time.perf_counter() - t0
    return FixtureRun(run_dir, corpus, elapsed, reports)


@pytest.fixture()
def fixture_run_copy(fixture_run, tmp_path):
    """Private mutable copy of the session run for tamper/rerun/job tests."""
    dest = tmp_path / "run"
    shutil.copytree(fixture_run.run_dir, dest)
    return FixtureRun(dest, fixture_run.corpus, fixture_run.elapsed_s, fixture_run.reports)
