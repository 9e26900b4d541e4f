"""Neighbor graph and dimensionality reduction contracts."""

import numpy as np
import pytest

from scitech.embed import DocVector
from scitech.reduce import knn_graph, reduce_neighbor_embedding, reduce_pca

from conftest import adjusted_rand, make_blobs


def unit_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


class TestKnnGraph:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        x = unit_rows(rng.standard_normal((80, 10)))
        k = 7
        graph = knn_graph(x, k=k)
        d = 1.0 - x @ x.T
        np.fill_diagonal(d, np.inf)
        for i in range(80):
            # ascending distance, ties by index: lexicographic argsort
            order = np.lexsort((np.arange(80), d[i]))[:k]
            assert list(graph.indices[i]) == list(order)
            np.testing.assert_allclose(graph.distances[i], d[i][order], atol=1e-12)

    def test_self_excluded(self):
        rng = np.random.default_rng(1)
        x = unit_rows(rng.standard_normal((30, 5)))
        graph = knn_graph(x, k=4)
        for i in range(30):
            assert i not in graph.indices[i]

    def test_accepts_doc_vectors(self):
        rng = np.random.default_rng(2)
        x = unit_rows(rng.standard_normal((12, 4))).astype(np.float32)
        docs = [DocVector(doc_id=f"d{i}", vector=x[i]) for i in range(12)]
        a = knn_graph(docs, k=3)
        b = knn_graph(x, k=3)
        assert np.array_equal(a.indices, b.indices)

    def test_k_clamped_with_warning(self):
        rng = np.random.default_rng(3)
        x = unit_rows(rng.standard_normal((5, 4)))
        with pytest.warns(UserWarning, match="clamped"):
            graph = knn_graph(x, k=5)
        assert graph.k == 4


class TestPca:
    def test_full_rank_preserves_distances(self):
        # dim_out = input dim: an orthogonal change of basis
        rng = np.random.default_rng(4)
        x = rng.standard_normal((50, 6))
        reduced = reduce_pca(x, dim_out=6)
        d_in = np.linalg.norm(x[:, None] - x[None, :], axis=2)
        y = reduced.vectors
        d_out = np.linalg.norm(y[:, None] - y[None, :], axis=2)
        np.testing.assert_allclose(d_in, d_out, atol=1e-9)

    def test_provenance_and_shape(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((40, 10))
        reduced = reduce_pca(x, dim_out=3)
        assert reduced.provenance == "pca"
        assert reduced.vectors.shape == (40, 3)
        assert reduced.dim_out == 3

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((30, 8))
        a = reduce_pca(x, dim_out=4).vectors
        b = reduce_pca(x, dim_out=4).vectors
        assert a.tobytes() == b.tobytes()


@pytest.fixture(scope="module")
def blob_graph():
    rng = np.random.default_rng(7)
    x, gt = make_blobs(rng, 3, 240, dim=20, spread=0.3, box=5.0)
    x = unit_rows(x)
    return knn_graph(x, k=10), gt


class TestNeighborEmbedding:

    def test_shape_finite_provenance(self, blob_graph):
        graph, _ = blob_graph
        reduced = reduce_neighbor_embedding(graph, dim_out=4, n_epochs=40, seed=0)
        assert reduced.vectors.shape == (240, 4)
        assert np.all(np.isfinite(reduced.vectors))
        assert reduced.provenance == "neighbor_embedding"
        assert reduced.params["n_epochs"] == 40

    def test_deterministic_per_seed(self, blob_graph):
        graph, _ = blob_graph
        a = reduce_neighbor_embedding(graph, dim_out=3, n_epochs=30, seed=9)
        b = reduce_neighbor_embedding(graph, dim_out=3, n_epochs=30, seed=9)
        assert a.vectors.tobytes() == b.vectors.tobytes()

    def test_separated_blobs_stay_separated(self, blob_graph):
        graph, gt = blob_graph
        reduced = reduce_neighbor_embedding(graph, dim_out=3, n_epochs=100, seed=1)
        y = reduced.vectors
        # nearest-centroid assignment in the reduced space recovers the blobs
        centroids = np.stack([y[gt == c].mean(axis=0) for c in range(3)])
        assign = np.argmin(
            np.linalg.norm(y[:, None] - centroids[None], axis=2), axis=1
        )
        assert adjusted_rand(assign, gt) == 1.0
