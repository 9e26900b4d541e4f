"""Word embedding training and document composition contracts."""

import numpy as np
import pytest

from scitech.embed import (
    DocVector,
    bind_external,
    embed_tokens,
    save_word_embeddings,
    train_sgns,
    unit,
    word_embeddings_from_vectors,
)
from scitech.errors import MissingVectorsError, ScitechError, UnembeddableDocument
from scitech.ingest import ExternalVectorSet, load_vectors
from scitech.textproc import build_vocabulary, fit_tfidf


def cooccurrence_corpus(rng, n_docs=300):
    """Docs in which aa/ab always co-occur and zz never meets them."""
    docs = []
    for _ in range(n_docs):
        if rng.random() < 0.5:
            base = ["aa", "ab"] + [f"f{rng.integers(0, 20)}" for _ in range(4)]
        else:
            base = ["zz", "zy"] + [f"g{rng.integers(0, 20)}" for _ in range(4)]
        rng.shuffle(base)
        docs.append(base)
    return docs


class TestTrainSgns:
    def test_empty_corpus(self):
        with pytest.raises(ScitechError, match="nothing to train"):
            train_sgns([], dim=8, min_count=1)

    def test_shapes_and_finiteness(self):
        rng = np.random.default_rng(0)
        docs = cooccurrence_corpus(rng, 50)
        emb = train_sgns(docs, dim=16, window=3, negatives=3, epochs=1, seed=1, min_count=1)
        v = len(emb.vocabulary.terms)
        assert emb.input_vectors.shape == (v, 16)
        assert emb.output_vectors.shape == (v, 16)
        assert np.all(np.isfinite(emb.input_vectors))

    def test_bit_identical_across_runs(self):
        rng = np.random.default_rng(1)
        docs = cooccurrence_corpus(rng, 60)
        kw = dict(dim=12, window=3, negatives=4, epochs=2, seed=7, min_count=1)
        a = train_sgns(docs, **kw)
        b = train_sgns(docs, **kw)
        assert a.input_vectors.tobytes() == b.input_vectors.tobytes()
        assert a.output_vectors.tobytes() == b.output_vectors.tobytes()

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(2)
        docs = cooccurrence_corpus(rng, 60)
        a = train_sgns(docs, dim=12, epochs=1, seed=0, min_count=1)
        b = train_sgns(docs, dim=12, epochs=1, seed=1, min_count=1)
        assert a.input_vectors.tobytes() != b.input_vectors.tobytes()

    def test_cooccurring_tokens_closer(self):
        rng = np.random.default_rng(3)
        docs = cooccurrence_corpus(rng, 300)
        emb = train_sgns(docs, dim=24, window=5, negatives=5, epochs=4, seed=5, min_count=1)

        def cos(x, y):
            ix, iy = emb.vocabulary.index[x], emb.vocabulary.index[y]
            a = emb.input_vectors[ix].astype(np.float64)
            b = emb.input_vectors[iy].astype(np.float64)
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        assert cos("aa", "ab") > cos("aa", "zz")


class TestEmbedTokens:
    @pytest.fixture()
    def model(self):
        docs = [["brain", "signal", "noise"], ["signal", "filter"], ["brain", "decoder"]]
        vocab = build_vocabulary(docs, min_count=1)
        emb = train_sgns(docs, dim=8, window=2, negatives=2, epochs=1, seed=0,
                         min_count=1, vocab=vocab)
        return emb, fit_tfidf(docs, vocab)

    def test_unit_norm(self, model):
        emb, tfidf = model
        vec = embed_tokens(["brain", "signal", "signal"], emb, tfidf, doc_id="d")
        assert vec.norm_flag
        assert np.linalg.norm(vec.vector) == pytest.approx(1.0, abs=1e-6)

    def test_weighted_sum_matches_hand_computation(self, model):
        emb, tfidf = model
        got = embed_tokens(["brain", "signal", "signal"], emb, tfidf).vector
        w_brain = 1 * tfidf.idf["brain"]
        w_signal = 2 * tfidf.idf["signal"]
        raw = (
            w_brain * emb.input_vectors[emb.vocabulary.index["brain"]].astype(np.float64)
            + w_signal * emb.input_vectors[emb.vocabulary.index["signal"]].astype(np.float64)
        )
        want = raw / np.linalg.norm(raw)
        np.testing.assert_allclose(got, want.astype(np.float32), atol=1e-7)

    def test_order_invariant(self, model):
        emb, tfidf = model
        a = embed_tokens(["brain", "signal", "filter"], emb, tfidf).vector
        b = embed_tokens(["filter", "brain", "signal"], emb, tfidf).vector
        assert a.tobytes() == b.tobytes()

    def test_oov_only_raises(self, model):
        emb, tfidf = model
        with pytest.raises(UnembeddableDocument):
            embed_tokens(["xylophone"], emb, tfidf, doc_id="d9")

    def test_empty_raises(self, model):
        emb, tfidf = model
        with pytest.raises(UnembeddableDocument):
            embed_tokens([], emb, tfidf)


class TestUnit:
    def test_normalizes(self):
        v = unit(np.array([3.0, 4.0]))
        np.testing.assert_allclose(v, [0.6, 0.8], atol=1e-12)

    def test_zero_raises(self):
        with pytest.raises(ValueError):
            unit(np.zeros(3))


class TestBindExternal:
    def test_missing_reported(self):
        ext = ExternalVectorSet(dim=2, entries={"a": np.array([1.0, 0.0], dtype=np.float32)})
        result = bind_external(ext, ["a", "b"], max_missing_frac=0.6)
        assert [v.doc_id for v in result.vectors] == ["a"]
        assert result.missing == ["b"]

    def test_too_many_missing_fatal(self):
        ext = ExternalVectorSet(dim=2, entries={"a": np.array([1.0, 0.0], dtype=np.float32)})
        with pytest.raises(MissingVectorsError):
            bind_external(ext, ["a", "b", "c"], max_missing_frac=0.05)

    def test_vectors_normalized(self):
        ext = ExternalVectorSet(dim=2, entries={"a": np.array([0.0, 5.0], dtype=np.float32)})
        result = bind_external(ext, ["a"])
        np.testing.assert_allclose(result.vectors[0].vector, [0.0, 1.0], atol=1e-7)


def test_word_embedding_round_trip(tmp_path):
    docs = [["alpha", "beta", "gamma"], ["beta", "delta"]]
    vocab = build_vocabulary(docs, min_count=1)
    emb = train_sgns(docs, dim=6, epochs=1, seed=0, min_count=1, vocab=vocab)
    path = tmp_path / "words.svec"
    save_word_embeddings(emb, path)
    loaded = word_embeddings_from_vectors(load_vectors(path), vocab)
    assert loaded.input_vectors.tobytes() == emb.input_vectors.tobytes()
    assert loaded.dim == emb.dim

    # a vocabulary term absent from the file is fatal
    bigger = build_vocabulary(docs + [["epsilon", "epsilon"]], min_count=1)
    with pytest.raises(MissingVectorsError):
        word_embeddings_from_vectors(load_vectors(path), bigger)
