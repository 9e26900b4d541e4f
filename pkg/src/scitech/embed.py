"""Unit-length document vectors.

Two sources: a built-in skip-gram-with-negative-sampling trainer whose word
vectors are composed into document vectors by TF-IDF weighting, and
externally produced per-document vectors bound onto a loaded corpus. Both
end in the same DocVector shape, so downstream stages do not care which
path produced them.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingVectorsError, ScitechError, UnembeddableDocument
from .ingest import ExternalVectorSet, save_vectors
from .kernels.sgns import lcg_next, sgns_train
from .textproc import TfidfModel, Vocabulary, build_vocabulary, tfidf_weight

_NEG_DOMAIN = 1 << 31


@dataclass
class WordEmbeddings:
    vocabulary: Vocabulary
    input_vectors: np.ndarray  # (V, dim) float32; the published embeddings
    output_vectors: np.ndarray  # (V, dim) float32; context side, training-internal
    dim: int


@dataclass
class DocVector:
    doc_id: str
    vector: np.ndarray
    norm_flag: bool = True


def unit(vec: np.ndarray) -> np.ndarray:
    # norm in float64: squaring float32 components underflows to
    # subnormals below ~1e-19 and overflows above ~1e19
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalize zero or non-finite vector")
    return (v / norm).astype(np.float32)


def _negative_sampling_table(vocab: Vocabulary) -> np.ndarray:
    """Cumulative unigram^0.75 counts scaled to a 2^31 integer domain."""
    counts = np.array([vocab.term_counts[t] for t in vocab.terms], dtype=np.float64)
    powed = counts**0.75
    cum = np.cumsum(powed)
    table = np.floor(cum / cum[-1] * _NEG_DOMAIN).astype(np.uint64)
    table[-1] = _NEG_DOMAIN
    return table


def _pair_count(doc_lengths: np.ndarray, window: int) -> int:
    total = 0
    for length in doc_lengths:
        idx = np.arange(length)
        total += int(np.sum(np.minimum(idx, window) + np.minimum(length - 1 - idx, window)))
    return total


def _keep_probability(count: int, total_tokens: int, subsample: float) -> float:
    frac = count / total_tokens
    thresh = subsample
    p = (np.sqrt(frac / thresh) + 1.0) * (thresh / frac)
    return min(1.0, p)


def train_sgns(
    docs: list[list[str]],
    dim: int = 100,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    initial_lr: float = 0.025,
    seed: int = 0,
    *,
    min_count: int = 5,
    subsample: float = 0.0,
    vocab: Vocabulary | None = None,
) -> WordEmbeddings:
    """Train word vectors on pre-tokenized docs.

    For each (center, context) pair within the window the objective
    ln s(u_ctx . v_center) + sum over `negatives` noise words n of
    ln s(-u_n . v_center) is ascended by SGD; noise words come from the
    unigram distribution raised to 0.75. The learning rate decays linearly
    from initial_lr to initial_lr/10,000 over all training pairs. Training
    is single-threaded and fully seeded: identical inputs give bit-identical
    matrices.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if vocab is None:
        vocab = build_vocabulary(docs, min_count=min_count)
    if len(vocab) == 0:
        raise ScitechError("nothing to train: empty vocabulary")

    state = (seed * 2862933555777941757 + 3037000493) & ((1 << 64) - 1)
    token_ids: list[int] = []
    bounds = [0]
    for doc in docs:
        ids = [vocab.index[t] for t in doc if t in vocab.index]
        if subsample > 0.0 and vocab.total_tokens > 0:
            kept = []
            for tid in ids:
                state = lcg_next(state)
                u = (state >> 33) / _NEG_DOMAIN
                p = _keep_probability(
                    vocab.term_counts[vocab.terms[tid]], vocab.total_tokens, subsample
                )
                if u < p:
                    kept.append(tid)
            ids = kept
        if len(ids) < 2:
            continue
        token_ids.extend(ids)
        bounds.append(len(token_ids))
    if not token_ids:
        raise ScitechError("nothing to train: no document with 2+ in-vocabulary tokens")

    tokens = np.asarray(token_ids, dtype=np.int32)
    bounds_arr = np.asarray(bounds, dtype=np.int64)
    doc_lengths = np.diff(bounds_arr)
    total_pairs = _pair_count(doc_lengths, window) * epochs

    rng = np.random.default_rng([seed, 0x5163])
    inp = ((rng.random((len(vocab), dim), dtype=np.float32) - 0.5) / dim).astype(
        np.float32
    )
    out = np.zeros((len(vocab), dim), dtype=np.float32)
    cum_table = _negative_sampling_table(vocab)

    sgns_train(
        inp,
        out,
        tokens,
        bounds_arr,
        window,
        negatives,
        cum_table,
        total_pairs,
        initial_lr,
        initial_lr / 10_000.0,
        epochs,
        # boxed as uint64: a plain int in [2^63, 2^64) would overflow the
        # jit dispatcher's int64 conversion
        np.uint64(state),
    )
    return WordEmbeddings(vocabulary=vocab, input_vectors=inp, output_vectors=out, dim=dim)


def embed_tokens(
    tokens: list[str],
    emb: WordEmbeddings,
    tfidf: TfidfModel,
    doc_id: str = "",
) -> DocVector:
    """TF-IDF weighted sum of word vectors, L2-normalized.

    Bag-of-words: token order does not matter. Serves abstracts and keyword
    queries alike (queries tokenize their keyphrases into constituent
    tokens first). Raises UnembeddableDocument when no in-vocabulary token
    carries weight.
    """
    tf = Counter(t for t in tokens if t in emb.vocabulary.index)
    if not tf:
        raise UnembeddableDocument(doc_id)
    vec = np.zeros(emb.dim, dtype=np.float64)
    weight_sum = 0.0
    for tok, count in tf.items():
        w = tfidf_weight(tok, count, tfidf)
        if w <= 0.0:
            continue
        weight_sum += w
        vec += w * emb.input_vectors[emb.vocabulary.index[tok]].astype(np.float64)
    norm = float(np.linalg.norm(vec))
    if weight_sum == 0.0 or norm == 0.0:
        raise UnembeddableDocument(doc_id)
    return DocVector(doc_id=doc_id, vector=(vec / norm).astype(np.float32), norm_flag=True)


@dataclass
class BindResult:
    vectors: list[DocVector]
    missing: list[str] = field(default_factory=list)


def bind_external(
    vectors: ExternalVectorSet,
    corpus_ids: list[str],
    max_missing_frac: float = 0.05,
) -> BindResult:
    """Emit the L2-normalized vector for each corpus id present in the set.

    Missing ids are reported; when their fraction exceeds max_missing_frac
    the binding fails outright so a half-empty run cannot proceed silently.
    """
    out: list[DocVector] = []
    missing: list[str] = []
    for doc_id in corpus_ids:
        vec = vectors.entries.get(doc_id)
        if vec is None:
            missing.append(doc_id)
            continue
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise UnembeddableDocument(doc_id)
        out.append(DocVector(doc_id=doc_id, vector=(vec / norm).astype(np.float32)))
    if corpus_ids and len(missing) / len(corpus_ids) > max_missing_frac:
        raise MissingVectorsError(missing, len(corpus_ids), max_missing_frac)
    return BindResult(vectors=out, missing=missing)


def save_word_embeddings(emb: WordEmbeddings, path) -> None:
    """Word vectors in the same binary format as external document vectors
    (ids are vocabulary terms, vocabulary order preserved)."""
    entries = {
        term: emb.input_vectors[i] for i, term in enumerate(emb.vocabulary.terms)
    }
    save_vectors(entries, emb.dim, path)


def word_embeddings_from_vectors(vectors: ExternalVectorSet, vocab: Vocabulary) -> WordEmbeddings:
    """Rebind saved word vectors onto a vocabulary (context vectors are
    training-internal and not persisted)."""
    mat = np.zeros((len(vocab), vectors.dim), dtype=np.float32)
    for i, term in enumerate(vocab.terms):
        vec = vectors.entries.get(term)
        if vec is None:
            raise MissingVectorsError([term], len(vocab), 0.0)
        mat[i] = vec
    return WordEmbeddings(
        vocabulary=vocab,
        input_vectors=mat,
        output_vectors=np.zeros_like(mat),
        dim=vectors.dim,
    )
