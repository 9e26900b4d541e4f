"""Tokenization, vocabulary construction, and TF-IDF weighting.

One tokenizer feeds both the embedding trainer and keyword handling, so
token identity is consistent across the pipeline.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

# Unicode alphanumerics (underscore excluded) with intra-word hyphens:
# "slow-wave" is one token, "2020" matches but is dropped as purely numeric.
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumeric boundaries.

    Intra-word hyphens are kept, tokens shorter than 2 characters and purely
    numeric tokens are dropped. Total function: never raises.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < 2:
            continue
        if all(c.isdigit() or c == "-" for c in tok):
            continue
        out.append(tok)
    return out


@dataclass
class Vocabulary:
    """Retained tokens with corpus statistics.

    terms are ordered by descending corpus frequency, ties broken by
    ascending lexicographic order; index is the inverse mapping.
    """

    terms: list[str] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)
    doc_freq: dict[str, int] = field(default_factory=dict)
    term_counts: dict[str, int] = field(default_factory=dict)
    total_docs: int = 0
    total_tokens: int = 0

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocabulary(docs: list[list[str]], min_count: int = 1) -> Vocabulary:
    """Count tokens over pre-tokenized docs and retain those with corpus
    frequency >= min_count. An empty corpus yields an empty vocabulary."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    total_tokens = 0
    for doc in docs:
        counts.update(doc)
        doc_freq.update(set(doc))
        total_tokens += len(doc)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(
        terms=kept,
        index={t: i for i, t in enumerate(kept)},
        doc_freq={t: doc_freq[t] for t in kept},
        term_counts={t: counts[t] for t in kept},
        total_docs=len(docs),
        total_tokens=total_tokens,
    )


@dataclass
class TfidfModel:
    vocabulary: Vocabulary
    idf: dict[str, float] = field(default_factory=dict)


def fit_tfidf(docs: list[list[str]], vocab: Vocabulary) -> TfidfModel:
    """Smoothed idf over `docs` for every retained token:

        idf(t) = ln((1 + N) / (1 + df(t))) + 1

    df is recomputed on `docs` (the vocabulary may come from a superset
    corpus). An empty corpus yields an empty idf map.
    """
    if not docs:
        return TfidfModel(vocabulary=vocab, idf={})
    n_docs = len(docs)
    df: Counter[str] = Counter()
    for doc in docs:
        for tok in set(doc):
            if tok in vocab:
                df[tok] += 1
    idf = {
        t: math.log((1 + n_docs) / (1 + df[t])) + 1.0
        for t in vocab.terms
    }
    return TfidfModel(vocabulary=vocab, idf=idf)


def tfidf_weight(token: str, local_tf: int, model: TfidfModel) -> float:
    """local_tf x idf; 0.0 for out-of-vocabulary tokens."""
    return local_tf * model.idf.get(token, 0.0)


def save_tfidf(model: TfidfModel, path) -> None:
    """JSONL sidecar: one line per retained token with its statistics."""
    vocab = model.vocabulary
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "total_docs": vocab.total_docs,
            "total_tokens": vocab.total_tokens,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ordinal, term in enumerate(vocab.terms):
            row = {
                "token": term,
                "ordinal": ordinal,
                "count": vocab.term_counts[term],
                "doc_freq": vocab.doc_freq[term],
                "idf": model.idf.get(term, 0.0),
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def load_tfidf(path) -> TfidfModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        terms, doc_freq, term_counts, idf = [], {}, {}, {}
        for line in fh:
            row = json.loads(line)
            t = row["token"]
            terms.append(t)
            doc_freq[t] = row["doc_freq"]
            term_counts[t] = row["count"]
            idf[t] = row["idf"]
    vocab = Vocabulary(
        terms=terms,
        index={t: i for i, t in enumerate(terms)},
        doc_freq=doc_freq,
        term_counts=term_counts,
        total_docs=header["total_docs"],
        total_tokens=header["total_tokens"],
    )
    return TfidfModel(vocabulary=vocab, idf=idf)
