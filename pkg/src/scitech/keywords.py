"""Labeled keywords per document and their per-topic ranking.

Labels are the closed set Method / Task / Other. Externally produced
annotations arrive as JSONL; the built-in statistical extractor (a
degree-over-frequency phrase scorer) covers corpora without annotations
but can only emit Other. Ranking is class-based TF-IDF treating each
topic as one pseudo-document of keyword occurrences.
"""

import json
import math
import re
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .cluster import Topic
from .ingest import ParseResult, RowDiagnostic
from .ingest import PublicationRecord

LABELS = ("Method", "Task", "Other")

_FRAGMENT_SPLIT = re.compile(r"[^\w\s-]+")
_HAS_LETTER = re.compile(r"[^\W\d_]")

RAKE_TOP_PHRASES = 15


@dataclass(frozen=True)
class KeywordAnnotation:
    doc_id: str
    surface: str
    label: str


@dataclass
class TopicKeywordProfile:
    """Per-label keyword rankings for one topic, scores non-increasing."""

    topic_id: int
    ranked: dict[str, list[tuple[str, float]]] = field(
        default_factory=lambda: {label: [] for label in LABELS}
    )


def normalize_keyword(surface: str) -> str:
    """Case-fold and collapse whitespace; hyphens survive untouched."""
    return " ".join(surface.split()).casefold()


def ingest_ner_annotations(path, known_doc_ids=None) -> ParseResult:
    """Load annotation JSONL rows (doc_id, surface, label).

    Rows with labels outside the closed set, empty surfaces, or (when
    known_doc_ids is given) ids absent from the corpus are skipped with
    per-row diagnostics.
    """
    known = set(known_doc_ids) if known_doc_ids is not None else None
    records: list[KeywordAnnotation] = []
    errors: list[RowDiagnostic] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(RowDiagnostic(lineno, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(row, dict):
                errors.append(RowDiagnostic(lineno, "row is not a JSON object"))
                continue
            doc_id = str(row.get("doc_id", "")).strip()
            surface = str(row.get("surface", "") or "")
            label = row.get("label")
            if not doc_id:
                errors.append(RowDiagnostic(lineno, "missing doc_id"))
                continue
            if not surface.strip():
                errors.append(RowDiagnostic(lineno, "empty surface"))
                continue
            if label not in LABELS:
                errors.append(
                    RowDiagnostic(lineno, f"unknown label {label!r} (expected one of {LABELS})")
                )
                continue
            if known is not None and doc_id not in known:
                errors.append(RowDiagnostic(lineno, f"doc_id {doc_id!r} not in corpus"))
                continue
            records.append(KeywordAnnotation(doc_id=doc_id, surface=surface, label=label))
    return ParseResult(records=records, errors=errors)


def _candidate_phrases(text: str, stopwords) -> list[list[str]]:
    """Maximal runs of content words between stopwords and punctuation."""
    phrases: list[list[str]] = []
    for fragment in _FRAGMENT_SPLIT.split(text):
        run: list[str] = []
        for word in fragment.split():
            folded = word.casefold().strip("-")
            if folded in stopwords or not _HAS_LETTER.search(folded):
                if run:
                    phrases.append(run)
                run = []
            else:
                run.append(word)
        if run:
            phrases.append(run)
    return phrases


def extract_rake(doc: PublicationRecord, stopwords) -> list[KeywordAnnotation]:
    """Top phrases of one document by summed degree/frequency word scores.

    Document-local: scores depend only on this document's text. Returns
    at most RAKE_TOP_PHRASES unique phrases, all labeled Other.
    """
    text = f"{doc.title}. {doc.abstract}" if doc.title else doc.abstract
    phrases = _candidate_phrases(text, stopwords)
    if not phrases:
        return []
    freq: Counter[str] = Counter()
    degree: Counter[str] = Counter()
    for phrase in phrases:
        length = len(phrase)
        for word in phrase:
            folded = word.casefold()
            freq[folded] += 1
            degree[folded] += length
    scored: dict[str, tuple[float, str]] = {}
    for phrase in phrases:
        normalized = normalize_keyword(" ".join(phrase))
        if normalized in scored:
            continue
        score = sum(degree[w.casefold()] / freq[w.casefold()] for w in phrase)
        scored[normalized] = (score, " ".join(phrase))
    ranked = sorted(scored.items(), key=lambda kv: (-kv[1][0], kv[0]))
    return [
        KeywordAnnotation(doc_id=doc.doc_id, surface=surface, label="Other")
        for _, (_, surface) in ranked[:RAKE_TOP_PHRASES]
    ]


def rank_ctfidf(
    topics: Sequence[Topic], annotations: Iterable[KeywordAnnotation]
) -> list[TopicKeywordProfile]:
    """Class-based TF-IDF: score(t, c) = tf(t, c) * ln(1 + A / f(t)).

    Each topic is one pseudo-document of its members' keyword
    occurrences; tf counts occurrences of the keyword in the topic, f
    its occurrences across all topics, and A the average occurrences
    per topic. Keywords are distinct per (label, normalized form); the
    most frequent original casing is kept for display.
    """
    doc_topic: dict[str, int] = {}
    for topic in topics:
        for doc_id in topic.member_doc_ids:
            doc_topic[doc_id] = topic.topic_id
    tf: dict[tuple[int, str, str], int] = defaultdict(int)
    global_f: dict[tuple[str, str], int] = defaultdict(int)
    casings: dict[tuple[str, str], Counter[str]] = defaultdict(Counter)
    total = 0
    for ann in annotations:
        topic_id = doc_topic.get(ann.doc_id)
        if topic_id is None:
            continue
        normalized = normalize_keyword(ann.surface)
        if not normalized:
            continue
        tf[(topic_id, ann.label, normalized)] += 1
        global_f[(ann.label, normalized)] += 1
        casings[(ann.label, normalized)][" ".join(ann.surface.split())] += 1
        total += 1
    if not topics:
        return []
    average = total / len(topics)
    display = {
        key: min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        for key, counter in casings.items()
    }
    profiles: list[TopicKeywordProfile] = []
    for topic in sorted(topics, key=lambda t: t.topic_id):
        ranked: dict[str, list[tuple[str, float]]] = {label: [] for label in LABELS}
        any_occurrence = False
        for (tid, label, normalized), count in tf.items():
            if tid != topic.topic_id:
                continue
            any_occurrence = True
            score = count * math.log(1.0 + average / global_f[(label, normalized)])
            ranked[label].append((display[(label, normalized)], score))
        for label in LABELS:
            ranked[label].sort(key=lambda kv: (-kv[1], normalize_keyword(kv[0])))
        if not any_occurrence:
            warnings.warn(
                f"topic {topic.topic_id} has no keyword annotations; empty profile",
                stacklevel=2,
            )
        profiles.append(TopicKeywordProfile(topic_id=topic.topic_id, ranked=ranked))
    return profiles


def save_profiles(profiles: Sequence[TopicKeywordProfile], path) -> None:
    """JSONL rows (topic_id, label, keyword, score, rank), rank 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        for profile in profiles:
            for label in LABELS:
                for rank, (keyword, score) in enumerate(profile.ranked[label], start=1):
                    row = {
                        "topic_id": profile.topic_id,
                        "label": label,
                        "keyword": keyword,
                        "score": score,
                        "rank": rank,
                    }
                    fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def load_profiles(path) -> list[TopicKeywordProfile]:
    by_topic: dict[int, TopicKeywordProfile] = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    rows.sort(key=lambda r: (r["topic_id"], r["label"], r["rank"]))
    for row in rows:
        profile = by_topic.setdefault(
            int(row["topic_id"]), TopicKeywordProfile(topic_id=int(row["topic_id"]))
        )
        profile.ranked[row["label"]].append((row["keyword"], float(row["score"])))
    return [by_topic[tid] for tid in sorted(by_topic)]
