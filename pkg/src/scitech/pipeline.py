"""Staged pipeline execution over a run directory.

A run directory holds input files under input/, stage outputs under
artifacts/, and a manifest.json recording the config snapshot plus a
sha256 digest of every file each stage read and wrote. Stages refuse
to run when an upstream artifact is missing or no longer matches the
digest its producer recorded, so hand-edited intermediates surface as
errors instead of silently skewed results. All outputs are written to
a temp file and renamed into place; rerunning a stage with unchanged
inputs and config produces byte-identical artifacts.
"""

import hashlib
import json
import logging
import os
import uuid
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import analytics as analytics_mod
from . import cluster as cluster_mod
from . import linker as linker_mod
from .config import PipelineConfig
from .embed import (DocVector, embed_tokens, save_word_embeddings, train_sgns,
                    word_embeddings_from_vectors)
from .errors import ScitechError, StageError, UnembeddableDocument
from .ingest import (filter_priority_ip5, load_vectors, parse_patents,
                     parse_publications, save_vectors, select_top_cited,
                     write_patents, write_publications)
from .keywords import (extract_rake, ingest_ner_annotations, load_profiles,
                       rank_ctfidf, save_profiles)
from .reduce import knn_graph, reduce_neighbor_embedding, reduce_pca
from .stopwords import STOPWORDS
from .textproc import build_vocabulary, fit_tfidf, load_tfidf, save_tfidf, tokenize

logger = logging.getLogger(__name__)

STAGES = (
    "ingest", "embed", "reduce", "cluster", "keywords",
    "queries", "index", "search", "analytics",
)

# logical artifact name -> (relative path, producing stage)
ARTIFACTS = {
    "publication corpus": ("artifacts/corpus_publications.jsonl", "ingest"),
    "patent corpus": ("artifacts/corpus_patents.jsonl", "ingest"),
    "word vectors": ("artifacts/word_vectors.svec", "embed"),
    "tfidf model": ("artifacts/tfidf.jsonl", "embed"),
    "publication vectors": ("artifacts/pub_vectors.svec", "embed"),
    "patent vectors": ("artifacts/patent_vectors.svec", "embed"),
    "reduced vectors": ("artifacts/reduced.svec", "reduce"),
    "cluster assignment": ("artifacts/assignment.jsonl", "cluster"),
    "topics": ("artifacts/topics.jsonl", "cluster"),
    "dendrogram": ("artifacts/dendrogram.json", "cluster"),
    "keyword profiles": ("artifacts/keyword_profiles.jsonl", "keywords"),
    "queries": ("artifacts/queries.jsonl", "queries"),
    "ann index": ("artifacts/index.aidx", "index"),
    "matches": ("artifacts/matches.jsonl", "search"),
}

REQUIRES = {
    "ingest": (),
    "embed": ("publication corpus", "patent corpus"),
    "reduce": ("publication vectors",),
    "cluster": ("reduced vectors", "publication corpus", "publication vectors"),
    "keywords": ("topics", "publication corpus"),
    "queries": ("keyword profiles",),
    "index": ("patent vectors",),
    "search": ("queries", "ann index", "word vectors", "tfidf model"),
    "analytics": ("topics", "matches", "patent corpus"),
}

ANALYTICS_DIR = "artifacts/analytics"


@dataclass
class StageReport:
    stage: str
    outputs: list[str]
    warnings: list[str]
    details: dict = field(default_factory=dict)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@contextmanager
def _atomic(path: Path):
    """Yield a temp path in the target directory, rename over on success."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _manifest_path(run_dir: Path) -> Path:
    return run_dir / "manifest.json"


def load_manifest(run_dir) -> dict | None:
    path = _manifest_path(Path(run_dir))
    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _save_manifest(run_dir: Path, manifest: dict) -> None:
    with _atomic(_manifest_path(run_dir)) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _init_manifest(run_dir: Path, config: PipelineConfig) -> dict:
    manifest = load_manifest(run_dir)
    if manifest is None:
        return {
            "run_id": uuid.uuid4().hex,
            "created_at": _now(),
            "config": config.to_dict(),
            "stages": {},
        }
    if manifest.get("config") != config.to_dict():
        raise StageError(
            "config does not match the manifest of this run directory; "
            "start a fresh run directory for different parameters"
        )
    return manifest


def _require(run_dir: Path, manifest: dict, names) -> dict[str, str]:
    """Digest required artifacts, refusing missing or tampered files."""
    digests = {}
    for name in names:
        relpath, producer = ARTIFACTS[name]
        path = run_dir / relpath
        if not path.exists():
            raise StageError(f"missing artifact: {name}; run the {producer} stage first")
        recorded = (
            manifest["stages"].get(producer, {}).get("outputs", {}).get(relpath)
        )
        current = _sha256(path)
        if recorded is None:
            raise StageError(
                f"stale artifact: {name} has no recorded lineage; rerun the {producer} stage"
            )
        if recorded != current:
            raise StageError(
                f"stale artifact: {name} does not match the digest recorded by "
                f"the {producer} stage; rerun {producer}"
            )
        digests[relpath] = current
    return digests


def _input_path(run_dir: Path, base: str) -> tuple[Path, str]:
    for ext, fmt in (("jsonl", "jsonl"), ("csv", "csv")):
        path = run_dir / "input" / f"{base}.{ext}"
        if path.exists():
            return path, fmt
    raise StageError(f"missing artifact: input {base} file (input/{base}.jsonl or .csv)")


def _doc_tokens(record) -> list[str]:
    text = f"{record.title}. {record.abstract}" if getattr(record, "title", "") else record.abstract
    return tokenize(text)


def run_stage(
    stage: str,
    config: PipelineConfig,
    run_dir,
    topic_ids: list[int] | None = None,
    progress=None,
    seed_override: int | None = None,
    k_override: int | None = None,
) -> StageReport:
    """Execute one stage; returns a report and updates the manifest.

    topic_ids restricts the queries and search stages to those topics
    (the expert-selection path); progress, when given, is called as
    progress(done, total) during the search stage. seed_override and
    k_override are per-job knobs for the queries and search stages;
    they are recorded in the manifest entry rather than mutating the
    run's pinned config.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
    config.validate()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = _init_manifest(run_dir, config)
    inputs = _require(run_dir, manifest, REQUIRES[stage])
    body = globals()[f"_stage_{stage}"]
    kwargs = {}
    overrides = {}
    if stage in ("queries", "search"):
        kwargs["topic_ids"] = topic_ids
        if topic_ids is not None:
            overrides["topic_ids"] = sorted(topic_ids)
    if stage == "queries" and seed_override is not None:
        kwargs["seed"] = seed_override
        overrides["seed"] = seed_override
    if stage == "search":
        kwargs["progress"] = progress
        if k_override is not None:
            kwargs["k"] = k_override
            overrides["k"] = k_override
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        outputs, details, extra_inputs = body(config, run_dir, **kwargs)
    messages = [str(w.message) for w in caught]
    inputs.update(extra_inputs)
    entry = {
        "inputs": inputs,
        "outputs": {rel: _sha256(run_dir / rel) for rel in outputs},
        "completed_at": _now(),
        "warnings": messages,
    }
    if overrides:
        entry["overrides"] = overrides
    manifest["stages"][stage] = entry
    _save_manifest(run_dir, manifest)
    return StageReport(stage=stage, outputs=sorted(outputs), warnings=messages, details=details)


def _warn_diagnostics(label: str, diagnostics, limit: int = 10) -> None:
    for diag in diagnostics[:limit]:
        message = getattr(diag, "message", diag)
        line = getattr(diag, "line", None)
        where = f" (line {line})" if line is not None else ""
        warnings.warn(f"{label}{where}: {message}", stacklevel=2)
    if len(diagnostics) > limit:
        warnings.warn(
            f"{label}: {len(diagnostics) - limit} further diagnostics suppressed",
            stacklevel=2,
        )


def _stage_ingest(config, run_dir):
    pub_path, pub_fmt = _input_path(run_dir, "publications")
    pat_path, pat_fmt = _input_path(run_dir, "patents")
    pubs = parse_publications(pub_path, fmt=pub_fmt)
    pats = parse_patents(pat_path, fmt=pat_fmt)
    _warn_diagnostics("publication row skipped", pubs.errors)
    _warn_diagnostics("patent row skipped", pats.errors)
    kept_pubs = select_top_cited(pubs.records, config.per_year_top_cited)
    kept_pats = filter_priority_ip5(pats.records)
    out_pubs, _ = ARTIFACTS["publication corpus"]
    out_pats, _ = ARTIFACTS["patent corpus"]
    with _atomic(run_dir / out_pubs) as tmp:
        write_publications(kept_pubs, tmp)
    with _atomic(run_dir / out_pats) as tmp:
        write_patents(kept_pats, tmp)
    extra = {
        str(pub_path.relative_to(run_dir)): _sha256(pub_path),
        str(pat_path.relative_to(run_dir)): _sha256(pat_path),
    }
    ann_path = run_dir / "input" / "annotations.jsonl"
    if ann_path.exists():
        extra[str(ann_path.relative_to(run_dir))] = _sha256(ann_path)
    details = {
        "publications": len(kept_pubs),
        "patents": len(kept_pats),
        "publication_rows_skipped": len(pubs.errors),
        "patent_rows_skipped": len(pats.errors),
    }
    return [out_pubs, out_pats], details, extra


def _stage_embed(config, run_dir):
    pubs = parse_publications(run_dir / ARTIFACTS["publication corpus"][0]).records
    pats = parse_patents(run_dir / ARTIFACTS["patent corpus"][0]).records
    token_docs = [_doc_tokens(p) for p in pubs]
    vocab = build_vocabulary(token_docs, min_count=config.min_count)
    emb = train_sgns(
        token_docs,
        dim=config.sgns_dim,
        window=config.sgns_window,
        negatives=config.sgns_negatives,
        epochs=config.sgns_epochs,
        initial_lr=config.sgns_initial_lr,
        seed=config.seed,
        min_count=config.min_count,
        vocab=vocab,
    )
    tfidf = fit_tfidf(token_docs, vocab)

    def embed_all(records, kind):
        entries = {}
        skipped = 0
        for record in records:
            doc_id = getattr(record, "doc_id", None) or record.patent_id
            try:
                vec = embed_tokens(_doc_tokens(record), emb, tfidf, doc_id=doc_id)
            except UnembeddableDocument:
                skipped += 1
                continue
            entries[doc_id] = vec.vector
        if skipped:
            warnings.warn(f"{skipped} {kind} had no in-vocabulary tokens; skipped")
        return entries

    pub_entries = embed_all(pubs, "publications")
    pat_entries = embed_all(pats, "patents")
    if not pub_entries:
        raise StageError("no publication could be embedded; corpus too sparse")
    outs = []
    for name, writer in (
        ("word vectors", lambda tmp: save_word_embeddings(emb, tmp)),
        ("tfidf model", lambda tmp: save_tfidf(tfidf, tmp)),
        ("publication vectors", lambda tmp: save_vectors(pub_entries, emb.dim, tmp)),
        ("patent vectors", lambda tmp: save_vectors(pat_entries, emb.dim, tmp)),
    ):
        rel, _ = ARTIFACTS[name]
        with _atomic(run_dir / rel) as tmp:
            writer(tmp)
        outs.append(rel)
    details = {
        "vocabulary": len(vocab),
        "publication_vectors": len(pub_entries),
        "patent_vectors": len(pat_entries),
    }
    return outs, details, {}


def _stage_reduce(config, run_dir):
    vecset = load_vectors(run_dir / ARTIFACTS["publication vectors"][0])
    ids = list(vecset.entries.keys())
    matrix = np.stack([vecset.entries[i] for i in ids]) if ids else np.zeros((0, vecset.dim))
    docs = [DocVector(doc_id=i, vector=vecset.entries[i]) for i in ids]
    if config.reducer == "pca":
        reduced = reduce_pca(matrix, config.dim_out)
    else:
        graph = knn_graph(docs, k=config.k_neighbors)
        reduced = reduce_neighbor_embedding(
            graph,
            dim_out=config.dim_out,
            n_epochs=config.n_epochs,
            min_dist=config.min_dist,
            seed=config.seed,
        )
    rel, _ = ARTIFACTS["reduced vectors"]
    entries = {doc_id: reduced.vectors[i] for i, doc_id in enumerate(ids)}
    with _atomic(run_dir / rel) as tmp:
        save_vectors(entries, config.dim_out, tmp)
    return [rel], {"reducer": reduced.provenance, "n": len(ids)}, {}


def _stage_cluster(config, run_dir):
    reduced_set = load_vectors(run_dir / ARTIFACTS["reduced vectors"][0])
    ids = list(reduced_set.entries.keys())
    matrix = np.stack([reduced_set.entries[i] for i in ids]).astype(np.float64)
    pubs = parse_publications(run_dir / ARTIFACTS["publication corpus"][0]).records
    by_id = {p.doc_id: p for p in pubs}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise StageError(
            f"stale artifact: reduced vectors reference unknown doc ids ({missing[0]}...)"
        )
    docs = [by_id[i] for i in ids]
    full_set = load_vectors(run_dir / ARTIFACTS["publication vectors"][0])
    full = [DocVector(doc_id=i, vector=full_set.entries[i]) for i in ids]
    assignment = cluster_mod.hdbscan_fit(
        matrix,
        min_cluster_size=config.min_cluster_size,
        min_samples=config.min_samples,
    )
    topics = cluster_mod.extract_topics(
        assignment,
        docs,
        full,
        catch_all_size_ratio=config.catch_all_size_ratio,
        catch_all_dispersion_ratio=config.catch_all_dispersion_ratio,
    )
    dendrogram = cluster_mod.agglomerate_topics(topics)
    outs = []
    for name, writer in (
        ("cluster assignment", lambda tmp: cluster_mod.save_assignment(assignment, tmp)),
        ("topics", lambda tmp: cluster_mod.save_topics(topics, tmp)),
        ("dendrogram", lambda tmp: cluster_mod.save_dendrogram(dendrogram, tmp)),
    ):
        rel, _ = ARTIFACTS[name]
        with _atomic(run_dir / rel) as tmp:
            writer(tmp)
        outs.append(rel)
    details = {
        "clusters": assignment.n_clusters,
        "topics": len(topics),
        "noise": int(sum(1 for lab in assignment.labels if lab == -1)),
    }
    return outs, details, {}


def _stage_keywords(config, run_dir):
    topics = cluster_mod.load_topics(run_dir / ARTIFACTS["topics"][0])
    pubs = parse_publications(run_dir / ARTIFACTS["publication corpus"][0]).records
    member_ids = {i for t in topics for i in t.member_doc_ids}
    ann_path = run_dir / "input" / "annotations.jsonl"
    extra = {}
    if ann_path.exists():
        result = ingest_ner_annotations(ann_path, known_doc_ids=[p.doc_id for p in pubs])
        _warn_diagnostics("annotation row skipped", result.errors)
        annotations = result.records
        source = "ner"
        extra[str(ann_path.relative_to(run_dir))] = _sha256(ann_path)
    else:
        annotations = []
        for pub in pubs:
            if pub.doc_id in member_ids:
                annotations.extend(extract_rake(pub, STOPWORDS))
        source = "rake"
    profiles = rank_ctfidf(topics, annotations)
    rel, _ = ARTIFACTS["keyword profiles"]
    with _atomic(run_dir / rel) as tmp:
        save_profiles(profiles, tmp)
    details = {"source": source, "annotations": len(annotations), "profiles": len(profiles)}
    return [rel], details, extra


def _stage_queries(config, run_dir, topic_ids=None, seed=None):
    profiles = load_profiles(run_dir / ARTIFACTS["keyword profiles"][0])
    if topic_ids is not None:
        wanted = set(topic_ids)
        profiles = [p for p in profiles if p.topic_id in wanted]
    all_queries = []
    per_topic = {}
    for profile in profiles:
        queries = linker_mod.generate_queries(
            profile,
            top_k=config.top_k_keywords,
            queries_per_topic=config.queries_per_topic,
            query_length=config.query_length,
            seed=config.seed if seed is None else seed,
        )
        per_topic[profile.topic_id] = len(queries)
        logger.info("topic %d: %d queries", profile.topic_id, len(queries))
        all_queries.extend(queries)
    logger.info("total queries: %d", len(all_queries))
    rel, _ = ARTIFACTS["queries"]
    with _atomic(run_dir / rel) as tmp:
        linker_mod.save_queries(all_queries, tmp)
    return [rel], {"queries": len(all_queries), "per_topic": per_topic}, {}


def _stage_index(config, run_dir):
    vecset = load_vectors(run_dir / ARTIFACTS["patent vectors"][0])
    docs = [DocVector(doc_id=i, vector=v) for i, v in vecset.entries.items()]
    index = linker_mod.build_index(
        docs,
        n_trees=config.n_trees,
        leaf_capacity=config.leaf_capacity,
        seed=config.seed,
    )
    rel, _ = ARTIFACTS["ann index"]
    with _atomic(run_dir / rel) as tmp:
        linker_mod.save_index(index, tmp)
    return [rel], {"items": index.n_items, "n_trees": index.n_trees}, {}


def _stage_search(config, run_dir, topic_ids=None, progress=None, k=None):
    k = config.results_per_query if k is None else k
    queries = linker_mod.load_queries(run_dir / ARTIFACTS["queries"][0])
    if topic_ids is not None:
        wanted = set(topic_ids)
        queries = [q for q in queries if q.topic_id in wanted]
    index = linker_mod.load_index(run_dir / ARTIFACTS["ann index"][0])
    tfidf = load_tfidf(run_dir / ARTIFACTS["tfidf model"][0])
    word_vecs = load_vectors(run_dir / ARTIFACTS["word vectors"][0])
    emb = word_embeddings_from_vectors(word_vecs, tfidf.vocabulary)
    by_topic: dict[int, list] = {}
    for q in queries:
        by_topic.setdefault(q.topic_id, []).append(q)
    matches = []
    done = 0
    total = len(queries)
    executed = 0
    for topic_id in sorted(by_topic):
        results = []
        for q in by_topic[topic_id]:
            tokens = [tok for kw in q.keywords for tok in tokenize(kw)]
            try:
                qvec = embed_tokens(tokens, emb, tfidf, doc_id=f"q-{topic_id}-{q.seq}")
            except UnembeddableDocument:
                warnings.warn(
                    f"query {topic_id}/{q.seq} has no in-vocabulary tokens; skipped"
                )
                done += 1
                continue
            results.append(linker_mod.search(index, qvec, k=k))
            executed += 1
            done += 1
            if progress is not None:
                progress(done, total)
        matches.extend(linker_mod.aggregate_matches(results, topic_id))
    rel, _ = ARTIFACTS["matches"]
    with _atomic(run_dir / rel) as tmp:
        linker_mod.save_matches(matches, tmp)
    details = {
        "queries_executed": executed,
        "topics": len(by_topic),
        "matches": len(matches),
    }
    return [rel], details, {}


def _stage_analytics(config, run_dir):
    topics = cluster_mod.load_topics(run_dir / ARTIFACTS["topics"][0])
    matches = linker_mod.load_matches(run_dir / ARTIFACTS["matches"][0])
    patents = parse_patents(run_dir / ARTIFACTS["patent corpus"][0]).records
    outs = []

    def emit(rows, header, base):
        for suffix, writer in (
            ("csv", analytics_mod.write_table_csv),
            ("json", analytics_mod.write_table_json),
        ):
            rel = f"{ANALYTICS_DIR}/{base}.{suffix}"
            with _atomic(run_dir / rel) as tmp:
                writer(rows, header, tmp)
            outs.append(rel)

    emit(analytics_mod.topics_over_time(topics), ("topic_id", "year", "count"), "topics_by_year")
    for key, base in (
        ("applicant_country", "counts_by_country"),
        ("tech_field", "counts_by_field"),
        ("topic", "counts_by_topic"),
    ):
        rows = analytics_mod.count_by(
            matches, patents, key, fractional=config.fractional_counting
        )
        emit(rows, (key, "count"), base)
    distributions, diagnostics = analytics_mod.distance_by_year(
        matches, patents, bin_width=config.bin_width
    )
    _warn_diagnostics("distance_by_year", diagnostics)
    rel = f"{ANALYTICS_DIR}/distance_by_year.json"
    with _atomic(run_dir / rel) as tmp:
        analytics_mod.write_distributions(distributions, tmp)
    outs.append(rel)
    summary = [(d.year, d.n, d.mean, d.stddev) for d in distributions]
    emit(summary, ("year", "n", "mean", "stddev"), "distance_by_year_summary")
    network = analytics_mod.relatedness_network(
        matches, patents, min_weight=config.relatedness_min_weight
    )
    rel = f"{ANALYTICS_DIR}/relatedness.json"
    with _atomic(run_dir / rel) as tmp:
        analytics_mod.write_network(network, tmp)
    outs.append(rel)
    details = {
        "years": len(distributions),
        "network_edges": len(network.edges),
        "matches": len(matches),
    }
    return outs, details, {}


def run_all(config: PipelineConfig, run_dir, stages=STAGES) -> list[StageReport]:
    """Run stages in order; stops at the first failure."""
    return [run_stage(stage, config, run_dir) for stage in stages]
