"""Aggregate tables over topics and patent matches.

Everything here is a pure, deterministic function of its inputs: yearly
topic counts, patent-topic distance distributions, fractional country
and technology-field counts, and a field co-occurrence relatedness
network. Tables write as CSV and JSON; histograms additionally as
per-bin JSON so a client can render them without recomputation.
"""

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cluster import Topic
from .ingest import PatentRecord
from .linker import PatentMatch

DEFAULT_BIN_WIDTH = 0.02
DEFAULT_MIN_WEIGHT = 1.0

COUNT_KEYS = ("applicant_country", "tech_field", "topic")


@dataclass(frozen=True)
class DistanceDistribution:
    """Histogram of match distances for one priority year.

    Bins tile [0, 2] at a fixed width; counts sum to n. Mean and
    stddev (population) are computed from the raw distances, not the
    binned ones.
    """

    year: int
    bin_width: float
    histogram: list[tuple[float, int]]
    n: int
    mean: float
    stddev: float


@dataclass
class RelatednessNetwork:
    """Technology-field co-occurrence network over matched patents.

    a_ij = (N * C_ij) / (C_i * C_j), observed co-occurrence over the
    expectation under independence. Edges keep pairs with weight at or
    above the threshold; i < j and no self-pairs.
    """

    nodes: dict[int, int]
    cooccurrence: dict[tuple[int, int], int]
    edges: list[tuple[int, int, float]]
    n_observations: int


def topics_over_time(topics: list[Topic]) -> list[tuple[int, int, int]]:
    """Per-topic yearly member counts, zero-filled over the global year span.

    Rows are (topic_id, year, count) ordered by topic then year; every
    topic emits a row for every year between the corpus-wide minimum
    and maximum, so the table is dense and per-topic row sums equal
    topic sizes.
    """
    years = [y for t in topics for y in t.yearly_counts]
    if not years:
        return []
    lo, hi = min(years), max(years)
    rows = []
    for topic in sorted(topics, key=lambda t: t.topic_id):
        for year in range(lo, hi + 1):
            rows.append((topic.topic_id, year, topic.yearly_counts.get(year, 0)))
    return rows


def distance_by_year(
    matches: list[PatentMatch],
    patents: list[PatentRecord],
    bin_width: float = DEFAULT_BIN_WIDTH,
) -> tuple[list[DistanceDistribution], list[str]]:
    """Distance histograms grouped by patent priority year.

    Returns (distributions ascending by year, diagnostics). A match
    whose patent_id has no record is skipped with a diagnostic. Each
    match contributes its aggregated (minimum) distance once; a patent
    matched by several topics therefore appears once per topic.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    by_id = {p.patent_id: p for p in patents}
    n_bins = math.ceil(round(2.0 / bin_width, 9))
    per_year: dict[int, list[float]] = {}
    diagnostics = []
    for match in matches:
        record = by_id.get(match.patent_id)
        if record is None:
            diagnostics.append(f"unresolvable patent_id {match.patent_id}; match skipped")
            continue
        per_year.setdefault(record.priority_year, []).append(match.distance)
    out = []
    for year in sorted(per_year):
        values = np.asarray(per_year[year], dtype=np.float64)
        counts = [0] * n_bins
        for d in values:
            counts[min(int(d / bin_width), n_bins - 1)] += 1
        histogram = [(round(i * bin_width, 9), counts[i]) for i in range(n_bins)]
        out.append(
            DistanceDistribution(
                year=year,
                bin_width=bin_width,
                histogram=histogram,
                n=values.size,
                mean=float(values.mean()),
                stddev=float(values.std()),
            )
        )
    return out, diagnostics


def _patent_key_values(
    patent_ids, matches, by_id, key
) -> dict[str, list]:
    """Key values per distinct matched patent; [] when none apply."""
    values: dict[str, list] = {}
    if key == "topic":
        for m in matches:
            if m.patent_id in values:
                values[m.patent_id].append(m.topic_id)
            else:
                values[m.patent_id] = [m.topic_id]
        for pid in values:
            values[pid] = sorted(set(values[pid]))
        return values
    for pid in patent_ids:
        record = by_id.get(pid)
        if record is None:
            values[pid] = []
        elif key == "applicant_country":
            values[pid] = sorted(set(record.applicant_countries))
        else:
            values[pid] = sorted(set(record.tech_fields))
    return values


def count_by(
    matches: list[PatentMatch],
    patents: list[PatentRecord],
    key: str,
    fractional: bool = True,
) -> list[tuple[object, float]]:
    """Counts over distinct matched patents, fractional by default.

    A patent with m values for the key contributes 1/m to each, so the
    total over all key values equals the number of matched patents that
    carry at least one value; accumulation is exact rational, rendered
    to float at the end. With fractional=False every value gets a whole
    count (totals then exceed patent totals for multi-valued patents).
    Rows sort by descending count, ties by ascending key value.
    """
    if key not in COUNT_KEYS:
        raise ValueError(f"unknown key {key!r}; expected one of {COUNT_KEYS}")
    by_id = {p.patent_id: p for p in patents}
    patent_ids = sorted({m.patent_id for m in matches})
    values = _patent_key_values(patent_ids, matches, by_id, key)
    totals: dict[object, Fraction] = {}
    for pid in patent_ids:
        vals = values[pid]
        if not vals:
            continue
        share = Fraction(1, len(vals)) if fractional else Fraction(1)
        for v in vals:
            totals[v] = totals.get(v, Fraction(0)) + share
    rows = [(v, float(c)) for v, c in totals.items()]
    rows.sort(key=lambda r: (-r[1], str(r[0])))
    return rows


def relatedness_network(
    matches: list[PatentMatch],
    patents: list[PatentRecord],
    min_weight: float = DEFAULT_MIN_WEIGHT,
) -> RelatednessNetwork:
    """Association-strength network over technology-field co-occurrence.

    Observations are distinct matched patents listing at least one
    field. Edge weight a_ij = (N * C_ij) / (C_i * C_j) compares the
    observed pair count with its expectation under independent field
    assignment; pairs at or above min_weight are kept. The weight
    matrix is symmetric by construction and self-pairs never form.
    """
    if min_weight <= 0:
        raise ValueError("min_weight must be positive")
    by_id = {p.patent_id: p for p in patents}
    field_counts: dict[int, int] = {}
    pair_counts: dict[tuple[int, int], int] = {}
    n_obs = 0
    for pid in sorted({m.patent_id for m in matches}):
        record = by_id.get(pid)
        if record is None:
            continue
        fields = sorted(set(record.tech_fields))
        if not fields:
            continue
        n_obs += 1
        for f in fields:
            field_counts[f] = field_counts.get(f, 0) + 1
        for i, a in enumerate(fields):
            for b in fields[i + 1 :]:
                pair_counts[(a, b)] = pair_counts.get((a, b), 0) + 1
    edges = []
    for (a, b), c_ab in sorted(pair_counts.items()):
        weight = n_obs * c_ab / (field_counts[a] * field_counts[b])
        if weight >= min_weight:
            edges.append((a, b, weight))
    return RelatednessNetwork(
        nodes=dict(sorted(field_counts.items())),
        cooccurrence=dict(sorted(pair_counts.items())),
        edges=edges,
        n_observations=n_obs,
    )


def write_table_csv(rows, header: tuple, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_table_json(rows, header: tuple, path) -> None:
    payload = [dict(zip(header, row)) for row in rows]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=0, sort_keys=True)
        fh.write("\n")


def write_distributions(distributions: list[DistanceDistribution], path) -> None:
    """Per-bin JSON for every year, directly renderable by a client."""
    payload = [
        {
            "year": d.year,
            "bin_width": d.bin_width,
            "n": d.n,
            "mean": d.mean,
            "stddev": d.stddev,
            "bins": [{"lower": lo, "count": c} for lo, c in d.histogram],
        }
        for d in distributions
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=0, sort_keys=True)
        fh.write("\n")


def write_network(network: RelatednessNetwork, path) -> None:
    payload = {
        "n_observations": network.n_observations,
        "nodes": [
            {"field": f, "count": c} for f, c in sorted(network.nodes.items())
        ],
        "edges": [
            {"source": a, "target": b, "weight": w} for a, b, w in network.edges
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=0, sort_keys=True)
        fh.write("\n")
