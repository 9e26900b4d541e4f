"""Corpus and vector-file ingestion.

JSONL is the canonical corpus format (one record per line, UTF-8, field
names as in the dataclasses). CSV is accepted for convenience; list-valued
fields are "|"-joined there. Malformed rows are skipped and reported with
their line number; duplicate ids are fatal.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import IngestError, VectorFormatError

IP5_OFFICES = frozenset({"US", "EP", "JP", "KR", "CN"})
TECH_FIELD_RANGE = range(1, 36)

PUBLICATION_LIST_FIELDS = ("countries", "author_keywords")
PATENT_LIST_FIELDS = ("offices", "applicant_countries", "tech_fields")


@dataclass(frozen=True)
class PublicationRecord:
    doc_id: str
    title: str
    abstract: str
    year: int
    citation_count: int
    countries: tuple[str, ...] = ()
    journal: str = ""
    author_keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class PatentRecord:
    patent_id: str
    abstract: str
    priority_year: int
    family_id: str
    offices: tuple[str, ...] = ()
    applicant_countries: tuple[str, ...] = ()
    tech_fields: tuple[int, ...] = ()
    is_priority: bool = False


@dataclass
class ExternalVectorSet:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class RowDiagnostic:
    line: int
    message: str


@dataclass
class ParseResult:
    records: list
    errors: list[RowDiagnostic] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _as_str_tuple(value, what: str) -> tuple[str, ...]:
    if value is None or value == "":
        return ()
    if isinstance(value, str):
        parts = [p.strip() for p in value.split("|")]
        return tuple(p for p in parts if p)
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    raise ValueError(f"{what} must be a list or '|'-joined string")


def _as_int(value, what: str) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{what} must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ValueError(f"{what} must be an integer, got {value!r}")


def _as_bool(value, what: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    raise ValueError(f"{what} must be a boolean, got {value!r}")


def _publication_from_mapping(row: dict) -> PublicationRecord:
    doc_id = str(row.get("doc_id", "")).strip()
    if not doc_id:
        raise ValueError("missing doc_id")
    abstract = str(row.get("abstract", "") or "")
    if not abstract.strip():
        raise ValueError("missing abstract")
    year = _as_int(row.get("year"), "year")
    if not 1900 <= year <= 2100:
        raise ValueError(f"year {year} outside 1900..2100")
    citations = _as_int(row.get("citation_count", 0), "citation_count")
    if citations < 0:
        raise ValueError(f"citation_count {citations} negative")
    return PublicationRecord(
        doc_id=doc_id,
        title=str(row.get("title", "") or ""),
        abstract=abstract,
        year=year,
        citation_count=citations,
        countries=_as_str_tuple(row.get("countries"), "countries"),
        journal=str(row.get("journal", "") or ""),
        author_keywords=_as_str_tuple(row.get("author_keywords"), "author_keywords"),
    )


def _patent_from_mapping(row: dict) -> PatentRecord:
    patent_id = str(row.get("patent_id", "")).strip()
    if not patent_id:
        raise ValueError("missing patent_id")
    abstract = str(row.get("abstract", "") or "")
    if not abstract.strip():
        raise ValueError("missing abstract")
    year = _as_int(row.get("priority_year"), "priority_year")
    raw_fields = row.get("tech_fields")
    if isinstance(raw_fields, str):
        raw_fields = _as_str_tuple(raw_fields, "tech_fields")
    tech_fields = tuple(_as_int(v, "tech_field") for v in (raw_fields or ()))
    for code in tech_fields:
        if code not in TECH_FIELD_RANGE:
            raise ValueError(f"field code out of range: {code}")
    return PatentRecord(
        patent_id=patent_id,
        abstract=abstract,
        priority_year=year,
        family_id=str(row.get("family_id", "") or ""),
        offices=_as_str_tuple(row.get("offices"), "offices"),
        applicant_countries=_as_str_tuple(
            row.get("applicant_countries"), "applicant_countries"
        ),
        tech_fields=tech_fields,
        is_priority=_as_bool(row.get("is_priority", False), "is_priority"),
    )


def _iter_rows(path, fmt: str):
    """Yield (line_number, mapping) pairs; raises IngestError when unreadable."""
    path = Path(path)
    if fmt not in ("jsonl", "csv"):
        raise IngestError(f"unknown format {fmt!r} (expected jsonl or csv)")
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        if fmt == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                yield lineno, line
        else:
            reader = csv.DictReader(fh)
            # data rows start after the header line
            for lineno, row in enumerate(reader, start=2):
                yield lineno, row


def _parse_corpus(path, fmt, builder, id_attr) -> ParseResult:
    records = []
    errors: list[RowDiagnostic] = []
    seen: dict[str, int] = {}
    for lineno, raw in _iter_rows(path, fmt):
        if isinstance(raw, str):
            try:
                raw = json.loads(raw)
            except json.JSONDecodeError as exc:
                errors.append(RowDiagnostic(lineno, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(raw, dict):
                errors.append(RowDiagnostic(lineno, "row is not a JSON object"))
                continue
        try:
            rec = builder(raw)
        except ValueError as exc:
            errors.append(RowDiagnostic(lineno, str(exc)))
            continue
        rec_id = getattr(rec, id_attr)
        if rec_id in seen:
            raise IngestError(
                f"duplicate {id_attr} {rec_id!r} at line {lineno} "
                f"(first seen at line {seen[rec_id]})"
            )
        seen[rec_id] = lineno
        records.append(rec)
    return ParseResult(records=records, errors=errors)


def parse_publications(path, fmt: str = "jsonl") -> ParseResult:
    return _parse_corpus(path, fmt, _publication_from_mapping, "doc_id")


def parse_patents(path, fmt: str = "jsonl") -> ParseResult:
    return _parse_corpus(path, fmt, _patent_from_mapping, "patent_id")


def _record_to_row(rec) -> dict:
    row = asdict(rec)
    for key, value in row.items():
        if isinstance(value, tuple):
            row[key] = list(value)
    return row


def write_publications(records, path) -> None:
    _write_jsonl(records, path)


def write_patents(records, path) -> None:
    _write_jsonl(records, path)


def _write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_row(rec), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def filter_priority_ip5(patents: list[PatentRecord]) -> list[PatentRecord]:
    """Keep priority filings whose family touches at least one IP5 office."""
    return [
        p
        for p in patents
        if p.is_priority and IP5_OFFICES.intersection(p.offices)
    ]


def select_top_cited(
    pubs: list[PublicationRecord], per_year: int
) -> list[PublicationRecord]:
    """Per publication year, keep the per_year most cited records.

    Ties break by ascending doc_id so runs are reproducible; years with
    fewer records keep all of them. Input order is preserved in the output.
    """
    if per_year < 1:
        raise ValueError(f"per_year must be >= 1, got {per_year}")
    by_year: dict[int, list[PublicationRecord]] = {}
    for rec in pubs:
        by_year.setdefault(rec.year, []).append(rec)
    keep_ids = set()
    for year_records in by_year.values():
        ranked = sorted(year_records, key=lambda r: (-r.citation_count, r.doc_id))
        keep_ids.update(r.doc_id for r in ranked[:per_year])
    return [r for r in pubs if r.doc_id in keep_ids]


# --- binary vector files ----------------------------------------------------
#
# Layout ("SVEC" format, version 1):
#   bytes 0..3   magic "SVEC"
#   u32 LE       version (= 1)
#   u32 LE       dim
#   u64 LE       count
#   then `count` records of [u16 LE id length, id bytes UTF-8, dim x f32 LE]

_SVEC_MAGIC = b"SVEC"
_SVEC_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_IDLEN = struct.Struct("<H")


def save_vectors(entries: dict[str, np.ndarray], dim: int, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_SVEC_MAGIC, _SVEC_VERSION, dim, len(entries)))
        for doc_id, vec in entries.items():
            raw_id = doc_id.encode("utf-8")
            if len(raw_id) > 0xFFFF:
                raise IngestError(f"id too long for vector file: {doc_id[:40]}...")
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dim,):
                raise IngestError(
                    f"vector for {doc_id!r} has shape {arr.shape}, expected ({dim},)"
                )
            fh.write(_IDLEN.pack(len(raw_id)))
            fh.write(raw_id)
            fh.write(arr.tobytes())


def load_vectors(path) -> ExternalVectorSet:
    """Parse an SVEC file; any structural defect is fatal with a byte offset."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if len(data) < _HEADER.size:
        raise VectorFormatError("truncated header", len(data))
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != _SVEC_MAGIC:
        raise VectorFormatError(f"bad magic {magic!r}", 0)
    if version != _SVEC_VERSION:
        raise VectorFormatError(f"unsupported version {version}", 4)
    if dim < 1:
        raise VectorFormatError(f"dim must be positive, got {dim}", 8)
    offset = _HEADER.size
    vec_bytes = 4 * dim
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + _IDLEN.size > len(data):
            raise VectorFormatError("truncated record (id length)", offset)
        (id_len,) = _IDLEN.unpack_from(data, offset)
        offset += _IDLEN.size
        if offset + id_len + vec_bytes > len(data):
            raise VectorFormatError("truncated record (payload)", offset)
        doc_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise VectorFormatError(
                f"non-finite component in vector {doc_id!r}", offset - vec_bytes
            )
        if doc_id in entries:
            raise IngestError(f"duplicate id {doc_id!r} in vector file")
        entries[doc_id] = vec
    if offset != len(data):
        raise VectorFormatError("trailing bytes after last record", offset)
    return ExternalVectorSet(dim=dim, entries=entries)
