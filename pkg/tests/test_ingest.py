"""Corpus parsing, filtering, and binary vector file contracts."""

import json
import struct

import numpy as np
import pytest

from scitech.errors import IngestError, VectorFormatError
from scitech.ingest import (
    PatentRecord,
    PublicationRecord,
    filter_priority_ip5,
    load_vectors,
    parse_patents,
    parse_publications,
    save_vectors,
    select_top_cited,
    write_patents,
    write_publications,
)


def pub(doc_id, year=2010, citations=0, **kw):
    return PublicationRecord(
        doc_id=doc_id, title="t", abstract="some text", year=year,
        citation_count=citations, **kw,
    )


def pat(patent_id, offices=("US",), priority=True, **kw):
    return PatentRecord(
        patent_id=patent_id, abstract="claim text", priority_year=2012,
        family_id=f"f-{patent_id}", offices=offices, is_priority=priority, **kw,
    )


class TestParsePublications:
    def test_jsonl_round_trip_preserves_order(self, tmp_path):
        records = [pub(f"d{i}", year=2000 + i, citations=i) for i in range(5)]
        path = tmp_path / "pubs.jsonl"
        write_publications(records, path)
        result = parse_publications(path)
        assert result.errors == []
        assert result.records == records

    def test_bad_rows_reported_with_line_numbers(self, tmp_path):
        path = tmp_path / "pubs.jsonl"
        rows = [
            json.dumps({"doc_id": "a", "abstract": "x", "year": 2010, "citation_count": 1}),
            "{not json",
            json.dumps({"doc_id": "", "abstract": "x", "year": 2010}),
            json.dumps({"doc_id": "b", "abstract": "x", "year": 123}),
            json.dumps({"doc_id": "c", "abstract": "y", "year": 2011, "citation_count": 0}),
        ]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        result = parse_publications(path)
        assert [r.doc_id for r in result.records] == ["a", "c"]
        assert [e.line for e in result.errors] == [2, 3, 4]
        assert "JSON" in result.errors[0].message
        assert "doc_id" in result.errors[1].message
        assert "year" in result.errors[2].message

    def test_duplicate_id_fatal(self, tmp_path):
        path = tmp_path / "pubs.jsonl"
        row = json.dumps({"doc_id": "a", "abstract": "x", "year": 2010})
        path.write_text(row + "\n" + row + "\n", encoding="utf-8")
        with pytest.raises(IngestError, match="duplicate"):
            parse_publications(path)

    def test_csv_with_joined_lists(self, tmp_path):
        path = tmp_path / "pubs.csv"
        path.write_text(
            "doc_id,title,abstract,year,citation_count,countries\n"
            "d1,T,Some abstract,2015,7,US|DE\n"
            "d2,T,,2015,1,\n",
            encoding="utf-8",
        )
        result = parse_publications(path, fmt="csv")
        assert len(result.records) == 1
        assert result.records[0].countries == ("US", "DE")
        assert result.errors[0].line == 3  # empty abstract, after the header

    def test_unknown_format(self, tmp_path):
        with pytest.raises(IngestError, match="format"):
            parse_publications(tmp_path / "x.parquet", fmt="parquet")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="cannot read"):
            parse_publications(tmp_path / "absent.jsonl")


class TestParsePatents:
    def test_round_trip(self, tmp_path):
        records = [
            pat("p1", offices=("US", "JP"), applicant_countries=("US",), tech_fields=(3, 4)),
            pat("p2", priority=False),
        ]
        path = tmp_path / "pats.jsonl"
        write_patents(records, path)
        result = parse_patents(path)
        assert result.errors == []
        assert result.records == records

    def test_field_code_range_enforced(self, tmp_path):
        path = tmp_path / "pats.jsonl"
        path.write_text(
            json.dumps({
                "patent_id": "p1", "abstract": "x", "priority_year": 2010,
                "family_id": "f", "tech_fields": [36],
            }) + "\n",
            encoding="utf-8",
        )
        result = parse_patents(path)
        assert result.records == []
        assert "out of range" in result.errors[0].message


class TestFilters:
    def test_priority_ip5(self):
        pats = [
            pat("keep-us"),
            pat("drop-office", offices=("BR",)),
            pat("drop-nonpriority", priority=False),
            pat("keep-ep", offices=("BR", "EP")),
            pat("drop-no-office", offices=()),
        ]
        kept = filter_priority_ip5(pats)
        assert [p.patent_id for p in kept] == ["keep-us", "keep-ep"]

    def test_top_cited_per_year(self):
        pubs = [
            pub("a", 2010, 5), pub("b", 2010, 9), pub("c", 2010, 1),
            pub("d", 2011, 0),
        ]
        kept = select_top_cited(pubs, per_year=2)
        # order preserved; year 2011 keeps its only record
        assert [p.doc_id for p in kept] == ["a", "b", "d"]

    def test_top_cited_ties_by_doc_id(self):
        pubs = [pub("z", 2010, 3), pub("a", 2010, 3), pub("m", 2010, 3)]
        kept = select_top_cited(pubs, per_year=2)
        assert sorted(p.doc_id for p in kept) == ["a", "m"]

    def test_top_cited_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            select_top_cited([], per_year=0)


class TestVectorFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        entries = {f"id{i}": rng.standard_normal(8).astype(np.float32) for i in range(20)}
        path = tmp_path / "v.svec"
        save_vectors(entries, 8, path)
        loaded = load_vectors(path)
        assert loaded.dim == 8
        assert list(loaded.entries) == list(entries)
        for key in entries:
            assert loaded.entries[key].tobytes() == entries[key].tobytes()
        # reserialization is byte-identical
        path2 = tmp_path / "v2.svec"
        save_vectors(loaded.entries, loaded.dim, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_unicode_ids(self, tmp_path):
        entries = {"θ-band": np.ones(3, dtype=np.float32)}
        path = tmp_path / "v.svec"
        save_vectors(entries, 3, path)
        assert "θ-band" in load_vectors(path).entries

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.svec"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(VectorFormatError, match="magic"):
            load_vectors(path)

    def test_truncated_record(self, tmp_path):
        entries = {"a": np.ones(4, dtype=np.float32)}
        path = tmp_path / "v.svec"
        save_vectors(entries, 4, path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(VectorFormatError, match="truncated"):
            load_vectors(path)

    def test_trailing_bytes(self, tmp_path):
        entries = {"a": np.ones(4, dtype=np.float32)}
        path = tmp_path / "v.svec"
        save_vectors(entries, 4, path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(VectorFormatError, match="trailing"):
            load_vectors(path)

    def test_non_finite_component_rejected(self, tmp_path):
        path = tmp_path / "v.svec"
        header = struct.pack("<4sIIQ", b"SVEC", 1, 2, 1)
        rec = struct.pack("<H", 1) + b"a" + np.array(
            [1.0, np.nan], dtype="<f4"
        ).tobytes()
        path.write_bytes(header + rec)
        with pytest.raises(VectorFormatError, match="non-finite"):
            load_vectors(path)

    def test_shape_mismatch_on_save(self, tmp_path):
        with pytest.raises(IngestError, match="shape"):
            save_vectors({"a": np.ones(3, dtype=np.float32)}, 4, tmp_path / "v.svec")
