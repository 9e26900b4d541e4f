"""Deterministic synthetic corpus for pipeline and service tests.

Three disjoint vocabulary themes drive 200 publications each; the
patent side mixes 300 distractors from an unrelated machinery
vocabulary with 30 theme-planted patents per theme, plus a handful of
records the priority/office filter must reject. Publications of the
third theme only appear from 2018 on, so yearly tables show a
late-arriving topic. Every draw comes from one seeded generator, so
the same seed always yields byte-identical corpus files.
"""

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import (PatentRecord, PublicationRecord, write_patents,
                     write_publications)
from .keywords import KeywordAnnotation

THEME_WORDS = {
    "interface": """
    electrode cortical decoding implant stimulation neuron spike brain
    interface motor prosthetic amplifier channel telemetry feedback
    calibration cursor intention rehabilitation headset wireless scalp
    impedance montage electrophysiology microelectrode paralysis
    """.split(),
    "sequencing": """
    genome sequencing variant allele transcriptome polymerase primer
    nucleotide exome annotation alignment coverage mutation chromosome
    barcode fragment assembly methylation splicing genotype phenotype
    enzyme reagent flowcell basecall amplification readout
    """.split(),
    "battery": """
    cathode anode lithium electrolyte separator voltage cycling
    capacity discharge dendrite thermal cooling graphite silicon
    nickel cobalt manganese phosphate solvent additive runaway pack
    busbar anodic cathodic overcharge passivation
    """.split(),
}

FILLER_WORDS = """
study results method analysis approach data model system process
performance evaluation experiment measurement observed significant
improvement novel proposed framework application development design
implementation comparison baseline robust efficient scalable accurate
""".split()

DISTRACTOR_WORDS = """
conveyor gearbox turbine valve hydraulic pneumatic bearing lubricant
welding casting mold extrusion lathe spindle fastener gasket pulley
crankshaft piston flywheel alternator chassis axle brake clutch damper
linkage sprocket camshaft manifold radiator carburetor solenoid winch
""".split()

THEMES = tuple(THEME_WORDS)
COUNTRY_POOL = ("US", "DE", "JP", "KR", "CN", "FR", "GB")
IP5_OFFICES = ("US", "EP", "JP", "KR", "CN")

PUBS_PER_THEME = 200
DISTRACTOR_PATENTS = 300
PLANTED_PER_THEME = 30
REJECT_PATENTS = 30
LATE_THEME = "battery"
LATE_FROM_YEAR = 2018
YEAR_RANGE = (2000, 2021)


@dataclass
class FixtureCorpus:
    publications: list[PublicationRecord]
    patents: list[PatentRecord]
    annotations: list[KeywordAnnotation]
    theme_of_doc: dict[str, str] = field(default_factory=dict)
    planted_patents: dict[str, list[str]] = field(default_factory=dict)
    distractor_patents: list[str] = field(default_factory=list)


def _pick(rng, words, size):
    return [words[i] for i in rng.integers(0, len(words), size=size)]


def _doc_year(rng, theme) -> int:
    lo, hi = YEAR_RANGE
    if theme == LATE_THEME:
        lo = LATE_FROM_YEAR
    return int(rng.integers(lo, hi + 1))


def _phrase(rng, words) -> str:
    a, b = rng.choice(len(words), size=2, replace=False)
    return f"{words[a]} {words[b]}"


def build_fixture_corpus(seed: int = 0) -> FixtureCorpus:
    rng = np.random.default_rng([seed, 97])
    publications = []
    annotations = []
    theme_of_doc = {}
    for theme_idx, theme in enumerate(THEMES):
        words = THEME_WORDS[theme]
        methods = words[:10]
        tasks = words[10:20]
        for i in range(PUBS_PER_THEME):
            doc_id = f"pub-{theme}-{i:03d}"
            title = " ".join(_pick(rng, words, 5))
            body = [
                words[j] if rng.random() < 0.7 else FILLER_WORDS[jf]
                for j, jf in zip(
                    rng.integers(0, len(words), size=50),
                    rng.integers(0, len(FILLER_WORDS), size=50),
                )
            ]
            publications.append(
                PublicationRecord(
                    doc_id=doc_id,
                    title=title,
                    abstract=" ".join(body),
                    year=_doc_year(rng, theme),
                    citation_count=int(rng.integers(0, 50)),
                    countries=[COUNTRY_POOL[int(rng.integers(0, len(COUNTRY_POOL)))]],
                )
            )
            theme_of_doc[doc_id] = theme
            annotations.append(
                KeywordAnnotation(doc_id=doc_id, surface=_phrase(rng, methods), label="Method")
            )
            annotations.append(
                KeywordAnnotation(doc_id=doc_id, surface=_phrase(rng, tasks), label="Task")
            )
            if rng.random() < 0.3:
                annotations.append(
                    KeywordAnnotation(doc_id=doc_id, surface=_phrase(rng, words), label="Other")
                )
    patents = []
    planted = {theme: [] for theme in THEMES}
    for theme_idx, theme in enumerate(THEMES):
        words = THEME_WORDS[theme]
        for i in range(PLANTED_PER_THEME):
            patent_id = f"pat-{theme}-{i:03d}"
            body = [
                words[j] if rng.random() < 0.75 else FILLER_WORDS[jf]
                for j, jf in zip(
                    rng.integers(0, len(words), size=45),
                    rng.integers(0, len(FILLER_WORDS), size=45),
                )
            ]
            # field codes cluster per theme so the relatedness network has structure
            base_fields = [3 * theme_idx + 1, 3 * theme_idx + 2, 3 * theme_idx + 3]
            n_fields = int(rng.integers(1, 4))
            fields_pick = sorted(
                int(base_fields[j]) for j in rng.choice(3, size=n_fields, replace=False)
            )
            patents.append(
                PatentRecord(
                    patent_id=patent_id,
                    abstract=" ".join(body),
                    priority_year=_doc_year(rng, theme),
                    family_id=f"fam-{patent_id}",
                    offices=[IP5_OFFICES[int(rng.integers(0, len(IP5_OFFICES)))]],
                    applicant_countries=sorted(
                        {
                            COUNTRY_POOL[int(j)]
                            for j in rng.choice(
                                len(COUNTRY_POOL), size=int(rng.integers(1, 4)), replace=False
                            )
                        }
                    ),
                    tech_fields=fields_pick,
                    is_priority=True,
                )
            )
            planted[theme].append(patent_id)
    distractors = []
    for i in range(DISTRACTOR_PATENTS):
        patent_id = f"pat-misc-{i:03d}"
        body = [
            DISTRACTOR_WORDS[j] if rng.random() < 0.7 else FILLER_WORDS[jf]
            for j, jf in zip(
                rng.integers(0, len(DISTRACTOR_WORDS), size=45),
                rng.integers(0, len(FILLER_WORDS), size=45),
            )
        ]
        patents.append(
            PatentRecord(
                patent_id=patent_id,
                abstract=" ".join(body),
                priority_year=int(rng.integers(YEAR_RANGE[0], YEAR_RANGE[1] + 1)),
                family_id=f"fam-{patent_id}",
                offices=[IP5_OFFICES[int(rng.integers(0, len(IP5_OFFICES)))]],
                applicant_countries=sorted(
                    {
                        COUNTRY_POOL[int(j)]
                        for j in rng.choice(
                            len(COUNTRY_POOL), size=int(rng.integers(1, 4)), replace=False
                        )
                    }
                ),
                tech_fields=sorted(
                    {int(j) + 10 for j in rng.choice(25, size=int(rng.integers(1, 4)), replace=False)}
                ),
                is_priority=True,
            )
        )
        distractors.append(patent_id)
    for i in range(REJECT_PATENTS):
        # half fail the priority flag, half fail the office filter
        patents.append(
            PatentRecord(
                patent_id=f"pat-reject-{i:03d}",
                abstract=" ".join(_pick(rng, DISTRACTOR_WORDS, 20)),
                priority_year=int(rng.integers(YEAR_RANGE[0], YEAR_RANGE[1] + 1)),
                family_id=f"fam-reject-{i:03d}",
                offices=["BR"] if i % 2 else [IP5_OFFICES[i % len(IP5_OFFICES)]],
                applicant_countries=["BR"],
                tech_fields=[1],
                is_priority=bool(i % 2),
            )
        )
    return FixtureCorpus(
        publications=publications,
        patents=patents,
        annotations=annotations,
        theme_of_doc=theme_of_doc,
        planted_patents=planted,
        distractor_patents=distractors,
    )


def write_fixture_inputs(directory, seed: int = 0) -> FixtureCorpus:
    """Materialize the corpus as pipeline input files under directory."""
    corpus = build_fixture_corpus(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_publications(corpus.publications, directory / "publications.jsonl")
    write_patents(corpus.patents, directory / "patents.jsonl")
    with open(directory / "annotations.jsonl", "w", encoding="utf-8") as fh:
        for ann in corpus.annotations:
            row = {"doc_id": ann.doc_id, "surface": ann.surface, "label": ann.label}
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    return corpus


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="write the synthetic fixture corpus as pipeline inputs"
    )
    parser.add_argument("--out", required=True, help="directory for the input files")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    corpus = write_fixture_inputs(args.out, args.seed)
    print(
        f"wrote {len(corpus.publications)} publications, "
        f"{len(corpus.patents)} patents, "
        f"{len(corpus.annotations)} annotations to {args.out}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
