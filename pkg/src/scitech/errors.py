class ScitechError(Exception):
    """Base class for all pipeline errors."""


class IngestError(ScitechError):
    """Fatal corpus/vector-file problem (unreadable file, duplicate id, bad header)."""


class VectorFormatError(IngestError):
    """Binary vector file violates the SVEC layout; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnembeddableDocument(ScitechError):
    """Document has no in-vocabulary token with nonzero weight."""

    def __init__(self, doc_id: str):
        super().__init__(f"unembeddable document: {doc_id}")
        self.doc_id = doc_id


class MissingVectorsError(IngestError):
    """Too many corpus ids absent from an external vector set."""

    def __init__(self, missing: list, total: int, threshold: float):
        shown = ", ".join(missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        super().__init__(
            f"{len(missing)}/{total} corpus ids missing from vector set "
            f"(threshold {threshold:.0%}): {shown}{more}"
        )
        self.missing = missing


class StageError(ScitechError):
    """Pipeline stage cannot run (missing/stale upstream artifact, config mismatch)."""
