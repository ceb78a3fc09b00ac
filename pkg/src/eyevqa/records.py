"""Canonical record types and JSONL manifest ingestion.

Everything downstream (metrics, judging, aggregation, review) consumes the
types defined here. Records are immutable after construction; validation has
a single source of truth (:func:`validate_record`) shared by the parser.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

__all__ = [
    "ImagingModality",
    "TaskKind",
    "VqaRecord",
    "PredictionRecord",
    "DatasetManifest",
    "Violation",
    "ManifestError",
    "parse_manifest",
    "parse_predictions",
    "validate_record",
    "record_to_dict",
    "dump_manifest",
]

OPTION_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class ImagingModality(enum.Enum):
    """The eight supported ocular imaging modalities."""

    FA = "FA"
    ICGA = "ICGA"
    OCT = "OCT"
    FUNDUS = "Fundus"
    UBM = "UBM"
    SLIT_LAMP = "SlitLamp"
    FLUORESCEIN_STAINING = "FluoresceinStaining"
    CT = "CT"

    @property
    def display_name(self) -> str:
        return _MODALITY_DISPLAY[self]

    @classmethod
    def parse(cls, raw: str) -> "ImagingModality":
        """Parse a modality from a canonical name, alias, or long form.

        Matching is case-insensitive and ignores punctuation, so strings
        like ``"Fluorescein Angiography (FA)"``, ``"FS."`` and
        ``"slit-lamp"`` all resolve.
        """
        key = _normalize_key(raw)
        if key in _MODALITY_ALIASES:
            return _MODALITY_ALIASES[key]
        # Long forms often carry the abbreviation in parentheses.
        paren = re.search(r"\(([^)]+)\)", raw)
        if paren:
            inner = _normalize_key(paren.group(1))
            if inner in _MODALITY_ALIASES:
                return _MODALITY_ALIASES[inner]
        raise ValueError(f"unknown imaging modality: {raw!r}")


_MODALITY_DISPLAY = {
    ImagingModality.FA: "Fluorescein Angiography (FA)",
    ImagingModality.ICGA: "Indocyanine Green Angiography (ICGA)",
    ImagingModality.OCT: "Optical Coherence Tomography (OCT)",
    ImagingModality.FUNDUS: "Fundus Photography",
    ImagingModality.UBM: "Ultrasound Biomicroscopy (UBM)",
    ImagingModality.SLIT_LAMP: "Slit-Lamp",
    ImagingModality.FLUORESCEIN_STAINING: "Fluorescein Staining",
    ImagingModality.CT: "Computed Tomography (CT)",
}


def _normalize_key(raw: str) -> str:
    return re.sub(r"[^a-z0-9]", "", raw.lower())


def _build_aliases() -> dict[str, ImagingModality]:
    aliases: dict[str, ImagingModality] = {}
    for modality in ImagingModality:
        aliases[_normalize_key(modality.value)] = modality
        aliases[_normalize_key(modality.display_name)] = modality
    extra = {
        "fs": ImagingModality.FLUORESCEIN_STAINING,
        "sl": ImagingModality.SLIT_LAMP,
        "fluoresceinangiography": ImagingModality.FA,
        "indocyaninegreenangiography": ImagingModality.ICGA,
        "opticalcoherencetomography": ImagingModality.OCT,
        "fundus": ImagingModality.FUNDUS,
        "fundusphotography": ImagingModality.FUNDUS,
        "ultrasoundbiomicroscopy": ImagingModality.UBM,
        "slitlamp": ImagingModality.SLIT_LAMP,
        "fluoresceinstaining": ImagingModality.FLUORESCEIN_STAINING,
        "fluoresceinstainingimaging": ImagingModality.FLUORESCEIN_STAINING,
        "computedtomography": ImagingModality.CT,
    }
    aliases.update(extra)
    return aliases


_MODALITY_ALIASES = _build_aliases()


class TaskKind(enum.Enum):
    """The three benchmark task types."""

    CLOSED_QA = "ClosedQA"
    OPEN_QA = "OpenQA"
    REPORT_GEN = "ReportGen"

    @classmethod
    def parse(cls, raw: str) -> "TaskKind":
        key = _normalize_key(raw)
        for kind in cls:
            if key == _normalize_key(kind.value):
                return kind
        shorthand = {
            "closed": cls.CLOSED_QA,
            "open": cls.OPEN_QA,
            "report": cls.REPORT_GEN,
            "reportgeneration": cls.REPORT_GEN,
        }
        if key in shorthand:
            return shorthand[key]
        raise ValueError(f"unknown task kind: {raw!r}")


@dataclass(frozen=True)
class VqaRecord:
    """One benchmark item: a question about an image and its reference answer.

    ``options`` is present exactly for multiple-choice (closed QA) items, as
    an ordered tuple of ``(letter, text)`` pairs; ``reference_answer`` is then
    one of the option letters. ``extra`` preserves unknown JSON fields so
    hospital-export metadata survives a round trip.
    """

    id: str
    image_ref: str
    modality: ImagingModality
    task: TaskKind
    question: str
    reference_answer: str
    anatomy: str | None = None
    disease_labels: tuple[str, ...] = ()
    options: tuple[tuple[str, str], ...] | None = None
    source: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict)

    def option_letters(self) -> tuple[str, ...]:
        return tuple(letter for letter, _ in (self.options or ()))


@dataclass(frozen=True)
class PredictionRecord:
    """A model's free-form response to one benchmark item."""

    record_id: str
    model_id: str
    output_text: str


@dataclass(frozen=True)
class Violation:
    """One record-level rule violation; ``code`` is stable, ``message`` human-readable."""

    code: str
    message: str


def validate_record(record: VqaRecord) -> list[Violation]:
    """Check every per-record invariant; returns an empty list for a valid record."""
    violations: list[Violation] = []
    if not record.id.strip():
        violations.append(Violation("empty-id", "record id must be non-empty"))
    if not record.question.strip():
        violations.append(Violation("empty-question", "question must be non-empty"))
    if not record.reference_answer.strip():
        violations.append(Violation("empty-reference", "reference answer must be non-empty"))
    if record.task is TaskKind.CLOSED_QA:
        if not record.options:
            violations.append(
                Violation("options-required", "options required for ClosedQA")
            )
        else:
            letters = record.option_letters()
            expected = tuple(OPTION_LETTERS[: len(letters)])
            if len(letters) > len(OPTION_LETTERS) or letters != expected:
                violations.append(
                    Violation(
                        "bad-option-letters",
                        "option letters must be uppercase A-Z in order",
                    )
                )
            if any(not text.strip() for _, text in record.options):
                violations.append(
                    Violation("empty-option-text", "option text must be non-empty")
                )
            if record.reference_answer not in letters:
                violations.append(
                    Violation(
                        "answer-not-in-options",
                        f"answer {record.reference_answer!r} not among options",
                    )
                )
    elif record.options is not None:
        violations.append(
            Violation("options-forbidden", "options only allowed for ClosedQA")
        )
    return violations


class ManifestError(ValueError):
    """Raised when a manifest or prediction file fails to parse or validate.

    ``problems`` holds one ``(line_number, description)`` pair per issue;
    line numbers are 1-based.
    """

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems)
        super().__init__(f"invalid manifest: {lines}")


@dataclass(frozen=True)
class DatasetManifest:
    """A validated set of benchmark records plus derived (task, modality) counts."""

    records: tuple[VqaRecord, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise ValueError(f"duplicate record id: {record.id!r}")
            seen.add(record.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[VqaRecord]:
        return iter(self.records)

    def by_id(self) -> dict[str, VqaRecord]:
        return {record.id: record for record in self.records}

    def counts_by(self) -> dict[tuple[TaskKind, ImagingModality], int]:
        counts: dict[tuple[TaskKind, ImagingModality], int] = {}
        for record in self.records:
            key = (record.task, record.modality)
            counts[key] = counts.get(key, 0) + 1
        return counts


_KNOWN_FIELDS = {
    "id",
    "image_ref",
    "modality",
    "anatomy",
    "disease_labels",
    "task",
    "question",
    "options",
    "reference_answer",
    "source",
}


def _record_from_dict(obj: Mapping[str, Any]) -> VqaRecord:
    for required in ("id", "image_ref", "modality", "task", "question", "reference_answer"):
        if required not in obj:
            raise ValueError(f"missing field {required!r}")
    options_raw = obj.get("options")
    options: tuple[tuple[str, str], ...] | None = None
    if options_raw is not None:
        if not isinstance(options_raw, list):
            raise ValueError("options must be a list of [letter, text] pairs")
        pairs = []
        for entry in options_raw:
            if not (isinstance(entry, (list, tuple)) and len(entry) == 2):
                raise ValueError("options must be a list of [letter, text] pairs")
            pairs.append((str(entry[0]), str(entry[1])))
        options = tuple(pairs)
    labels_raw = obj.get("disease_labels") or []
    if not isinstance(labels_raw, list):
        raise ValueError("disease_labels must be a list of strings")
    extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}
    return VqaRecord(
        id=str(obj["id"]),
        image_ref=str(obj["image_ref"]),
        modality=ImagingModality.parse(str(obj["modality"])),
        task=TaskKind.parse(str(obj["task"])),
        question=str(obj["question"]),
        reference_answer=str(obj["reference_answer"]),
        anatomy=None if obj.get("anatomy") is None else str(obj["anatomy"]),
        disease_labels=tuple(str(x) for x in labels_raw),
        options=options,
        source=str(obj.get("source", "")),
        extra=extra,
    )


def record_to_dict(record: VqaRecord) -> dict[str, Any]:
    """Serialize a record to its JSONL dict form (inverse of parsing)."""
    out: dict[str, Any] = {
        "id": record.id,
        "image_ref": record.image_ref,
        "modality": record.modality.value,
        "task": record.task.value,
        "question": record.question,
        "reference_answer": record.reference_answer,
    }
    if record.anatomy is not None:
        out["anatomy"] = record.anatomy
    if record.disease_labels:
        out["disease_labels"] = list(record.disease_labels)
    if record.options is not None:
        out["options"] = [[letter, text] for letter, text in record.options]
    if record.source:
        out["source"] = record.source
    out.update(record.extra)
    return out


def parse_manifest(raw: bytes | str | Iterable[str]) -> DatasetManifest:
    """Parse a JSONL manifest, validating every record.

    All problems are collected and reported together with their 1-based line
    numbers. Rejects exactly the records :func:`validate_record` rejects.
    """
    problems: list[tuple[int, str]] = []
    records: list[VqaRecord] = []
    seen_ids: dict[str, int] = {}
    for lineno, line in enumerate(_iter_lines(raw), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((lineno, f"malformed JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            problems.append((lineno, "line is not a JSON object"))
            continue
        try:
            record = _record_from_dict(obj)
        except ValueError as exc:
            problems.append((lineno, str(exc)))
            continue
        for violation in validate_record(record):
            problems.append((lineno, violation.message))
        if record.id in seen_ids:
            problems.append(
                (lineno, f"duplicate id {record.id!r} (first seen on line {seen_ids[record.id]})")
            )
        else:
            seen_ids[record.id] = lineno
            records.append(record)
    if problems:
        raise ManifestError(problems)
    return DatasetManifest(records=tuple(records))


def parse_predictions(raw: bytes | str | Iterable[str]) -> list[PredictionRecord]:
    """Parse a JSONL prediction file (record_id, model_id, output_text per line)."""
    problems: list[tuple[int, str]] = []
    predictions: list[PredictionRecord] = []
    for lineno, line in enumerate(_iter_lines(raw), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((lineno, f"malformed JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            problems.append((lineno, "line is not a JSON object"))
            continue
        missing = [k for k in ("record_id", "model_id", "output_text") if k not in obj]
        if missing:
            problems.append((lineno, f"missing field {missing[0]!r}"))
            continue
        predictions.append(
            PredictionRecord(
                record_id=str(obj["record_id"]),
                model_id=str(obj["model_id"]),
                output_text=str(obj["output_text"]),
            )
        )
    if problems:
        raise ManifestError(problems)
    return predictions


def dump_manifest(manifest: DatasetManifest) -> str:
    """Serialize a manifest back to JSONL text (one record per line)."""
    lines = [json.dumps(record_to_dict(r), ensure_ascii=False) for r in manifest.records]
    return "\n".join(lines) + ("\n" if lines else "")


def _iter_lines(raw: bytes | str | Iterable[str]) -> Iterator[str]:
    if isinstance(raw, bytes):
        yield from raw.decode("utf-8").splitlines()
    elif isinstance(raw, str):
        yield from raw.splitlines()
    else:
        for line in raw:
            yield line.rstrip("\n")


def ceil_fraction(rate: float, n: int) -> int:
    """⌈rate × n⌉ with guard for float fuzz on exact multiples."""
    scaled = rate * n
    nearest = round(scaled)
    if math.isclose(scaled, nearest, rel_tol=1e-9, abs_tol=1e-9):
        return int(nearest)
    return math.ceil(scaled)
