"""Benchmark construction and evaluation toolkit for multi-modal ophthalmic VQA."""

from .records import (
    DatasetManifest,
    ImagingModality,
    ManifestError,
    PredictionRecord,
    TaskKind,
    Violation,
    VqaRecord,
    dump_manifest,
    parse_manifest,
    parse_predictions,
    validate_record,
)
from .reportscore import (
    CriterionWeights,
    Grade,
    JudgeFindings,
    ReportScore,
    diagnosis_accuracy,
    grade_for,
    mean_score,
    score_report,
)

__version__ = "0.1.0"

__all__ = [
    "CriterionWeights",
    "DatasetManifest",
    "Grade",
    "ImagingModality",
    "JudgeFindings",
    "ManifestError",
    "PredictionRecord",
    "ReportScore",
    "TaskKind",
    "Violation",
    "VqaRecord",
    "diagnosis_accuracy",
    "dump_manifest",
    "grade_for",
    "mean_score",
    "parse_manifest",
    "parse_predictions",
    "score_report",
    "validate_record",
    "__version__",
]
