"""Weighted A-J criterion scoring for generated clinical reports.

A report starts at 100 points. Criteria A-D deduct weight x error-count,
E-H deduct their weight when unsatisfied, I deducts its weight when a
serious clinical error is present, and the total is floored at zero.
Criterion J (diagnosis correctness) never affects the score; it only feeds
the diagnosis-accuracy statistic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

__all__ = [
    "CriterionWeights",
    "JudgeFindings",
    "Grade",
    "ReportScore",
    "score_report",
    "diagnosis_accuracy",
    "mean_score",
    "grade_for",
]

COUNT_CRITERIA = ("A", "B", "C", "D")
BOOL_CRITERIA = ("E", "F", "G", "H")


@dataclass(frozen=True)
class CriterionWeights:
    """Points deducted per unit for criteria A-I; J is accuracy-only (no weight)."""

    a: float = 1.0
    b: float = 4.0
    c: float = 4.0
    d: float = 6.0
    e: float = 2.0
    f: float = 2.0
    g: float = 2.0
    h: float = 5.0
    i: float = 15.0

    def __post_init__(self) -> None:
        for letter in "abcdefghi":
            if getattr(self, letter) < 0:
                raise ValueError(f"weight {letter} must be >= 0")

    def as_vector(self) -> tuple[float, ...]:
        return tuple(getattr(self, letter) for letter in "abcdefghi")

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, float]) -> "CriterionWeights":
        known = {k.lower(): float(v) for k, v in overrides.items()}
        unknown = set(known) - set("abcdefghi")
        if unknown:
            raise ValueError(f"unknown criterion weights: {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class JudgeFindings:
    """A judge's raw verdict for one candidate report: error counts A-D plus flags E-J."""

    a_count: int
    b_count: int
    c_count: int
    d_count: int
    e_ok: bool
    f_ok: bool
    g_ok: bool
    h_ok: bool
    i_serious_error: bool
    j_diagnosis_correct: bool

    def __post_init__(self) -> None:
        for name in ("a_count", "b_count", "c_count", "d_count"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} must be an integer")
            if value < 0:
                raise ValueError(f"{name} must be >= 0")


FINDINGS_FIELDS = (
    "a_count",
    "b_count",
    "c_count",
    "d_count",
    "e_ok",
    "f_ok",
    "g_ok",
    "h_ok",
    "i_serious_error",
    "j_diagnosis_correct",
)


class Grade(enum.Enum):
    EXCELLENT = "Excellent"
    USABLE = "Usable"
    UNDER_REVIEW = "UnderReview"
    UNUSABLE = "Unusable"


def grade_for(score: float) -> Grade:
    """Band a score: [90,100] Excellent, [80,90) Usable, [60,80) UnderReview, else Unusable."""
    if score >= 90.0:
        return Grade.EXCELLENT
    if score >= 80.0:
        return Grade.USABLE
    if score >= 60.0:
        return Grade.UNDER_REVIEW
    return Grade.UNUSABLE


@dataclass(frozen=True)
class ReportScore:
    """Final 0-100 score with its grade band and the per-criterion deductions."""

    score: float
    grade: Grade
    deductions: Mapping[str, float] = field(default_factory=dict)


def score_report(findings: JudgeFindings, weights: CriterionWeights | None = None) -> ReportScore:
    """Apply the deduction arithmetic to one set of findings."""
    w = weights or CriterionWeights()
    deductions = {
        "A": w.a * findings.a_count,
        "B": w.b * findings.b_count,
        "C": w.c * findings.c_count,
        "D": w.d * findings.d_count,
        "E": 0.0 if findings.e_ok else w.e,
        "F": 0.0 if findings.f_ok else w.f,
        "G": 0.0 if findings.g_ok else w.g,
        "H": 0.0 if findings.h_ok else w.h,
        "I": w.i if findings.i_serious_error else 0.0,
    }
    score = max(0.0, 100.0 - sum(deductions.values()))
    return ReportScore(score=score, grade=grade_for(score), deductions=deductions)


def diagnosis_accuracy(findings: Iterable[JudgeFindings]) -> float:
    """Percentage of reports whose diagnosis was judged correct (criterion J)."""
    items = list(findings)
    if not items:
        raise ValueError("diagnosis_accuracy requires a non-empty findings list")
    return 100.0 * sum(f.j_diagnosis_correct for f in items) / len(items)


def mean_score(scores: Iterable[ReportScore]) -> float:
    """Arithmetic mean of report scores."""
    items = list(scores)
    if not items:
        raise ValueError("mean_score requires a non-empty score list")
    return sum(s.score for s in items) / len(items)
