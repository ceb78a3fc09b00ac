"""Turns per-record results into summary tables, grade distributions, and agreement stats."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .records import DatasetManifest
from .reportscore import Grade, ReportScore

__all__ = [
    "AggregationError",
    "RecordResult",
    "MetricTable",
    "build_table",
    "aggregate",
    "GradeDistribution",
    "grade_distribution",
    "AgreementStats",
    "agreement",
    "DIMENSION_GROUPS",
    "round_display",
]


class AggregationError(ValueError):
    pass


def round_display(value: float, places: int = 2) -> float:
    """Half-up rounding used for displayed cells; internal values stay full precision."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class RecordResult:
    """Metric values for one (record, model) pair."""

    record_id: str
    model_id: str
    values: Mapping[str, float]


Column = tuple[str, str]  # (group label, metric name)


@dataclass(frozen=True)
class MetricTable:
    """Model rows x (group, metric) columns, with a per-row average column.

    The average is the unweighted mean over the declared ``avg_columns``
    subset, computed from unrounded cells; rounding happens only at render
    time.
    """

    rows: tuple[str, ...]
    columns: tuple[Column, ...]
    cells: Mapping[tuple[str, Column], float]
    avg_columns: tuple[Column, ...] = ()
    title: str = ""

    def cell(self, row: str, column: Column) -> float | None:
        return self.cells.get((row, column))

    def row_average(self, row: str) -> float:
        if not self.avg_columns:
            raise AggregationError("table has no declared average columns")
        values = [self.cells[(row, col)] for col in self.avg_columns if (row, col) in self.cells]
        if not values:
            raise AggregationError(f"row {row!r} has no values in the average columns")
        return sum(values) / len(values)

    def _column_header(self, column: Column) -> str:
        group, metric = column
        return f"{group}:{metric}" if metric else group

    def to_csv(self) -> str:
        headers = ["model"] + [self._column_header(c) for c in self.columns]
        if self.avg_columns:
            headers.append("avg")
        lines = [",".join(headers)]
        for row in self.rows:
            cells = [row]
            for column in self.columns:
                value = self.cell(row, column)
                cells.append("" if value is None else f"{round_display(value):.2f}")
            if self.avg_columns:
                cells.append(f"{round_display(self.row_average(row)):.2f}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        headers = ["Model"] + [self._column_header(c) for c in self.columns]
        if self.avg_columns:
            headers.append("Avg")
        lines = [
            "| " + " | ".join(headers) + " |",
            "|" + "|".join("---" for _ in headers) + "|",
        ]
        for row in self.rows:
            cells = [row]
            for column in self.columns:
                value = self.cell(row, column)
                cells.append("-" if value is None else f"{round_display(value):.2f}")
            if self.avg_columns:
                cells.append(f"{round_display(self.row_average(row)):.2f}")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def build_table(
    rows: Sequence[str],
    columns: Sequence[Column],
    cells: Mapping[tuple[str, Column], float],
    avg_columns: Sequence[Column] | None = None,
    title: str = "",
) -> MetricTable:
    """Assemble a table from precomputed cells; by default every column feeds the average."""
    cols = tuple(columns)
    return MetricTable(
        rows=tuple(rows),
        columns=cols,
        cells=dict(cells),
        avg_columns=cols if avg_columns is None else tuple(avg_columns),
        title=title,
    )


def aggregate(
    results: Iterable[RecordResult],
    manifest: DatasetManifest,
    group_labels: Mapping[str, str] | None = None,
    avg_metric: str | None = None,
    title: str = "",
) -> MetricTable:
    """Macro-average per-record results into a (model x group x metric) table.

    Records group by modality; ``group_labels`` may merge modalities into
    shared table columns. ``avg_metric`` restricts the average column to one
    metric; by default all columns are averaged (sensible for single-metric
    tables).
    """
    by_id = manifest.by_id()
    sums: dict[tuple[str, Column], float] = {}
    counts: dict[tuple[str, Column], int] = {}
    rows: list[str] = []
    columns: list[Column] = []
    for result in results:
        record = by_id.get(result.record_id)
        if record is None:
            raise AggregationError(f"result references unknown record id {result.record_id!r}")
        group = record.modality.value
        if group_labels:
            group = group_labels.get(group, group)
        if result.model_id not in rows:
            rows.append(result.model_id)
        for metric, value in result.values.items():
            column = (group, metric)
            if column not in columns:
                columns.append(column)
            key = (result.model_id, column)
            sums[key] = sums.get(key, 0.0) + value
            counts[key] = counts.get(key, 0) + 1
    cells = {key: sums[key] / counts[key] for key in sums}
    columns.sort()
    if avg_metric is None:
        avg_columns = tuple(columns)
    else:
        avg_columns = tuple(c for c in columns if c[1] == avg_metric)
    return MetricTable(
        rows=tuple(rows),
        columns=tuple(columns),
        cells=cells,
        avg_columns=avg_columns,
        title=title,
    )


@dataclass(frozen=True)
class GradeDistribution:
    """Grade-band counts per (model, group); counts always sum to reports scored."""

    counts: Mapping[tuple[str, str], Mapping[Grade, int]]

    def total(self) -> int:
        return sum(sum(bands.values()) for bands in self.counts.values())

    def to_json(self) -> str:
        payload = {
            f"{model}/{group}": {grade.value: n for grade, n in sorted(bands.items(), key=lambda kv: kv[0].value)}
            for (model, group), bands in sorted(self.counts.items())
        }
        return json.dumps(payload, indent=2)


def grade_distribution(
    scored: Iterable[tuple[str, str, ReportScore]],
) -> GradeDistribution:
    """Count grade bands over (model_id, group, score) triples."""
    counts: dict[tuple[str, str], dict[Grade, int]] = {}
    for model_id, group, score in scored:
        bands = counts.setdefault((model_id, group), {grade: 0 for grade in Grade})
        bands[score.grade] += 1
    return GradeDistribution(counts=counts)


# Criterion-to-dimension grouping used for judge/human agreement reporting.
# This mapping is an interpretation declared here (and overridable via
# config) rather than a fixed rule of the rubric.
DIMENSION_GROUPS: Mapping[str, tuple[str, ...]] = {
    "accuracy": ("A", "B", "C", "I"),
    "completeness": ("D", "E"),
    "structure": ("F", "H"),
    "clinical_practicability": ("G",),
}


@dataclass(frozen=True)
class AgreementStats:
    """Judge-versus-human comparison: dimension deductions, score correlation, preferences."""

    judge_dimension_means: Mapping[str, float]
    human_dimension_means: Mapping[str, float]
    score_correlation: float
    preference_counts: Mapping[str, int] = field(default_factory=dict)

    def ranked_preferences(self) -> list[tuple[str, int]]:
        return sorted(self.preference_counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "judge_dimension_means": dict(sorted(self.judge_dimension_means.items())),
                "human_dimension_means": dict(sorted(self.human_dimension_means.items())),
                "score_correlation": self.score_correlation,
                "preference_counts": dict(sorted(self.preference_counts.items())),
            },
            indent=2,
        )


def _dimension_means(
    scores: Sequence[ReportScore], groups: Mapping[str, tuple[str, ...]]
) -> dict[str, float]:
    means: dict[str, float] = {}
    for dimension, letters in groups.items():
        total = sum(
            sum(score.deductions.get(letter, 0.0) for letter in letters) for score in scores
        )
        means[dimension] = total / len(scores)
    return means


def agreement(
    judge_scores: Mapping[str, ReportScore],
    human_scores: Mapping[str, ReportScore],
    rankings: Iterable[Sequence[str]] = (),
    dimension_groups: Mapping[str, tuple[str, ...]] | None = None,
) -> AgreementStats:
    """Compare judge and human scores paired by record id, plus rank-1 preference tallies."""
    if set(judge_scores) != set(human_scores):
        unpaired = sorted(set(judge_scores) ^ set(human_scores))
        raise AggregationError(f"unpaired record ids: {unpaired}")
    ids = sorted(judge_scores)
    if len(ids) < 2:
        raise AggregationError("correlation requires at least 2 paired scores")
    groups = dimension_groups or DIMENSION_GROUPS
    judge_list = [judge_scores[i] for i in ids]
    human_list = [human_scores[i] for i in ids]
    judge_totals = [s.score for s in judge_list]
    human_totals = [s.score for s in human_list]
    try:
        correlation = statistics.correlation(judge_totals, human_totals)
    except statistics.StatisticsError as exc:
        raise AggregationError(f"correlation undefined: {exc}") from exc
    preference: dict[str, int] = {}
    for ranking in rankings:
        if not ranking:
            continue
        winner = ranking[0]
        preference[winner] = preference.get(winner, 0) + 1
    return AgreementStats(
        judge_dimension_means=_dimension_means(judge_list, groups),
        human_dimension_means=_dimension_means(human_list, groups),
        score_correlation=correlation,
        preference_counts=preference,
    )
