"""Per-record evaluation pipelines wiring metrics and judges over a manifest."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .aggregate import RecordResult
from .metrics import closed_accuracy, open_qa_scores
from .records import DatasetManifest, PredictionRecord, TaskKind, VqaRecord

__all__ = ["EvaluationOutcome", "evaluate_predictions"]


@dataclass
class EvaluationOutcome:
    """Per-record results plus any per-record errors (record_id, message)."""

    results: list[RecordResult]
    errors: list[tuple[str, str]]

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"record_id": r.record_id, "model_id": r.model_id, **dict(r.values)},
                ensure_ascii=False,
            )
            for r in self.results
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def _score_one(record: VqaRecord, prediction: PredictionRecord) -> dict[str, float]:
    if record.task is TaskKind.CLOSED_QA:
        return {"accuracy": 100.0 if closed_accuracy(prediction.output_text, record) else 0.0}
    return open_qa_scores(prediction.output_text, record.reference_answer)


def evaluate_predictions(
    manifest: DatasetManifest,
    predictions: Sequence[PredictionRecord],
    tasks: Iterable[TaskKind] | None = None,
    jobs: int = 1,
) -> EvaluationOutcome:
    """Score every prediction whose record matches the task filter.

    Unresolvable record ids and per-record metric failures are collected,
    not fatal; scoring runs in parallel when jobs > 1.
    """
    by_id = manifest.by_id()
    wanted = set(tasks) if tasks is not None else set(TaskKind)
    work: list[tuple[VqaRecord, PredictionRecord]] = []
    errors: list[tuple[str, str]] = []
    for prediction in predictions:
        record = by_id.get(prediction.record_id)
        if record is None:
            errors.append((prediction.record_id, "unknown record id"))
            continue
        if record.task in wanted:
            work.append((record, prediction))

    results: list[RecordResult | None] = [None] * len(work)

    def run(index: int) -> None:
        record, prediction = work[index]
        try:
            results[index] = RecordResult(
                record_id=record.id,
                model_id=prediction.model_id,
                values=_score_one(record, prediction),
            )
        except Exception as exc:  # noqa: BLE001 - per-record errors are data
            errors.append((record.id, str(exc)))

    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            list(executor.map(run, range(len(work))))
    else:
        for index in range(len(work)):
            run(index)
    return EvaluationOutcome(
        results=[r for r in results if r is not None], errors=errors
    )
