"""Quality-review sampling: pick a fraction of the dataset and assign reviewer pairs."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..records import DatasetManifest, ceil_fraction

__all__ = ["ReviewBatch", "sample_for_review", "dump_review_batch", "load_review_batch"]

DEFAULT_REVIEW_RATE = 0.10
REVIEW_ROUNDS = 2


@dataclass(frozen=True)
class ReviewBatch:
    """A sampled set of record ids, each assigned to two distinct reviewers."""

    sampled_ids: tuple[str, ...]
    assignments: Mapping[str, tuple[str, str]]
    seed: int
    round_count: int = REVIEW_ROUNDS

    def reviewer_load(self) -> dict[str, int]:
        load: dict[str, int] = {}
        for pair in self.assignments.values():
            for reviewer in pair:
                load[reviewer] = load.get(reviewer, 0) + 1
        return load

    def is_assigned(self, item_id: str, reviewer_id: str) -> bool:
        return reviewer_id in self.assignments.get(item_id, ())


def sample_for_review(
    manifest: DatasetManifest,
    reviewers: Sequence[str],
    rate: float = DEFAULT_REVIEW_RATE,
    seed: int = 0,
    stratify_by_modality: bool = False,
) -> ReviewBatch:
    """Sample ceil(rate x N) ids uniformly without replacement and assign reviewers.

    Each sampled id gets two distinct reviewers; loads stay balanced to
    within one item (round-robin over reviewers sorted by current load,
    ties broken by reviewer id). ``stratify_by_modality`` splits the sample
    proportionally across modalities instead of sampling the whole pool.
    """
    distinct = sorted(set(reviewers))
    if len(distinct) < 2:
        raise ValueError("at least 2 distinct reviewers required")
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must be in (0, 1]")

    ids = [record.id for record in manifest.records]
    target = min(ceil_fraction(rate, len(ids)), len(ids))
    rng = random.Random(seed)
    if stratify_by_modality:
        sampled = _stratified_sample(manifest, target, rng)
    else:
        sampled = rng.sample(ids, target)

    load = {reviewer: 0 for reviewer in distinct}
    assignments: dict[str, tuple[str, str]] = {}
    for item_id in sampled:
        first, second = sorted(load, key=lambda r: (load[r], r))[:2]
        assignments[item_id] = (first, second)
        load[first] += 1
        load[second] += 1
    return ReviewBatch(sampled_ids=tuple(sampled), assignments=assignments, seed=seed)


def _stratified_sample(
    manifest: DatasetManifest, target: int, rng: random.Random
) -> list[str]:
    groups: dict[str, list[str]] = {}
    for record in manifest.records:
        groups.setdefault(record.modality.value, []).append(record.id)
    # Proportional allocation, remainders to the largest fractional parts.
    total = len(manifest)
    quotas = {name: target * len(ids) / total for name, ids in groups.items()}
    counts = {name: int(q) for name, q in quotas.items()}
    remainder = target - sum(counts.values())
    for name in sorted(groups, key=lambda n: (quotas[n] - counts[n], n), reverse=True):
        if remainder <= 0:
            break
        if counts[name] < len(groups[name]):
            counts[name] += 1
            remainder -= 1
    sampled: list[str] = []
    for name in sorted(groups):
        sampled.extend(rng.sample(groups[name], min(counts[name], len(groups[name]))))
    return sampled


def dump_review_batch(batch: ReviewBatch, path: str | Path) -> None:
    """Export one JSONL line per (id, reviewer, round); round 1 is the first reviewer."""
    lines = []
    for item_id in batch.sampled_ids:
        for round_number, reviewer in enumerate(batch.assignments[item_id], start=1):
            lines.append(
                json.dumps(
                    {"id": item_id, "reviewer_id": reviewer, "round": round_number},
                    ensure_ascii=False,
                )
            )
    meta = json.dumps({"_meta": {"seed": batch.seed, "round_count": batch.round_count}})
    Path(path).write_text("\n".join([meta, *lines]) + "\n", encoding="utf-8")


def load_review_batch(path: str | Path) -> ReviewBatch:
    seed = 0
    round_count = REVIEW_ROUNDS
    order: list[str] = []
    partial: dict[str, dict[int, str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "_meta" in obj:
            seed = int(obj["_meta"].get("seed", 0))
            round_count = int(obj["_meta"].get("round_count", REVIEW_ROUNDS))
            continue
        item_id = str(obj["id"])
        if item_id not in partial:
            partial[item_id] = {}
            order.append(item_id)
        partial[item_id][int(obj["round"])] = str(obj["reviewer_id"])
    assignments: dict[str, tuple[str, str]] = {}
    for item_id in order:
        rounds = partial[item_id]
        if set(rounds) != {1, 2}:
            raise ValueError(f"item {item_id!r} must have exactly rounds 1 and 2")
        if rounds[1] == rounds[2]:
            raise ValueError(f"item {item_id!r} assigned the same reviewer twice")
        assignments[item_id] = (rounds[1], rounds[2])
    return ReviewBatch(
        sampled_ids=tuple(order), assignments=assignments, seed=seed, round_count=round_count
    )
