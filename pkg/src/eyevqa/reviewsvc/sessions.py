"""Blinded ranking sessions, review decisions, and replayable service state.

All mutable state is a pure function of (configuration, event log): replaying
the log against the same sessions and batches reconstructs the service
exactly. Model identities live only in the server-side permutation; client
views expose blind labels.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..engine.sampling import ReviewBatch
from .events import EventLog, ReviewEvent

__all__ = [
    "ReviewServiceError",
    "RankingItem",
    "RankingSession",
    "create_ranking_session",
    "save_sessions",
    "load_sessions",
    "ReviewService",
]


class ReviewServiceError(ValueError):
    """Service-level rule violation; ``code`` maps onto an HTTP status."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class RankingItem:
    """One session item: the question context plus blinded candidate reports."""

    item_id: str
    image_ref: str
    question: str
    candidates: tuple[tuple[str, str], ...]  # (blind label, report text)
    label_to_model: Mapping[str, str]  # server-side only

    def blind_labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.candidates)

    def client_view(self) -> dict:
        """The payload a reviewer may see; never includes model identifiers."""
        return {
            "item_id": self.item_id,
            "image_url": self.image_ref,
            "question": self.question,
            "candidates": [
                {"label": label, "report": report} for label, report in self.candidates
            ],
        }


@dataclass(frozen=True)
class RankingSession:
    """A set of items whose candidate order hides the producing models."""

    session_id: str
    items: Mapping[str, RankingItem]
    item_order: tuple[str, ...]
    seed: int

    def client_view(self) -> dict:
        return {
            "session_id": self.session_id,
            "item_ids": list(self.item_order),
            "candidate_count": len(next(iter(self.items.values())).candidates)
            if self.items
            else 0,
        }


def create_ranking_session(
    session_id: str,
    items: Sequence[Mapping[str, str]],
    model_outputs: Mapping[str, Mapping[str, str]],
    seed: int,
) -> RankingSession:
    """Blind each item's model outputs behind a seed-derived label permutation.

    ``items`` entries need ``id``, ``image_ref`` and ``question`` keys;
    ``model_outputs`` maps model_id -> item_id -> report text and must cover
    every (model, item) pair.
    """
    models = sorted(model_outputs)
    if not models:
        raise ReviewServiceError("bad-request", "at least one model output set required")
    session_items: dict[str, RankingItem] = {}
    order: list[str] = []
    for item in items:
        item_id = str(item["id"])
        for model in models:
            if item_id not in model_outputs[model]:
                raise ReviewServiceError(
                    "missing-output", f"model {model!r} has no output for item {item_id!r}"
                )
        permuted = list(models)
        random.Random(f"{seed}:{item_id}").shuffle(permuted)
        labels = tuple(f"Candidate {i}" for i in range(1, len(models) + 1))
        candidates = tuple(
            (label, model_outputs[model][item_id]) for label, model in zip(labels, permuted)
        )
        session_items[item_id] = RankingItem(
            item_id=item_id,
            image_ref=str(item.get("image_ref", "")),
            question=str(item.get("question", "")),
            candidates=candidates,
            label_to_model=dict(zip(labels, permuted)),
        )
        order.append(item_id)
    return RankingSession(
        session_id=session_id, items=session_items, item_order=tuple(order), seed=seed
    )


def save_sessions(sessions: Iterable[RankingSession], path: str | Path) -> None:
    payload = []
    for session in sessions:
        payload.append(
            {
                "session_id": session.session_id,
                "seed": session.seed,
                "items": [
                    {
                        "item_id": item.item_id,
                        "image_ref": item.image_ref,
                        "question": item.question,
                        "candidates": [[label, text] for label, text in item.candidates],
                        "label_to_model": dict(item.label_to_model),
                    }
                    for item in (session.items[i] for i in session.item_order)
                ],
            }
        )
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")


def load_sessions(path: str | Path) -> dict[str, RankingSession]:
    sessions: dict[str, RankingSession] = {}
    for entry in json.loads(Path(path).read_text(encoding="utf-8")):
        items: dict[str, RankingItem] = {}
        order: list[str] = []
        for item in entry["items"]:
            ranking_item = RankingItem(
                item_id=str(item["item_id"]),
                image_ref=str(item["image_ref"]),
                question=str(item["question"]),
                candidates=tuple((str(l), str(t)) for l, t in item["candidates"]),
                label_to_model={str(k): str(v) for k, v in item["label_to_model"].items()},
            )
            items[ranking_item.item_id] = ranking_item
            order.append(ranking_item.item_id)
        session = RankingSession(
            session_id=str(entry["session_id"]),
            items=items,
            item_order=tuple(order),
            seed=int(entry["seed"]),
        )
        sessions[session.session_id] = session
    return sessions


@dataclass
class _ItemDecisions:
    by_reviewer: dict[str, ReviewEvent] = field(default_factory=dict)


class ReviewService:
    """Holds sessions and batches, validates writes, and derives state from the log."""

    def __init__(
        self,
        sessions: Mapping[str, RankingSession] | None = None,
        batches: Mapping[str, ReviewBatch] | None = None,
        log: EventLog | None = None,
        batch_items: Mapping[str, Mapping[str, str]] | None = None,
    ):
        self.sessions = dict(sessions or {})
        self.batches = dict(batches or {})
        # Display content (question, answer, image) for batch items, keyed by id.
        self.batch_items = {k: dict(v) for k, v in (batch_items or {}).items()}
        self.log = log if log is not None else EventLog()
        # Derived state, rebuilt from the log so restarts lose nothing.
        self._rankings: dict[tuple[str, str, str], tuple[str, ...]] = {}
        self._decisions: dict[tuple[str, str], _ItemDecisions] = {}
        for event in self.log.events():
            self._apply(event)

    # -- write paths ------------------------------------------------------

    def submit_ranking(
        self, session_id: str, item_id: str, reviewer_id: str, ordering: Sequence[str]
    ) -> ReviewEvent:
        session = self.sessions.get(session_id)
        if session is None:
            raise ReviewServiceError("not-found", f"unknown session {session_id!r}")
        item = session.items.get(item_id)
        if item is None:
            raise ReviewServiceError("not-found", f"unknown item {item_id!r}")
        if sorted(ordering) != sorted(item.blind_labels()):
            raise ReviewServiceError(
                "not-a-permutation",
                "not a permutation: ranking must order each blind label exactly once",
            )
        if (session_id, item_id, reviewer_id) in self._rankings:
            raise ReviewServiceError(
                "already-submitted", "reviewer already ranked this item"
            )
        event = self.log.append(
            session_id, item_id, reviewer_id, "ranking", tuple(ordering)
        )
        self._apply(event)
        return event

    def submit_decision(
        self,
        batch_id: str,
        item_id: str,
        reviewer_id: str,
        kind: str,
        payload: str | None = None,
    ) -> ReviewEvent:
        batch = self.batches.get(batch_id)
        if batch is None:
            raise ReviewServiceError("not-found", f"unknown batch {batch_id!r}")
        if item_id not in batch.assignments:
            raise ReviewServiceError("not-found", f"item {item_id!r} not in batch")
        if not batch.is_assigned(item_id, reviewer_id):
            raise ReviewServiceError(
                "not-assigned", f"reviewer {reviewer_id!r} is not assigned to {item_id!r}"
            )
        if kind not in ("approve", "reject", "edit"):
            raise ReviewServiceError("bad-request", f"invalid decision kind {kind!r}")
        if kind == "edit" and not (payload or "").strip():
            raise ReviewServiceError("bad-request", "edit decisions require replacement text")
        existing = self._decisions.get((batch_id, item_id))
        if existing is not None and reviewer_id in existing.by_reviewer:
            raise ReviewServiceError("already-submitted", "reviewer already decided this item")
        event = self.log.append(batch_id, item_id, reviewer_id, kind, payload)
        self._apply(event)
        return event

    def _apply(self, event: ReviewEvent) -> None:
        if event.kind == "ranking":
            payload = event.payload if isinstance(event.payload, tuple) else ()
            self._rankings[(event.session_id, event.item_id, event.reviewer_id)] = payload
        else:
            slot = self._decisions.setdefault(
                (event.session_id, event.item_id), _ItemDecisions()
            )
            slot.by_reviewer.setdefault(event.reviewer_id, event)

    # -- read paths -------------------------------------------------------

    def rankings_for(self, session_id: str) -> dict[tuple[str, str], tuple[str, ...]]:
        return {
            (item_id, reviewer): ordering
            for (sid, item_id, reviewer), ordering in self._rankings.items()
            if sid == session_id
        }

    def preference_tally(self, session_id: str) -> dict[str, int]:
        """De-blind rank-1 picks; counts sum to the number of rankings submitted."""
        session = self.sessions.get(session_id)
        if session is None:
            raise ReviewServiceError("not-found", f"unknown session {session_id!r}")
        tally: dict[str, int] = {}
        for (item_id, _reviewer), ordering in self.rankings_for(session_id).items():
            if not ordering:
                continue
            model = session.items[item_id].label_to_model[ordering[0]]
            tally[model] = tally.get(model, 0) + 1
        return tally

    def item_status(self, batch_id: str, item_id: str) -> str:
        """pending | accepted | rejected, derived purely from logged decisions.

        Any reject rejects the item. It is accepted once both assigned
        reviewers have decided without rejecting; an edit replaces the answer
        and counts as approval once the other reviewer confirms.
        """
        batch = self.batches.get(batch_id)
        if batch is None or item_id not in batch.assignments:
            raise ReviewServiceError("not-found", f"unknown item {item_id!r}")
        slot = self._decisions.get((batch_id, item_id))
        if slot is None:
            return "pending"
        decided = {
            reviewer: event
            for reviewer, event in slot.by_reviewer.items()
            if batch.is_assigned(item_id, reviewer)
        }
        if any(event.kind == "reject" for event in decided.values()):
            return "rejected"
        if set(decided) == set(batch.assignments[item_id]):
            return "accepted"
        return "pending"

    def accepted_text(self, batch_id: str, item_id: str) -> str | None:
        """Replacement answer for accepted items that went through an edit."""
        if self.item_status(batch_id, item_id) != "accepted":
            return None
        slot = self._decisions[(batch_id, item_id)]
        edits = sorted(
            (event for event in slot.by_reviewer.values() if event.kind == "edit"),
            key=lambda event: event.event_id,
        )
        if not edits:
            return None
        payload = edits[-1].payload
        return payload if isinstance(payload, str) else None

    def batch_statuses(self, batch_id: str) -> dict[str, str]:
        batch = self.batches.get(batch_id)
        if batch is None:
            raise ReviewServiceError("not-found", f"unknown batch {batch_id!r}")
        return {item_id: self.item_status(batch_id, item_id) for item_id in batch.sampled_ids}

    def state_snapshot(self) -> dict:
        """Comparable snapshot of all derived state (for replay checks)."""
        return {
            "rankings": {
                "|".join(key): list(value) for key, value in sorted(self._rankings.items())
            },
            "decisions": {
                "|".join(key): {
                    reviewer: [event.kind, event.payload]
                    for reviewer, event in sorted(slot.by_reviewer.items())
                }
                for key, slot in sorted(self._decisions.items())
            },
            "statuses": {
                batch_id: self.batch_statuses(batch_id) for batch_id in sorted(self.batches)
            },
        }
