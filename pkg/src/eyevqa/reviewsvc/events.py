"""Append-only review event log with JSONL persistence and replay."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

__all__ = ["ReviewEvent", "EventLog", "EVENT_KINDS"]

EVENT_KINDS = ("approve", "reject", "edit", "ranking")


@dataclass(frozen=True)
class ReviewEvent:
    """One immutable human decision. ``payload`` is an ordered blind-label
    list for rankings, edited text for edits, None otherwise."""

    event_id: int
    session_id: str
    item_id: str
    reviewer_id: str
    kind: str
    payload: tuple[str, ...] | str | None
    timestamp: float

    def to_dict(self) -> dict:
        payload: object = self.payload
        if isinstance(payload, tuple):
            payload = list(payload)
        return {
            "event_id": self.event_id,
            "session_id": self.session_id,
            "item_id": self.item_id,
            "reviewer_id": self.reviewer_id,
            "kind": self.kind,
            "payload": payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ReviewEvent":
        payload = obj.get("payload")
        if isinstance(payload, list):
            payload = tuple(str(x) for x in payload)
        return cls(
            event_id=int(obj["event_id"]),
            session_id=str(obj["session_id"]),
            item_id=str(obj["item_id"]),
            reviewer_id=str(obj["reviewer_id"]),
            kind=str(obj["kind"]),
            payload=payload,
            timestamp=float(obj.get("timestamp", 0.0)),
        )


class EventLog:
    """Strictly ordered append-only sequence of events.

    All writes go through :meth:`append` under a single lock, so at most one
    append is in flight; readers see a snapshot list. When a path is given
    every event is also written as one JSONL line.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._events: list[ReviewEvent] = []
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._events.append(ReviewEvent.from_dict(json.loads(line)))
            self._check_order()

    def _check_order(self) -> None:
        ids = [event.event_id for event in self._events]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise ValueError("event log ids must be strictly increasing")

    def append(
        self,
        session_id: str,
        item_id: str,
        reviewer_id: str,
        kind: str,
        payload: tuple[str, ...] | str | None = None,
    ) -> ReviewEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._lock:
            next_id = self._events[-1].event_id + 1 if self._events else 1
            event = ReviewEvent(
                event_id=next_id,
                session_id=session_id,
                item_id=item_id,
                reviewer_id=reviewer_id,
                kind=kind,
                payload=payload,
                timestamp=time.time(),
            )
            self._events.append(event)
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")
            return event

    def events(self) -> list[ReviewEvent]:
        with self._lock:
            return list(self._events)

    def __iter__(self) -> Iterator[ReviewEvent]:
        return iter(self.events())

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)
