"""Blinded review and ranking service with an append-only event log."""

from .app import AuthConfig, create_app
from .events import EVENT_KINDS, EventLog, ReviewEvent
from .sessions import (
    RankingItem,
    RankingSession,
    ReviewService,
    ReviewServiceError,
    create_ranking_session,
    load_sessions,
    save_sessions,
)

__all__ = [
    "EVENT_KINDS",
    "AuthConfig",
    "EventLog",
    "RankingItem",
    "RankingSession",
    "ReviewEvent",
    "ReviewService",
    "ReviewServiceError",
    "create_app",
    "create_ranking_session",
    "load_sessions",
    "save_sessions",
]
