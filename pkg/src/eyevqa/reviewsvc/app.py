"""HTTP JSON API over the review service.

Reviewers authenticate with static bearer tokens; the tally endpoint needs
an admin token. Every payload sent to a client is built from blinded views,
so model identifiers never leave the server.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .sessions import ReviewService, ReviewServiceError

__all__ = ["create_app", "AuthConfig"]

_ERROR_STATUS = {
    "not-found": 404,
    "not-a-permutation": 422,
    "already-submitted": 409,
    "not-assigned": 403,
    "missing-output": 422,
    "bad-request": 400,
}


class AuthConfig:
    """Static bearer tokens: token -> reviewer id, plus privileged admin tokens."""

    def __init__(self, reviewer_tokens: Mapping[str, str], admin_tokens: set[str] | None = None):
        self.reviewer_tokens = dict(reviewer_tokens)
        self.admin_tokens = set(admin_tokens or ())


class RankingBody(BaseModel):
    ranking: list[str]


class DecisionBody(BaseModel):
    kind: str
    payload: str | None = None


def _http_error(exc: ReviewServiceError) -> HTTPException:
    return HTTPException(status_code=_ERROR_STATUS.get(exc.code, 400), detail=str(exc))


def create_app(
    service: ReviewService,
    auth: AuthConfig,
    image_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def reviewer_from(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        reviewer = auth.reviewer_tokens.get(token)
        if reviewer is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return reviewer

    def admin_from(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        if token not in auth.admin_tokens:
            raise HTTPException(status_code=403, detail="admin token required")
        return token

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, reviewer: str = Depends(reviewer_from)) -> dict:
        session = service.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        view = session.client_view()
        submitted = [
            item_id
            for (item_id, who) in service.rankings_for(session_id)
            if who == reviewer
        ]
        view["submitted_item_ids"] = sorted(submitted)
        return view

    @app.get("/sessions/{session_id}/items/{item_id}")
    def get_item(
        session_id: str, item_id: str, reviewer: str = Depends(reviewer_from)
    ) -> dict:
        session = service.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        item = session.items.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown item")
        view = item.client_view()
        view["already_submitted"] = (session_id, item_id, reviewer) in {
            (session_id, iid, who) for (iid, who) in service.rankings_for(session_id)
        }
        return view

    @app.post("/sessions/{session_id}/items/{item_id}/ranking")
    def post_ranking(
        session_id: str,
        item_id: str,
        body: RankingBody,
        reviewer: str = Depends(reviewer_from),
    ) -> dict:
        try:
            event = service.submit_ranking(session_id, item_id, reviewer, body.ranking)
        except ReviewServiceError as exc:
            raise _http_error(exc) from exc
        return {"event_id": event.event_id, "status": "recorded"}

    @app.get("/batches/{batch_id}/queue")
    def get_queue(batch_id: str, reviewer: str = Depends(reviewer_from)) -> dict:
        batch = service.batches.get(batch_id)
        if batch is None:
            raise HTTPException(status_code=404, detail="unknown batch")
        items = []
        for item_id in batch.sampled_ids:
            if not batch.is_assigned(item_id, reviewer):
                continue
            entry = {"item_id": item_id, "status": service.item_status(batch_id, item_id)}
            entry.update(service.batch_items.get(item_id, {}))
            items.append(entry)
        return {"batch_id": batch_id, "reviewer_id": reviewer, "items": items}

    @app.post("/batches/{batch_id}/items/{item_id}/decision")
    def post_decision(
        batch_id: str,
        item_id: str,
        body: DecisionBody,
        reviewer: str = Depends(reviewer_from),
    ) -> dict:
        try:
            event = service.submit_decision(
                batch_id, item_id, reviewer, body.kind, body.payload
            )
        except ReviewServiceError as exc:
            raise _http_error(exc) from exc
        return {
            "event_id": event.event_id,
            "status": service.item_status(batch_id, item_id),
        }

    @app.get("/sessions/{session_id}/tally")
    def get_tally(session_id: str, _admin: str = Depends(admin_from)) -> dict:
        try:
            tally = service.preference_tally(session_id)
        except ReviewServiceError as exc:
            raise _http_error(exc) from exc
        return {"session_id": session_id, "rank1_counts": tally}

    if image_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/images", StaticFiles(directory=str(image_dir)), name="images")

    return app
