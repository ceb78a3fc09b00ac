"""Review service rules: blinding, permutation checks, replay, HTTP surface."""

from __future__ import annotations

import json
import random

import pytest
from fastapi.testclient import TestClient

from eyevqa.engine import sample_for_review
from eyevqa.records import DatasetManifest, ImagingModality, TaskKind, VqaRecord
from eyevqa.reviewsvc import (
    AuthConfig,
    EventLog,
    ReviewService,
    ReviewServiceError,
    create_app,
    create_ranking_session,
    load_sessions,
    save_sessions,
)

MODELS = [f"model-{i}" for i in range(4)]


def make_session(item_count: int = 3, model_ids: list[str] | None = None, seed: int = 9):
    models = model_ids or MODELS
    items = [
        {"id": f"item-{i}", "image_ref": f"img/{i}.png", "question": f"Question {i}?"}
        for i in range(item_count)
    ]
    outputs = {
        model: {
            # Distinct per model but free of model identifiers, like real reports.
            f"item-{i}": f"Report variant {index} for item {i}."
            for i in range(item_count)
        }
        for index, model in enumerate(models)
    }
    return create_ranking_session("sess-1", items, outputs, seed=seed)


def make_batch_service() -> tuple[ReviewService, str]:
    records = tuple(
        VqaRecord(
            id=f"rec-{i}",
            image_ref=f"img/{i}.png",
            modality=ImagingModality.OCT,
            task=TaskKind.OPEN_QA,
            question="What is shown?",
            reference_answer="Edema.",
        )
        for i in range(20)
    )
    manifest = DatasetManifest(records=records)
    batch = sample_for_review(manifest, ["rev-a", "rev-b", "rev-c"], seed=3)
    service = ReviewService(batches={"batch-1": batch})
    return service, batch.sampled_ids[0]


class TestRankingSession:
    def test_candidate_lists_cover_all_models(self) -> None:
        session = make_session()
        for item in session.items.values():
            assert len(item.candidates) == len(MODELS)
            assert sorted(item.label_to_model.values()) == sorted(MODELS)

    def test_blind_labels_are_candidate_numbers(self) -> None:
        session = make_session()
        item = session.items["item-0"]
        assert item.blind_labels() == tuple(f"Candidate {i}" for i in range(1, 5))

    def test_deterministic_blinding(self) -> None:
        assert make_session(seed=5) == make_session(seed=5)
        assert make_session(seed=5) != make_session(seed=6)

    def test_single_model_identity_permutation(self) -> None:
        session = make_session(item_count=1, model_ids=["only-model"])
        item = session.items["item-0"]
        assert item.label_to_model == {"Candidate 1": "only-model"}

    def test_missing_output_rejected(self) -> None:
        items = [{"id": "item-0", "image_ref": "x", "question": "?"}]
        outputs = {"m1": {"item-0": "r"}, "m2": {}}
        with pytest.raises(ReviewServiceError, match="no output"):
            create_ranking_session("s", items, outputs, seed=1)

    def test_client_view_has_no_model_ids(self) -> None:
        session = make_session()
        for item in session.items.values():
            payload = json.dumps(item.client_view())
            for model in MODELS:
                assert model not in payload

    def test_save_load_round_trip(self, tmp_path) -> None:
        session = make_session()
        path = tmp_path / "sessions.json"
        save_sessions([session], path)
        loaded = load_sessions(path)
        assert loaded["sess-1"] == session


class TestRankingWrites:
    def test_valid_ranking_persists(self) -> None:
        session = make_session()
        service = ReviewService(sessions={"sess-1": session})
        labels = list(session.items["item-0"].blind_labels())
        event = service.submit_ranking("sess-1", "item-0", "doc-1", labels[::-1])
        assert event.event_id == 1
        assert service.rankings_for("sess-1")[("item-0", "doc-1")] == tuple(labels[::-1])

    def test_non_permutation_rejected(self) -> None:
        session = make_session()
        service = ReviewService(sessions={"sess-1": session})
        with pytest.raises(ReviewServiceError, match="permutation"):
            service.submit_ranking(
                "sess-1", "item-0", "doc-1", ["Candidate 1"] * len(MODELS)
            )

    def test_duplicate_submission_rejected_not_replaced(self) -> None:
        session = make_session()
        service = ReviewService(sessions={"sess-1": session})
        labels = list(session.items["item-0"].blind_labels())
        service.submit_ranking("sess-1", "item-0", "doc-1", labels)
        with pytest.raises(ReviewServiceError, match="already"):
            service.submit_ranking("sess-1", "item-0", "doc-1", labels[::-1])
        assert service.rankings_for("sess-1")[("item-0", "doc-1")] == tuple(labels)

    def test_unknown_session_and_item(self) -> None:
        service = ReviewService(sessions={"sess-1": make_session()})
        with pytest.raises(ReviewServiceError, match="unknown session"):
            service.submit_ranking("nope", "item-0", "doc-1", [])
        with pytest.raises(ReviewServiceError, match="unknown item"):
            service.submit_ranking("sess-1", "nope", "doc-1", [])

    def test_preference_tally_counts_rank1(self) -> None:
        session = make_session(item_count=1, model_ids=["m-x", "m-y"])
        service = ReviewService(sessions={"sess-1": session})
        item = session.items["item-0"]
        first_label = item.blind_labels()[0]
        winner = item.label_to_model[first_label]
        for doc in ("d1", "d2", "d3"):
            service.submit_ranking("sess-1", "item-0", doc, list(item.blind_labels()))
        tally = service.preference_tally("sess-1")
        assert tally == {winner: 3}

    def test_tally_conservation(self) -> None:
        session = make_session(item_count=5)
        service = ReviewService(sessions={"sess-1": session})
        rng = random.Random(1)
        count = 0
        for item_id in session.item_order:
            for doc in ("d1", "d2"):
                labels = list(session.items[item_id].blind_labels())
                rng.shuffle(labels)
                service.submit_ranking("sess-1", item_id, doc, labels)
                count += 1
        assert sum(service.preference_tally("sess-1").values()) == count


class TestDecisions:
    def test_both_approve_accepts(self) -> None:
        service, item_id = make_batch_service()
        r1, r2 = service.batches["batch-1"].assignments[item_id]
        service.submit_decision("batch-1", item_id, r1, "approve")
        assert service.item_status("batch-1", item_id) == "pending"
        service.submit_decision("batch-1", item_id, r2, "approve")
        assert service.item_status("batch-1", item_id) == "accepted"

    def test_one_reject_rejects(self) -> None:
        service, item_id = make_batch_service()
        r1, _ = service.batches["batch-1"].assignments[item_id]
        service.submit_decision("batch-1", item_id, r1, "reject")
        assert service.item_status("batch-1", item_id) == "rejected"

    def test_edit_plus_confirm_accepts_with_replacement(self) -> None:
        service, item_id = make_batch_service()
        r1, r2 = service.batches["batch-1"].assignments[item_id]
        service.submit_decision("batch-1", item_id, r1, "edit", "Corrected answer.")
        assert service.item_status("batch-1", item_id) == "pending"
        service.submit_decision("batch-1", item_id, r2, "approve")
        assert service.item_status("batch-1", item_id) == "accepted"
        assert service.accepted_text("batch-1", item_id) == "Corrected answer."

    def test_unassigned_reviewer_rejected(self) -> None:
        service, item_id = make_batch_service()
        assigned = set(service.batches["batch-1"].assignments[item_id])
        outsider = ({"rev-a", "rev-b", "rev-c"} - assigned).pop()
        with pytest.raises(ReviewServiceError, match="not assigned"):
            service.submit_decision("batch-1", item_id, outsider, "approve")

    def test_duplicate_decision_rejected(self) -> None:
        service, item_id = make_batch_service()
        r1, _ = service.batches["batch-1"].assignments[item_id]
        service.submit_decision("batch-1", item_id, r1, "approve")
        with pytest.raises(ReviewServiceError, match="already"):
            service.submit_decision("batch-1", item_id, r1, "reject")

    def test_edit_requires_payload(self) -> None:
        service, item_id = make_batch_service()
        r1, _ = service.batches["batch-1"].assignments[item_id]
        with pytest.raises(ReviewServiceError, match="replacement text"):
            service.submit_decision("batch-1", item_id, r1, "edit", "  ")


class TestEventLogReplay:
    def test_event_ids_strictly_increase(self) -> None:
        log = EventLog()
        ids = [log.append("s", f"i{n}", "r", "ranking", ("Candidate 1",)).event_id for n in range(5)]
        assert ids == [1, 2, 3, 4, 5]

    def test_jsonl_persistence_round_trip(self, tmp_path) -> None:
        path = tmp_path / "events.jsonl"
        log = EventLog(path)
        log.append("s", "i", "r", "approve", None)
        log.append("s", "i", "r2", "edit", "text")
        reloaded = EventLog(path)
        assert reloaded.events() == log.events()

    def test_replay_reconstructs_live_state(self, tmp_path) -> None:
        session = make_session(item_count=6)
        records = tuple(
            VqaRecord(
                id=f"rec-{i}", image_ref=f"i/{i}.png", modality=ImagingModality.FA,
                task=TaskKind.OPEN_QA, question="?", reference_answer="x",
            )
            for i in range(30)
        )
        batch = sample_for_review(DatasetManifest(records=records), ["a", "b", "c", "d"], rate=0.5, seed=7)
        path = tmp_path / "events.jsonl"
        live = ReviewService(
            sessions={"sess-1": session}, batches={"b": batch}, log=EventLog(path)
        )
        rng = random.Random(13)
        reviewers = ["a", "b", "c", "d"]
        # Interleave random valid rankings and decisions.
        for _ in range(300):
            if rng.random() < 0.5:
                item_id = rng.choice(session.item_order)
                doc = rng.choice(reviewers)
                if (item_id, doc) in live.rankings_for("sess-1"):
                    continue
                labels = list(session.items[item_id].blind_labels())
                rng.shuffle(labels)
                live.submit_ranking("sess-1", item_id, doc, labels)
            else:
                item_id = rng.choice(batch.sampled_ids)
                reviewer = rng.choice(batch.assignments[item_id])
                kind = rng.choice(["approve", "reject", "edit"])
                try:
                    live.submit_decision(
                        "b", item_id, reviewer, kind,
                        "edited text" if kind == "edit" else None,
                    )
                except ReviewServiceError:
                    pass  # duplicates are expected in random traffic
        replayed = ReviewService(
            sessions={"sess-1": session}, batches={"b": batch}, log=EventLog(path)
        )
        assert replayed.state_snapshot() == live.state_snapshot()


def walk_strings(payload) -> list[str]:
    found: list[str] = []
    if isinstance(payload, dict):
        for key, value in payload.items():
            found.append(str(key))
            found.extend(walk_strings(value))
    elif isinstance(payload, list):
        for value in payload:
            found.extend(walk_strings(value))
    elif isinstance(payload, str):
        found.append(payload)
    return found


@pytest.fixture()
def api() -> tuple[TestClient, ReviewService]:
    session = make_session(item_count=2)
    service, _item = make_batch_service()
    service.sessions["sess-1"] = session
    auth = AuthConfig(
        reviewer_tokens={"tok-a": "rev-a", "tok-b": "rev-b", "tok-c": "rev-c"},
        admin_tokens={"tok-admin"},
    )
    return TestClient(create_app(service, auth)), service


def _h(token: str) -> dict[str, str]:
    return {"Authorization": f"Bearer {token}"}


class TestHttpApi:
    def test_requires_auth(self, api) -> None:
        client, _ = api
        assert client.get("/sessions/sess-1").status_code == 401
        assert client.get("/sessions/sess-1", headers=_h("bad")).status_code == 401

    def test_session_and_item_views_are_blinded(self, api) -> None:
        client, _ = api
        session_view = client.get("/sessions/sess-1", headers=_h("tok-a")).json()
        item_view = client.get(
            "/sessions/sess-1/items/item-0", headers=_h("tok-a")
        ).json()
        for text in walk_strings(session_view) + walk_strings(item_view):
            for model in MODELS:
                assert model not in text
        assert len(item_view["candidates"]) == len(MODELS)

    def test_ranking_flow_and_duplicate(self, api) -> None:
        client, _ = api
        item = client.get("/sessions/sess-1/items/item-0", headers=_h("tok-a")).json()
        labels = [c["label"] for c in item["candidates"]]
        response = client.post(
            "/sessions/sess-1/items/item-0/ranking",
            headers=_h("tok-a"),
            json={"ranking": labels},
        )
        assert response.status_code == 200
        assert response.json()["event_id"] == 1
        duplicate = client.post(
            "/sessions/sess-1/items/item-0/ranking",
            headers=_h("tok-a"),
            json={"ranking": labels[::-1]},
        )
        assert duplicate.status_code == 409

    def test_non_permutation_is_422(self, api) -> None:
        client, _ = api
        response = client.post(
            "/sessions/sess-1/items/item-0/ranking",
            headers=_h("tok-a"),
            json={"ranking": ["Candidate 1", "Candidate 1", "Candidate 2", "Candidate 3"]},
        )
        assert response.status_code == 422

    def test_tally_requires_admin(self, api) -> None:
        client, _ = api
        assert client.get("/sessions/sess-1/tally", headers=_h("tok-a")).status_code == 403
        response = client.get("/sessions/sess-1/tally", headers=_h("tok-admin"))
        assert response.status_code == 200
        assert response.json()["rank1_counts"] == {}

    def test_decision_flow_over_http(self, api) -> None:
        client, service = api
        batch = service.batches["batch-1"]
        item_id = batch.sampled_ids[0]
        r1, r2 = batch.assignments[item_id]
        token = {"rev-a": "tok-a", "rev-b": "tok-b", "rev-c": "tok-c"}
        first = client.post(
            f"/batches/batch-1/items/{item_id}/decision",
            headers=_h(token[r1]),
            json={"kind": "approve"},
        )
        assert first.status_code == 200 and first.json()["status"] == "pending"
        second = client.post(
            f"/batches/batch-1/items/{item_id}/decision",
            headers=_h(token[r2]),
            json={"kind": "approve"},
        )
        assert second.json()["status"] == "accepted"

    def test_unassigned_decision_is_403(self, api) -> None:
        client, service = api
        batch = service.batches["batch-1"]
        item_id = batch.sampled_ids[0]
        assigned = set(batch.assignments[item_id])
        outsider = ({"rev-a", "rev-b", "rev-c"} - assigned).pop()
        token = {"rev-a": "tok-a", "rev-b": "tok-b", "rev-c": "tok-c"}[outsider]
        response = client.post(
            f"/batches/batch-1/items/{item_id}/decision",
            headers=_h(token),
            json={"kind": "approve"},
        )
        assert response.status_code == 403

    def test_queue_lists_only_own_assignments(self, api) -> None:
        client, service = api
        batch = service.batches["batch-1"]
        queue = client.get("/batches/batch-1/queue", headers=_h("tok-a")).json()
        expected = [
            item_id for item_id in batch.sampled_ids if batch.is_assigned(item_id, "rev-a")
        ]
        assert [item["item_id"] for item in queue["items"]] == expected

    def test_unknown_paths_are_404(self, api) -> None:
        client, _ = api
        assert client.get("/sessions/nope", headers=_h("tok-a")).status_code == 404
        assert (
            client.get("/sessions/sess-1/items/nope", headers=_h("tok-a")).status_code == 404
        )
