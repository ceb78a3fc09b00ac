"""Fixture review service for frontend end-to-end tests.

Hosts one blinded ranking session ("sess-e2e", 2 items x 3 models) and one
review batch ("batch-e2e", every item assigned to rev-a and rev-b), with
static tokens tok-a / tok-b / tok-admin.
"""

from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

import uvicorn

from eyevqa.engine import sample_for_review
from eyevqa.records import DatasetManifest, ImagingModality, TaskKind, VqaRecord
from eyevqa.reviewsvc import (
    AuthConfig,
    EventLog,
    ReviewService,
    create_app,
    create_ranking_session,
)

MODEL_IDS = ("model-alpha", "model-beta", "model-gamma")

REPORT_TEMPLATE = """## Image Type
Optical coherence tomography of the {eye} eye.

## Imaging Findings
Variant {variant}: retinal layers are {state}. No hemorrhage is seen.

## Diagnostic Suggestions
{diagnosis} Recommend follow-up imaging in {months} months.
"""


def build_service(log_path: Path) -> ReviewService:
    items = [
        {"id": "case-001", "image_ref": "/images/case-001.png", "question": "Rank the candidate reports."},
        {"id": "case-002", "image_ref": "/images/case-002.png", "question": "Rank the candidate reports."},
    ]
    outputs = {}
    for index, model in enumerate(MODEL_IDS):
        outputs[model] = {
            item["id"]: REPORT_TEMPLATE.format(
                eye="right" if index % 2 == 0 else "left",
                variant=index + 1,
                state=["intact", "mildly disrupted", "thinned"][index],
                diagnosis=[
                    "No abnormality detected.",
                    "Early macular edema suspected.",
                    "Macular thinning consistent with atrophy.",
                ][index],
                months=3 + index,
            )
            for item in items
        }
    session = create_ranking_session("sess-e2e", items, outputs, seed=7)

    records = tuple(
        VqaRecord(
            id=f"review-{i:02d}",
            image_ref=f"/images/review-{i:02d}.png",
            modality=ImagingModality.OCT,
            task=TaskKind.OPEN_QA,
            question=f"Does scan {i} show any abnormality?",
            reference_answer="The eye in the image exhibits signs of macular edema.",
        )
        for i in range(4)
    )
    manifest = DatasetManifest(records=records)
    batch = sample_for_review(manifest, ["rev-a", "rev-b"], rate=1.0, seed=3)
    batch_items = {
        record.id: {
            "question": record.question,
            "reference_answer": record.reference_answer,
            "image_url": record.image_ref,
        }
        for record in records
    }
    return ReviewService(
        sessions={"sess-e2e": session},
        batches={"batch-e2e": batch},
        log=EventLog(log_path),
        batch_items=batch_items,
    )


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--log", type=Path, default=None)
    args = parser.parse_args()
    log_path = args.log or Path(tempfile.mkdtemp()) / "events.jsonl"
    service = build_service(log_path)
    auth = AuthConfig(
        reviewer_tokens={"tok-a": "rev-a", "tok-b": "rev-b"},
        admin_tokens={"tok-admin"},
    )
    app = create_app(service, auth)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
