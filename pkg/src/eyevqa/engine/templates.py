"""Template-driven open-QA instantiation and report rewrite prompts.

Variant selection hashes (image_ref, seed, role) so generation is a pure
function of its inputs: no global RNG state, reproducible across processes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..records import ImagingModality, TaskKind, VqaRecord

__all__ = [
    "QaTemplateLibrary",
    "LabeledImage",
    "RawReport",
    "REPORT_SECTION_HEADINGS",
    "default_template_library",
    "load_template_library",
    "save_template_library",
    "instantiate_open_qa",
    "build_rewrite_prompt",
]

CONDITION_PLACEHOLDER = "{condition}"

REPORT_SECTION_HEADINGS = ("Image Type", "Imaging Findings", "Diagnostic Suggestions")


@dataclass(frozen=True)
class QaTemplateLibrary:
    """Question sets plus positive/negative answer variants.

    Every positive answer carries the ``{condition}`` placeholder exactly
    once; negative answers never contain it.
    """

    question_sets: Mapping[str, tuple[str, ...]]
    positive_answers: tuple[str, ...]
    negative_answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.question_sets or not self.positive_answers or not self.negative_answers:
            raise ValueError("template library lists must be non-empty")
        for set_id, questions in self.question_sets.items():
            if not questions:
                raise ValueError(f"question set {set_id!r} is empty")
        for answer in self.positive_answers:
            if answer.count(CONDITION_PLACEHOLDER) != 1:
                raise ValueError(
                    f"positive answer must contain {CONDITION_PLACEHOLDER} exactly once: {answer!r}"
                )
        for answer in self.negative_answers:
            if CONDITION_PLACEHOLDER in answer:
                raise ValueError(
                    f"negative answer must not contain {CONDITION_PLACEHOLDER}: {answer!r}"
                )

    def all_templates(self) -> tuple[str, ...]:
        questions = tuple(q for qs in self.question_sets.values() for q in qs)
        return questions + self.positive_answers + self.negative_answers


@dataclass(frozen=True)
class LabeledImage:
    """A single-label source item; no condition means a healthy eye."""

    image_ref: str
    modality: ImagingModality
    condition: str | None = None

    def __post_init__(self) -> None:
        if self.condition is not None and not self.condition.strip():
            raise ValueError("condition, when present, must be non-empty")


@dataclass(frozen=True)
class RawReport:
    """Pre-extracted clinical text for one examination, ready for rewriting."""

    image_refs: tuple[str, ...]
    modality: ImagingModality
    extracted_text: str

    def __post_init__(self) -> None:
        if not self.extracted_text.strip():
            raise ValueError("extracted_text must be non-empty")


_DISEASE_PRESENCE_QUESTIONS = (
    "Is the eye in this picture diseased?",
    "Does the eye shown in the image have any disease?",
    "Is there any sign of illness in the eye in this photo?",
    "Does this eye image show any signs of abnormalities?",
    "Does the eye in the image show signs of disease?",
    "Is there evidence of a disorder in the eye in this picture?",
    "Are there any visible abnormalities in the eye image?",
)

_DISEASE_IDENTITY_QUESTIONS = (
    "What ocular disease is evident in this image?",
    "What eye condition is visible in this picture?",
    "What condition is affecting the eye shown in the image?",
    "What issue is apparent in the eye shown here?",
    "What is wrong with the eye in the image?",
    "Which disease can be seen in the eye from this picture?",
    "What health issue is present in the eye in this image?",
    "What health concern is evident in the eye in this image?",
    "What problem does the eye shown in the image have?",
)

_POSITIVE_ANSWERS = (
    "The eye in the image exhibits signs of {condition}.",
    "{condition} is evident in the eye depicted in the image.",
    "The image reveals the presence of {condition} in the eye.",
    "In this picture, the eye appears to be affected by {condition}.",
    "This image shows an eye with {condition}.",
    "The eye in the photograph shows signs of {condition}.",
    "{condition} is visible in the eye from this picture.",
    "Yes, the eye in the picture has {condition}.",
    "Yes, the eye shown in this image is impacted by {condition}.",
    "Yes, this image depicts an eye presenting {condition}.",
    "Yes, the eye in this image shows evidence of {condition}.",
    "Yes, the image illustrates an eye with {condition}.",
)

_NEGATIVE_ANSWERS = (
    "No, very healthy.",
    "No, the eye appears healthy in the image.",
    "No. This image shows that the retina looks normal, with no hemorrhages, exudates or other signs of abnormality.",
    "No, the eye image appears normal.",
    "No, the findings from the retinal image suggest a normal and healthy eye.",
    "No, there are no indications of disease in the image.",
    "No significant abnormalities were detected in the eye image.",
    "The eye in this image is very healthy.",
    "This picture shows a perfectly healthy eye with no signs of disease.",
    "The eye depicted in the image is completely healthy, showing no illness.",
    "According to this image, the eye is very healthy and free from any disease.",
    "The photo indicates a very healthy eye with no presence of disease.",
)


def default_template_library() -> QaTemplateLibrary:
    """The built-in library: two question sets plus shared answer pools."""
    return QaTemplateLibrary(
        question_sets={
            "disease_identity": _DISEASE_IDENTITY_QUESTIONS,
            "disease_presence": _DISEASE_PRESENCE_QUESTIONS,
        },
        positive_answers=_POSITIVE_ANSWERS,
        negative_answers=_NEGATIVE_ANSWERS,
    )


def load_template_library(path: str | Path) -> QaTemplateLibrary:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return QaTemplateLibrary(
        question_sets={k: tuple(v) for k, v in data["question_sets"].items()},
        positive_answers=tuple(data["positive_answers"]),
        negative_answers=tuple(data["negative_answers"]),
    )


def save_template_library(library: QaTemplateLibrary, path: str | Path) -> None:
    data = {
        "question_sets": {k: list(v) for k, v in library.question_sets.items()},
        "positive_answers": list(library.positive_answers),
        "negative_answers": list(library.negative_answers),
    }
    Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _pick(items: Sequence[str], image_ref: str, seed: int, role: str) -> str:
    digest = hashlib.blake2b(
        f"{image_ref}\x1f{seed}\x1f{role}".encode("utf-8"), digest_size=8
    ).digest()
    return items[int.from_bytes(digest, "big") % len(items)]


def _default_record_id(item: LabeledImage, seed: int) -> str:
    digest = hashlib.blake2b(
        f"{item.image_ref}\x1f{item.modality.value}\x1f{item.condition or ''}\x1f{seed}".encode(
            "utf-8"
        ),
        digest_size=6,
    ).hexdigest()
    return f"openqa-{digest}"


def instantiate_open_qa(
    item: LabeledImage,
    library: QaTemplateLibrary | None = None,
    seed: int = 0,
    record_id: str | None = None,
) -> VqaRecord:
    """Turn one labeled image into an open-QA record via template selection.

    The question and answer are spliced verbatim from the library; the
    answer pool is positive_answers when a condition is present, otherwise
    negative_answers. Selection depends only on (item, seed).
    """
    lib = library or default_template_library()
    set_id = _pick(sorted(lib.question_sets), item.image_ref, seed, "question-set")
    question = _pick(lib.question_sets[set_id], item.image_ref, seed, "question")
    if item.condition is not None:
        template = _pick(lib.positive_answers, item.image_ref, seed, "answer")
        answer = template.replace(CONDITION_PLACEHOLDER, item.condition)
        labels: tuple[str, ...] = (item.condition,)
    else:
        answer = _pick(lib.negative_answers, item.image_ref, seed, "answer")
        labels = ()
    return VqaRecord(
        id=record_id if record_id is not None else _default_record_id(item, seed),
        image_ref=item.image_ref,
        modality=item.modality,
        task=TaskKind.OPEN_QA,
        question=question,
        reference_answer=answer,
        disease_labels=labels,
        source="template-engine",
    )


_REWRITE_PROMPT = """You are an experienced ophthalmologist writing standardized imaging reports.

Rewrite the raw {modality} examination notes below into a standardized Markdown report \
with exactly these three sections, in this order:

## Image Type
## Imaging Findings
## Diagnostic Suggestions

Requirements:
- State the examination type ({modality}) under "Image Type".
- Describe every clinically relevant finding from the notes under "Imaging Findings".
- Give the diagnosis or suspected diagnosis and a treatment or follow-up \
recommendation under "Diagnostic Suggestions".
- Use clear, standardized professional language; do not invent findings; do not \
include any patient-identifying information.

Raw notes:
{text}
"""


def build_rewrite_prompt(report: RawReport) -> str:
    """Prompt text asking an LLM to restructure raw notes into the three-section report."""
    return _REWRITE_PROMPT.format(
        modality=report.modality.display_name, text=report.extracted_text
    )
