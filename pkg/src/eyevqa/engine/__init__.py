"""Constructive half of the benchmark pipeline: templates, sanitization, review sampling."""

from .sampling import ReviewBatch, dump_review_batch, load_review_batch, sample_for_review
from .sanitize import (
    DEFAULT_ABBREVIATIONS,
    RedactionRule,
    RedactionSpan,
    TextTransform,
    abbreviation_expander,
    compile_rules,
    default_redaction_rules,
    sanitize,
)
from .templates import (
    CONDITION_PLACEHOLDER,
    REPORT_SECTION_HEADINGS,
    LabeledImage,
    QaTemplateLibrary,
    RawReport,
    build_rewrite_prompt,
    default_template_library,
    instantiate_open_qa,
    load_template_library,
    save_template_library,
)

__all__ = [
    "CONDITION_PLACEHOLDER",
    "DEFAULT_ABBREVIATIONS",
    "REPORT_SECTION_HEADINGS",
    "LabeledImage",
    "QaTemplateLibrary",
    "RawReport",
    "RedactionRule",
    "RedactionSpan",
    "ReviewBatch",
    "TextTransform",
    "abbreviation_expander",
    "build_rewrite_prompt",
    "compile_rules",
    "default_redaction_rules",
    "default_template_library",
    "dump_review_batch",
    "instantiate_open_qa",
    "load_review_batch",
    "load_template_library",
    "sample_for_review",
    "sanitize",
    "save_template_library",
]
