"""Rule-based redaction of sensitive text plus pluggable text transforms.

Rules are matched against the original text in declaration order (earlier
rules win overlaps) and every match is replaced by a typed placeholder.
Placeholders contain no digits and no name-like capitalized runs after a
"Patient:" prefix, so applying the same rules twice changes nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

__all__ = [
    "RedactionRule",
    "RedactionSpan",
    "default_redaction_rules",
    "compile_rules",
    "sanitize",
    "TextTransform",
    "abbreviation_expander",
    "DEFAULT_ABBREVIATIONS",
]


@dataclass(frozen=True)
class RedactionRule:
    """A named pattern and the placeholder token that replaces its matches."""

    name: str
    pattern: re.Pattern
    placeholder: str


@dataclass(frozen=True)
class RedactionSpan:
    """One replaced region, located by byte offsets into the original UTF-8 text."""

    rule: str
    byte_start: int
    byte_end: int
    original: str
    placeholder: str


_DEFAULT_RULE_SPECS = (
    ("iso-date", r"\b\d{4}-\d{2}-\d{2}\b", "[DATE]"),
    ("dmy-date", r"\b\d{1,2}/\d{1,2}/\d{2,4}\b", "[DATE]"),
    ("long-id", r"\b\d{6,}\b", "[ID]"),
    ("patient-name", r"(?<=Patient:\s)[A-Z][A-Za-z'\-]*(?:\s[A-Z][A-Za-z'\-]*)*", "[NAME]"),
    ("age", r"\b\d{1,3}[- ]year[- ]old\b|\baged?\s+\d{1,3}\b", "[AGE]"),
)


def compile_rules(
    specs: Sequence[tuple[str, str, str]],
) -> tuple[RedactionRule, ...]:
    """Compile (name, regex, placeholder) triples; a bad regex fails here, not at scan time."""
    rules = []
    for name, pattern, placeholder in specs:
        try:
            compiled = re.compile(pattern)
        except re.error as exc:
            raise ValueError(f"invalid redaction pattern for rule {name!r}: {exc}") from exc
        rules.append(RedactionRule(name=name, pattern=compiled, placeholder=placeholder))
    return tuple(rules)


def default_redaction_rules() -> tuple[RedactionRule, ...]:
    """ISO and D/M/Y dates, 6+-digit identifiers, "Patient:"-prefixed names, age phrases."""
    return compile_rules(_DEFAULT_RULE_SPECS)


def sanitize(
    text: str, rules: Sequence[RedactionRule] | None = None
) -> tuple[str, list[RedactionSpan]]:
    """Replace every rule match with its placeholder; idempotent on its own output."""
    active = rules if rules is not None else default_redaction_rules()
    matches: list[tuple[int, int, RedactionRule]] = []
    claimed: list[tuple[int, int]] = []
    for rule in active:
        for m in rule.pattern.finditer(text):
            start, end = m.span()
            if start == end:
                continue
            if any(start < c_end and end > c_start for c_start, c_end in claimed):
                continue
            claimed.append((start, end))
            matches.append((start, end, rule))
    matches.sort(key=lambda item: item[0])

    pieces: list[str] = []
    spans: list[RedactionSpan] = []
    cursor = 0
    for start, end, rule in matches:
        pieces.append(text[cursor:start])
        pieces.append(rule.placeholder)
        spans.append(
            RedactionSpan(
                rule=rule.name,
                byte_start=len(text[:start].encode("utf-8")),
                byte_end=len(text[:end].encode("utf-8")),
                original=text[start:end],
                placeholder=rule.placeholder,
            )
        )
        cursor = end
    pieces.append(text[cursor:])
    return "".join(pieces), spans


# A text transform maps raw text to (clean text, spans); sanitize and the
# abbreviation expander below share this shape so pipeline stages compose.
TextTransform = Callable[[str], tuple[str, list[RedactionSpan]]]

DEFAULT_ABBREVIATIONS: Mapping[str, str] = {
    "OD": "right eye",
    "OS": "left eye",
    "OU": "both eyes",
    "IOP": "intraocular pressure",
    "VA": "visual acuity",
    "BCVA": "best-corrected visual acuity",
    "RNFL": "retinal nerve fiber layer",
    "CNV": "choroidal neovascularization",
    "RPE": "retinal pigment epithelium",
    "NPDR": "non-proliferative diabetic retinopathy",
    "PDR": "proliferative diabetic retinopathy",
    "AMD": "age-related macular degeneration",
    "RD": "retinal detachment",
    "POAG": "primary open-angle glaucoma",
}


def abbreviation_expander(
    mapping: Mapping[str, str] | None = None,
) -> TextTransform:
    """Offline stand-in for the LLM translation stage: expands known abbreviations.

    Matches whole words only, longest abbreviation first, and reports the
    replacements through the same span format as :func:`sanitize`.
    """
    table = dict(mapping or DEFAULT_ABBREVIATIONS)
    ordered = sorted(table, key=len, reverse=True)
    pattern = re.compile(r"\b(" + "|".join(re.escape(k) for k in ordered) + r")\b")

    def transform(text: str) -> tuple[str, list[RedactionSpan]]:
        pieces: list[str] = []
        spans: list[RedactionSpan] = []
        cursor = 0
        for m in pattern.finditer(text):
            start, end = m.span()
            replacement = table[m.group(1)]
            pieces.append(text[cursor:start])
            pieces.append(replacement)
            spans.append(
                RedactionSpan(
                    rule="abbreviation",
                    byte_start=len(text[:start].encode("utf-8")),
                    byte_end=len(text[:end].encode("utf-8")),
                    original=m.group(1),
                    placeholder=replacement,
                )
            )
            cursor = end
        pieces.append(text[cursor:])
        return "".join(pieces), spans

    return transform
