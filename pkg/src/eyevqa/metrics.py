"""Deterministic text metrics: accuracy with answer extraction, BLEU, ROUGE-L, token F1.

All scores are on a 0-100 scale. Functions are pure and safe to run in
parallel across records.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .records import TaskKind, VqaRecord

__all__ = [
    "MetricValue",
    "ExternalMetric",
    "tokenize",
    "bleu",
    "corpus_bleu",
    "rouge_l",
    "token_f1",
    "extract_choice",
    "closed_accuracy",
]


@dataclass(frozen=True)
class MetricValue:
    """A named metric score in [0, 100]."""

    name: str
    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 100.0:
            raise ValueError(f"metric {self.name}: value {self.value} outside [0, 100]")


class ExternalMetric(Protocol):
    """Plug-in point for model-backed metrics scored outside this process.

    Implementations take (candidate, reference) raw strings and return a
    score in [0, 100] under their own name; the built-in stand-in is
    ``token_f1``, always reported as "token-F1" and never relabeled as an
    embedding metric.
    """

    name: str

    def score(self, candidate: str, reference: str) -> float: ...


_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase word/punctuation tokenizer; each punctuation mark is its own token."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def bleu(candidate: Sequence[str], reference: Sequence[str], max_order: int = 4) -> float:
    """Clipped n-gram precision BLEU with brevity penalty, scaled to [0, 100].

    Geometric mean over orders 1..max_order, no smoothing: zero matched
    n-grams at any order gives 0. Candidates shorter than max_order score 0.
    """
    if max_order not in (1, 4):
        raise ValueError("max_order must be 1 or 4")
    if not candidate or not reference:
        return 0.0
    log_sum = 0.0
    for order in range(1, max_order + 1):
        cand_counts = _ngram_counts(candidate, order)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        ref_counts = _ngram_counts(reference, order)
        clipped = sum(min(n, ref_counts[g]) for g, n in cand_counts.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    if len(candidate) < len(reference):
        brevity = math.exp(1.0 - len(reference) / len(candidate))
    else:
        brevity = 1.0
    return 100.0 * brevity * math.exp(log_sum / max_order)


def corpus_bleu(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]], max_order: int = 4
) -> float:
    """Corpus-level BLEU: n-gram counts pooled over all (candidate, reference) pairs.

    Same conventions as :func:`bleu` (clipping, no smoothing, brevity penalty
    from total lengths); this is the flag-selected alternative to the default
    per-record macro average.
    """
    if max_order not in (1, 4):
        raise ValueError("max_order must be 1 or 4")
    usable = [(c, r) for c, r in pairs if c and r]
    if not usable:
        return 0.0
    log_sum = 0.0
    for order in range(1, max_order + 1):
        clipped = 0
        total = 0
        for candidate, reference in usable:
            cand_counts = _ngram_counts(candidate, order)
            ref_counts = _ngram_counts(reference, order)
            clipped += sum(min(n, ref_counts[g]) for g, n in cand_counts.items())
            total += sum(cand_counts.values())
        if clipped == 0 or total == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    cand_length = sum(len(c) for c, _ in usable)
    ref_length = sum(len(r) for _, r in usable)
    if cand_length < ref_length:
        brevity = math.exp(1.0 - ref_length / cand_length)
    else:
        brevity = 1.0
    return 100.0 * brevity * math.exp(log_sum / max_order)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Single-row DP; O(len(a) * len(b)) time, O(len(b)) space.
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                current[j] = prev[j - 1] + 1
            else:
                current[j] = max(prev[j], current[j - 1])
        prev = current
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """LCS-based F1 (β=1), scaled to [0, 100]; symmetric in its arguments."""
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def token_f1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Multiset token-overlap F1, scaled to [0, 100]; order-invariant and symmetric."""
    if not candidate or not reference:
        return 0.0
    overlap = sum((Counter(candidate) & Counter(reference)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(candidate)
    recall = overlap / len(reference)
    return 100.0 * 2.0 * precision * recall / (precision + recall)


# Letter-form answer patterns, tried together as the first extraction tier:
# a bare letter ("B", "b.", "(B)"), a letter prefix ("B) Glaucoma"),
# an "answer is B" phrase, or a parenthesized letter anywhere.
_LETTER_WHOLE = re.compile(r"\(?([A-Za-z])\)?[.:)]*")
_LETTER_PREFIX = re.compile(r"^\(?([A-Za-z])[).:]\s+")
_LETTER_PHRASE = re.compile(
    r"\b(?:answer|option|choice)\s*(?:is|:)?\s*\(?([A-Za-z])\)?(?![\w])", re.IGNORECASE
)
_LETTER_PAREN = re.compile(r"\(([A-Za-z])\)")


def _normalize_text(text: str) -> str:
    return " ".join(re.findall(r"[a-z0-9]+", text.lower()))


def extract_choice(prediction: str, options: Sequence[tuple[str, str]]) -> str | None:
    """Extract the chosen option letter from a free-form prediction.

    Tiers, in precedence order: (1) an option letter in a recognized answer
    pattern; (2) case-insensitive match of a full option text; (3) match of
    a normalized option text. The first tier that yields any candidates is
    decisive; more than one candidate there means ambiguity, reported as None.
    """
    valid = {letter for letter, _ in options}
    text = prediction.strip()

    letters: set[str] = set()
    whole = _LETTER_WHOLE.fullmatch(text)
    if whole:
        letters.add(whole.group(1).upper())
    prefix = _LETTER_PREFIX.match(text)
    if prefix:
        letters.add(prefix.group(1).upper())
    for match in _LETTER_PHRASE.finditer(text):
        letters.add(match.group(1).upper())
    for match in _LETTER_PAREN.finditer(text):
        letters.add(match.group(1).upper())
    letters &= valid
    if letters:
        return letters.pop() if len(letters) == 1 else None

    full_hits = {
        letter
        for letter, option_text in options
        if re.search(rf"(?<!\w){re.escape(option_text)}(?!\w)", text, re.IGNORECASE)
    }
    if full_hits:
        return full_hits.pop() if len(full_hits) == 1 else None

    norm_pred = f" {_normalize_text(text)} "
    norm_hits = {
        letter
        for letter, option_text in options
        if _normalize_text(option_text) and f" {_normalize_text(option_text)} " in norm_pred
    }
    if len(norm_hits) == 1:
        return norm_hits.pop()
    return None


def closed_accuracy(prediction: str, record: VqaRecord) -> bool:
    """True iff the prediction unambiguously selects the record's gold option."""
    if record.task is not TaskKind.CLOSED_QA:
        raise ValueError(f"closed_accuracy requires a ClosedQA record, got {record.task.value}")
    chosen = extract_choice(prediction, record.options or ())
    return chosen is not None and chosen == record.reference_answer


def open_qa_scores(prediction: str, reference: str) -> dict[str, float]:
    """The standard per-record score bundle for short free-text answers."""
    cand = tokenize(prediction)
    ref = tokenize(reference)
    return {
        "bleu-1": bleu(cand, ref, max_order=1),
        "bleu-4": bleu(cand, ref, max_order=4),
        "rouge-l": rouge_l(cand, ref),
        "token-f1": token_f1(cand, ref),
    }


@dataclass(frozen=True)
class TokenF1Metric:
    """Built-in deterministic stand-in satisfying the ExternalMetric plug-in shape."""

    name: str = "token-F1"

    def score(self, candidate: str, reference: str) -> float:
        return token_f1(tokenize(candidate), tokenize(reference))


def resolve_external_metrics(
    metrics: Sequence[ExternalMetric] | None,
) -> Sequence[ExternalMetric]:
    if metrics:
        return metrics
    return (TokenF1Metric(),)


ScoreFn = Callable[[str, str], float]
