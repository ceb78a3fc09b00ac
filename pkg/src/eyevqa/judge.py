"""Report judging: rubric prompt construction, response parsing, transport, caching.

A judge converts a (candidate, reference) report pair into
:class:`~eyevqa.reportscore.JudgeFindings`. Two judges are provided: a
remote chat-completion judge (temperature 0, cached, bounded concurrency)
and :func:`rule_judge`, a deterministic lexical stand-in for offline runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import httpx

from .engine.templates import REPORT_SECTION_HEADINGS
from .reportscore import FINDINGS_FIELDS, CriterionWeights, JudgeFindings

__all__ = [
    "CRITERIA_VERSION",
    "CRITERION_DEFINITIONS",
    "JudgePrompt",
    "JudgeParseError",
    "JudgeTransportConfig",
    "HttpChatTransport",
    "ResponseCache",
    "JudgeClient",
    "build_judge_prompt",
    "render_findings",
    "parse_judge_response",
    "rule_judge",
    "cache_key",
]

CRITERIA_VERSION = "rubric-aj-v1"

# Criterion definitions, keyed by indicator letter. A-D are error counts,
# E-I are pass/fail conditions, J is the score-neutral diagnosis indicator.
CRITERION_DEFINITIONS: tuple[tuple[str, str], ...] = (
    ("A", "The number of abnormal features in candidate report that are not mentioned in the reference report."),
    ("B", "The number of times the candidate report describes the disease severity incorrectly."),
    ("C", "The number of times the candidate report describes the disease location incorrectly."),
    ("D", "The number of missing key findings compared to the reference report."),
    ("E", "Whether the diagnosis or suspected diagnosis is included."),
    ("F", "Whether the description of the examination type exists and is correct."),
    ("G", "Whether there is a treatment recommendation."),
    ("H", "Whether the report structure is clear."),
    ("I", "Whether the candidate outcome contains particularly serious clinical errors."),
    ("J", "Whether the diagnosis is similar or approximately correct."),
)

_SCHEMA_LINE = (
    '{"a_count": <int>, "b_count": <int>, "c_count": <int>, "d_count": <int>, '
    '"e_ok": <bool>, "f_ok": <bool>, "g_ok": <bool>, "h_ok": <bool>, '
    '"i_serious_error": <bool>, "j_diagnosis_correct": <bool>}'
)

_SYSTEM_TEXT = (
    "You are a senior ophthalmologist grading machine-generated imaging reports "
    "against reference reports with a fixed ten-criterion rubric. "
    "Count and judge strictly; respond with a single JSON object and nothing else."
)


@dataclass(frozen=True)
class JudgePrompt:
    """System and user messages for one judging call."""

    system_text: str
    user_text: str


def build_judge_prompt(
    candidate: str, reference: str, weights: CriterionWeights | None = None
) -> JudgePrompt:
    """Assemble the rubric prompt embedding both reports and the output schema."""
    if not candidate.strip():
        raise ValueError("candidate report must be non-empty")
    if not reference.strip():
        raise ValueError("reference report must be non-empty")
    w = weights or CriterionWeights()
    weight_by_letter = dict(zip("ABCDEFGHI", w.as_vector()))
    lines = [
        f"Grade the candidate report against the reference report (criteria version {CRITERIA_VERSION}).",
        "",
        "Counting indicators (each occurrence deducts the listed weight):",
    ]
    for letter, text in CRITERION_DEFINITIONS[:4]:
        lines.append(f"{letter}) {text} [weight {weight_by_letter[letter]:g}]")
    lines.append("")
    lines.append("Condition indicators (the listed weight is deducted when unmet; I when present):")
    for letter, text in CRITERION_DEFINITIONS[4:9]:
        lines.append(f"{letter}) {text} [weight {weight_by_letter[letter]:g}]")
    lines.append("")
    lines.append("Diagnosis indicator (does not affect the score):")
    letter, text = CRITERION_DEFINITIONS[9]
    lines.append(f"{letter}) {text}")
    lines += [
        "",
        "Reference report:",
        "<<<",
        reference,
        ">>>",
        "",
        "Candidate report:",
        "<<<",
        candidate,
        ">>>",
        "",
        "Return ONLY a JSON object with exactly these ten fields:",
        _SCHEMA_LINE,
    ]
    return JudgePrompt(system_text=_SYSTEM_TEXT, user_text="\n".join(lines))


class JudgeParseError(ValueError):
    """Judge output failed validation; ``code`` names the failure class."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def render_findings(findings: JudgeFindings) -> str:
    """Canonical JSON rendering; inverse of :func:`parse_judge_response`."""
    return json.dumps(
        {name: getattr(findings, name) for name in FINDINGS_FIELDS}, sort_keys=False
    )


def parse_judge_response(raw: str) -> JudgeFindings:
    """Extract and validate the ten-field findings object from judge output.

    Tolerates surrounding prose by decoding the first balanced JSON object.
    Error codes: no-json, missing-field, wrong-type, negative-count.
    """
    obj = _first_json_object(raw)
    if obj is None:
        raise JudgeParseError("no-json", "no JSON object found in judge response")
    values: dict[str, object] = {}
    for name in FINDINGS_FIELDS:
        if name not in obj:
            raise JudgeParseError("missing-field", f"missing field {name!r}")
        value = obj[name]
        if name.endswith("_count"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise JudgeParseError("wrong-type", f"{name} must be an integer")
            if value < 0:
                raise JudgeParseError("negative-count", f"negative count for {name}")
        else:
            if not isinstance(value, bool):
                raise JudgeParseError("wrong-type", f"{name} must be a boolean")
        values[name] = value
    return JudgeFindings(**values)  # type: ignore[arg-type]


def _first_json_object(raw: str) -> dict | None:
    decoder = json.JSONDecoder()
    for start, char in enumerate(raw):
        if char != "{":
            continue
        try:
            value, _ = decoder.raw_decode(raw, start)
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return value
    return None


# --- offline rule-based judge -------------------------------------------------

_STOPWORDS = frozenset(
    "the a an and or of in on at with to for is are was were no not this that "
    "there it its as by from has have had be been".split()
)

_RECOMMEND_RE = re.compile(
    r"\b(recommend|suggest|advise|follow[- ]?up|treatment|therapy|refer|monitor)\w*\b",
    re.IGNORECASE,
)

_HEADING_RE = re.compile(
    r"^\s{0,3}(?:#{1,6}\s*|\*\*)?\s*(" + "|".join(REPORT_SECTION_HEADINGS) + r")\s*(?:\*\*)?\s*:?\s*$",
    re.IGNORECASE,
)


def split_report_sections(text: str) -> tuple[list[str], dict[str, str]]:
    """Split a Markdown report on the three canonical headings.

    Returns the heading names in the order they appear plus a map from
    canonical heading to section body.
    """
    order: list[str] = []
    bodies: dict[str, list[str]] = {}
    current: str | None = None
    canonical = {h.lower(): h for h in REPORT_SECTION_HEADINGS}
    for line in text.splitlines():
        match = _HEADING_RE.match(line)
        if match:
            current = canonical[match.group(1).lower()]
            if current not in bodies:
                order.append(current)
                bodies[current] = []
            continue
        if current is not None:
            bodies[current].append(line)
    return order, {name: "\n".join(lines).strip() for name, lines in bodies.items()}


def _without_heading_lines(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not _HEADING_RE.match(line))


def _content_tokens(text: str) -> set[str]:
    return {
        token
        for token in re.findall(r"[a-z0-9]+", text.lower())
        if len(token) > 2 and token not in _STOPWORDS
    }


def _sentences(text: str) -> list[str]:
    return [s.strip() for s in re.split(r"(?<=[.!?;])\s+|\n+", text) if s.strip()]


def _unrecalled_sentences(source_section: str, target_text: str) -> int:
    """Sentences of the source section with less than half their content in the target."""
    target_tokens = _content_tokens(target_text)
    missing = 0
    for sentence in _sentences(source_section):
        tokens = _content_tokens(sentence)
        if not tokens:
            continue
        recall = len(tokens & target_tokens) / len(tokens)
        if recall < 0.5:
            missing += 1
    return missing


def rule_judge(candidate: str, reference: str) -> JudgeFindings:
    """Deterministic lexical judge for offline evaluation.

    Structure flags come from section parsing, completeness from key-phrase
    recall against the reference, and the diagnosis flag from token overlap
    of the diagnosis sections. Severity/location errors (B, C) and serious
    clinical errors (I) are not inferable lexically and stay at zero.
    """
    cand_order, cand_sections = split_report_sections(candidate)
    _, ref_sections = split_report_sections(reference)
    image_type, findings_heading, diagnosis = REPORT_SECTION_HEADINGS

    h_ok = cand_order == list(REPORT_SECTION_HEADINGS)
    e_ok = bool(cand_sections.get(diagnosis, "").strip())
    # Heading lines are excluded so "Diagnostic Suggestions" itself does not
    # count as a recommendation.
    g_ok = bool(_RECOMMEND_RE.search(_without_heading_lines(candidate)))

    cand_type = cand_sections.get(image_type, "").strip()
    ref_type = ref_sections.get(image_type, "").strip()
    if not cand_type:
        f_ok = False
    elif ref_type:
        f_ok = bool(_content_tokens(cand_type) & _content_tokens(ref_type))
    else:
        f_ok = True

    ref_findings = ref_sections.get(findings_heading, reference)
    cand_findings = cand_sections.get(findings_heading, "")
    d_count = _unrecalled_sentences(ref_findings, candidate)
    a_count = _unrecalled_sentences(cand_findings, reference)

    cand_diag = _content_tokens(cand_sections.get(diagnosis, candidate))
    ref_diag = _content_tokens(ref_sections.get(diagnosis, reference))
    overlap = len(cand_diag & ref_diag) / len(ref_diag) if ref_diag else 0.0
    return JudgeFindings(
        a_count=a_count,
        b_count=0,
        c_count=0,
        d_count=d_count,
        e_ok=e_ok,
        f_ok=f_ok,
        g_ok=g_ok,
        h_ok=h_ok,
        i_serious_error=False,
        j_diagnosis_correct=overlap >= 0.5,
    )


# --- transport and caching ----------------------------------------------------


class Transport(Protocol):
    """Sends one judge prompt and returns the raw model text."""

    def send(self, prompt: JudgePrompt) -> str: ...


@dataclass(frozen=True)
class JudgeTransportConfig:
    """Connection settings for the remote judge endpoint."""

    endpoint: str
    model: str
    timeout: float = 60.0
    max_parallel: int = 4
    retry_budget: int = 2
    api_key_env: str = "EYEVQA_JUDGE_API_KEY"

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be >= 0")


class HttpChatTransport:
    """Chat-completion HTTP transport: temperature 0, bearer auth from the environment."""

    def __init__(self, config: JudgeTransportConfig):
        self.config = config
        headers = {}
        api_key = os.environ.get(config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=config.timeout, headers=headers)

    def send(self, prompt: JudgePrompt) -> str:
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
            "temperature": 0,
        }
        last_error: Exception | None = None
        for _ in range(self.config.retry_budget + 1):
            try:
                response = self._client.post(self.config.endpoint, json=payload)
                response.raise_for_status()
                return _first_text_segment(response.json())
            except httpx.HTTPError as exc:
                last_error = exc
        raise TransportError(f"judge endpoint failed after retries: {last_error}")

    def close(self) -> None:
        self._client.close()


class TransportError(RuntimeError):
    """The judge endpoint could not produce a response within the retry budget."""


def _first_text_segment(body: object) -> str:
    if isinstance(body, dict):
        choices = body.get("choices")
        if isinstance(choices, list) and choices:
            message = choices[0].get("message", {})
            content = message.get("content")
            if isinstance(content, str):
                return content
            if isinstance(content, list):
                for part in content:
                    if isinstance(part, dict) and isinstance(part.get("text"), str):
                        return part["text"]
    raise TransportError("unexpected response body from judge endpoint")


def cache_key(candidate: str, reference: str, criteria_version: str, model: str) -> str:
    payload = "\x1f".join((candidate, reference, criteria_version, model))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed on-disk store of raw judge responses.

    Writes are atomic (temp file + rename); identical keys hold identical
    deterministic values, so last-writer-wins is safe under concurrency.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, key: str, raw: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(raw)
            os.replace(tmp, self._path(key))
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


_RETRY_SUFFIX = "\n\nYour previous reply was not valid JSON. Return only the JSON object."


class JudgeClient:
    """Drives a transport with caching, per-key dedup, and one parse retry."""

    def __init__(
        self,
        transport: Transport,
        model: str,
        cache: ResponseCache | None = None,
        weights: CriterionWeights | None = None,
        max_parallel: int = 4,
    ):
        self.transport = transport
        self.model = model
        self.cache = cache
        self.weights = weights or CriterionWeights()
        self.max_parallel = max(1, max_parallel)
        self._key_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._guard:
            return self._key_locks[key]

    def judge_pair(self, candidate: str, reference: str) -> JudgeFindings:
        key = cache_key(candidate, reference, CRITERIA_VERSION, self.model)
        with self._lock_for(key):
            if self.cache is not None:
                cached = self.cache.get(key)
                if cached is not None:
                    return parse_judge_response(cached)
            prompt = build_judge_prompt(candidate, reference, self.weights)
            raw = self.transport.send(prompt)
            try:
                findings = parse_judge_response(raw)
            except JudgeParseError:
                retry_prompt = JudgePrompt(
                    system_text=prompt.system_text,
                    user_text=prompt.user_text + _RETRY_SUFFIX,
                )
                raw = self.transport.send(retry_prompt)
                findings = parse_judge_response(raw)
            if self.cache is not None:
                self.cache.put(key, raw)
            return findings

    def judge_many(
        self,
        pairs: Iterable[tuple[str, str]],
        on_error: Callable[[int, Exception], None] | None = None,
    ) -> list[JudgeFindings | None]:
        """Judge pairs concurrently, never exceeding ``max_parallel`` in flight.

        Failed items come back as None; ``on_error`` receives (index, error).
        """
        from concurrent.futures import ThreadPoolExecutor

        items = list(pairs)
        results: list[JudgeFindings | None] = [None] * len(items)

        def run(index: int) -> None:
            candidate, reference = items[index]
            try:
                results[index] = self.judge_pair(candidate, reference)
            except Exception as exc:  # noqa: BLE001 - collected per record
                if on_error is not None:
                    on_error(index, exc)

        with ThreadPoolExecutor(max_workers=self.max_parallel) as executor:
            list(executor.map(run, range(len(items))))
        return results


class RuleJudgeTransport:
    """Local transport that answers with the rule judge's findings as JSON."""

    def send(self, prompt: JudgePrompt) -> str:
        candidate, reference = _extract_reports(prompt.user_text)
        return render_findings(rule_judge(candidate, reference))


def _extract_reports(user_text: str) -> tuple[str, str]:
    blocks = re.findall(r"<<<\n(.*?)\n>>>", user_text, re.DOTALL)
    if len(blocks) < 2:
        raise ValueError("prompt does not embed both reports")
    return blocks[1], blocks[0]
