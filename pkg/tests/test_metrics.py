"""Metric oracles: hand n-gram counts, brute-force LCS, extraction fixture."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eyevqa.metrics import (
    TokenF1Metric,
    bleu,
    closed_accuracy,
    corpus_bleu,
    extract_choice,
    rouge_l,
    token_f1,
    tokenize,
)
from eyevqa.records import ImagingModality, TaskKind, VqaRecord


def brute_force_lcs(a: list[str], b: list[str]) -> int:
    """Exhaustive longest-common-subsequence search; only viable for short inputs."""
    best = 0
    for size in range(len(a), 0, -1):
        for combo in itertools.combinations(a, size):
            iterator = iter(b)
            if all(token in iterator for token in combo):
                return size
    return best


class TestTokenize:
    def test_punctuation_split(self) -> None:
        assert tokenize("The cat, sat.") == ["the", "cat", ",", "sat", "."]

    def test_empty(self) -> None:
        assert tokenize("") == []

    def test_whitespace_collapse(self) -> None:
        assert tokenize("OCT  scan") == ["oct", "scan"]

    def test_no_empty_tokens(self) -> None:
        assert all(tokenize("a -- b\t\nc.."))


class TestBleu:
    def test_identity_is_100(self) -> None:
        tokens = tokenize("the retina shows mild edema")
        assert bleu(tokens, tokens, max_order=4) == pytest.approx(100.0)

    def test_hand_counted_zero_case(self) -> None:
        # p1=3/4, p2=2/3, p3=1/2, p4=0 -> no smoothing -> 0.
        assert bleu(list("abcd"), list("abce"), max_order=4) == 0.0

    def test_hand_counted_bleu1(self) -> None:
        assert bleu(list("abcd"), list("abce"), max_order=1) == pytest.approx(75.0)

    def test_brevity_penalty_applies_to_short_candidate(self) -> None:
        # 2 of 2 unigrams match, |cand|=2 < |ref|=4 -> BP = exp(1 - 4/2).
        import math

        value = bleu(["a", "b"], ["a", "b", "c", "d"], max_order=1)
        assert value == pytest.approx(100.0 * math.exp(-1.0))

    def test_no_penalty_for_long_candidate(self) -> None:
        assert bleu(["a", "b", "x"], ["a", "b"], max_order=1) == pytest.approx(100.0 * 2 / 3)

    def test_empty_sides_score_zero(self) -> None:
        assert bleu([], ["a"], max_order=1) == 0.0
        assert bleu(["a"], [], max_order=4) == 0.0

    def test_candidate_shorter_than_order_scores_zero(self) -> None:
        assert bleu(["a", "b", "c"], ["a", "b", "c"], max_order=4) == 0.0

    def test_invalid_order_rejected(self) -> None:
        with pytest.raises(ValueError):
            bleu(["a"], ["a"], max_order=2)

    def test_clipping_never_exceeds_unclipped(self) -> None:
        # Candidate repeats "the" 4x; the reference has it once, so the
        # clipped unigram count is 1 even though 4 candidate tokens match.
        value = bleu(["the"] * 4, ["the", "cat"], max_order=1)
        assert value == pytest.approx(100.0 * 1 / 4)

    def test_bleu1_vs_bleu4_on_random_corpus(self) -> None:
        # Holds on ordinary text; adversarial alternating patterns can break
        # it, so the corpus is fixed by seed rather than hypothesis-searched.
        rng = random.Random(90125)
        vocab = ["oct", "edema", "retina", "macula", "fluid", "normal", "left", "eye"]
        for _ in range(500):
            cand = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            assert bleu(cand, ref, max_order=1) >= bleu(cand, ref, max_order=4)


class TestCorpusBleu:
    def test_identity_corpus_is_100(self) -> None:
        tokens = tokenize("macular edema in the left eye")
        assert corpus_bleu([(tokens, tokens)] * 3, max_order=4) == pytest.approx(100.0)

    def test_hand_pooled_counts(self) -> None:
        # Pooled unigrams: (2 + 1) matched of 4 total, equal lengths -> 75.
        pairs = [(list("ab"), list("ab")), (list("cd"), list("cx"))]
        assert corpus_bleu(pairs, max_order=1) == pytest.approx(75.0)

    def test_differs_from_macro_average(self) -> None:
        pairs = [(list("ab"), list("ab")), (list("cdef"), list("cxyz"))]
        macro = sum(bleu(c, r, max_order=1) for c, r in pairs) / 2
        pooled = corpus_bleu(pairs, max_order=1)
        # Pooling weights the longer pair more: (2 + 1) / 6 vs (100 + 25) / 2.
        assert pooled == pytest.approx(50.0)
        assert macro == pytest.approx(62.5)

    def test_empty_corpus_is_zero(self) -> None:
        assert corpus_bleu([], max_order=1) == 0.0
        assert corpus_bleu([([], ["a"])], max_order=1) == 0.0


def test_token_f1_plugin_keeps_its_own_name() -> None:
    metric = TokenF1Metric()
    assert metric.name == "token-F1"
    assert metric.score("the cat", "the dog") == pytest.approx(50.0)


class TestRougeL:
    def test_identity(self) -> None:
        assert rouge_l(["a", "b", "c"], ["a", "b", "c"]) == pytest.approx(100.0)

    def test_hand_counted_prefix_case(self) -> None:
        value = rouge_l(tokenize("the cat sat"), tokenize("the cat sat down"))
        assert value == pytest.approx(85.71, abs=0.01)

    def test_disjoint_is_zero(self) -> None:
        assert rouge_l(["a", "b"], ["c", "d"]) == 0.0

    def test_empty_is_zero(self) -> None:
        assert rouge_l([], ["a"]) == 0.0

    def test_dp_equals_brute_force_on_short_pairs(self) -> None:
        rng = random.Random(4242)
        vocab = list("abcde")
        for _ in range(300):
            a = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            b = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            lcs = brute_force_lcs(a, b)
            if not a or not b or lcs == 0:
                assert rouge_l(a, b) == 0.0
                continue
            precision = lcs / len(a)
            recall = lcs / len(b)
            expected = 100.0 * 2 * precision * recall / (precision + recall)
            assert rouge_l(a, b) == pytest.approx(expected)

    @given(
        st.lists(st.sampled_from("abc"), max_size=10),
        st.lists(st.sampled_from("abc"), max_size=10),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, a: list[str], b: list[str]) -> None:
        assert rouge_l(a, b) == pytest.approx(rouge_l(b, a))


class TestTokenF1:
    def test_hand_counted_half_overlap(self) -> None:
        assert token_f1(["the", "cat"], ["the", "dog"]) == pytest.approx(50.0)

    def test_identity(self) -> None:
        assert token_f1(["a", "b"], ["a", "b"]) == pytest.approx(100.0)

    def test_disjoint(self) -> None:
        assert token_f1(["a"], ["b"]) == 0.0

    @given(
        st.lists(st.sampled_from("abcd"), max_size=12),
        st.lists(st.sampled_from("abcd"), max_size=12),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_order_invariant(self, a: list[str], b: list[str]) -> None:
        assert token_f1(a, b) == pytest.approx(token_f1(b, a))
        shuffled_a = sorted(a)
        shuffled_b = sorted(b, reverse=True)
        assert token_f1(shuffled_a, shuffled_b) == pytest.approx(token_f1(a, b))

    @given(
        st.lists(st.sampled_from("abcd"), max_size=12),
        st.lists(st.sampled_from("abcd"), max_size=12),
    )
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, a: list[str], b: list[str]) -> None:
        assert 0.0 <= token_f1(a, b) <= 100.0
        assert 0.0 <= rouge_l(a, b) <= 100.0
        assert 0.0 <= bleu(a, b, max_order=1) <= 100.0
        assert 0.0 <= bleu(a, b, max_order=4) <= 100.0


OPTIONS = (
    ("A", "Cataract"),
    ("B", "Glaucoma"),
    ("C", "Diabetic retinopathy"),
    ("D", "Normal fundus"),
)

# Hand-labeled extraction fixture: (prediction text, gold letter, expected correct).
EXTRACTION_FIXTURE: tuple[tuple[str, str, bool], ...] = (
    ("B", "B", True),
    ("B.", "B", True),
    ("(B)", "B", True),
    ("B) Glaucoma", "B", True),
    ("Answer: B", "B", True),
    ("The answer is B.", "B", True),
    ("b", "B", True),
    ("  B)  Glaucoma  ", "B", True),
    ("Glaucoma", "B", True),
    ("glaucoma", "B", True),
    ("The answer is glaucoma.", "B", True),
    ("I think it shows glaucoma, not cataract.", "B", False),
    ("A", "B", False),
    ("Answer: A", "B", False),
    ("It could be A or B.", "B", False),
    ("Diabetic retinopathy", "B", False),
    ("", "B", False),
    ("The patient has severe diabetic retinopathy with hemorrhages.", "C", True),
    ("(C) Diabetic retinopathy", "C", True),
    ("Normal fundus, no disease; definitely not glaucoma.", "D", False),
)


def _closed_record(gold: str) -> VqaRecord:
    return VqaRecord(
        id="q",
        image_ref="img.png",
        modality=ImagingModality.FUNDUS,
        task=TaskKind.CLOSED_QA,
        question="Which condition is shown?",
        reference_answer=gold,
        options=OPTIONS,
    )


class TestClosedAccuracy:
    @pytest.mark.parametrize("prediction,gold,expected", EXTRACTION_FIXTURE)
    def test_fixture_case(self, prediction: str, gold: str, expected: bool) -> None:
        assert closed_accuracy(prediction, _closed_record(gold)) is expected

    def test_fixture_accuracy_total(self) -> None:
        correct = sum(
            closed_accuracy(pred, _closed_record(gold)) for pred, gold, _ in EXTRACTION_FIXTURE
        )
        hand_count = sum(expected for _, _, expected in EXTRACTION_FIXTURE)
        assert correct == hand_count == 13

    def test_requires_closed_record(self) -> None:
        record = VqaRecord(
            id="q",
            image_ref="img.png",
            modality=ImagingModality.OCT,
            task=TaskKind.OPEN_QA,
            question="?",
            reference_answer="x",
        )
        with pytest.raises(ValueError):
            closed_accuracy("x", record)

    def test_whitespace_and_case_invariance(self) -> None:
        record = _closed_record("B")
        for text in ("answer: b", "  ANSWER: B  ", "\tAnswer:B\n"):
            assert closed_accuracy(text, record) is True

    def test_ambiguous_tier_does_not_fall_through(self) -> None:
        # Two letters at tier 1 is final, even though exactly one option
        # text ("Glaucoma") would match at tier 2.
        assert extract_choice("Answer: A or (B) Glaucoma", OPTIONS) is None

    def test_normalized_substring_tier(self) -> None:
        assert extract_choice("it is a normal-fundus image", OPTIONS) == "D"
