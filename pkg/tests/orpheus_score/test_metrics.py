import itertools
from functools import lru_cache

import numpy as np
import pytest

from libs.orpheus_score.domain import metrics
from libs.orpheus_score.domain.metrics import EditOp, align, edit_distance_matrix, wer, wer_corpus
from libs.orpheus_score.errors import EmptyCorpusError, UndefinedWerError

ALPHABET = "abcd"


@lru_cache(maxsize=None)
def _levenshtein(reference: tuple[str, ...], hypothesis: tuple[str, ...]) -> int:
    """Plain recursion over the three edit choices at the head of both sequences."""
    if not reference:
        return len(hypothesis)
    if not hypothesis:
        return len(reference)
    head = 0 if reference[0] == hypothesis[0] else 1
    return min(
        _levenshtein(reference[1:], hypothesis[1:]) + head,
        _levenshtein(reference[1:], hypothesis) + 1,
        _levenshtein(reference, hypothesis[1:]) + 1,
    )


def _sequences(max_length: int):
    for length in range(max_length + 1):
        yield from itertools.product(ALPHABET, repeat=length)


def test_identical_sequences():
    result = wer(list("abcde"), list("abcde"))
    assert (result.rate, result.substitutions, result.deletions, result.insertions, result.reference_length) == (
        0.0,
        0,
        0,
        0,
        5,
    )


def test_substitution_and_deletion():
    result = wer(list("abcd"), list("axc"))
    assert (result.substitutions, result.deletions, result.insertions) == (1, 1, 0)
    assert result.rate == 0.5


def test_empty_hypothesis_is_all_deletions():
    result = wer(list("abcde"), [])
    assert result.deletions == 5
    assert result.rate == 1.0


def test_empty_reference_is_undefined():
    with pytest.raises(UndefinedWerError):
        wer([], ["a"])


def test_rate_uses_reference_length_in_both_directions():
    forward = wer(list("abcd"), list("a"))
    backward = wer(list("a"), list("abcd"))

    assert forward.errors == backward.errors == 3
    assert forward.rate == 0.75
    assert backward.rate == 3.0


def test_substitution_preferred_over_insert_delete_pair():
    assert align(["a"], ["b"]) == [EditOp.SUBSTITUTE]


def test_exhaustive_short_sequences_match_brute_force():
    short = list(_sequences(3))
    for reference in short:
        for hypothesis in short:
            expected = _levenshtein(reference, hypothesis)
            assert int(edit_distance_matrix(reference, hypothesis)[-1, -1]) == expected
            if reference:
                assert wer(reference, hypothesis).errors == expected


def test_random_long_sequences_match_brute_force():
    rng = np.random.default_rng(8)
    for _ in range(2_000):
        reference = tuple(rng.choice(list(ALPHABET), size=int(rng.integers(1, 9))).tolist())
        hypothesis = tuple(rng.choice(list(ALPHABET), size=int(rng.integers(0, 9))).tolist())
        result = wer(reference, hypothesis)
        assert result.errors == _levenshtein(reference, hypothesis)
        assert wer(reference, reference).rate == 0.0


def test_alignment_reconstructs_hypothesis():
    reference, hypothesis = list("abcabd"), list("xbcbdd")
    ops = align(reference, hypothesis)
    assert len([op for op in ops if op is not EditOp.INSERT]) == len(reference)
    assert len([op for op in ops if op is not EditOp.DELETE]) == len(hypothesis)


class TestCorpus:
    def test_single_pair_equals_wer(self):
        pair = (list("abcd"), list("axc"))
        assert wer_corpus([pair]) == wer(*pair)

    def test_pooled_not_averaged(self):
        pairs = [(list("abcd"), list("abxy")), (list("abcdef"), list("abcdef"))]
        assert wer_corpus(pairs).rate == pytest.approx(0.2)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            wer_corpus([])

    def test_to_dict_keys(self):
        assert wer_corpus([(list("ab"), list("ab"))]).to_dict() == {"wer": 0.0, "S": 0, "D": 0, "I": 0, "N": 2}

    @pytest.mark.parametrize(
        ("hypothesis", "logged"),
        [("abcdefghij", True), ("abcdXXXXXX", True), ("abcdefgXXX", False), ("abcdeXXXXX", False)],
    )
    def test_rates_outside_typical_band_are_noted(self, monkeypatch, hypothesis, logged):
        messages: list[str] = []

        class _Recorder:
            def info(self, template, /, **attributes):
                messages.append(template)

        monkeypatch.setattr(metrics, "get_logger", lambda *args, **kwargs: _Recorder())

        wer_corpus([(list("abcdefghij"), list(hypothesis))])

        assert bool(messages) is logged
