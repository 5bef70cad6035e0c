"""Token-level word error rate."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import TypeVar

import numpy as np

from libs.python.orpheus_logging import LogCategory, get_logger

from ..errors import EmptyCorpusError, UndefinedWerError

T = TypeVar("T")

TYPICAL_WER_BAND = (0.30, 0.50)


class EditOp(StrEnum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class WerResult:
    rate: float
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def to_dict(self) -> dict[str, float | int]:
        return {
            "wer": self.rate,
            "S": self.substitutions,
            "D": self.deletions,
            "I": self.insertions,
            "N": self.reference_length,
        }


def edit_distance_matrix(reference: Sequence[T], hypothesis: Sequence[T]) -> np.ndarray:
    """Levenshtein DP table with unit costs; cell ``[i, j]`` aligns prefixes of length i and j."""
    rows, cols = len(reference) + 1, len(hypothesis) + 1
    table = np.zeros((rows, cols), dtype=np.int64)
    table[:, 0] = np.arange(rows)
    table[0, :] = np.arange(cols)
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if reference[i - 1] == hypothesis[j - 1] else 1
            table[i, j] = min(
                table[i - 1, j - 1] + cost,
                table[i - 1, j] + 1,
                table[i, j - 1] + 1,
            )
    return table


def align(reference: Sequence[T], hypothesis: Sequence[T]) -> list[EditOp]:
    """
    One minimum-cost alignment, in reference order.

    The backtrace prefers the diagonal, so a substitution wins over an
    equally cheap deletion/insertion pair.
    """
    table = edit_distance_matrix(reference, hypothesis)
    ops: list[EditOp] = []
    i, j = len(reference), len(hypothesis)
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = reference[i - 1] == hypothesis[j - 1]
            if table[i, j] == table[i - 1, j - 1] + (0 if same else 1):
                ops.append(EditOp.MATCH if same else EditOp.SUBSTITUTE)
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i, j] == table[i - 1, j] + 1:
            ops.append(EditOp.DELETE)
            i -= 1
        else:
            ops.append(EditOp.INSERT)
            j -= 1
    ops.reverse()
    return ops


def wer(reference: Sequence[T], hypothesis: Sequence[T]) -> WerResult:
    """(S + D + I) / N over one aligned pair; may exceed 1.0."""
    if not reference:
        raise UndefinedWerError("WER is undefined for an empty reference")
    ops = align(reference, hypothesis)
    substitutions = ops.count(EditOp.SUBSTITUTE)
    deletions = ops.count(EditOp.DELETE)
    insertions = ops.count(EditOp.INSERT)
    return WerResult(
        rate=(substitutions + deletions + insertions) / len(reference),
        substitutions=substitutions,
        deletions=deletions,
        insertions=insertions,
        reference_length=len(reference),
    )


def wer_corpus(pairs: Iterable[tuple[Sequence[T], Sequence[T]]]) -> WerResult:
    """Pooled WER: total errors over total reference length."""
    results = [wer(reference, hypothesis) for reference, hypothesis in pairs]
    if not results:
        raise EmptyCorpusError("WER needs at least one reference/hypothesis pair")

    substitutions = sum(r.substitutions for r in results)
    deletions = sum(r.deletions for r in results)
    insertions = sum(r.insertions for r in results)
    total = sum(r.reference_length for r in results)
    pooled = WerResult(
        rate=(substitutions + deletions + insertions) / total,
        substitutions=substitutions,
        deletions=deletions,
        insertions=insertions,
        reference_length=total,
    )
    low, high = TYPICAL_WER_BAND
    if not low <= pooled.rate <= high:
        get_logger(LogCategory.APP, stage="wer").info(
            "corpus WER {rate} lies outside the typical {low}-{high} band",
            rate=pooled.rate,
            low=low,
            high=high,
            pairs=len(results),
        )
    return pooled
