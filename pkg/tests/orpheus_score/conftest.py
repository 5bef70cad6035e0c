"""Shared fixtures: seeded random normalized scores and small ABC corpora."""

from __future__ import annotations

import re
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from libs.orpheus_score.domain.score import (
    C_MAJOR,
    GRID,
    MAX_PITCH,
    MIN_PITCH,
    TICKS_PER_MEASURE,
    ChordQuality,
    ChordSymbol,
    Measure,
    NoteEvent,
    Score,
)

ScoreFactory = Callable[..., Score]

CORPUS_TUNES = {
    "reel": 'X:1\nT:Reel\nM:4/4\nL:1/8\nK:G\n"G"GABc dBGB|"D"A2FA DFAF|"G"GABc dBGB|"C"c2ec "D"A2FA|\n',
    "air": 'X:2\nT:Air\nC:Trad\nM:4/4\nL:1/4\nK:Dm\n"Dm"D F A d|"A7"^c2 e2|"Dm"d4|\n',
    "jig_in_common": "X:3\nM:C\nL:1/8\nK:F\nFAc fcA|B2d g2B|(3FGA B2 c4|\n",
    "hornpipe": 'X:4\nM:4/4\nL:1/16\nK:Bb\n"Bb"B2d2f2d2 B4F4|"F"c2e2 a2f2 c8|\n',
}


def _random_measure(rng: np.random.Generator) -> Measure:
    events: list[NoteEvent] = []
    position = 0
    while position < TICKS_PER_MEASURE:
        remaining = (TICKS_PER_MEASURE - position) // GRID
        ticks = int(rng.integers(1, min(remaining, 24) + 1)) * GRID
        if rng.random() < 0.8:
            events.append(NoteEvent.note(int(rng.integers(MIN_PITCH, MAX_PITCH + 1)), ticks))
        else:
            events.append(NoteEvent.rest(ticks))
        position += ticks

    # Ties only between two consecutive notes.
    for index in range(len(events) - 1):
        if events[index].is_note and events[index + 1].is_note and rng.random() < 0.15:
            events[index] = NoteEvent.note(events[index].midi, events[index].ticks, tied=True)

    onsets = Measure(tuple(events)).event_onsets()
    chord_count = int(rng.integers(0, min(len(onsets), 3) + 1))
    chosen = sorted(rng.choice(onsets, size=chord_count, replace=False).tolist()) if chord_count else []
    qualities = list(ChordQuality)
    chords = tuple(
        ChordSymbol(int(rng.integers(0, 12)), qualities[int(rng.integers(0, len(qualities)))], int(onset))
        for onset in chosen
    )
    return Measure(tuple(events), chords)


def random_normalized_score(rng: np.random.Generator, measures: int) -> Score:
    built = [_random_measure(rng) for _ in range(measures)]
    if built:
        last = built[-1]
        final = last.events[-1]
        if final.tied_to_next:
            built[-1] = Measure((*last.events[:-1], NoteEvent.note(final.midi, final.ticks)), last.chords)
    return Score(key=C_MAJOR, measures=tuple(built))


@pytest.fixture
def score_factory() -> ScoreFactory:
    """``score_factory(seed, measures=8)`` builds a random normalized score."""

    def build(seed: int, measures: int = 8) -> Score:
        return random_normalized_score(np.random.default_rng(seed), measures)

    return build


@pytest.fixture
def abc_corpus(tmp_path: Path) -> Path:
    """A directory of small but realistic ABC tunes in several keys."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for name, text in CORPUS_TUNES.items():
        (corpus / f"{name}.abc").write_text(text, encoding="utf-8")
    return corpus


CORPUS_KEYS = ("C", "G", "D", "A", "E", "F", "Bb", "Eb", "Am", "Em", "Bm", "Dm", "Gm")


@pytest.fixture
def large_abc_corpus(tmp_path: Path) -> Path:
    """Fifty tunes: the small corpus restated under different key signatures."""
    corpus = tmp_path / "large_corpus"
    corpus.mkdir()
    variants = [(name, text, key) for key in CORPUS_KEYS for name, text in CORPUS_TUNES.items()]
    for name, text, key in variants[:50]:
        restated = re.sub(r"^K:.*$", f"K:{key}", text, count=1, flags=re.MULTILINE)
        (corpus / f"{name}_{key.lower()}.abc").write_text(restated, encoding="utf-8")
    return corpus
