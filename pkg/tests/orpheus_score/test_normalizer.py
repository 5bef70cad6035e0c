from fractions import Fraction

import numpy as np
import pytest

from libs.orpheus_score.domain.normalizer import (
    RepairReport,
    normalize,
    regrid_durations,
    repair_measures,
    strip_invalid,
    transpose_to_c,
    transposition_shift,
)
from libs.orpheus_score.domain.score import (
    C_MAJOR,
    TICKS_PER_MEASURE,
    ChordQuality,
    ChordSymbol,
    KeySignature,
    Measure,
    Mode,
    NoteEvent,
    Score,
    is_normalized,
)
from libs.orpheus_score.errors import UnsupportedMeterError
from libs.orpheus_score.infrastructure.abc_io import parse_abc


def _bar(*events: NoteEvent, chords: tuple[ChordSymbol, ...] = ()) -> Measure:
    return Measure(tuple(events), chords)


@pytest.mark.parametrize(
    ("key", "expected"),
    [
        (KeySignature(0), 0),
        (KeySignature(7), 5),
        (KeySignature(2), -2),
        (KeySignature(6), -6),
        (KeySignature(9, Mode.MINOR), 0),
        (KeySignature(2, Mode.MINOR), -5),
        (KeySignature(4, Mode.MINOR), 5),
    ],
)
def test_transposition_shift_prefers_smaller_move(key, expected):
    assert transposition_shift(key) == expected


def test_c_major_input_is_unchanged():
    score = Score(C_MAJOR, (_bar(NoteEvent.note(64, 192)),))
    assert transpose_to_c(score) == score


def test_g_major_shifts_up_a_fourth():
    score = Score(
        KeySignature(7),
        (_bar(NoteEvent.note(67, 192), chords=(ChordSymbol(7, ChordQuality.MAJ),)),),
    )

    transposed = transpose_to_c(score)

    assert transposed.key == C_MAJOR
    assert transposed.measures[0].events[0].midi == 72
    assert transposed.measures[0].chords[0].root == 0


def test_d_major_shifts_down_a_tone():
    score = Score(KeySignature(2), (_bar(NoteEvent.note(66, 192)),))
    assert transpose_to_c(score).measures[0].events[0].midi == 64


def test_transposition_folds_out_of_range_pitches():
    score = Score(KeySignature(7), (_bar(NoteEvent.note(105, 96), NoteEvent.note(60, 96)),))

    normalized, report = normalize(score)

    assert [event.midi for event in normalized.measures[0].events] == [98, 65]
    assert report.clamped == 1


@pytest.mark.parametrize("mode", list(Mode))
@pytest.mark.parametrize("tonic", range(12))
def test_every_key_preserves_intervals(tonic, mode):
    melody = [tonic + 60 + step for step in (0, 2, 4, 5, 7, 9, 11, 12)]
    score = Score(
        KeySignature(tonic, mode),
        (
            _bar(*(NoteEvent.note(midi, 48) for midi in melody[:4])),
            _bar(*(NoteEvent.note(midi, 48) for midi in melody[4:])),
        ),
    )

    normalized, report = normalize(score)
    pitches = [event.midi for event in normalized.notes()]

    assert report.clamped == 0
    assert np.diff(pitches).tolist() == np.diff(melody).tolist()
    assert pitches[0] % 12 == (9 if mode is Mode.MINOR else 0)
    assert normalized.key == C_MAJOR


@pytest.mark.parametrize(
    ("resolution", "ticks", "expected"),
    [
        (8, 2, 48),  # L:1/8 "A2"
        (8, 1, 24),  # L:1/4 "A/2"
        (12, 1, 16),  # triplet eighth
    ],
)
def test_regrid_durations(resolution, ticks, expected):
    score = Score(C_MAJOR, (_bar(NoteEvent.note(69, ticks)),), resolution=resolution)

    regridded = regrid_durations(score)

    assert regridded.measures[0].events[0].ticks == expected
    assert regridded.resolution == TICKS_PER_MEASURE


def test_regrid_with_explicit_source_unit():
    score = Score(C_MAJOR, (_bar(NoteEvent.note(69, 2)),))
    assert regrid_durations(score, Fraction(1, 8)).measures[0].events[0].ticks == 48


@pytest.mark.parametrize(("ticks", "expected"), [(5, 4), (13, 8), (1, 4), (6, 4), (14, 8)])
def test_regrid_snaps_to_four_tick_grid(ticks, expected):
    score = Score(C_MAJOR, (_bar(NoteEvent.note(60, ticks)),), resolution=384)
    assert regrid_durations(score).measures[0].events[0].ticks == expected


def test_regrid_moves_chords_to_event_boundaries():
    score = Score(
        C_MAJOR,
        (
            _bar(
                NoteEvent.note(60, 96),
                NoteEvent.note(62, 96),
                NoteEvent.note(64, 192),
                chords=(ChordSymbol(5, ChordQuality.MAJ, 100),),
            ),
        ),
        resolution=384,
    )
    assert regrid_durations(score).measures[0].chords[0].onset == 96


class TestRepairMeasures:
    def test_short_measure_is_padded(self):
        score = Score(C_MAJOR, (_bar(NoteEvent.note(60, 48), NoteEvent.note(60, 48), NoteEvent.note(60, 72)),))

        repaired, report = repair_measures(score)

        events = repaired.measures[0].events
        assert events[-1] == NoteEvent.rest(24)
        assert sum(event.ticks for event in events) == 192
        assert report == RepairReport(padded=1)

    def test_overfull_measure_is_discarded(self):
        score = Score(C_MAJOR, (_bar(NoteEvent.note(60, 100), NoteEvent.note(60, 100)),))

        repaired, report = repair_measures(score)

        assert repaired.measures == ()
        assert report.discarded == 1

    def test_full_measure_is_untouched(self):
        score = Score(C_MAJOR, (_bar(NoteEvent.note(60, 192)),))

        repaired, report = repair_measures(score)

        assert repaired == score
        assert report == RepairReport(untouched=1)


def test_strip_invalid_clears_final_tie():
    score = Score(C_MAJOR, (_bar(NoteEvent.note(60, 96), NoteEvent.note(60, 96, tied=True)),))
    assert not strip_invalid(score).measures[0].events[-1].tied_to_next


def test_normalize_g_major_tune_keeps_contour():
    source = parse_abc('L:1/8\nK:G\n"G"GABc dBGB|"D"A2FA DFAF|')

    normalized, report = normalize(source)

    original = [event.midi for event in source.notes()]
    result = [event.midi for event in normalized.notes()]
    assert np.diff(result).tolist() == np.diff(original).tolist()
    assert [chord.root for measure in normalized.measures for chord in measure.chords] == [0, 7]
    assert report.untouched == 2
    assert is_normalized(normalized)


def test_already_normalized_score_is_identity(score_factory):
    score = score_factory(11)

    normalized, report = normalize(score)

    assert normalized == score
    assert report == RepairReport(untouched=len(score.measures))


def test_all_overflowing_measures_yield_empty_score():
    overfull = _bar(NoteEvent.note(60, 192), NoteEvent.note(62, 4))
    normalized, report = normalize(Score(C_MAJOR, (overfull, overfull, overfull)))

    assert normalized.measures == ()
    assert report.discarded == 3


def test_non_common_time_is_rejected():
    with pytest.raises(UnsupportedMeterError):
        normalize(Score(C_MAJOR, meter=(3, 4)))


def test_repair_report_addition_and_dict():
    total = RepairReport(padded=1, snapped=2) + RepairReport(padded=1, discarded=3)
    assert total.to_dict() == {"padded": 2, "discarded": 3, "untouched": 0, "snapped": 2, "clamped": 0}


def _defective_score(rng: np.random.Generator) -> Score:
    """Random key, 1/384 resolution, off-grid lengths, short and overfull bars, wild pitches."""
    measures: list[Measure] = []
    for _ in range(int(rng.integers(1, 9))):
        target = int(rng.choice([384, 384, 336, 200, 420, 500]))
        events: list[NoteEvent] = []
        position = 0
        while position < target:
            ticks = min(int(rng.integers(1, 97)), target - position)
            if rng.random() < 0.8:
                events.append(NoteEvent.note(int(rng.integers(24, 121)), ticks, tied=bool(rng.random() < 0.1)))
            else:
                events.append(NoteEvent.rest(ticks))
            position += ticks
        onsets = sorted({int(value) for value in rng.integers(0, 384, size=int(rng.integers(0, 4)))})
        chords = tuple(ChordSymbol(int(rng.integers(0, 12)), ChordQuality.MIN, onset) for onset in onsets)
        measures.append(Measure(tuple(events), chords))
    key = KeySignature(int(rng.integers(0, 12)), Mode.MINOR if rng.random() < 0.5 else Mode.MAJOR)
    return Score(key, tuple(measures), resolution=384)


def test_defect_corpus_normalizes_and_is_idempotent():
    rng = np.random.default_rng(2024)
    totals = RepairReport()
    for _ in range(200):
        normalized, report = normalize(_defective_score(rng))
        totals = totals + report

        assert is_normalized(normalized)
        assert all(measure.is_full() for measure in normalized.measures)

        again, second = normalize(normalized)
        assert again == normalized
        assert second == RepairReport(untouched=len(normalized.measures))

    assert totals.padded > 0
    assert totals.discarded > 0
    assert totals.snapped > 0
    assert totals.clamped > 0
