import pytest

from libs.orpheus_score.domain.score import (
    C_MAJOR,
    ChordQuality,
    ChordSymbol,
    Duration,
    KeySignature,
    Measure,
    Mode,
    NoteEvent,
    Pitch,
    Score,
    is_normalized,
    measure_tick_sum,
    normalization_problems,
    transpose_pitch,
)
from libs.orpheus_score.errors import DurationError, PitchRangeError


@pytest.mark.parametrize(("midi", "shift", "expected"), [(60, 5, 65), (67, 0, 67), (48, -1, 47)])
def test_transpose_pitch(midi, shift, expected):
    assert transpose_pitch(Pitch(midi), shift) == Pitch(expected)


def test_transpose_pitch_out_of_midi_range():
    with pytest.raises(PitchRangeError):
        transpose_pitch(Pitch(120), 12)


@pytest.mark.parametrize(
    ("durations", "expected"),
    [((48, 48, 48, 48), 192), ((), 0), ((48, 48, 72), 168)],
)
def test_measure_tick_sum(durations, expected):
    measure = Measure(tuple(NoteEvent.note(60, ticks) for ticks in durations))
    assert measure_tick_sum(measure) == expected


def test_value_objects_validate():
    with pytest.raises(DurationError):
        Duration(0)
    with pytest.raises(PitchRangeError):
        Pitch(128)
    with pytest.raises(ValueError, match="rest"):
        NoteEvent(NoteEvent.rest(4).kind, Duration(4), Pitch(60))
    with pytest.raises(ValueError, match="tied"):
        NoteEvent(NoteEvent.rest(4).kind, Duration(4), tied_to_next=True)
    with pytest.raises(ValueError, match="pitch class"):
        ChordSymbol(12, ChordQuality.MAJ)
    with pytest.raises(ValueError, match="strictly increasing"):
        Measure((NoteEvent.note(60, 192),), (ChordSymbol(0, ChordQuality.MAJ, 0), ChordSymbol(7, ChordQuality.MAJ, 0)))


def test_event_onsets_and_full_measure():
    measure = Measure((NoteEvent.note(60, 48), NoteEvent.rest(96), NoteEvent.note(62, 48)))
    assert measure.event_onsets() == [0, 48, 144]
    assert measure.is_full()
    assert [event.midi for event in measure.notes()] == [60, 62]


def test_source_id_does_not_affect_equality():
    measure = Measure((NoteEvent.note(60, 192),))
    assert Score(C_MAJOR, (measure,), source_id="a") == Score(C_MAJOR, (measure,), source_id="b")


def test_chord_name_uses_sharp_spelling():
    assert ChordSymbol(1, ChordQuality.MIN7).name == "C#min7"


def test_normalization_problems_lists_every_violation():
    score = Score(
        KeySignature(7, Mode.MAJOR),
        (Measure((NoteEvent.note(40, 6), NoteEvent.note(60, 48))),),
        meter=(3, 4),
    )
    problems = normalization_problems(score)

    assert any("key" in problem for problem in problems)
    assert any("meter" in problem for problem in problems)
    assert any("sums to 54" in problem for problem in problems)
    assert any("off grid" in problem for problem in problems)
    assert any("out of range" in problem for problem in problems)
    assert not is_normalized(score)


def test_chord_inside_an_event_is_a_problem():
    measure = Measure(
        (NoteEvent.note(60, 96), NoteEvent.note(62, 96)),
        (ChordSymbol(0, ChordQuality.MAJ, 0), ChordSymbol(7, ChordQuality.DOM7, 48)),
    )
    score = Score(C_MAJOR, (measure,))

    assert normalization_problems(score) == ["measure 0 chord at onset 48 falls inside an event"]
    assert is_normalized(score.with_measures((Measure(measure.events, measure.chords[:1]),)))


def test_measure_length_follows_resolution_and_meter():
    assert Score(C_MAJOR).measure_length == 192
    assert Score(C_MAJOR, meter=(3, 4), resolution=384).measure_length == 288
