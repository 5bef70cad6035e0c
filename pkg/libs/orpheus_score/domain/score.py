"""Core music value objects on a 1/192-whole-note tick grid."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from enum import StrEnum

from ..errors import DurationError, PitchRangeError

TICKS_PER_WHOLE = 192
TICKS_PER_MEASURE = 192
GRID = 4
MIN_PITCH = 48
MAX_PITCH = 107
MIDI_MIN = 0
MIDI_MAX = 127

C_MAJOR_PITCH_CLASSES = frozenset({0, 2, 4, 5, 7, 9, 11})
PITCH_CLASS_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def pitch_class_name(pitch_class: int) -> str:
    """Sharp spelling of a pitch class (0 = C)."""
    return PITCH_CLASS_NAMES[pitch_class % 12]


@dataclass(frozen=True, order=True)
class Pitch:
    """MIDI note number; 60 is middle C (ABC ``C``)."""

    midi: int

    def __post_init__(self) -> None:
        if not MIDI_MIN <= self.midi <= MIDI_MAX:
            raise PitchRangeError(f"MIDI pitch {self.midi} outside {MIDI_MIN}..{MIDI_MAX}")

    @property
    def pitch_class(self) -> int:
        return self.midi % 12


@dataclass(frozen=True)
class Duration:
    """Length in ticks of the owning score's resolution (1/192 whole note once normalized)."""

    ticks: int

    def __post_init__(self) -> None:
        if self.ticks <= 0:
            raise DurationError(f"duration must be positive, got {self.ticks} ticks")

    def on_grid(self) -> bool:
        return self.ticks % GRID == 0


class EventKind(StrEnum):
    NOTE = "note"
    REST = "rest"


@dataclass(frozen=True)
class NoteEvent:
    """A note or a rest. Rests carry no pitch and are never tied."""

    kind: EventKind
    duration: Duration
    pitch: Pitch | None = None
    tied_to_next: bool = False

    def __post_init__(self) -> None:
        if self.kind is EventKind.REST:
            if self.pitch is not None:
                raise ValueError("rest events carry no pitch")
            if self.tied_to_next:
                raise ValueError("rest events cannot be tied")
        elif self.pitch is None:
            raise ValueError("note events need a pitch")

    @classmethod
    def note(cls, midi: int, ticks: int, *, tied: bool = False) -> NoteEvent:
        return cls(EventKind.NOTE, Duration(ticks), Pitch(midi), tied)

    @classmethod
    def rest(cls, ticks: int) -> NoteEvent:
        return cls(EventKind.REST, Duration(ticks))

    @property
    def is_note(self) -> bool:
        return self.kind is EventKind.NOTE

    @property
    def ticks(self) -> int:
        return self.duration.ticks

    @property
    def midi(self) -> int:
        """Pitch of a note; raises for rests."""
        if self.pitch is None:
            raise ValueError("rest has no pitch")
        return self.pitch.midi

    def with_pitch(self, midi: int) -> NoteEvent:
        return replace(self, pitch=Pitch(midi))

    def with_ticks(self, ticks: int) -> NoteEvent:
        return replace(self, duration=Duration(ticks))


class ChordQuality(StrEnum):
    MAJ = "maj"
    MIN = "min"
    DOM7 = "dom7"
    MIN7 = "min7"
    MAJ7 = "maj7"
    DIM = "dim"
    AUG = "aug"
    SUS4 = "sus4"


@dataclass(frozen=True)
class ChordSymbol:
    """Chord root (pitch class) and quality sounding from ``onset`` ticks into its measure."""

    root: int
    quality: ChordQuality
    onset: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.root <= 11:
            raise ValueError(f"chord root must be a pitch class 0..11, got {self.root}")
        if self.onset < 0:
            raise ValueError(f"chord onset must be non-negative, got {self.onset}")

    @property
    def name(self) -> str:
        return f"{pitch_class_name(self.root)}{self.quality.value}"


@dataclass(frozen=True)
class Measure:
    events: tuple[NoteEvent, ...] = ()
    chords: tuple[ChordSymbol, ...] = ()

    def __post_init__(self) -> None:
        onsets = [chord.onset for chord in self.chords]
        if any(later <= earlier for earlier, later in zip(onsets, onsets[1:], strict=False)):
            raise ValueError(f"chord onsets must be strictly increasing, got {onsets}")

    def event_onsets(self) -> list[int]:
        """Start tick of every event, in order."""
        onsets: list[int] = []
        position = 0
        for event in self.events:
            onsets.append(position)
            position += event.ticks
        return onsets

    def notes(self) -> Iterator[NoteEvent]:
        return (event for event in self.events if event.is_note)

    def is_full(self) -> bool:
        return measure_tick_sum(self) == TICKS_PER_MEASURE


class Mode(StrEnum):
    MAJOR = "major"
    MINOR = "minor"


@dataclass(frozen=True)
class KeySignature:
    tonic: int
    mode: Mode = Mode.MAJOR

    def __post_init__(self) -> None:
        if not 0 <= self.tonic <= 11:
            raise ValueError(f"key tonic must be a pitch class 0..11, got {self.tonic}")


C_MAJOR = KeySignature(0, Mode.MAJOR)


@dataclass(frozen=True)
class Score:
    """
    An ordered list of measures plus key and meter.

    ``resolution`` is the number of ticks per whole note that event durations
    and chord onsets are counted in; normalized scores use 192. ``source_id``
    records provenance and is ignored by equality.
    """

    key: KeySignature
    measures: tuple[Measure, ...] = ()
    source_id: str = field(default="", compare=False)
    meter: tuple[int, int] = (4, 4)
    resolution: int = TICKS_PER_WHOLE

    @property
    def measure_length(self) -> int:
        """Ticks in one full measure at this score's resolution."""
        numerator, denominator = self.meter
        return self.resolution * numerator // denominator

    def notes(self) -> Iterator[NoteEvent]:
        return (event for measure in self.measures for event in measure.notes())

    def with_measures(self, measures: tuple[Measure, ...]) -> Score:
        return replace(self, measures=measures)


def transpose_pitch(p: Pitch, shift: int) -> Pitch:
    """Shift ``p`` by ``shift`` semitones; out-of-range results raise ``PitchRangeError``."""
    target = p.midi + shift
    if not MIDI_MIN <= target <= MIDI_MAX:
        raise PitchRangeError(f"{p.midi} shifted by {shift} leaves the MIDI range")
    return Pitch(target)


def measure_tick_sum(m: Measure) -> int:
    return sum(event.ticks for event in m.events)


def normalization_problems(s: Score) -> list[str]:
    """
    Lists every way ``s`` violates the normalized-score invariants.

    An empty list means the score is C major, 4/4 at 192 ticks per whole
    note, every measure sums to 192, every duration sits on the 4-tick grid,
    every pitch lies in 48..107 and every chord starts where an event starts.
    """
    problems: list[str] = []
    if s.key != C_MAJOR:
        problems.append(f"key is {s.key.tonic}/{s.key.mode.value}, expected C major")
    if s.meter != (4, 4):
        problems.append(f"meter is {s.meter[0]}/{s.meter[1]}, expected 4/4")
    if s.resolution != TICKS_PER_WHOLE:
        problems.append(f"resolution is {s.resolution}, expected {TICKS_PER_WHOLE}")
    for m_index, measure in enumerate(s.measures):
        total = measure_tick_sum(measure)
        if total != TICKS_PER_MEASURE:
            problems.append(f"measure {m_index} sums to {total} ticks")
        for e_index, event in enumerate(measure.events):
            if not event.duration.on_grid():
                problems.append(
                    f"measure {m_index} event {e_index} lasts {event.ticks} ticks (off grid)"
                )
            if event.is_note and not MIN_PITCH <= event.midi <= MAX_PITCH:
                problems.append(f"measure {m_index} event {e_index} pitch {event.midi} out of range")
        event_onsets = set(measure.event_onsets())
        for chord in measure.chords:
            if chord.onset >= TICKS_PER_MEASURE:
                problems.append(f"measure {m_index} chord at onset {chord.onset} past the bar")
            elif chord.onset not in event_onsets:
                problems.append(f"measure {m_index} chord at onset {chord.onset} falls inside an event")
    return problems


def is_normalized(s: Score) -> bool:
    return not normalization_problems(s)
