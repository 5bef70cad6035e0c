"""
Deterministic score → MIDI → audio rendering.

Melody notes are band-limited sawtooths on channel 0, chord tones are sines
on channel 1. Score ticks map 1:1 to MIDI ticks (48 per quarter note).
"""

from __future__ import annotations

import io
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import StrEnum

import mido
import numpy as np

from libs.python.orpheus_logging import LogCategory, get_logger

from ..domain.score import TICKS_PER_MEASURE, ChordQuality, ChordSymbol, Score, normalization_problems
from ..errors import RenderError

TICKS_PER_QUARTER = 48
DEFAULT_TEMPO_BPM = 213.0
DEFAULT_SAMPLE_RATE = 16_000
MELODY_CHANNEL, CHORD_CHANNEL = 0, 1
MELODY_VELOCITY, CHORD_VELOCITY = 90, 60
CHORD_BASE_MIDI = 48

ATTACK_S = 0.010
DECAY_TIME_CONSTANT_S = 0.6
RELEASE_TIME_CONSTANT_S = 0.020
RELEASE_TAIL_S = 0.1
PEAK_LEVEL = 0.9

CHORD_INTERVALS: dict[ChordQuality, tuple[int, ...]] = {
    ChordQuality.MAJ: (0, 4, 7),
    ChordQuality.MIN: (0, 3, 7),
    ChordQuality.DOM7: (0, 4, 7, 10),
    ChordQuality.MIN7: (0, 3, 7, 10),
    ChordQuality.MAJ7: (0, 4, 7, 11),
    ChordQuality.DIM: (0, 3, 6),
    ChordQuality.AUG: (0, 4, 8),
    ChordQuality.SUS4: (0, 5, 7),
}


class MidiMessageKind(StrEnum):
    NOTE_OFF = "note_off"
    NOTE_ON = "note_on"


@dataclass(frozen=True)
class MidiEvent:
    tick: int
    channel: int
    kind: MidiMessageKind
    key: int
    velocity: int

    def sort_key(self) -> tuple[int, int, int, int]:
        # Offs sort before ons on the same tick so a key can retrigger.
        return (self.tick, 0 if self.kind is MidiMessageKind.NOTE_OFF else 1, self.channel, self.key)


@dataclass(frozen=True)
class MidiSequence:
    """
    Time-ordered note events; ``tempo`` is microseconds per quarter note.

    ``length_ticks`` is the length of the source score, which may run past
    the last note-off when the score ends in rests.
    """

    ticks_per_quarter: int = TICKS_PER_QUARTER
    tempo: int = field(default_factory=lambda: mido.bpm2tempo(DEFAULT_TEMPO_BPM))
    events: tuple[MidiEvent, ...] = ()
    length_ticks: int = 0

    def __post_init__(self) -> None:
        if self.length_ticks < 0:
            raise RenderError(f"length must be non-negative, got {self.length_ticks} ticks")
        ticks = [event.tick for event in self.events]
        if any(later < earlier for earlier, later in zip(ticks, ticks[1:], strict=False)):
            raise RenderError("MIDI events must be sorted by tick")
        open_notes: dict[tuple[int, int], int] = defaultdict(int)
        for event in self.events:
            slot = (event.channel, event.key)
            if event.kind is MidiMessageKind.NOTE_ON:
                open_notes[slot] += 1
            elif open_notes[slot] == 0:
                raise RenderError(f"note-off without note-on for key {event.key} at tick {event.tick}")
            else:
                open_notes[slot] -= 1
        if any(open_notes.values()):
            raise RenderError("every note-on needs a matching note-off")

    @property
    def seconds_per_tick(self) -> float:
        return self.tempo / 1_000_000 / self.ticks_per_quarter

    @property
    def end_tick(self) -> int:
        last_event = self.events[-1].tick if self.events else 0
        return max(self.length_ticks, last_event)

    @property
    def duration_s(self) -> float:
        """Sounding length plus the release tail, as rendered by ``render_wav``."""
        if self.end_tick == 0:
            return 0.0
        return self.end_tick * self.seconds_per_tick + RELEASE_TAIL_S


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono float samples in [-1, 1]."""

    sample_rate: int
    samples: np.ndarray

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def chord_to_pitches(c: ChordSymbol) -> frozenset[int]:
    """Root-position voicing with the root in octave 3 (MIDI 48 + root)."""
    root = CHORD_BASE_MIDI + c.root
    return frozenset(root + interval for interval in CHORD_INTERVALS[c.quality])


def score_to_midi(s: Score, tempo_bpm: float = DEFAULT_TEMPO_BPM) -> MidiSequence:
    """
    Converts a normalized score to MIDI events.

    Tied notes of the same pitch become one span. Each chord sounds from its
    onset to the next chord or the end of its bar.
    """
    if tempo_bpm <= 0:
        raise RenderError(f"tempo must be positive, got {tempo_bpm} BPM")
    problems = normalization_problems(s)
    if problems:
        raise RenderError(f"cannot render {s.source_id or 'score'}: {problems[0]}")

    events: list[MidiEvent] = []

    def add_note(channel: int, key: int, velocity: int, start: int, end: int) -> None:
        events.append(MidiEvent(start, channel, MidiMessageKind.NOTE_ON, key, velocity))
        events.append(MidiEvent(end, channel, MidiMessageKind.NOTE_OFF, key, 0))

    # (key, start, end, tied) of the melody note still open for tie merging.
    held: tuple[int, int, int, bool] | None = None
    for m_index, measure in enumerate(s.measures):
        bar_start = m_index * TICKS_PER_MEASURE
        for onset, event in zip(measure.event_onsets(), measure.events, strict=True):
            start = bar_start + onset
            end = start + event.ticks
            if not event.is_note:
                if held is not None:
                    add_note(MELODY_CHANNEL, held[0], MELODY_VELOCITY, held[1], held[2])
                    held = None
                continue
            if held is not None and held[3] and held[0] == event.midi and held[2] == start:
                held = (held[0], held[1], end, event.tied_to_next)
                continue
            if held is not None:
                add_note(MELODY_CHANNEL, held[0], MELODY_VELOCITY, held[1], held[2])
            held = (event.midi, start, end, event.tied_to_next)

        chords = measure.chords
        for index, chord in enumerate(chords):
            chord_end = chords[index + 1].onset if index + 1 < len(chords) else TICKS_PER_MEASURE
            for key in sorted(chord_to_pitches(chord)):
                add_note(CHORD_CHANNEL, key, CHORD_VELOCITY, bar_start + chord.onset, bar_start + chord_end)
    if held is not None:
        add_note(MELODY_CHANNEL, held[0], MELODY_VELOCITY, held[1], held[2])

    return MidiSequence(
        ticks_per_quarter=TICKS_PER_QUARTER,
        tempo=mido.bpm2tempo(tempo_bpm),
        events=tuple(sorted(events, key=MidiEvent.sort_key)),
        length_ticks=len(s.measures) * TICKS_PER_MEASURE,
    )


def key_to_frequency(key: int) -> float:
    return float(440.0 * 2.0 ** ((key - 69) / 12.0))


def _sawtooth(frequency: float, t: np.ndarray, sample_rate: int) -> np.ndarray:
    wave = np.zeros_like(t)
    harmonic = 1
    while harmonic * frequency < sample_rate / 2:
        sign = 1.0 if harmonic % 2 else -1.0
        wave += sign * np.sin(2.0 * np.pi * harmonic * frequency * t) / harmonic
        harmonic += 1
    return wave * (2.0 / np.pi)


def _envelope(t: np.ndarray, held_s: float) -> np.ndarray:
    attack = np.minimum(t / ATTACK_S, 1.0)
    sustain = attack * np.exp(-np.minimum(t, held_s) / DECAY_TIME_CONSTANT_S)
    release = np.exp(-np.maximum(t - held_s, 0.0) / RELEASE_TIME_CONSTANT_S)
    return sustain * release


def render_wav(m: MidiSequence, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """
    Additive rendering of a MIDI sequence.

    The buffer ends ``RELEASE_TAIL_S`` after the end of the score (or the
    last note-off, whichever is later), so trailing rests render as silence.
    A non-silent signal is scaled so its peak is exactly ``PEAK_LEVEL``.
    """
    seconds_per_tick = m.seconds_per_tick
    total = int(round(m.duration_s * sample_rate))
    buffer = np.zeros(total, dtype=np.float64)
    tail = int(round(RELEASE_TAIL_S * sample_rate))

    starts: dict[tuple[int, int], deque[MidiEvent]] = defaultdict(deque)
    for event in m.events:
        slot = (event.channel, event.key)
        if event.kind is MidiMessageKind.NOTE_ON:
            starts[slot].append(event)
            continue
        note_on = starts[slot].popleft()
        first = int(round(note_on.tick * seconds_per_tick * sample_rate))
        held = int(round(event.tick * seconds_per_tick * sample_rate)) - first
        length = min(held + tail, total - first)
        if length <= 0:
            continue
        t = np.arange(length, dtype=np.float64) / sample_rate
        frequency = key_to_frequency(event.key)
        if note_on.channel == MELODY_CHANNEL:
            voice = _sawtooth(frequency, t, sample_rate)
        else:
            voice = np.sin(2.0 * np.pi * frequency * t)
        gain = note_on.velocity / 127.0
        buffer[first : first + length] += gain * voice * _envelope(t, held / sample_rate)

    peak = float(np.max(np.abs(buffer))) if total else 0.0
    if peak > 0.0:
        buffer *= PEAK_LEVEL / peak
    get_logger(LogCategory.APP, stage="render").debug(
        "rendered {samples} samples at {rate} Hz",
        samples=total,
        rate=sample_rate,
    )
    return AudioBuffer(sample_rate, buffer)


def write_smf(m: MidiSequence) -> bytes:
    """Standard MIDI File, format 0, with one tempo meta event."""
    midi_file = mido.MidiFile(type=0, ticks_per_beat=m.ticks_per_quarter)
    track = mido.MidiTrack()
    midi_file.tracks.append(track)
    track.append(mido.MetaMessage("set_tempo", tempo=m.tempo, time=0))
    previous = 0
    for event in m.events:
        track.append(
            mido.Message(
                event.kind.value,
                channel=event.channel,
                note=event.key,
                velocity=event.velocity,
                time=event.tick - previous,
            )
        )
        previous = event.tick
    track.append(mido.MetaMessage("end_of_track", time=m.end_tick - previous))
    stream = io.BytesIO()
    midi_file.save(file=stream)
    return stream.getvalue()


def read_smf(data: bytes) -> MidiSequence:
    """Reads a format-0 file written by ``write_smf``; the end-of-track tick gives the length."""
    midi_file = mido.MidiFile(file=io.BytesIO(data))
    tempo = mido.bpm2tempo(120)
    events: list[MidiEvent] = []
    tick = 0
    for message in mido.merge_tracks(midi_file.tracks):
        tick += message.time
        if message.type == "set_tempo":
            tempo = message.tempo
        elif message.type in ("note_on", "note_off"):
            kind = MidiMessageKind(message.type)
            if kind is MidiMessageKind.NOTE_ON and message.velocity == 0:
                kind = MidiMessageKind.NOTE_OFF
            events.append(MidiEvent(tick, message.channel, kind, message.note, message.velocity))
    return MidiSequence(
        ticks_per_quarter=midi_file.ticks_per_beat,
        tempo=tempo,
        events=tuple(events),
        length_ticks=tick,
    )
