"""
Score normalization: C major, 4/4 bars of exactly 192 ticks, 4-tick grid.

``normalize`` runs the whole chain. The individual steps are exposed for
callers (and tests) that only need part of it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from libs.python.orpheus_logging import LogCategory, get_logger

from ..errors import UnsupportedMeterError
from .score import (
    C_MAJOR,
    GRID,
    MAX_PITCH,
    MIN_PITCH,
    TICKS_PER_MEASURE,
    TICKS_PER_WHOLE,
    ChordSymbol,
    KeySignature,
    Measure,
    Mode,
    NoteEvent,
    Score,
    measure_tick_sum,
)

SUPPORTED_METERS = frozenset({(4, 4)})


@dataclass(frozen=True)
class RepairReport:
    """Per-score (or merged) counts of the repairs normalization applied."""

    padded: int = 0
    discarded: int = 0
    untouched: int = 0
    snapped: int = 0
    clamped: int = 0

    def __add__(self, other: RepairReport) -> RepairReport:
        return RepairReport(
            padded=self.padded + other.padded,
            discarded=self.discarded + other.discarded,
            untouched=self.untouched + other.untouched,
            snapped=self.snapped + other.snapped,
            clamped=self.clamped + other.clamped,
        )

    def to_dict(self) -> dict[str, int]:
        return {
            "padded": self.padded,
            "discarded": self.discarded,
            "untouched": self.untouched,
            "snapped": self.snapped,
            "clamped": self.clamped,
        }


def transposition_shift(key: KeySignature) -> int:
    """
    Signed semitone shift taking the tonic to C (major) or A (minor).

    The smaller of the upward and downward candidates wins; a tritone
    distance goes down.
    """
    target = 9 if key.mode is Mode.MINOR else 0
    up = (target - key.tonic) % 12
    down = up - 12
    return up if up < -down else down


def transpose_to_c(s: Score) -> Score:
    """Shifts every pitch and chord root so the score reads in C major."""
    transposed, _ = _transpose(s)
    return transposed


def regrid_durations(s: Score, source_unit: Fraction | None = None) -> Score:
    """
    Re-expresses every duration in 1/192 whole-note ticks.

    ``source_unit`` is the whole-note length of one of the score's ticks and
    defaults to ``1 / s.resolution``. Tick counts off the 4-tick grid snap to
    the nearest multiple of 4 (never below 4). Chord onsets move to the
    start of the first event at or after their original position.
    """
    regridded, _ = _regrid(s, source_unit)
    return regridded


def repair_measures(s: Score) -> tuple[Score, RepairReport]:
    """
    Pads short measures with a trailing rest and drops overfull ones.

    Expects durations already on the 192-tick grid.
    """
    log = get_logger(LogCategory.DATA_QUALITY, stage="repair", source=s.source_id or "-")
    kept: list[Measure] = []
    padded = discarded = untouched = 0
    for index, measure in enumerate(s.measures):
        total = measure_tick_sum(measure)
        if total == TICKS_PER_MEASURE:
            kept.append(measure)
            untouched += 1
        elif total < TICKS_PER_MEASURE:
            rest = NoteEvent.rest(TICKS_PER_MEASURE - total)
            kept.append(replace(measure, events=(*measure.events, rest)))
            padded += 1
            log.debug("padded measure {index} with {ticks} ticks of rest", index=index, ticks=rest.ticks)
        else:
            discarded += 1
            log.info("discarded measure {index} summing to {total} ticks", index=index, total=total)
    report = RepairReport(padded=padded, discarded=discarded, untouched=untouched)
    return s.with_measures(tuple(kept)), report


def strip_invalid(s: Score) -> Score:
    """Clears a tie on the final event of the score, which has nothing to tie to."""
    if not s.measures or not s.measures[-1].events:
        return s
    last_measure = s.measures[-1]
    last_event = last_measure.events[-1]
    if not last_event.tied_to_next:
        return s
    cleared = replace(last_measure, events=(*last_measure.events[:-1], replace(last_event, tied_to_next=False)))
    return s.with_measures((*s.measures[:-1], cleared))


def normalize(s: Score) -> tuple[Score, RepairReport]:
    """
    Full normalization chain: strip invalid → regrid → transpose → repair.

    Non-4/4 sources are rejected with ``UnsupportedMeterError``; re-barring is
    not attempted. The result satisfies ``is_normalized`` and normalizing it
    again changes nothing.
    """
    if tuple(s.meter) not in SUPPORTED_METERS:
        get_logger(LogCategory.DATA_QUALITY, stage="normalize").warn(
            "rejected {source}: meter {meter} is not 4/4",
            source=s.source_id or "-",
            meter=f"{s.meter[0]}/{s.meter[1]}",
        )
        raise UnsupportedMeterError(f"meter {s.meter[0]}/{s.meter[1]} is not supported, only 4/4")

    regridded, snapped = _regrid(strip_invalid(s), None)
    transposed, clamped = _transpose(regridded)
    repaired, report = repair_measures(transposed)
    return strip_invalid(repaired), replace(report, snapped=snapped, clamped=clamped)


def _transpose(s: Score) -> tuple[Score, int]:
    shift = transposition_shift(s.key)
    log = get_logger(LogCategory.DATA_QUALITY, stage="transpose", source=s.source_id or "-")
    clamped = 0
    measures: list[Measure] = []
    for m_index, measure in enumerate(s.measures):
        events: list[NoteEvent] = []
        for e_index, event in enumerate(measure.events):
            if not event.is_note:
                events.append(event)
                continue
            target = event.midi + shift
            fitted = _fold_into_range(target)
            if fitted != target:
                clamped += 1
                log.info(
                    "clamped pitch {pitch} to {fitted} at measure {measure} event {event}",
                    pitch=target,
                    fitted=fitted,
                    measure=m_index,
                    event=e_index,
                )
            events.append(event if fitted == event.midi else event.with_pitch(fitted))
        chords = tuple(replace(chord, root=(chord.root + shift) % 12) for chord in measure.chords)
        measures.append(Measure(tuple(events), chords))
    return replace(s, key=C_MAJOR, measures=tuple(measures)), clamped


def _fold_into_range(midi: int) -> int:
    while midi < MIN_PITCH:
        midi += 12
    while midi > MAX_PITCH:
        midi -= 12
    return midi


def _snap_ticks(exact: Fraction) -> int:
    grid_steps = int(exact / GRID + Fraction(1, 2))
    return max(grid_steps, 1) * GRID


def _regrid(s: Score, source_unit: Fraction | None) -> tuple[Score, int]:
    unit = source_unit if source_unit is not None else Fraction(1, s.resolution)
    scale = unit * TICKS_PER_WHOLE
    log = get_logger(LogCategory.DATA_QUALITY, stage="regrid", source=s.source_id or "-")

    snapped = 0
    measures: list[Measure] = []
    for measure in s.measures:
        old_onsets = [Fraction(onset) * scale for onset in measure.event_onsets()]
        events: list[NoteEvent] = []
        new_onsets: list[int] = []
        position = 0
        for event in measure.events:
            exact = Fraction(event.ticks) * scale
            ticks = _snap_ticks(exact)
            if ticks != exact:
                snapped += 1
            new_onsets.append(position)
            position += ticks
            events.append(event if ticks == event.ticks else event.with_ticks(ticks))

        chords: list[ChordSymbol] = []
        for chord in measure.chords:
            original = Fraction(chord.onset) * scale
            onset = next(
                (new for old, new in zip(old_onsets, new_onsets, strict=True) if old >= original),
                position,
            )
            if onset >= TICKS_PER_MEASURE:
                log.info("dropped chord {chord} past the end of its bar", chord=chord.name)
                continue
            if chords and chords[-1].onset == onset:
                chords.pop()
            chords.append(replace(chord, onset=onset))
        measures.append(Measure(tuple(events), tuple(chords)))

    if snapped:
        log.info("snapped {count} durations onto the {grid}-tick grid", count=snapped, grid=GRID)
    return replace(s, measures=tuple(measures), resolution=TICKS_PER_WHOLE), snapped
