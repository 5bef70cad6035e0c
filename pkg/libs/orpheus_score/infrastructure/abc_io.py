"""
Reading and writing the supported ABC subset.

Supported: headers X/T/C/M/L/K/Q, note letters with octave marks and
accidentals, duration multipliers, ``z``/``x`` rests, bar lines (repeat
signs count as plain bars), ``-`` ties, quoted chord symbols and ``(3``
triplets. Slur parentheses are ignored. Anything else is rejected with an
``AbcParseError`` carrying the line and column.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from libs.python.orpheus_logging import LogCategory, get_logger

from ..domain.score import (
    TICKS_PER_WHOLE,
    ChordQuality,
    ChordSymbol,
    Duration,
    EventKind,
    KeySignature,
    Measure,
    Mode,
    NoteEvent,
    Pitch,
    Score,
    normalization_problems,
    pitch_class_name,
)
from ..errors import AbcParseError, AbcSerializationError

DEFAULT_METADATA_HEADERS = frozenset("TCZNORSWw")
DEFAULT_INVALID_MARKERS: tuple[str, ...] = (r"![^!\n]*!", r"\{[^}\n]*\}", r"~")
SUPPORTED_HEADERS = frozenset("XTCMLKQ")
DEFAULT_UNIT = Fraction(1, 8)
DEFAULT_METER = (4, 4)

_HEADER_RE = re.compile(r"^([A-Za-z]):(.*)$")
_BAR_RE = re.compile(r"\[\||:*\|+\]?:*|:{2,}")
_NOTE_RE = re.compile(
    r"(?P<acc>\^\^|\^|__|_|=)?(?P<letter>[A-Ga-gzx])(?P<octave>[',]*)"
    r"(?P<num>\d+)?(?P<slash>/+)?(?P<den>\d+)?"
)
_CHORD_RE = re.compile(r"^(?P<root>[A-G])(?P<acc>[#b])?(?P<quality>[^/]*)(?:/.*)?$")
_KEY_RE = re.compile(r"^(?P<tonic>[A-G])(?P<acc>[#b])?\s*(?P<mode>[A-Za-z]*)$")

_LETTER_STEPS = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_ACCIDENTALS = {"^^": 2, "^": 1, "=": 0, "_": -1, "__": -2}
_FIFTHS_ORDER = "FCGDAEB"

_CHORD_QUALITIES: Mapping[str, ChordQuality] = {
    "": ChordQuality.MAJ,
    "maj": ChordQuality.MAJ,
    "M": ChordQuality.MAJ,
    "m": ChordQuality.MIN,
    "min": ChordQuality.MIN,
    "-": ChordQuality.MIN,
    "7": ChordQuality.DOM7,
    "m7": ChordQuality.MIN7,
    "min7": ChordQuality.MIN7,
    "maj7": ChordQuality.MAJ7,
    "M7": ChordQuality.MAJ7,
    "dim": ChordQuality.DIM,
    "°": ChordQuality.DIM,
    "aug": ChordQuality.AUG,
    "+": ChordQuality.AUG,
    "sus4": ChordQuality.SUS4,
    "sus": ChordQuality.SUS4,
}
_CHORD_SUFFIXES: Mapping[ChordQuality, str] = {
    ChordQuality.MAJ: "",
    ChordQuality.MIN: "m",
    ChordQuality.DOM7: "7",
    ChordQuality.MIN7: "m7",
    ChordQuality.MAJ7: "maj7",
    ChordQuality.DIM: "dim",
    ChordQuality.AUG: "aug",
    ChordQuality.SUS4: "sus4",
}
_MODES: Mapping[str, Mode] = {
    "": Mode.MAJOR,
    "maj": Mode.MAJOR,
    "major": Mode.MAJOR,
    "m": Mode.MINOR,
    "min": Mode.MINOR,
    "minor": Mode.MINOR,
}
# Sharp spelling used by the writer: pitch class -> (letter, alteration).
_SPELLING = {
    0: ("C", 0),
    1: ("C", 1),
    2: ("D", 0),
    3: ("D", 1),
    4: ("E", 0),
    5: ("F", 0),
    6: ("F", 1),
    7: ("G", 0),
    8: ("G", 1),
    9: ("A", 0),
    10: ("A", 1),
    11: ("B", 0),
}
MEASURES_PER_LINE = 4


@dataclass(frozen=True)
class AbcDocument:
    """Header fields by letter plus the raw music lines (with 1-based line numbers)."""

    headers: Mapping[str, str]
    body_lines: tuple[str, ...]
    body_line_numbers: tuple[int, ...] = field(default=())


def strip_metadata(
    text: str,
    *,
    drop_headers: Iterable[str] = DEFAULT_METADATA_HEADERS,
    invalid_markers: Iterable[str] = DEFAULT_INVALID_MARKERS,
) -> str:
    """
    Removes metadata header lines and inline ornaments.

    Header lines whose letter is in ``drop_headers`` are deleted, ``%``
    comments are removed from music and kept header lines alike, and every match of ``invalid_markers`` (decorations
    ``!...!``, grace groups ``{...}``, ``~``) is deleted from music lines.
    The filter is idempotent.
    """
    dropped = frozenset(drop_headers)
    patterns = tuple(invalid_markers)
    marker_re = re.compile("|".join(f"(?:{p})" for p in patterns)) if patterns else None

    kept: list[str] = []
    for line in text.split("\n"):
        header = _HEADER_RE.match(line)
        if header:
            if header.group(1) not in dropped:
                kept.append(line.split("%", 1)[0].rstrip() if "%" in line else line)
            continue
        if line.lstrip().startswith("%"):
            continue
        music = line.split("%", 1)[0] if "%" in line else line
        if marker_re is not None:
            music = marker_re.sub("", music)
        kept.append(music)
    return "\n".join(kept)


def read_document(text: str) -> AbcDocument:
    """Splits ABC text into header fields and music lines."""
    headers: dict[str, str] = {}
    body: list[str] = []
    numbers: list[int] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        header = _HEADER_RE.match(line)
        if header:
            letter, value = header.group(1), header.group(2).split("%", 1)[0].strip()
            if letter not in SUPPORTED_HEADERS:
                raise AbcParseError(f"unsupported header {letter}:", number, 1)
            if body and letter in "MLK":
                raise AbcParseError(f"{letter}: changes inside the tune are not supported", number, 1)
            headers.setdefault(letter, value)
            continue
        body.append(line)
        numbers.append(number)
    return AbcDocument(headers=headers, body_lines=tuple(body), body_line_numbers=tuple(numbers))


def parse_abc(text: str, *, source_id: str = "") -> Score:
    """
    Parses one ABC tune into a ``Score``.

    Pitches are resolved against the key signature and in-measure
    accidentals. Durations are counted in ticks of the smallest resolution
    (a multiple of 192 per whole note) that keeps every duration integral,
    so grid-friendly sources come out directly in 1/192 ticks.
    """
    document = read_document(text)
    if "K" not in document.headers:
        raise AbcParseError("missing K: header", 1, 1)
    if not document.body_lines:
        raise AbcParseError("no music lines after the headers", 1, 1)

    key_line = _header_line(text, "K")
    key, key_accidentals = parse_key(document.headers["K"], line=key_line)
    meter = parse_meter(document.headers.get("M"), line=_header_line(text, "M"))
    unit = parse_unit(document.headers.get("L"), line=_header_line(text, "L"))

    body = _BodyParser(key_accidentals=key_accidentals, unit=unit, meter=meter, source_id=source_id)
    for number, line in zip(document.body_line_numbers, document.body_lines, strict=True):
        body.feed(line, number)
    raw_measures = body.finish(document.body_line_numbers[-1])
    return _build_score(raw_measures, key=key, meter=meter, source_id=source_id)


def parse_abc_file(path: Path) -> Score:
    """Strips and parses a UTF-8 ``.abc`` file; ``source_id`` is the file stem."""
    return parse_abc(strip_metadata(path.read_text(encoding="utf-8")), source_id=path.stem)


def parse_key(value: str, *, line: int = 1) -> tuple[KeySignature, dict[str, int]]:
    """Parses a ``K:`` value into the key and the letter alterations it implies."""
    match = _KEY_RE.match(value.strip())
    if not match:
        raise AbcParseError(f"unsupported key {value!r}", line, 3)
    mode_text = match.group("mode")
    mode = _MODES.get(mode_text.lower())
    if mode is None:
        raise AbcParseError(f"unsupported mode {mode_text!r}", line, 3)

    letter = match.group("tonic")
    alteration = {"#": 1, "b": -1}.get(match.group("acc") or "", 0)
    tonic = (_LETTER_STEPS[letter] + alteration) % 12

    fifths = _FIFTHS_ORDER.index(letter) - 1 + 7 * alteration
    if mode is Mode.MINOR:
        fifths -= 3
    accidentals: dict[str, int] = {}
    if fifths > 0:
        for sharp in _FIFTHS_ORDER[:fifths]:
            accidentals[sharp] = 1
    elif fifths < 0:
        for flat in reversed(_FIFTHS_ORDER[fifths:]):
            accidentals[flat] = -1
    return KeySignature(tonic, mode), accidentals


def parse_meter(value: str | None, *, line: int = 1) -> tuple[int, int]:
    if value is None or not value.strip():
        return DEFAULT_METER
    text = value.strip()
    if text == "C":
        return (4, 4)
    if text == "C|":
        return (2, 2)
    numerator, _, denominator = text.partition("/")
    if not (numerator.strip().isdigit() and denominator.strip().isdigit()):
        raise AbcParseError(f"unsupported meter {text!r}", line, 3)
    parsed = (int(numerator), int(denominator))
    if parsed[0] <= 0 or parsed[1] <= 0:
        raise AbcParseError(f"unsupported meter {text!r}", line, 3)
    return parsed


def parse_unit(value: str | None, *, line: int = 1) -> Fraction:
    if value is None or not value.strip():
        return DEFAULT_UNIT
    try:
        unit = Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise AbcParseError(f"unsupported unit length {value.strip()!r}", line, 3) from exc
    if unit <= 0:
        raise AbcParseError(f"unit length must be positive, got {value.strip()!r}", line, 3)
    return unit


def parse_chord_symbol(text: str) -> tuple[int, ChordQuality]:
    """Parses ``"Am"``-style chord text into (root pitch class, quality)."""
    match = _CHORD_RE.match(text.strip())
    if not match:
        raise ValueError(f"unrecognised chord {text!r}")
    quality = _CHORD_QUALITIES.get(match.group("quality"))
    if quality is None:
        raise ValueError(f"unknown chord quality {match.group('quality')!r} in {text!r}")
    alteration = {"#": 1, "b": -1}.get(match.group("acc") or "", 0)
    return (_LETTER_STEPS[match.group("root")] + alteration) % 12, quality


def chord_text(chord: ChordSymbol) -> str:
    return f"{pitch_class_name(chord.root)}{_CHORD_SUFFIXES[chord.quality]}"


def _header_line(text: str, letter: str) -> int:
    for number, line in enumerate(text.split("\n"), start=1):
        if line.startswith(f"{letter}:"):
            return number
    return 1


@dataclass
class _RawEvent:
    midi: int | None
    length: Fraction
    tied: bool = False


@dataclass
class _RawMeasure:
    events: list[_RawEvent] = field(default_factory=list)
    chords: list[tuple[int, ChordQuality, Fraction]] = field(default_factory=list)

    @property
    def position(self) -> Fraction:
        return sum((event.length for event in self.events), Fraction(0))

    def is_empty(self) -> bool:
        return not self.events and not self.chords


class _BodyParser:
    """Character scanner over the music lines; lengths are kept exact in whole notes."""

    def __init__(
        self,
        *,
        key_accidentals: Mapping[str, int],
        unit: Fraction,
        meter: tuple[int, int],
        source_id: str,
    ) -> None:
        self._key_accidentals = dict(key_accidentals)
        self._unit = unit
        self._measure_length = Fraction(meter[0], meter[1])
        self._log = get_logger(LogCategory.DATA_QUALITY, stage="parse", source=source_id or "-")
        self._measures: list[_RawMeasure] = []
        self._current = _RawMeasure()
        self._accidentals: dict[tuple[str, int], int] = {}
        self._triplet_remaining = 0
        self._triplet_origin = (0, 0)

    def feed(self, line: str, number: int) -> None:
        i = 0
        while i < len(line):
            ch = line[i]
            column = i + 1
            if ch in " \t\\":
                i += 1
            elif ch == '"':
                end = line.find('"', i + 1)
                if end < 0:
                    raise AbcParseError("unterminated chord symbol", number, column)
                self._chord(line[i + 1 : end], number, column)
                i = end + 1
            elif ch == "(":
                i = self._open_paren(line, i, number)
            elif ch == ")":
                i += 1
            elif ch == "[" and not line.startswith("[|", i):
                if i + 2 < len(line) and line[i + 1].isalpha() and line[i + 2] == ":":
                    raise AbcParseError("inline fields are not supported", number, column)
                raise AbcParseError("chords of notes are not supported", number, column)
            elif ch in "|:[]":
                bar = _BAR_RE.match(line, i)
                if bar is None:
                    raise AbcParseError(f"unexpected {ch!r}", number, column)
                self._close_measure(number, column)
                i = bar.end()
                while i < len(line) and line[i].isdigit():
                    i += 1
            elif ch == "-":
                self._tie(number, column)
                i += 1
            elif ch in "<>":
                raise AbcParseError("broken rhythm is not supported", number, column)
            else:
                note = _NOTE_RE.match(line, i)
                if note is None:
                    raise AbcParseError(f"unexpected {ch!r}", number, column)
                self._note(note, number, column)
                i = note.end()

    def finish(self, last_line: int) -> list[_RawMeasure]:
        if self._triplet_remaining:
            line, column = self._triplet_origin
            raise AbcParseError("malformed triplet: fewer than 3 notes", line, column)
        if not self._current.is_empty():
            self._measures.append(self._current)
        self._current = _RawMeasure()
        return self._measures

    def _open_paren(self, line: str, i: int, number: int) -> int:
        if i + 1 < len(line) and line[i + 1].isdigit():
            digits = re.match(r"\d+", line[i + 1 :])
            assert digits is not None
            if digits.group(0) != "3" or line.startswith(":", i + 1 + len(digits.group(0))):
                raise AbcParseError(
                    f"malformed triplet: only (3 is supported, got ({digits.group(0)}",
                    number,
                    i + 1,
                )
            if self._triplet_remaining:
                raise AbcParseError("malformed triplet: nested tuplet", number, i + 1)
            self._triplet_remaining = 3
            self._triplet_origin = (number, i + 1)
            return i + 2
        # Slur start.
        return i + 1

    def _chord(self, text: str, number: int, column: int) -> None:
        if not text or text[0] in "^_<>@":
            return
        try:
            root, quality = parse_chord_symbol(text)
        except ValueError as exc:
            raise AbcParseError(str(exc), number, column) from exc
        onset = self._current.position
        if onset >= self._measure_length:
            self._log.warn(
                "dropped chord {chord} past the end of its bar",
                chord=text,
                line=number,
            )
            return
        chords = self._current.chords
        if chords and chords[-1][2] == onset:
            self._log.info("chord {chord} replaces a chord at the same onset", chord=text)
            chords.pop()
        chords.append((root, quality, onset))

    def _note(self, match: re.Match[str], number: int, column: int) -> None:
        letter = match.group("letter")
        numerator = int(match.group("num")) if match.group("num") else 1
        slashes = match.group("slash") or ""
        if match.group("den"):
            denominator = int(match.group("den")) * 2 ** max(len(slashes) - 1, 0)
        else:
            denominator = 2 ** len(slashes)
        if numerator == 0 or denominator == 0:
            raise AbcParseError("zero duration", number, column)

        length = Fraction(numerator, denominator) * self._unit
        if self._triplet_remaining:
            length *= Fraction(2, 3)
            self._triplet_remaining -= 1

        if letter in "zx":
            if match.group("acc") or match.group("octave"):
                raise AbcParseError("rests take no accidental or octave mark", number, column)
            self._current.events.append(_RawEvent(None, length))
            return

        upper = letter.upper()
        natural = 60 + _LETTER_STEPS[upper] + (12 if letter.islower() else 0)
        octave_marks = match.group("octave")
        natural += 12 * octave_marks.count("'") - 12 * octave_marks.count(",")
        slot = (upper, natural // 12)
        if match.group("acc"):
            alteration = _ACCIDENTALS[match.group("acc")]
            self._accidentals[slot] = alteration
        else:
            alteration = self._accidentals.get(slot, self._key_accidentals.get(upper, 0))
        midi = natural + alteration
        if not 0 <= midi <= 127:
            raise AbcParseError(f"note {match.group(0)!r} outside the MIDI range", number, column)
        self._current.events.append(_RawEvent(midi, length))

    def _tie(self, number: int, column: int) -> None:
        events = self._current.events
        if not events or events[-1].midi is None:
            raise AbcParseError("tie without a preceding note", number, column)
        events[-1].tied = True

    def _close_measure(self, number: int, column: int) -> None:
        if self._triplet_remaining:
            raise AbcParseError("malformed triplet crosses a bar line", number, column)
        if not self._current.is_empty():
            self._measures.append(self._current)
        self._current = _RawMeasure()
        self._accidentals.clear()


def _build_score(
    raw_measures: list[_RawMeasure],
    *,
    key: KeySignature,
    meter: tuple[int, int],
    source_id: str,
) -> Score:
    denominators = [event.length.denominator for m in raw_measures for event in m.events]
    denominators += [onset.denominator for m in raw_measures for _, _, onset in m.chords]
    resolution = math.lcm(TICKS_PER_WHOLE, *denominators)

    measures: list[Measure] = []
    for raw in raw_measures:
        events = tuple(
            NoteEvent(
                EventKind.REST if event.midi is None else EventKind.NOTE,
                Duration(int(event.length * resolution)),
                None if event.midi is None else Pitch(event.midi),
                event.tied and event.midi is not None,
            )
            for event in raw.events
        )
        chords = tuple(
            ChordSymbol(root, quality, int(onset * resolution)) for root, quality, onset in raw.chords
        )
        measures.append(Measure(events, chords))
    return Score(
        key=key,
        measures=tuple(measures),
        source_id=source_id,
        meter=meter,
        resolution=resolution,
    )


def write_abc(s: Score) -> str:
    """
    Serializes a normalized score with ``K:C``, ``M:4/4`` and ``L:1/192`` headers.

    Every duration is written as an explicit tick count, black keys are
    spelled as sharps with accidentals re-stated whenever the in-measure
    state differs, and ``parse_abc(write_abc(s)) == s``.
    """
    problems = normalization_problems(s)
    if problems:
        raise AbcSerializationError(f"score is not normalized: {problems[0]}")

    lines = ["K:C", "M:4/4", "L:1/192"]
    rendered = [_measure_text(measure) + "|" for measure in s.measures]
    for start in range(0, len(rendered), MEASURES_PER_LINE):
        lines.append(" ".join(rendered[start : start + MEASURES_PER_LINE]))
    return "\n".join(lines)


def write_abc_file(path: Path, s: Score) -> None:
    path.write_text(write_abc(s) + "\n", encoding="utf-8")


def _measure_text(measure: Measure) -> str:
    state: dict[tuple[str, int], int] = {}
    parts: list[str] = []
    pending = list(measure.chords)
    for onset, event in zip(measure.event_onsets(), measure.events, strict=True):
        if pending and pending[0].onset == onset:
            parts.append(f'"{chord_text(pending.pop(0))}"')
        parts.append(_event_text(event, state))
    return " ".join(parts)


def _event_text(event: NoteEvent, state: dict[tuple[str, int], int]) -> str:
    if not event.is_note:
        return f"z{event.ticks}"
    letter, alteration = _SPELLING[event.midi % 12]
    octave = event.midi // 12
    slot = (letter, octave)
    prefix = ""
    if state.get(slot, 0) != alteration:
        prefix = "^" if alteration else "="
    state[slot] = alteration
    if octave >= 6:
        name = letter.lower() + "'" * (octave - 6)
    else:
        name = letter + "," * (5 - octave)
    return f"{prefix}{name}{event.ticks}{'-' if event.tied_to_next else ''}"
