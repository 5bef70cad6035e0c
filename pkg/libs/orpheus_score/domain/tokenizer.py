"""
The 135-symbol score token vocabulary and lossless encode/decode.

Layout of the id space::

    0-3     PAD BOS EOS UNK
    4       BAR
    5       REST
    6       TIE
    7-66    PITCH_48 .. PITCH_107
    67-78   ROOT_C .. ROOT_B
    79-86   QUAL_maj .. QUAL_sus4
    87-134  DUR_4 .. DUR_192

A chord is ``ROOT_x QUAL_y`` placed right before the event at its onset; a
note is ``PITCH_p DUR_d`` optionally followed by ``TIE``; a rest is
``REST DUR_d``; every measure ends with ``BAR``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import lru_cache

from libs.python.orpheus_logging import LogCategory, get_logger

from ..errors import EncodingError, TokenRangeError
from .score import (
    C_MAJOR,
    GRID,
    MAX_PITCH,
    MIN_PITCH,
    PITCH_CLASS_NAMES,
    TICKS_PER_MEASURE,
    ChordQuality,
    ChordSymbol,
    Measure,
    NoteEvent,
    Score,
    normalization_problems,
)

PAD, BOS, EOS, UNK = "PAD", "BOS", "EOS", "UNK"
BAR, REST, TIE = "BAR", "REST", "TIE"
SPECIAL_SYMBOLS = (PAD, BOS, EOS, UNK, BAR, REST, TIE)
QUALITY_ORDER = (
    ChordQuality.MAJ,
    ChordQuality.MIN,
    ChordQuality.DOM7,
    ChordQuality.MIN7,
    ChordQuality.MAJ7,
    ChordQuality.DIM,
    ChordQuality.AUG,
    ChordQuality.SUS4,
)
DURATION_VALUES = tuple(range(GRID, TICKS_PER_MEASURE + 1, GRID))
VOCABULARY_SIZE = 135


def pitch_symbol(midi: int) -> str:
    return f"PITCH_{midi}"


def root_symbol(pitch_class: int) -> str:
    return f"ROOT_{PITCH_CLASS_NAMES[pitch_class]}"


def quality_symbol(quality: ChordQuality) -> str:
    return f"QUAL_{quality.value}"


def duration_symbol(ticks: int) -> str:
    return f"DUR_{ticks}"


@dataclass(frozen=True)
class Vocabulary:
    """Bijective symbol ↔ id table."""

    symbols: tuple[str, ...]
    _ids: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = {symbol: index for index, symbol in enumerate(self.symbols)}
        if len(ids) != len(self.symbols):
            raise ValueError("vocabulary symbols must be unique")
        object.__setattr__(self, "_ids", ids)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._ids

    def id_of(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError as exc:
            raise TokenRangeError(f"unknown token symbol {symbol!r}") from exc

    def symbol_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.symbols):
            raise TokenRangeError(f"token id {token_id} outside 0..{len(self.symbols) - 1}")
        return self.symbols[token_id]


@lru_cache(maxsize=1)
def vocabulary() -> Vocabulary:
    """The fixed 135-entry table."""
    symbols = (
        *SPECIAL_SYMBOLS,
        *(pitch_symbol(midi) for midi in range(MIN_PITCH, MAX_PITCH + 1)),
        *(root_symbol(pc) for pc in range(12)),
        *(quality_symbol(quality) for quality in QUALITY_ORDER),
        *(duration_symbol(ticks) for ticks in DURATION_VALUES),
    )
    table = Vocabulary(symbols)
    if len(table) != VOCABULARY_SIZE:
        raise AssertionError(f"vocabulary has {len(table)} entries, expected {VOCABULARY_SIZE}")
    return table


def encode(s: Score) -> list[int]:
    """Tokenizes a normalized score; anything else raises ``EncodingError``."""
    problems = normalization_problems(s)
    if problems:
        raise EncodingError(f"cannot encode {s.source_id or 'score'}: {problems[0]}")

    vocab = vocabulary()
    ids = [vocab.id_of(BOS)]
    for measure in s.measures:
        pending = list(measure.chords)
        for onset, event in zip(measure.event_onsets(), measure.events, strict=True):
            if pending and pending[0].onset == onset:
                ids.extend(_chord_ids(pending.pop(0)))
            if event.is_note:
                ids.append(vocab.id_of(pitch_symbol(event.midi)))
                ids.append(vocab.id_of(duration_symbol(event.ticks)))
                if event.tied_to_next:
                    ids.append(vocab.id_of(TIE))
            else:
                ids.append(vocab.id_of(REST))
                ids.append(vocab.id_of(duration_symbol(event.ticks)))
        ids.append(vocab.id_of(BAR))
    ids.append(vocab.id_of(EOS))
    return ids


def _chord_ids(chord: ChordSymbol) -> tuple[int, int]:
    vocab = vocabulary()
    return vocab.id_of(root_symbol(chord.root)), vocab.id_of(quality_symbol(chord.quality))


@dataclass(frozen=True)
class RecoveryReport:
    """Repairs ``decode`` applied to a malformed sequence."""

    dropped: int = 0
    padded: int = 0
    truncated: int = 0
    unterminated: int = 0

    @property
    def clean(self) -> bool:
        return not (self.dropped or self.padded or self.truncated or self.unterminated)

    def __add__(self, other: RecoveryReport) -> RecoveryReport:
        return RecoveryReport(
            dropped=self.dropped + other.dropped,
            padded=self.padded + other.padded,
            truncated=self.truncated + other.truncated,
            unterminated=self.unterminated + other.unterminated,
        )


class _Decoder:
    def __init__(self) -> None:
        self.measures: list[Measure] = []
        self.events: list[NoteEvent] = []
        self.chords: list[ChordSymbol] = []
        self.position = 0
        self.pending_pitch: int | None = None
        self.pending_rest = False
        self.pending_root: int | None = None
        self.dropped = 0
        self.padded = 0
        self.truncated = 0

    def flush_pending(self, symbol: str) -> None:
        if (self.pending_pitch is not None or self.pending_rest) and not symbol.startswith("DUR_"):
            self.dropped += 1
            self.pending_pitch = None
            self.pending_rest = False
        if self.pending_root is not None and not symbol.startswith("QUAL_"):
            self.dropped += 1
            self.pending_root = None

    def duration(self, ticks: int) -> None:
        if self.pending_pitch is not None:
            self.events.append(NoteEvent.note(self.pending_pitch, ticks))
        elif self.pending_rest:
            self.events.append(NoteEvent.rest(ticks))
        else:
            self.dropped += 1
            return
        self.position += ticks
        self.pending_pitch = None
        self.pending_rest = False

    def tie(self) -> None:
        if self.events and self.events[-1].is_note and not self.events[-1].tied_to_next:
            self.events[-1] = replace(self.events[-1], tied_to_next=True)
        else:
            self.dropped += 1

    def quality(self, quality: ChordQuality) -> None:
        if self.pending_root is None:
            self.dropped += 1
            return
        chord = ChordSymbol(self.pending_root, quality, self.position)
        self.pending_root = None
        if chord.onset >= TICKS_PER_MEASURE:
            self.dropped += 1
            return
        if self.chords and self.chords[-1].onset == chord.onset:
            self.chords.pop()
            self.dropped += 1
        self.chords.append(chord)

    def close_measure(self) -> None:
        events = self.events
        if self.position < TICKS_PER_MEASURE:
            events.append(NoteEvent.rest(TICKS_PER_MEASURE - self.position))
            self.padded += 1
        elif self.position > TICKS_PER_MEASURE:
            events = _truncate(events)
            self.truncated += 1
        self.measures.append(Measure(tuple(events), tuple(self.chords)))
        self.events = []
        self.chords = []
        self.position = 0

    @property
    def measure_open(self) -> bool:
        return bool(self.events or self.chords)


def _truncate(events: Sequence[NoteEvent]) -> list[NoteEvent]:
    kept: list[NoteEvent] = []
    position = 0
    for event in events:
        remaining = TICKS_PER_MEASURE - position
        if remaining <= 0:
            break
        if event.ticks > remaining:
            kept.append(replace(event.with_ticks(remaining), tied_to_next=False))
            break
        kept.append(event)
        position += event.ticks
    return kept


def decode(t: Sequence[int]) -> tuple[Score, RecoveryReport]:
    """
    Rebuilds a normalized score from ids, repairing whatever it must.

    Dangling ``PITCH``/``REST``/``ROOT`` tokens, ``QUAL`` without a root,
    stray ``DUR``/``TIE``, out-of-range ids and special tokens in the body
    are dropped. Each ``BAR`` closes a measure, padding it with a rest or
    truncating it to 192 ticks. A sequence ending without ``EOS`` is marked
    unterminated and its open measure is closed.
    """
    vocab = vocabulary()
    decoder = _Decoder()
    terminated = False
    for position, token_id in enumerate(t):
        if not 0 <= token_id < len(vocab):
            decoder.flush_pending(UNK)
            decoder.dropped += 1
            continue
        symbol = vocab.symbol_of(token_id)
        decoder.flush_pending(symbol)
        if symbol == BOS and position == 0:
            continue
        if symbol == EOS:
            terminated = True
            break
        if symbol == BAR:
            decoder.close_measure()
        elif symbol == REST:
            decoder.pending_rest = True
        elif symbol == TIE:
            decoder.tie()
        elif symbol.startswith("PITCH_"):
            decoder.pending_pitch = int(symbol.removeprefix("PITCH_"))
        elif symbol.startswith("DUR_"):
            decoder.duration(int(symbol.removeprefix("DUR_")))
        elif symbol.startswith("ROOT_"):
            decoder.pending_root = PITCH_CLASS_NAMES.index(symbol.removeprefix("ROOT_"))
        elif symbol.startswith("QUAL_"):
            decoder.quality(ChordQuality(symbol.removeprefix("QUAL_")))
        else:
            decoder.dropped += 1

    unterminated = 0
    if not terminated:
        unterminated = 1
        decoder.flush_pending(EOS)
        if decoder.measure_open:
            decoder.close_measure()

    report = RecoveryReport(
        dropped=decoder.dropped,
        padded=decoder.padded,
        truncated=decoder.truncated,
        unterminated=unterminated,
    )
    if not report.clean:
        get_logger(LogCategory.DATA_QUALITY, stage="decode").info(
            "decode recovered: {dropped} dropped, {padded} padded, {truncated} truncated, "
            "{unterminated} unterminated",
            dropped=report.dropped,
            padded=report.padded,
            truncated=report.truncated,
            unterminated=report.unterminated,
        )
    return Score(key=C_MAJOR, measures=tuple(decoder.measures)), report


def render_token_text(t: Iterable[int]) -> str:
    vocab = vocabulary()
    return " ".join(vocab.symbol_of(token_id) for token_id in t)


def parse_token_text(text: str, *, strict: bool = True) -> list[int]:
    """Inverse of ``render_token_text``; unknown symbols raise, or map to UNK when not strict."""
    vocab = vocabulary()
    ids: list[int] = []
    for symbol in text.split():
        if symbol in vocab:
            ids.append(vocab.id_of(symbol))
        elif strict:
            raise TokenRangeError(f"unknown token symbol {symbol!r}")
        else:
            ids.append(vocab.id_of(UNK))
    return ids
