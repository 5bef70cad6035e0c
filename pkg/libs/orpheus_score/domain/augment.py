"""
Data augmentation: seeded Gaussian pitch mutation, duration extension and
section recombination.

A section is one normalized 192-tick measure. All randomness comes from
``stream_rng`` so every generated score can be reproduced from
``(seed, index)`` alone.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np

from libs.python.orpheus_logging import LogCategory, get_logger

from ..errors import EmptyPoolError, SamplingError
from .rng import stream_rng
from .score import (
    C_MAJOR,
    C_MAJOR_PITCH_CLASSES,
    MAX_PITCH,
    MIN_PITCH,
    Measure,
    NoteEvent,
    Score,
    is_normalized,
)

DEFAULT_SECTIONS_PER_SCORE = 8
DEFAULT_SIGMA_FRACTION = 1.0 / 6.0


@dataclass(frozen=True)
class MutationParams:
    """
    Knobs for ``mutate_pitches`` and ``extend_durations``.

    Attributes:
        pitch_prob: Probability that a note's pitch is mutated.
        pitch_sigma: Standard deviation (semitones) of the Gaussian shift.
        extend_prob: Probability that a note absorbs a following rest.
        snap_to_scale: Move shifted pitches onto the C major scale.
        seed: 64-bit seed used when no generator is passed in.
    """

    pitch_prob: float = 0.1
    pitch_sigma: float = 2.0
    extend_prob: float = 0.05
    snap_to_scale: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("pitch_prob", "extend_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")
        if self.pitch_sigma < 0:
            raise ValueError(f"pitch_sigma must be non-negative, got {self.pitch_sigma}")


@dataclass(frozen=True)
class MutationEntry:
    measure: int
    event: int
    old_pitch: int | None
    new_pitch: int | None
    old_ticks: int
    new_ticks: int


@dataclass(frozen=True)
class MutationLog:
    """Changed events only; indices refer to the score the operation received."""

    entries: tuple[MutationEntry, ...] = ()

    def __add__(self, other: MutationLog) -> MutationLog:
        return MutationLog(self.entries + other.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[MutationEntry]:
        return iter(self.entries)


def snap_to_c_major(midi: int) -> int:
    """Nearest C major scale tone; equidistant candidates resolve downward."""
    for distance in range(7):
        if (midi - distance) % 12 in C_MAJOR_PITCH_CLASSES:
            return midi - distance
        if (midi + distance) % 12 in C_MAJOR_PITCH_CLASSES:
            return midi + distance
    raise AssertionError("unreachable: every octave contains a scale tone")


def shift_pitch(midi: int, shift: int, *, snap_to_scale: bool = True) -> int:
    """Applies one sampled shift: move, optionally snap, then clamp to 48..107."""
    target = midi + shift
    if snap_to_scale:
        target = snap_to_c_major(target)
    return min(max(target, MIN_PITCH), MAX_PITCH)


def mutate_pitches(
    s: Score,
    p: MutationParams,
    *,
    rng: np.random.Generator | None = None,
) -> tuple[Score, MutationLog]:
    """
    Shifts each note with probability ``p.pitch_prob`` by ``rint(N(0, sigma))``.

    One uniform draw is taken per note; a selected note takes one extra
    normal draw. Rests, durations and chords are left alone.
    """
    generator = rng if rng is not None else stream_rng(p.seed)
    entries: list[MutationEntry] = []
    measures: list[Measure] = []
    for m_index, measure in enumerate(s.measures):
        events: list[NoteEvent] = []
        for e_index, event in enumerate(measure.events):
            if not event.is_note or generator.random() >= p.pitch_prob:
                events.append(event)
                continue
            shift = int(np.rint(generator.normal(0.0, p.pitch_sigma)))
            new_pitch = shift_pitch(event.midi, shift, snap_to_scale=p.snap_to_scale)
            if new_pitch == event.midi:
                events.append(event)
                continue
            entries.append(
                MutationEntry(m_index, e_index, event.midi, new_pitch, event.ticks, event.ticks)
            )
            events.append(event.with_pitch(new_pitch))
        measures.append(replace(measure, events=tuple(events)))
    return s.with_measures(tuple(measures)), MutationLog(tuple(entries))


def extend_durations(
    s: Score,
    p: MutationParams,
    *,
    rng: np.random.Generator | None = None,
) -> tuple[Score, MutationLog]:
    """
    Lets a selected note absorb the rest right after it in the same measure.

    Every note takes one uniform draw. A rest carrying a chord onset is never
    absorbed so chords stay on event boundaries. Measure sums are unchanged.
    """
    generator = rng if rng is not None else stream_rng(p.seed)
    entries: list[MutationEntry] = []
    measures: list[Measure] = []
    for m_index, measure in enumerate(s.measures):
        chord_onsets = {chord.onset for chord in measure.chords}
        onsets = measure.event_onsets()
        events: list[NoteEvent] = []
        e_index = 0
        while e_index < len(measure.events):
            event = measure.events[e_index]
            if not event.is_note:
                events.append(event)
                e_index += 1
                continue
            selected = generator.random() < p.extend_prob
            following = measure.events[e_index + 1] if e_index + 1 < len(measure.events) else None
            if (
                selected
                and following is not None
                and not following.is_note
                and onsets[e_index + 1] not in chord_onsets
            ):
                new_ticks = event.ticks + following.ticks
                entries.append(
                    MutationEntry(m_index, e_index, event.midi, event.midi, event.ticks, new_ticks)
                )
                events.append(event.with_ticks(new_ticks))
                e_index += 2
                continue
            events.append(event)
            e_index += 1
        measures.append(replace(measure, events=tuple(events)))
    return s.with_measures(tuple(measures)), MutationLog(tuple(entries))


def mutate(
    s: Score,
    p: MutationParams,
    *,
    stream: int = 0,
    rng: np.random.Generator | None = None,
) -> tuple[Score, MutationLog]:
    """Pitch mutation followed by duration extension on one shared generator."""
    generator = rng if rng is not None else stream_rng(p.seed, stream)
    pitched, pitch_log = mutate_pitches(s, p, rng=generator)
    extended, extend_log = extend_durations(pitched, p, rng=generator)
    get_logger(LogCategory.AUGMENT, stage="mutate").debug(
        "mutated {source}: {pitches} pitches, {extensions} extensions",
        source=s.source_id or "-",
        pitches=len(pitch_log),
        extensions=len(extend_log),
    )
    return extended, pitch_log + extend_log


class SamplingStrategy(StrEnum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


def mean_pitch(measure: Measure) -> float:
    """Sort feature for Gaussian sampling; all-rest measures score 0."""
    pitches = [event.midi for event in measure.notes()]
    return sum(pitches) / len(pitches) if pitches else 0.0


def rank_probabilities(pool_size: int, sigma_fraction: float = DEFAULT_SIGMA_FRACTION) -> np.ndarray:
    """
    Exact probability of each rank under the rounded, clipped normal draw.

    Ranks 0 and P-1 collect the clipped tails.
    """
    mu = (pool_size - 1) / 2.0
    sigma = pool_size * sigma_fraction
    edges = np.arange(pool_size + 1, dtype=np.float64) - 0.5
    cdf = np.array([0.5 * (1.0 + math.erf((edge - mu) / (sigma * math.sqrt(2.0)))) for edge in edges])
    cdf[0], cdf[-1] = 0.0, 1.0
    return np.diff(cdf)


@dataclass(frozen=True)
class SectionPool:
    """
    Deduplicated bank of full measures.

    ``sections`` keeps first-occurrence order. ``ranking`` lists section
    indices sorted by mean pitch (stable) and is what Gaussian draws index
    into. ``weights[i]`` is the probability of drawing ``sections[i]`` under
    ``strategy``.
    """

    sections: tuple[Measure, ...]
    ranking: tuple[int, ...]
    weights: tuple[float, ...]
    strategy: SamplingStrategy = SamplingStrategy.GAUSSIAN
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION
    source_count: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.sections)

    def weights_for(self, strategy: SamplingStrategy) -> tuple[float, ...]:
        if strategy is self.strategy:
            return self.weights
        return _weights(self.ranking, strategy, self.sigma_fraction)


def build_section_pool(
    scores: Sequence[Score],
    *,
    strategy: SamplingStrategy = SamplingStrategy.GAUSSIAN,
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION,
) -> SectionPool:
    """Collects every distinct measure of the given normalized scores."""
    if sigma_fraction <= 0:
        raise ValueError(f"sigma_fraction must be positive, got {sigma_fraction}")
    for score in scores:
        if not is_normalized(score):
            raise ValueError(f"score {score.source_id or '<unnamed>'} is not normalized")

    unique: dict[Measure, None] = {}
    for score in scores:
        for measure in score.measures:
            unique.setdefault(measure, None)
    if not unique:
        raise EmptyPoolError("cannot build a section pool from zero measures")

    sections = tuple(unique)
    ranking = tuple(sorted(range(len(sections)), key=lambda i: mean_pitch(sections[i])))
    get_logger(LogCategory.AUGMENT, stage="pool").info(
        "section pool holds {size} sections from {scores} scores",
        size=len(sections),
        scores=len(scores),
    )
    return SectionPool(
        sections=sections,
        ranking=ranking,
        weights=_weights(ranking, strategy, sigma_fraction),
        strategy=strategy,
        sigma_fraction=sigma_fraction,
        source_count=len(scores),
    )


def draw_section_indices(
    pool_size: int,
    n: int,
    strategy: SamplingStrategy,
    rng: np.random.Generator,
    sigma_fraction: float = DEFAULT_SIGMA_FRACTION,
) -> np.ndarray:
    """
    Raw index draws with replacement.

    Uniform draws index sections directly; Gaussian draws are ranks,
    ``rint(N((P-1)/2, P * sigma_fraction))`` clipped to ``[0, P-1]``.
    """
    if pool_size <= 0:
        raise EmptyPoolError("cannot sample from an empty pool")
    if n <= 0:
        raise SamplingError(f"number of sections must be at least 1, got {n}")
    if strategy is SamplingStrategy.UNIFORM:
        return rng.integers(0, pool_size, size=n)
    draws = rng.normal((pool_size - 1) / 2.0, pool_size * sigma_fraction, size=n)
    return np.clip(np.rint(draws), 0, pool_size - 1).astype(np.int64)


def sample_sections(
    pool: SectionPool,
    n: int,
    strategy: SamplingStrategy | None = None,
    seed: int = 0,
    *,
    rng: np.random.Generator | None = None,
    source_id: str = "",
) -> Score:
    """Draws ``n`` sections with replacement into a new C major score."""
    chosen = strategy or pool.strategy
    generator = rng if rng is not None else stream_rng(seed)
    indices = draw_section_indices(len(pool), n, chosen, generator, pool.sigma_fraction)
    if chosen is SamplingStrategy.GAUSSIAN:
        measures = tuple(pool.sections[pool.ranking[int(rank)]] for rank in indices)
    else:
        measures = tuple(pool.sections[int(index)] for index in indices)
    return Score(key=C_MAJOR, measures=measures, source_id=source_id)


@dataclass(frozen=True)
class GeneratedScore:
    index: int
    score: Score
    mutations: MutationLog = MutationLog()


def generate_sample(
    pool: SectionPool,
    index: int,
    *,
    sections_per_score: int = DEFAULT_SECTIONS_PER_SCORE,
    strategy: SamplingStrategy | None = None,
    seed: int = 0,
    mutation: MutationParams | None = None,
) -> GeneratedScore:
    """
    Builds score ``index`` of a dataset from stream ``index`` of ``seed``.

    When ``mutation`` is given the same generator continues into
    ``mutate`` after sampling, so the result still depends only on
    ``(seed, index)``.
    """
    rng = stream_rng(seed, index)
    score = sample_sections(
        pool,
        sections_per_score,
        strategy,
        rng=rng,
        source_id=f"{index:06d}",
    )
    if mutation is None:
        return GeneratedScore(index, score)
    mutated, log = mutate(score, mutation, rng=rng)
    return GeneratedScore(index, mutated, log)


def generate_dataset(
    pool: SectionPool,
    count: int,
    sections_per_score: int = DEFAULT_SECTIONS_PER_SCORE,
    strategy: SamplingStrategy | None = None,
    seed: int = 0,
) -> Iterator[Score]:
    """Lazily yields ``count`` recombined scores."""
    if len(pool) == 0:
        raise EmptyPoolError("cannot generate from an empty pool")
    for index in range(count):
        yield generate_sample(
            pool,
            index,
            sections_per_score=sections_per_score,
            strategy=strategy,
            seed=seed,
        ).score


def _weights(
    ranking: Sequence[int],
    strategy: SamplingStrategy,
    sigma_fraction: float,
) -> tuple[float, ...]:
    size = len(ranking)
    if strategy is SamplingStrategy.UNIFORM:
        return tuple(1.0 / size for _ in range(size))
    by_rank = rank_probabilities(size, sigma_fraction)
    weights = [0.0] * size
    for rank, section in enumerate(ranking):
        weights[section] = float(by_rank[rank])
    return tuple(weights)
