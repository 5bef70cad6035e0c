"""Use cases behind the CLI subcommands, following the ports-and-adapters layout."""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeVar

from libs.python.orpheus_logging import LogCategory, get_logger

from ..domain.augment import (
    MutationLog,
    MutationParams,
    SamplingStrategy,
    build_section_pool,
    generate_sample,
    mutate,
)
from ..domain.metrics import WerResult, wer_corpus
from ..domain.normalizer import RepairReport, normalize
from ..domain.rng import INPUT_MUTATION_BRANCH, stream_rng
from ..domain.score import Score
from ..domain.tokenizer import RecoveryReport, decode, encode, render_token_text, vocabulary
from ..errors import EmptyCorpusError, FileFormatError, OrpheusError
from ..infrastructure.abc_io import parse_abc, strip_metadata, write_abc
from ..infrastructure.mel_features import MelParams, log_mel_spectrogram, write_feature_bytes
from ..infrastructure.storage import decode_token_text, read_manifest, read_token_file
from ..infrastructure.synth import (
    DEFAULT_SAMPLE_RATE,
    DEFAULT_TEMPO_BPM,
    AudioBuffer,
    MidiSequence,
    render_wav,
    score_to_midi,
    write_smf,
)
from ..infrastructure.wav_io import read_wav_file, write_wav
from .config import MutateStage, PipelineConfig, TokenFormat
from .ports import DatasetSinkPort, ManifestRecord, MutationRecord, ScoreSourcePort, mutation_record

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Sequence[T], jobs: int) -> list[R]:
    """Maps ``func`` over ``items`` with up to ``jobs`` threads; results keep input order."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def normalize_text(text: str, *, source_id: str = "") -> tuple[Score, RepairReport]:
    """Strip metadata, parse and normalize one ABC tune."""
    return normalize(parse_abc(strip_metadata(text), source_id=source_id))


@dataclass(frozen=True)
class CorpusLoadResult:
    scores: tuple[Score, ...]
    report: RepairReport
    skipped: tuple[str, ...] = ()


def load_corpus(source: ScoreSourcePort, *, jobs: int = 1) -> CorpusLoadResult:
    """
    Normalizes every source, skipping (and logging) the ones that fail.

    Repair reports of the survivors are merged.
    """
    log = get_logger(LogCategory.DATA_QUALITY, stage="load")

    def load(source_id: str) -> tuple[str, tuple[Score, RepairReport] | None]:
        try:
            return source_id, normalize_text(source.read_source(source_id), source_id=source_id)
        except (OrpheusError, OSError, UnicodeDecodeError) as exc:
            log.warn("skipped {source}: {error}", source=source_id, error=str(exc))
            return source_id, None

    scores: list[Score] = []
    skipped: list[str] = []
    report = RepairReport()
    for source_id, loaded in parallel_map(load, source.list_sources(), jobs):
        if loaded is None:
            skipped.append(source_id)
            continue
        scores.append(loaded[0])
        report = report + loaded[1]
    return CorpusLoadResult(tuple(scores), report, tuple(skipped))


def render_score(
    score: Score,
    *,
    tempo_bpm: float = DEFAULT_TEMPO_BPM,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> tuple[MidiSequence, AudioBuffer]:
    midi = score_to_midi(score, tempo_bpm)
    return midi, render_wav(midi, sample_rate)


@dataclass
class PipelineResult:
    records: list[ManifestRecord]
    report: RepairReport
    skipped: tuple[str, ...]
    mutation_count: int = 0
    outputs: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.skipped)


@dataclass(frozen=True)
class _RenderedSample:
    record: ManifestRecord
    tokens: list[int]
    mutations: tuple[MutationRecord, ...]


class RunPipelineUseCase:
    """clean → parse → normalize → (mutate) → pool → generate → tokenize → render → manifest."""

    def __init__(self, source: ScoreSourcePort, sink: DatasetSinkPort):
        self.source = source
        self.sink = sink
        self.log = get_logger(LogCategory.APP, stage="pipeline")

    def execute(self, config: PipelineConfig) -> PipelineResult:
        corpus = load_corpus(self.source, jobs=config.jobs)
        if not corpus.scores:
            raise EmptyCorpusError(f"no usable scores in {config.input_dir}")
        self.log.info(
            "normalized {kept} scores, skipped {skipped}",
            kept=len(corpus.scores),
            skipped=len(corpus.skipped),
        )

        params = config.mutation_params()
        scores = list(corpus.scores)
        mutations: list[MutationRecord] = []
        if config.mutate and config.mutate_stage is MutateStage.BEFORE_POOL:
            for index, score in enumerate(scores):
                rng = stream_rng(config.seed, index, branch=INPUT_MUTATION_BRANCH)
                mutated, log = mutate(score, params, rng=rng)
                scores[index] = mutated
                mutations.extend(mutation_record(score.source_id, entry) for entry in log)

        pool = build_section_pool(
            scores,
            strategy=config.strategy,
            sigma_fraction=config.gaussian_sigma_fraction,
        )
        after_sampling = params if config.mutate and config.mutate_stage is MutateStage.AFTER_SAMPLING else None

        def produce(index: int) -> _RenderedSample:
            sample = generate_sample(
                pool,
                index,
                sections_per_score=config.sections_per_score,
                strategy=config.strategy,
                seed=config.seed,
                mutation=after_sampling,
            )
            return self._emit(sample.index, sample.score, sample.mutations, config)

        samples = parallel_map(produce, list(range(config.count)), config.jobs)
        for sample in samples:
            mutations.extend(sample.mutations)
        records = [sample.record for sample in samples]

        outputs = [
            self.sink.write_tokens(
                (sample.tokens for sample in samples),
                binary=config.token_format is TokenFormat.BINARY,
            ),
            self.sink.write_vocabulary(vocabulary()),
            self.sink.write_repair_report(corpus.report, skipped=corpus.skipped),
        ]
        if config.mutate:
            outputs.append(self.sink.write_mutations(mutations))
        outputs.append(self.sink.write_manifest(records))
        self.log.info("wrote {count} records to {root}", count=len(records), root=str(self.sink.root))
        return PipelineResult(
            records=records,
            report=corpus.report,
            skipped=corpus.skipped,
            mutation_count=len(mutations),
            outputs=outputs,
        )

    def _emit(self, index: int, score: Score, log: MutationLog, config: PipelineConfig) -> _RenderedSample:
        record_id = f"{index:06d}"
        tokens = encode(score)
        abc_path = self.sink.write_abc(record_id, write_abc(score))
        midi, audio = render_score(score, tempo_bpm=config.tempo_bpm, sample_rate=config.sample_rate)
        wav_path = self.sink.write_wav(record_id, write_wav(audio))
        if config.write_midi:
            self.sink.write_midi(record_id, write_smf(midi))
        record = ManifestRecord(
            id=record_id,
            wav_path=wav_path,
            token_text=render_token_text(tokens),
            abc_path=abc_path,
            duration_s=midi.duration_s,
            seed=config.seed,
        )
        return _RenderedSample(record, tokens, tuple(mutation_record(record_id, entry) for entry in log))


@dataclass
class BatchResult:
    """Outcome of a per-file subcommand; ``skipped`` files failed and were logged."""

    written: list[Path] = field(default_factory=list)
    skipped: list[Path] = field(default_factory=list)
    report: RepairReport = RepairReport()
    recovery: RecoveryReport = RecoveryReport()

    @property
    def partial(self) -> bool:
        return bool(self.skipped)


def _batch(
    paths: Iterable[Path],
    action: Callable[[Path], Path | None],
    result: BatchResult,
) -> BatchResult:
    log = get_logger(LogCategory.DATA_QUALITY, stage="batch")
    for path in paths:
        try:
            written = action(path)
        except (OrpheusError, OSError, UnicodeDecodeError) as exc:
            log.warn("skipped {path}: {error}", path=str(path), error=str(exc))
            result.skipped.append(path)
            continue
        if written is not None:
            result.written.append(written)
    return result


def clean_files(paths: Sequence[Path], out_dir: Path) -> BatchResult:
    out_dir.mkdir(parents=True, exist_ok=True)

    def clean(path: Path) -> Path:
        target = out_dir / path.name
        target.write_text(strip_metadata(path.read_text(encoding="utf-8")), encoding="utf-8")
        return target

    return _batch(paths, clean, BatchResult())


def normalize_files(paths: Sequence[Path], out_dir: Path) -> BatchResult:
    out_dir.mkdir(parents=True, exist_ok=True)
    result = BatchResult()

    def run(path: Path) -> Path:
        score, report = normalize_text(path.read_text(encoding="utf-8"), source_id=path.stem)
        target = out_dir / f"{path.stem}.abc"
        target.write_text(write_abc(score) + "\n", encoding="utf-8")
        result.report = result.report + report
        return target

    _batch(paths, run, result)
    (out_dir / "repair_report.json").write_text(
        json.dumps({**result.report.to_dict(), "skipped": [p.stem for p in result.skipped]}, indent=2)
        + "\n",
        encoding="utf-8",
    )
    return result


def read_normalized(path: Path) -> Score:
    """Loads an ABC file and normalizes it (a no-op for files this toolkit wrote)."""
    score, _ = normalize_text(path.read_text(encoding="utf-8"), source_id=path.stem)
    return score


def mutate_files(paths: Sequence[Path], out_dir: Path, params: MutationParams) -> BatchResult:
    """Mutates input ``k`` (in the given order) with stream ``k`` of ``params.seed``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []
    indices = {path: index for index, path in enumerate(paths)}

    def run(path: Path) -> Path:
        mutated, log = mutate(read_normalized(path), params, stream=indices[path])
        target = out_dir / f"{path.stem}.abc"
        target.write_text(write_abc(mutated) + "\n", encoding="utf-8")
        lines.extend(json.dumps(mutation_record(path.stem, entry)) + "\n" for entry in log)
        return target

    result = _batch(paths, run, BatchResult())
    (out_dir / "mutations.jsonl").write_text("".join(lines), encoding="utf-8")
    return result


def generate_files(
    paths: Sequence[Path],
    out_dir: Path,
    *,
    count: int,
    sections_per_score: int,
    strategy: SamplingStrategy,
    seed: int,
    sigma_fraction: float,
) -> BatchResult:
    result = BatchResult()
    scores: list[Score] = []

    def load(path: Path) -> None:
        scores.append(read_normalized(path))

    _batch(paths, load, result)
    if not scores:
        raise EmptyCorpusError("no usable scores to build a section pool from")
    pool = build_section_pool(scores, strategy=strategy, sigma_fraction=sigma_fraction)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index in range(count):
        sample = generate_sample(pool, index, sections_per_score=sections_per_score, strategy=strategy, seed=seed)
        target = out_dir / f"{index:06d}.abc"
        target.write_text(write_abc(sample.score) + "\n", encoding="utf-8")
        result.written.append(target)
    return result


def tokenize_files(paths: Sequence[Path]) -> tuple[list[list[int]], BatchResult]:
    sequences: list[list[int]] = []

    def run(path: Path) -> None:
        sequences.append(encode(read_normalized(path)))

    return sequences, _batch(paths, run, BatchResult())


def detokenize_sequences(sequences: Sequence[Sequence[int]], out_dir: Path) -> BatchResult:
    out_dir.mkdir(parents=True, exist_ok=True)
    result = BatchResult()
    for index, sequence in enumerate(sequences):
        score, recovery = decode(sequence)
        target = out_dir / f"{index:06d}.abc"
        target.write_text(write_abc(score) + "\n", encoding="utf-8")
        result.written.append(target)
        result.recovery = result.recovery + recovery
    return result


def render_files(
    paths: Sequence[Path],
    out_dir: Path,
    *,
    tempo_bpm: float,
    sample_rate: int,
    write_midi: bool = False,
    jobs: int = 1,
) -> BatchResult:
    out_dir.mkdir(parents=True, exist_ok=True)

    def render(path: Path) -> Path:
        midi, audio = render_score(read_normalized(path), tempo_bpm=tempo_bpm, sample_rate=sample_rate)
        target = out_dir / f"{path.stem}.wav"
        target.write_bytes(write_wav(audio))
        if write_midi:
            (out_dir / f"{path.stem}.mid").write_bytes(write_smf(midi))
        return target

    result = BatchResult()
    log = get_logger(LogCategory.DATA_QUALITY, stage="render")

    def guarded(path: Path) -> tuple[Path, Path | None]:
        try:
            return path, render(path)
        except (OrpheusError, OSError, UnicodeDecodeError) as exc:
            log.warn("skipped {path}: {error}", path=str(path), error=str(exc))
            return path, None

    for path, written in parallel_map(guarded, list(paths), jobs):
        if written is None:
            result.skipped.append(path)
        else:
            result.written.append(written)
    return result


def feature_files(paths: Sequence[Path], out_dir: Path, params: MelParams) -> BatchResult:
    out_dir.mkdir(parents=True, exist_ok=True)

    def extract(path: Path) -> Path:
        features = log_mel_spectrogram(read_wav_file(path), params)
        target = out_dir / f"{path.stem}.mel"
        target.write_bytes(write_feature_bytes(features))
        return target

    return _batch(paths, extract, BatchResult())


def load_token_column(path: Path, column: str = "token_text") -> list[list[int]]:
    """Token sequences from a token file, or from one column of a JSONL manifest."""
    if path.suffix != ".jsonl":
        return read_token_file(path, strict=False)
    sequences: list[list[int]] = []
    for record in read_manifest(path):
        value = record.get(column)
        if not isinstance(value, str):
            raise FileFormatError(f"{path}: column {column!r} does not hold token text")
        sequences.extend(decode_token_text(value, strict=False))
    return sequences


def corpus_wer(
    reference: Path,
    hypothesis: Path,
    *,
    reference_column: str = "token_text",
    hypothesis_column: str = "token_text",
) -> WerResult:
    references = load_token_column(reference, reference_column)
    hypotheses = load_token_column(hypothesis, hypothesis_column)
    if len(references) != len(hypotheses):
        raise FileFormatError(
            f"{len(references)} reference sequences but {len(hypotheses)} hypotheses"
        )
    return wer_corpus(zip(references, hypotheses, strict=True))


def verify_record(
    root: Path,
    record: ManifestRecord,
    *,
    tolerance_s: float = 0.05,
    tempo_bpm: float = DEFAULT_TEMPO_BPM,
) -> list[str]:
    """
    Checks one manifest record: files exist, tokens decode cleanly, and the
    WAV and the manifest both last as long as the decoded score at ``tempo_bpm``.
    """
    problems: list[str] = []
    for relative in (record["wav_path"], record["abc_path"]):
        if not (root / relative).is_file():
            problems.append(f"{record['id']}: missing {relative}")
    tokens = decode_token_text(record["token_text"], strict=False)
    if len(tokens) != 1:
        problems.append(f"{record['id']}: expected one token sequence")
        return problems
    score, recovery = decode(tokens[0])
    if not recovery.clean or encode(score) != tokens[0]:
        problems.append(f"{record['id']}: token text does not round-trip")
    expected_s = score_to_midi(score, tempo_bpm).duration_s
    if abs(record["duration_s"] - expected_s) > tolerance_s:
        problems.append(f"{record['id']}: manifest says {record['duration_s']}s, score lasts {expected_s:.3f}s")
    wav = root / record["wav_path"]
    if wav.is_file():
        audio = read_wav_file(wav)
        if abs(audio.duration_s - record["duration_s"]) > tolerance_s:
            problems.append(f"{record['id']}: WAV lasts {audio.duration_s:.3f}s, manifest says {record['duration_s']}")
    return problems

