"""
Command-line entry point for the orpheus-score toolkit.

Exit codes: 0 success, 1 fatal error, 2 finished but some inputs were
skipped. ``ORPHEUS_SEED`` overrides the configured seed of ``pipeline``.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from libs.python.orpheus_logging import LogCategory, configure_logger, get_logger
from libs.python.settings import settings

from .application.config import MutateStage, TokenFormat, load_config
from .application.use_cases import (
    BatchResult,
    RunPipelineUseCase,
    clean_files,
    corpus_wer,
    detokenize_sequences,
    feature_files,
    generate_files,
    mutate_files,
    normalize_files,
    render_files,
    tokenize_files,
    verify_record,
)
from .domain.augment import DEFAULT_SECTIONS_PER_SCORE, DEFAULT_SIGMA_FRACTION, MutationParams, SamplingStrategy
from .domain.tokenizer import vocabulary
from .errors import OrpheusError
from .infrastructure.mel_features import MelParams
from .infrastructure.storage import (
    AbcDirectorySource,
    FileDatasetStorage,
    read_manifest,
    read_token_file,
    vocabulary_json,
    write_token_file,
)
from .infrastructure.synth import DEFAULT_SAMPLE_RATE, DEFAULT_TEMPO_BPM

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _expand(paths: Sequence[Path], suffix: str) -> list[Path]:
    """Files as given; directories contribute their ``*suffix`` files in name order."""
    expanded: list[Path] = []
    for path in paths:
        if path.is_dir():
            expanded.extend(sorted(path.glob(f"*{suffix}")))
        else:
            expanded.append(path)
    return expanded


def _emit(payload: object) -> None:
    json.dump(payload, sys.stdout)
    sys.stdout.write("\n")


def _batch_exit(result: BatchResult, **extra: object) -> int:
    _emit({"written": len(result.written), "skipped": [str(p) for p in result.skipped], **extra})
    return EXIT_PARTIAL if result.partial else EXIT_OK


def _add_mutation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pitch-prob", type=float, help="Probability a note's pitch is mutated")
    parser.add_argument("--pitch-sigma", type=float, help="Std-dev of the pitch shift in semitones")
    parser.add_argument("--extend-prob", type=float, help="Probability a note absorbs a following rest")
    parser.add_argument(
        "--no-snap", dest="snap_to_scale", action="store_false", default=None, help="Keep chromatic shifts"
    )


def _add_sampling_flags(parser: argparse.ArgumentParser, *, defaults: bool) -> None:
    parser.add_argument("--count", type=int, default=1000 if defaults else None, help="Scores to generate")
    parser.add_argument(
        "--sections",
        type=int,
        default=DEFAULT_SECTIONS_PER_SCORE if defaults else None,
        help="Measures per generated score",
    )
    parser.add_argument(
        "--strategy",
        choices=[s.value for s in SamplingStrategy],
        default=SamplingStrategy.GAUSSIAN.value if defaults else None,
        help="Section sampling strategy",
    )
    parser.add_argument(
        "--sigma-fraction",
        type=float,
        default=DEFAULT_SIGMA_FRACTION if defaults else None,
        help="Gaussian sigma as a fraction of the pool size",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orpheus-score",
        description="ABC score cleaning, augmentation, tokenization and audio rendering",
    )
    parser.add_argument("--verbose", action="store_true", help="Echo log events to the console")
    sub = parser.add_subparsers(dest="command", required=True)

    clean = sub.add_parser("clean", help="Strip metadata headers and ornaments")
    clean.add_argument("inputs", nargs="+", type=Path)
    clean.add_argument("--out", type=Path, required=True)

    normalize = sub.add_parser("normalize", help="Normalize to C major, 4/4, 1/192 grid")
    normalize.add_argument("inputs", nargs="+", type=Path)
    normalize.add_argument("--out", type=Path, required=True)

    mutate = sub.add_parser("mutate", help="Apply seeded pitch/duration mutation")
    mutate.add_argument("inputs", nargs="+", type=Path)
    mutate.add_argument("--out", type=Path, required=True)
    mutate.add_argument("--seed", type=int, default=0)
    _add_mutation_flags(mutate)

    generate = sub.add_parser("gen-dataset", help="Recombine sections into new scores")
    generate.add_argument("inputs", nargs="+", type=Path)
    generate.add_argument("--out", type=Path, required=True)
    generate.add_argument("--seed", type=int, default=0)
    _add_sampling_flags(generate, defaults=True)

    tokenize = sub.add_parser("tokenize", help="Encode ABC files as token sequences")
    tokenize.add_argument("inputs", nargs="+", type=Path)
    tokenize.add_argument("--out", type=Path, required=True, help="Token file (.txt or .bin)")
    tokenize.add_argument("--format", choices=[f.value for f in TokenFormat], help="Override the suffix")

    detokenize = sub.add_parser("detokenize", help="Decode token sequences back to ABC")
    detokenize.add_argument("tokens", type=Path)
    detokenize.add_argument("--out", type=Path, required=True)
    detokenize.add_argument("--format", choices=[f.value for f in TokenFormat], help="Override the suffix")

    render = sub.add_parser("render", help="Render ABC files to WAV (and MIDI)")
    render.add_argument("inputs", nargs="+", type=Path)
    render.add_argument("--out", type=Path, required=True)
    render.add_argument("--tempo", type=float, default=DEFAULT_TEMPO_BPM, help="Beats per minute")
    render.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    render.add_argument("--midi", action="store_true", help="Also write .mid files")
    render.add_argument("--jobs", type=int, default=1)

    features = sub.add_parser("features", help="Log-mel features for WAV files")
    features.add_argument("inputs", nargs="+", type=Path)
    features.add_argument("--out", type=Path, required=True)
    features.add_argument("--n-fft", type=int, default=400)
    features.add_argument("--hop", type=int, default=160)
    features.add_argument("--n-mels", type=int, default=80)

    wer = sub.add_parser("wer", help="Word error rate between two token files or manifests")
    wer.add_argument("reference", type=Path)
    wer.add_argument("hypothesis", type=Path)
    wer.add_argument("--ref-column", default="token_text", help="Manifest column for references")
    wer.add_argument("--hyp-column", default="token_text", help="Manifest column for hypotheses")

    pipeline = sub.add_parser("pipeline", help="Run the full dataset pipeline")
    pipeline.add_argument("--input", dest="input_dir", type=Path)
    pipeline.add_argument("--out", dest="output_dir", type=Path)
    pipeline.add_argument("--config", type=Path, help="Optional TOML config file")
    pipeline.add_argument("--seed", type=int)
    pipeline.add_argument("--tempo", dest="tempo_bpm", type=float)
    pipeline.add_argument("--sample-rate", type=int)
    pipeline.add_argument("--jobs", type=int)
    pipeline.add_argument("--mutate", action="store_true", default=None)
    pipeline.add_argument("--mutate-stage", choices=[s.value for s in MutateStage])
    pipeline.add_argument("--token-format", choices=[f.value for f in TokenFormat])
    pipeline.add_argument("--midi", dest="write_midi", action="store_true", default=None)
    _add_sampling_flags(pipeline, defaults=False)
    _add_mutation_flags(pipeline)

    vocab = sub.add_parser("vocab", help="Export the vocabulary table as JSON")
    vocab.add_argument("--out", type=Path, required=True)

    verify = sub.add_parser("verify", help="Check every record of a pipeline manifest")
    verify.add_argument("manifest", type=Path)
    verify.add_argument("--tempo", type=float, default=DEFAULT_TEMPO_BPM, help="Tempo the dataset was rendered at")

    return parser


def _binary_flag(value: str | None) -> bool | None:
    return None if value is None else value == TokenFormat.BINARY.value


def _run(args: argparse.Namespace) -> int:
    command = args.command
    if command == "clean":
        return _batch_exit(clean_files(_expand(args.inputs, ".abc"), args.out))
    if command == "normalize":
        result = normalize_files(_expand(args.inputs, ".abc"), args.out)
        return _batch_exit(result, report=result.report.to_dict())
    if command == "mutate":
        params = MutationParams(
            **{
                key: value
                for key, value in {
                    "pitch_prob": args.pitch_prob,
                    "pitch_sigma": args.pitch_sigma,
                    "extend_prob": args.extend_prob,
                    "snap_to_scale": args.snap_to_scale,
                }.items()
                if value is not None
            },
            seed=args.seed,
        )
        return _batch_exit(mutate_files(_expand(args.inputs, ".abc"), args.out, params))
    if command == "gen-dataset":
        result = generate_files(
            _expand(args.inputs, ".abc"),
            args.out,
            count=args.count,
            sections_per_score=args.sections,
            strategy=SamplingStrategy(args.strategy),
            seed=args.seed,
            sigma_fraction=args.sigma_fraction,
        )
        return _batch_exit(result)
    if command == "tokenize":
        sequences, result = tokenize_files(_expand(args.inputs, ".abc"))
        write_token_file(args.out, sequences, binary=_binary_flag(args.format))
        return _batch_exit(result, sequences=len(sequences))
    if command == "detokenize":
        sequences = read_token_file(args.tokens, strict=False, binary=_binary_flag(args.format))
        result = detokenize_sequences(sequences, args.out)
        recovery = result.recovery
        return _batch_exit(
            result,
            recovery={
                "dropped": recovery.dropped,
                "padded": recovery.padded,
                "truncated": recovery.truncated,
                "unterminated": recovery.unterminated,
            },
        )
    if command == "render":
        result = render_files(
            _expand(args.inputs, ".abc"),
            args.out,
            tempo_bpm=args.tempo,
            sample_rate=args.sample_rate,
            write_midi=args.midi,
            jobs=args.jobs,
        )
        return _batch_exit(result)
    if command == "features":
        params = MelParams(n_fft=args.n_fft, hop=args.hop, n_mels=args.n_mels)
        return _batch_exit(feature_files(_expand(args.inputs, ".wav"), args.out, params))
    if command == "wer":
        score = corpus_wer(
            args.reference,
            args.hypothesis,
            reference_column=args.ref_column,
            hypothesis_column=args.hyp_column,
        )
        _emit(score.to_dict())
        return EXIT_OK
    if command == "pipeline":
        return _run_pipeline(args)
    if command == "vocab":
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(vocabulary_json(vocabulary()), encoding="utf-8")
        _emit({"written": 1, "size": len(vocabulary())})
        return EXIT_OK
    if command == "verify":
        root = args.manifest.parent
        problems = [
            problem
            for record in read_manifest(args.manifest)
            for problem in verify_record(root, record, tempo_bpm=args.tempo)
        ]
        _emit({"problems": problems})
        return EXIT_FATAL if problems else EXIT_OK
    raise AssertionError(f"unhandled command {command}")


def _run_pipeline(args: argparse.Namespace) -> int:
    overrides: dict[str, object] = {
        "input_dir": args.input_dir,
        "output_dir": args.output_dir,
        "seed": args.seed,
        "tempo_bpm": args.tempo_bpm,
        "sample_rate": args.sample_rate,
        "jobs": args.jobs,
        "mutate": args.mutate,
        "mutate_stage": args.mutate_stage,
        "token_format": args.token_format,
        "write_midi": args.write_midi,
        "count": args.count,
        "sections_per_score": args.sections,
        "strategy": args.strategy,
        "gaussian_sigma_fraction": args.sigma_fraction,
        "mutation.pitch_prob": args.pitch_prob,
        "mutation.pitch_sigma": args.pitch_sigma,
        "mutation.extend_prob": args.extend_prob,
        "mutation.snap_to_scale": args.snap_to_scale,
    }
    config = load_config(args.config, overrides)
    use_case = RunPipelineUseCase(AbcDirectorySource(config.input_dir), FileDatasetStorage(config.output_dir))
    result = use_case.execute(config)
    _emit(
        {
            "records": len(result.records),
            "skipped": list(result.skipped),
            "report": result.report.to_dict(),
            "mutations": result.mutation_count,
            "outputs": result.outputs,
        }
    )
    return EXIT_PARTIAL if result.partial else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        settings.LOG_CONSOLE = True
    configure_logger()
    log = get_logger(LogCategory.APP, command=args.command)

    try:
        code = _run(args)
    except (OrpheusError, OSError) as e:
        log.error("{command} failed: {error}", command=args.command, error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FATAL
    log.info("{command} finished with exit code {code}", command=args.command, code=code)
    return code


if __name__ == "__main__":
    sys.exit(main())
