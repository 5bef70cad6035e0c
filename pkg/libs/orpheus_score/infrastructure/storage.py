"""File-system adapters for the corpus and for generated datasets."""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from pydantic import TypeAdapter, ValidationError

from ..application.ports import (
    DatasetSinkPort,
    ManifestRecord,
    MutationRecord,
    ScoreSourcePort,
    VocabularyEntry,
)
from ..domain.normalizer import RepairReport
from ..domain.tokenizer import EOS, Vocabulary, parse_token_text, render_token_text, vocabulary
from ..errors import ConfigError, FileFormatError

TOKEN_ID_DTYPE = np.dtype("<u2")
MANIFEST_FILE = "manifest.jsonl"
TOKENS_TEXT_FILE = "tokens.txt"
TOKENS_BINARY_FILE = "tokens.bin"
VOCABULARY_FILE = "vocabulary.json"
REPAIR_REPORT_FILE = "repair_report.json"
MUTATIONS_FILE = "mutations.jsonl"

_manifest_adapter: TypeAdapter[ManifestRecord] = TypeAdapter(ManifestRecord)
_vocabulary_adapter: TypeAdapter[list[VocabularyEntry]] = TypeAdapter(list[VocabularyEntry])


class AbcDirectorySource(ScoreSourcePort):
    """Every ``*.abc`` file directly inside a directory, sorted by name."""

    def __init__(self, directory: Path):
        if not directory.is_dir():
            raise ConfigError(f"input directory {directory} does not exist")
        self.directory = directory

    def list_sources(self) -> list[str]:
        return sorted(path.stem for path in self.directory.glob("*.abc"))

    def read_source(self, source_id: str) -> str:
        return (self.directory / f"{source_id}.abc").read_text(encoding="utf-8")


class FileDatasetStorage(DatasetSinkPort):
    """
    Writes a dataset below one root directory.

    Layout: ``abc/``, ``wav/`` and ``midi/`` hold one file per record; the
    token file, vocabulary, repair report, mutation log and manifest sit at
    the root. Returned paths are relative to the root.
    """

    def __init__(self, root: Path):
        self._root = root
        self._root.mkdir(parents=True, exist_ok=True)

    @property
    def root(self) -> Path:
        return self._root

    def _write(self, relative: str, data: bytes | str) -> str:
        path = self._root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            path.write_text(data, encoding="utf-8")
        return relative

    def write_abc(self, record_id: str, text: str) -> str:
        return self._write(f"abc/{record_id}.abc", f"{text}\n")

    def write_wav(self, record_id: str, data: bytes) -> str:
        return self._write(f"wav/{record_id}.wav", data)

    def write_midi(self, record_id: str, data: bytes) -> str:
        return self._write(f"midi/{record_id}.mid", data)

    def write_tokens(self, sequences: Iterable[Sequence[int]], *, binary: bool) -> str:
        if binary:
            return self._write(TOKENS_BINARY_FILE, encode_token_binary(sequences))
        return self._write(TOKENS_TEXT_FILE, encode_token_text(sequences))

    def write_vocabulary(self, vocab: Vocabulary) -> str:
        return self._write(VOCABULARY_FILE, vocabulary_json(vocab))

    def write_repair_report(self, report: RepairReport, *, skipped: Sequence[str]) -> str:
        payload = {**report.to_dict(), "skipped": list(skipped)}
        return self._write(REPAIR_REPORT_FILE, json.dumps(payload, indent=2) + "\n")

    def write_mutations(self, records: Iterable[MutationRecord]) -> str:
        return self._write(MUTATIONS_FILE, _jsonl(records))

    def write_manifest(self, records: Iterable[ManifestRecord]) -> str:
        return self._write(MANIFEST_FILE, _jsonl(records))


def _jsonl(records: Iterable[object]) -> str:
    return "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in records)


def encode_token_text(sequences: Iterable[Sequence[int]]) -> str:
    """One space-separated symbol line per sequence."""
    return "".join(render_token_text(sequence) + "\n" for sequence in sequences)


def decode_token_text(text: str, *, strict: bool = True) -> list[list[int]]:
    return [parse_token_text(line, strict=strict) for line in text.splitlines() if line.strip()]


def encode_token_binary(sequences: Iterable[Sequence[int]]) -> bytes:
    """Concatenated little-endian 16-bit ids; sequences are delimited by their EOS."""
    ids = [token_id for sequence in sequences for token_id in sequence]
    return np.asarray(ids, dtype=TOKEN_ID_DTYPE).tobytes()


def decode_token_binary(data: bytes) -> list[list[int]]:
    if len(data) % TOKEN_ID_DTYPE.itemsize:
        raise FileFormatError("token file length is not a multiple of 2 bytes")
    eos = vocabulary().id_of(EOS)
    sequences: list[list[int]] = []
    current: list[int] = []
    for token_id in np.frombuffer(data, dtype=TOKEN_ID_DTYPE).tolist():
        current.append(int(token_id))
        if token_id == eos:
            sequences.append(current)
            current = []
    if current:
        sequences.append(current)
    return sequences


def _is_binary(path: Path, binary: bool | None) -> bool:
    return binary if binary is not None else path.suffix == ".bin"


def read_token_file(path: Path, *, strict: bool = True, binary: bool | None = None) -> list[list[int]]:
    """Reads binary ids or symbol text; without ``binary`` the ``.bin`` suffix decides."""
    if _is_binary(path, binary):
        return decode_token_binary(path.read_bytes())
    return decode_token_text(path.read_text(encoding="utf-8"), strict=strict)


def write_token_file(path: Path, sequences: Iterable[Sequence[int]], *, binary: bool | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if _is_binary(path, binary):
        path.write_bytes(encode_token_binary(sequences))
    else:
        path.write_text(encode_token_text(sequences), encoding="utf-8")


def vocabulary_json(vocab: Vocabulary) -> str:
    entries = [VocabularyEntry(id=index, symbol=symbol) for index, symbol in enumerate(vocab.symbols)]
    return json.dumps(entries, indent=2) + "\n"


def read_vocabulary(path: Path) -> Vocabulary:
    try:
        entries = _vocabulary_adapter.validate_json(path.read_bytes())
    except ValidationError as exc:
        raise FileFormatError(f"{path}: invalid vocabulary: {exc}") from exc
    ordered = sorted(entries, key=lambda entry: entry["id"])
    if [entry["id"] for entry in ordered] != list(range(len(ordered))):
        raise FileFormatError(f"{path}: vocabulary ids must be contiguous from 0")
    return Vocabulary(tuple(entry["symbol"] for entry in ordered))


def read_manifest(path: Path) -> list[ManifestRecord]:
    records: list[ManifestRecord] = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(_manifest_adapter.validate_json(line))
        except ValidationError as exc:
            raise FileFormatError(f"{path}:{number}: invalid manifest record: {exc}") from exc
    return records
