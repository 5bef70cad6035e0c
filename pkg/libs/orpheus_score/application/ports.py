"""Port interfaces between the pipeline use cases and file storage."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import TypedDict

from ..domain.augment import MutationEntry
from ..domain.normalizer import RepairReport
from ..domain.tokenizer import Vocabulary


class ManifestRecord(TypedDict):
    id: str
    wav_path: str
    token_text: str
    abc_path: str
    duration_s: float
    seed: int


class MutationRecord(TypedDict):
    score: str
    measure: int
    event: int
    old_pitch: int | None
    new_pitch: int | None
    old_ticks: int
    new_ticks: int


class VocabularyEntry(TypedDict):
    id: int
    symbol: str


class ScoreSourcePort(ABC):
    """Port for the corpus of input ABC tunes."""

    @abstractmethod
    def list_sources(self) -> list[str]:
        """Source ids in a stable order."""

    @abstractmethod
    def read_source(self, source_id: str) -> str:
        """Raw ABC text of one source."""


class DatasetSinkPort(ABC):
    """Port for everything a pipeline run writes."""

    @abstractmethod
    def write_abc(self, record_id: str, text: str) -> str:
        """Stores one ABC file; returns its path relative to the dataset root."""

    @abstractmethod
    def write_wav(self, record_id: str, data: bytes) -> str:
        """Stores one WAV file; returns its relative path."""

    @abstractmethod
    def write_midi(self, record_id: str, data: bytes) -> str:
        """Stores one SMF file; returns its relative path."""

    @abstractmethod
    def write_tokens(self, sequences: Iterable[Sequence[int]], *, binary: bool) -> str:
        """Stores every token sequence in index order; returns the relative path."""

    @abstractmethod
    def write_vocabulary(self, vocab: Vocabulary) -> str:
        """Exports the vocabulary table."""

    @abstractmethod
    def write_repair_report(self, report: RepairReport, *, skipped: Sequence[str]) -> str:
        """Stores merged normalization counts plus skipped source ids."""

    @abstractmethod
    def write_mutations(self, records: Iterable[MutationRecord]) -> str:
        """Stores mutation log lines."""

    @abstractmethod
    def write_manifest(self, records: Iterable[ManifestRecord]) -> str:
        """Stores the manifest in index order."""

    @property
    @abstractmethod
    def root(self) -> Path:
        """Dataset root directory."""


def mutation_record(score_id: str, entry: MutationEntry) -> MutationRecord:
    return MutationRecord(
        score=score_id,
        measure=entry.measure,
        event=entry.event,
        old_pitch=entry.old_pitch,
        new_pitch=entry.new_pitch,
        old_ticks=entry.old_ticks,
        new_ticks=entry.new_ticks,
    )
