import json
from pathlib import Path

import pytest

from libs.orpheus_score.application.ports import ManifestRecord, mutation_record
from libs.orpheus_score.domain.augment import MutationEntry
from libs.orpheus_score.domain.normalizer import RepairReport
from libs.orpheus_score.domain.tokenizer import encode, vocabulary
from libs.orpheus_score.errors import ConfigError, FileFormatError
from libs.orpheus_score.infrastructure.storage import (
    AbcDirectorySource,
    FileDatasetStorage,
    decode_token_binary,
    encode_token_binary,
    read_manifest,
    read_token_file,
    read_vocabulary,
    write_token_file,
)


def test_directory_source_lists_sorted_stems(abc_corpus: Path):
    source = AbcDirectorySource(abc_corpus)

    assert source.list_sources() == ["air", "hornpipe", "jig_in_common", "reel"]
    assert source.read_source("air").startswith("X:2")


def test_directory_source_requires_directory(tmp_path: Path):
    with pytest.raises(ConfigError):
        AbcDirectorySource(tmp_path / "missing")


def test_dataset_layout(tmp_path: Path):
    storage = FileDatasetStorage(tmp_path / "dataset")

    assert storage.write_abc("000001", "K:C") == "abc/000001.abc"
    assert storage.write_wav("000001", b"RIFF") == "wav/000001.wav"
    assert storage.write_midi("000001", b"MThd") == "midi/000001.mid"
    assert storage.write_vocabulary(vocabulary()) == "vocabulary.json"
    assert (tmp_path / "dataset" / "abc" / "000001.abc").read_text(encoding="utf-8") == "K:C\n"


def test_repair_report_and_mutations(tmp_path: Path):
    storage = FileDatasetStorage(tmp_path)
    storage.write_repair_report(RepairReport(padded=2), skipped=["bad"])
    storage.write_mutations([mutation_record("000003", MutationEntry(1, 2, 60, 62, 48, 48))])

    report = json.loads((tmp_path / "repair_report.json").read_text(encoding="utf-8"))
    assert report["padded"] == 2
    assert report["skipped"] == ["bad"]

    line = json.loads((tmp_path / "mutations.jsonl").read_text(encoding="utf-8"))
    assert line == {
        "score": "000003",
        "measure": 1,
        "event": 2,
        "old_pitch": 60,
        "new_pitch": 62,
        "old_ticks": 48,
        "new_ticks": 48,
    }


def test_manifest_round_trip(tmp_path: Path):
    storage = FileDatasetStorage(tmp_path)
    records = [
        ManifestRecord(
            id=f"{index:06d}",
            wav_path=f"wav/{index:06d}.wav",
            token_text=text,
            abc_path=f"abc/{index:06d}.abc",
            duration_s=1.5 + index,
            seed=3,
        )
        for index, text in enumerate(["BOS EOS", "BOS BAR EOS"])
    ]
    storage.write_manifest(records)

    assert read_manifest(tmp_path / "manifest.jsonl") == records


def test_manifest_rejects_bad_lines(tmp_path: Path):
    path = tmp_path / "manifest.jsonl"
    path.write_text('{"id": "1"}\n', encoding="utf-8")
    with pytest.raises(FileFormatError, match=":1:"):
        read_manifest(path)


def test_vocabulary_export_round_trip(tmp_path: Path):
    storage = FileDatasetStorage(tmp_path)
    storage.write_vocabulary(vocabulary())

    entries = json.loads((tmp_path / "vocabulary.json").read_text(encoding="utf-8"))
    assert len(entries) == 135
    assert entries[4] == {"id": 4, "symbol": "BAR"}
    assert read_vocabulary(tmp_path / "vocabulary.json") == vocabulary()


def test_vocabulary_rejects_malformed_entries(tmp_path: Path):
    path = tmp_path / "vocabulary.json"
    path.write_text('[{"id": "zero"}]', encoding="utf-8")
    with pytest.raises(FileFormatError):
        read_vocabulary(path)


def test_binary_tokens_split_on_eos(score_factory):
    sequences = [encode(score_factory(seed, measures=2)) for seed in range(3)]

    data = encode_token_binary(sequences)

    assert len(data) == 2 * sum(len(sequence) for sequence in sequences)
    assert decode_token_binary(data) == sequences


def test_binary_tokens_reject_odd_length():
    with pytest.raises(FileFormatError):
        decode_token_binary(b"\x01")


@pytest.mark.parametrize("name", ["tokens.txt", "tokens.bin"])
def test_token_file_round_trip(tmp_path: Path, score_factory, name):
    sequences = [encode(score_factory(seed, measures=3)) for seed in range(4)]
    path = tmp_path / name

    write_token_file(path, sequences)

    assert read_token_file(path) == sequences


def test_token_format_override(tmp_path: Path, score_factory):
    sequences = [encode(score_factory(1, measures=1))]
    path = tmp_path / "nested" / "tokens.dat"

    write_token_file(path, sequences, binary=True)

    assert read_token_file(path, binary=True) == sequences
