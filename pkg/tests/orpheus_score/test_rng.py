import numpy as np
import pytest

from libs.orpheus_score.domain.rng import INPUT_MUTATION_BRANCH, SEED_MASK, stream_rng


def test_streams_are_reproducible():
    assert stream_rng(42, 3).random(5).tolist() == stream_rng(42, 3).random(5).tolist()


def test_streams_and_branches_differ():
    base = stream_rng(42, 3).random(5)
    assert not np.array_equal(base, stream_rng(42, 4).random(5))
    assert not np.array_equal(base, stream_rng(42, 3, branch=INPUT_MUTATION_BRANCH).random(5))
    assert not np.array_equal(base, stream_rng(43, 3).random(5))


def test_stream_matches_seed_sequence_spawn_rule():
    expected = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=7, spawn_key=(2,))))
    assert stream_rng(7, 2).integers(0, 1 << 32, size=4).tolist() == expected.integers(0, 1 << 32, size=4).tolist()


def test_seed_is_masked_to_64_bits():
    assert stream_rng(SEED_MASK + 6).random() == stream_rng(5).random()


def test_negative_stream_rejected():
    with pytest.raises(ValueError):
        stream_rng(1, -1)
