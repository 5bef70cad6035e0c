"""RIFF/PCM WAV encoding: mono, 16-bit little-endian."""

from __future__ import annotations

import io
import wave
from pathlib import Path

import numpy as np

from ..errors import FileFormatError
from .synth import AudioBuffer

PCM_SCALE = 32767
SAMPLE_WIDTH_BYTES = 2


def quantize(samples: np.ndarray) -> np.ndarray:
    """Float samples to int16 by ``round(x * 32767)`` after clipping to [-1, 1]."""
    return np.round(np.clip(samples, -1.0, 1.0) * PCM_SCALE).astype("<i2")


def write_wav(a: AudioBuffer) -> bytes:
    stream = io.BytesIO()
    with wave.open(stream, "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(SAMPLE_WIDTH_BYTES)
        handle.setframerate(a.sample_rate)
        handle.writeframes(quantize(a.samples).tobytes())
    return stream.getvalue()


def read_wav(data: bytes) -> AudioBuffer:
    """Decodes mono 16-bit PCM back to floats (``int16 / 32767``)."""
    try:
        with wave.open(io.BytesIO(data), "rb") as handle:
            if handle.getnchannels() != 1 or handle.getsampwidth() != SAMPLE_WIDTH_BYTES:
                raise FileFormatError(
                    f"expected mono 16-bit PCM, got {handle.getnchannels()} channel(s) "
                    f"of {handle.getsampwidth() * 8} bits"
                )
            sample_rate = handle.getframerate()
            frames = handle.readframes(handle.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FileFormatError(f"not a readable WAV file: {exc}") from exc
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / PCM_SCALE
    return AudioBuffer(sample_rate, samples)


def write_wav_file(path: Path, a: AudioBuffer) -> None:
    path.write_bytes(write_wav(a))


def read_wav_file(path: Path) -> AudioBuffer:
    return read_wav(path.read_bytes())
