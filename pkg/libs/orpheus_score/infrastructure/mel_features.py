"""
Log-mel spectrogram front end (25 ms windows, 10 ms hop, 80 HTK mel bands).

Frames are centred with ``n_fft // 2`` reflective padding and the final
centred frame is dropped, so an input of N samples yields ``N // hop``
frames. Values are per-utterance normalized as ``(x - max + 8) / 4`` with
no hard clip.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import librosa
import numpy as np

from ..errors import FileFormatError, SampleRateError
from .synth import AudioBuffer

FEATURE_MAGIC = b"OMEL"
_HEADER_DTYPE = np.dtype("<u4")
_VALUE_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class MelParams:
    sample_rate: int = 16_000
    n_fft: int = 400
    hop: int = 160
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self) -> None:
        if self.hop <= 0 or self.n_fft <= 0 or self.n_mels <= 0:
            raise ValueError("n_fft, hop and n_mels must be positive")
        if self.hop > self.n_fft:
            raise ValueError(f"hop {self.hop} exceeds n_fft {self.n_fft}")
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ValueError(f"need 0 <= fmin < fmax <= {self.sample_rate / 2}, got {self.fmin}..{self.fmax}")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


def mel_filterbank(p: MelParams) -> np.ndarray:
    """Triangular HTK-scale filters, shape ``(n_mels, n_fft // 2 + 1)``."""
    return librosa.filters.mel(
        sr=p.sample_rate,
        n_fft=p.n_fft,
        n_mels=p.n_mels,
        fmin=p.fmin,
        fmax=p.fmax,
        htk=True,
    )


def mel_center_frequencies(p: MelParams) -> np.ndarray:
    return librosa.mel_frequencies(n_mels=p.n_mels + 2, fmin=p.fmin, fmax=p.fmax, htk=True)[1:-1]


def frame_count(samples: int, p: MelParams) -> int:
    return samples // p.hop


def log_mel_spectrogram(a: AudioBuffer, p: MelParams | None = None) -> np.ndarray:
    """Returns a float32 matrix of shape ``(n_mels, len(samples) // hop)``."""
    params = p or MelParams()
    if a.sample_rate != params.sample_rate:
        raise SampleRateError(f"expected {params.sample_rate} Hz audio, got {a.sample_rate} Hz")

    frames = frame_count(len(a.samples), params)
    if frames == 0:
        return np.zeros((params.n_mels, 0), dtype=np.float32)

    signal = np.asarray(a.samples, dtype=np.float32)
    # Reflection needs more samples than the pad width.
    pad_mode = "reflect" if len(signal) > params.n_fft // 2 else "constant"
    spectrum = librosa.stft(
        signal,
        n_fft=params.n_fft,
        hop_length=params.hop,
        window="hann",
        center=True,
        pad_mode=pad_mode,
    )
    power = np.abs(spectrum[:, :frames]) ** 2
    mel = mel_filterbank(params) @ power
    log_spec = np.log10(np.maximum(mel, params.log_floor))
    log_spec = (log_spec - log_spec.max() + 8.0) / 4.0
    return log_spec.astype(np.float32)


def write_feature_bytes(features: np.ndarray) -> bytes:
    """``OMEL`` magic, ``<u4`` n_mels, ``<u4`` frames, then row-major ``<f4`` values."""
    if features.ndim != 2:
        raise ValueError(f"features must be a 2-D matrix, got shape {features.shape}")
    header = np.array(features.shape, dtype=_HEADER_DTYPE).tobytes()
    return FEATURE_MAGIC + header + np.ascontiguousarray(features, dtype=_VALUE_DTYPE).tobytes()


def read_feature_bytes(data: bytes) -> np.ndarray:
    if data[:4] != FEATURE_MAGIC:
        raise FileFormatError("missing OMEL magic")
    n_mels, frames = (int(v) for v in np.frombuffer(data, dtype=_HEADER_DTYPE, count=2, offset=4))
    values = np.frombuffer(data, dtype=_VALUE_DTYPE, offset=12)
    if values.size != n_mels * frames:
        raise FileFormatError(f"expected {n_mels * frames} values, found {values.size}")
    return values.reshape(n_mels, frames).astype(np.float32)


def write_feature_file(path: Path, features: np.ndarray) -> None:
    path.write_bytes(write_feature_bytes(features))


def read_feature_file(path: Path) -> np.ndarray:
    return read_feature_bytes(path.read_bytes())
