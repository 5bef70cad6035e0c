"""Exception hierarchy for the orpheus-score toolkit."""

from __future__ import annotations


class OrpheusError(Exception):
    """Base class for every error raised by the toolkit."""


class PitchRangeError(OrpheusError, ValueError):
    """A pitch fell outside the representable MIDI range."""


class DurationError(OrpheusError, ValueError):
    """A duration was zero, negative or off the tick grid."""


class AbcParseError(OrpheusError, ValueError):
    """ABC source could not be parsed; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.reason = message
        self.line = line
        self.column = column


class AbcSerializationError(OrpheusError, ValueError):
    """A score cannot be written as ABC (not normalized)."""


class UnsupportedMeterError(OrpheusError, ValueError):
    """The source meter is not 4/4; re-barring is not attempted."""


class EncodingError(OrpheusError, ValueError):
    """A score cannot be tokenized because it is not normalized."""


class TokenRangeError(OrpheusError, ValueError):
    """A token id or symbol is not part of the vocabulary."""


class EmptyPoolError(OrpheusError, ValueError):
    """A section pool was requested from (or sampled with) no sections."""


class SamplingError(OrpheusError, ValueError):
    """Invalid sampling request (for example zero sections)."""


class UndefinedWerError(OrpheusError, ValueError):
    """WER is undefined for an empty reference."""


class EmptyCorpusError(OrpheusError, ValueError):
    """No usable input remained (no WER pairs, no parseable scores)."""


class ConfigError(OrpheusError, ValueError):
    """Pipeline configuration is invalid."""


class RenderError(OrpheusError, ValueError):
    """A score cannot be rendered to MIDI or audio (not normalized, bad tempo)."""


class SampleRateError(OrpheusError, ValueError):
    """Audio arrived at a sample rate the feature front end was not set up for."""


class FileFormatError(OrpheusError, ValueError):
    """A WAV, feature, token or manifest file is not in the expected layout."""
