"""
Pipeline configuration.

Values resolve in this order, later sources winning: model defaults, an
optional TOML file, the ``ORPHEUS_SEED`` environment variable (seed only),
explicit CLI flags.

Example TOML::

    input_dir = "corpus"
    output_dir = "out"
    count = 1000
    strategy = "gaussian"
    seed = 7

    [mutation]
    pitch_prob = 0.1
    pitch_sigma = 2.0
"""

from __future__ import annotations

import tomllib
from collections.abc import Mapping
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from libs.python.settings import reload_settings

from ..domain.augment import DEFAULT_SIGMA_FRACTION, MutationParams, SamplingStrategy
from ..domain.rng import SEED_MASK
from ..errors import ConfigError


class MutateStage(StrEnum):
    BEFORE_POOL = "before-pool"
    AFTER_SAMPLING = "after-sampling"


class TokenFormat(StrEnum):
    TEXT = "text"
    BINARY = "binary"


class MutationSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    pitch_prob: float = Field(default=0.1, ge=0.0, le=1.0)
    pitch_sigma: float = Field(default=2.0, ge=0.0)
    extend_prob: float = Field(default=0.05, ge=0.0, le=1.0)
    snap_to_scale: bool = True


class PipelineConfig(BaseModel):
    """Every knob of a ``pipeline`` run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input_dir: Path
    output_dir: Path
    count: int = Field(default=1000, ge=0)
    sections_per_score: int = Field(default=8, ge=1)
    strategy: SamplingStrategy = SamplingStrategy.GAUSSIAN
    gaussian_sigma_fraction: float = Field(default=DEFAULT_SIGMA_FRACTION, gt=0.0)
    seed: int = Field(default=0, ge=0, le=SEED_MASK)
    tempo_bpm: float = Field(default=213.0, gt=0.0)
    sample_rate: int = Field(default=16_000, gt=0)
    jobs: int = Field(default=1, ge=1)
    mutate: bool = False
    mutate_stage: MutateStage = MutateStage.BEFORE_POOL
    mutation: MutationSettings = MutationSettings()
    token_format: TokenFormat = TokenFormat.TEXT
    write_midi: bool = False

    def mutation_params(self) -> MutationParams:
        return MutationParams(
            pitch_prob=self.mutation.pitch_prob,
            pitch_sigma=self.mutation.pitch_sigma,
            extend_prob=self.mutation.extend_prob,
            snap_to_scale=self.mutation.snap_to_scale,
            seed=self.seed,
        )


def read_toml(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc


def load_config(
    config_path: Path | None = None,
    overrides: Mapping[str, object] | None = None,
) -> PipelineConfig:
    """
    Builds a ``PipelineConfig`` from a TOML file, the environment and flags.

    ``overrides`` holds CLI flag values; ``None`` entries mean "not given".
    Nested mutation flags use a ``mutation.`` prefix
    (``{"mutation.pitch_prob": 0.2}``).
    """
    data: dict[str, Any] = read_toml(config_path) if config_path else {}
    mutation: dict[str, Any] = dict(data.pop("mutation", {}) or {})

    try:
        env_seed = reload_settings().SEED_OVERRIDE
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if env_seed is not None:
        data["seed"] = env_seed

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("mutation."):
            mutation[key.removeprefix("mutation.")] = value
        else:
            data[key] = value
    if mutation:
        data["mutation"] = mutation

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid pipeline configuration: {exc}") from exc
