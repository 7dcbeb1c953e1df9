"""Experiment configuration: INI sections validated into typed models.

One structured-text file carries a [run] section (command, seed,
workers) plus one section per command holding its numeric parameters.
Every present section is validated against its model with unknown keys
rejected; exact rationals are written as "p/q" strings.
"""

from __future__ import annotations

import configparser
from fractions import Fraction
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigError

COMMANDS = (
    "verify-finite",
    "verify-chain",
    "axioms",
    "build-tower",
    "survey",
    "calibrate",
)


def parse_fraction(value) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {value!r}") from exc


def _parse_list(value, conv):
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return [conv(p) for p in parts]
    return [conv(p) for p in value]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_default=True)


class RunSection(_Section):
    command: Literal[COMMANDS]  # type: ignore[valid-type]
    seed: int = Field(default=20240817, ge=0, lt=1 << 64)
    workers: int = Field(default=1, ge=1, le=64)


class VerifyFiniteConfig(_Section):
    systems: int = Field(default=50, ge=1, le=10_000)
    max_states: int = Field(default=10, ge=2, le=64)
    n_max: int = Field(default=5, ge=1, le=8)


class VerifyChainConfig(_Section):
    n_lo: int = Field(default=-15, le=-2)
    n_hi: int = Field(default=-2, le=-2)

    @field_validator("n_hi")
    @classmethod
    def _ordered(cls, v, info):
        if "n_lo" in info.data and v < info.data["n_lo"]:
            raise ValueError("n_hi must be >= n_lo")
        return v


class AxiomsConfig(_Section):
    points: int = Field(default=100_000, ge=1, le=10_000_000)
    stratum_tolerance: float = Field(default=0.005, gt=0, lt=1)


class BuildTowerConfig(_Section):
    kappas: list[Fraction] = Field(default_factory=lambda: [Fraction(1, 64)] * 4)
    delays: list[int] = Field(default_factory=lambda: [16, 16, 16, 16])
    check_times: list[int] = Field(default_factory=lambda: [-1, -3, -9])

    @field_validator("kappas", mode="before")
    @classmethod
    def _kappas(cls, v):
        return _parse_list(v, parse_fraction)

    @field_validator("delays", "check_times", mode="before")
    @classmethod
    def _ints(cls, v):
        return _parse_list(v, int)


class SurveyConfig(_Section):
    level: int = Field(default=0, ge=0, le=1)
    eps: float = Field(default=0.2, gt=0, lt=1)
    points: int = Field(default=200, ge=1, le=100_000)
    n_max: int = Field(default=12, ge=0, le=64)
    m: int = Field(default=1, ge=1, le=4)
    walks_min: int = Field(default=1024, ge=1)
    walks_max: int = Field(default=4096, ge=1)
    batch: int = Field(default=1024, ge=1)
    depth_cap: int = Field(default=6, ge=2, le=12)
    window_level: float | None = Field(default=None, gt=0, lt=1)
    # level-1 parameters
    kappa: Fraction = Field(default=Fraction(1, 64))
    delay_candidates: list[int] = Field(default_factory=lambda: [64, 128, 192, 256])
    mix_eps: float = Field(default=0.3, gt=0, lt=1)
    mix_points: int = Field(default=16, ge=1)
    mix_walks: int = Field(default=2500, ge=1)
    n_halfwidth: int = Field(default=4, ge=1, le=32)
    delayed_threshold: float = Field(default=0.6, gt=0)
    pass_bar: float = Field(default=0.6, gt=0, le=1)
    coupling_kappas: list[Fraction] = Field(
        default_factory=lambda: [Fraction(0), Fraction(1, 64), Fraction(1, 8)]
    )

    @field_validator("kappa", mode="before")
    @classmethod
    def _kappa(cls, v):
        return parse_fraction(v)

    @field_validator("coupling_kappas", mode="before")
    @classmethod
    def _ckappas(cls, v):
        return _parse_list(v, parse_fraction)

    @field_validator("delay_candidates", mode="before")
    @classmethod
    def _delays(cls, v):
        return _parse_list(v, int)

    @field_validator("walks_max")
    @classmethod
    def _walk_order(cls, v, info):
        if "walks_min" in info.data and v < info.data["walks_min"]:
            raise ValueError("walks_max must be >= walks_min")
        return v


class CalibrateConfig(_Section):
    trials: int = Field(default=100, ge=1, le=10_000)
    n_max: int = Field(default=5, ge=1, le=8)
    walks: int = Field(default=2000, ge=1)
    target: float = Field(default=0.95, gt=0, le=1)


SECTION_MODELS = {
    "verify-finite": VerifyFiniteConfig,
    "verify-chain": VerifyChainConfig,
    "axioms": AxiomsConfig,
    "build-tower": BuildTowerConfig,
    "survey": SurveyConfig,
    "calibrate": CalibrateConfig,
}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run: RunSection
    params: (
        VerifyFiniteConfig
        | VerifyChainConfig
        | AxiomsConfig
        | BuildTowerConfig
        | SurveyConfig
        | CalibrateConfig
    )

    def echo(self) -> dict:
        out = {"run": self.run.model_dump(mode="json")}
        out[self.run.command] = self.params.model_dump(mode="json")
        for key, value in out[self.run.command].items():
            if isinstance(value, Fraction):
                out[self.run.command][key] = str(value)
        return out


def config_from_sections(sections: dict, command: str | None = None, seed: int | None = None, workers: int | None = None) -> ExperimentConfig:
    """Validate a {section: {key: value}} mapping into a typed config.

    Overrides (command, seed, workers) take precedence over the [run]
    section.  Every present section must be a known one and validate;
    the active command's section may be absent, meaning all defaults.
    """
    sections = {name: dict(body) for name, body in sections.items()}
    unknown = [s for s in sections if s != "run" and s not in SECTION_MODELS]
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    run_raw = dict(sections.get("run", {}))
    if command is not None:
        run_raw["command"] = command
    if seed is not None:
        run_raw["seed"] = seed
    if workers is not None:
        run_raw["workers"] = workers
    try:
        run = RunSection(**run_raw)
        validated = {
            name: SECTION_MODELS[name](**body)
            for name, body in sections.items()
            if name != "run"
        }
        params = validated.get(run.command, SECTION_MODELS[run.command]())
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(run=run, params=params)


def load_config(path: str, command: str | None = None, seed: int | None = None, workers: int | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return config_from_sections(sections, command=command, seed=seed, workers=workers)
