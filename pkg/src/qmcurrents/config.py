"""Experiment configuration schema.

One nested JSON document drives every experiment; the same pydantic
models validate CLI config files and service request bodies.  Defaults
reproduce the workhorse parameter set used throughout (t1=1.0, t2=0.5,
T=0.1, three unit cells, gamma0=1e-3).
"""

from __future__ import annotations

import json
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .lattice import LatticeSpec
from .lindblad import BathSpec
from .measurement import MeasurementSpec

SWEEP_VARIABLES = ("tau", "V", "m_theta", "m_phi", "alpha", "gamma0")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


class LatticeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: Literal["two_site", "three_site"] = "two_site"
    cells: int = 3
    t1: float = 1.0
    t2: float = 0.5
    t3: float | None = None
    V: float = 0.0

    def to_spec(self) -> LatticeSpec:
        try:
            return LatticeSpec(
                model=self.model, cells=self.cells, t1=self.t1, t2=self.t2, t3=self.t3, V=self.V
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


class BathConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma0: float = 1e-3
    temperature: float = 0.1

    def to_spec(self) -> BathSpec:
        try:
            return BathSpec(gamma0=self.gamma0, temperature=self.temperature)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


class MeasurementConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["bloch", "three_site"] = "bloch"
    m: tuple[float, float, float] | None = None
    alpha: float | None = None
    tau: float = 1.0
    scheme: Literal["poisson", "floquet"] = "poisson"

    @model_validator(mode="after")
    def _fill_defaults(self) -> "MeasurementConfig":
        if self.kind == "bloch" and self.m is None:
            half = math.sqrt(0.5)
            object.__setattr__(self, "m", (0.0, half, half))
        if self.kind == "three_site" and self.alpha is None:
            object.__setattr__(self, "alpha", math.pi / 2)
        return self

    def to_spec(self) -> MeasurementSpec:
        try:
            return MeasurementSpec(
                kind=self.kind, m=self.m, alpha=self.alpha, tau=self.tau, scheme=self.scheme
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variable: Literal["tau", "V", "m_theta", "m_phi", "alpha", "gamma0"]
    values: list[float] | None = None
    log_start: float | None = None
    log_stop: float | None = None
    points: int = 60

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepConfig":
        has_values = self.values is not None
        has_range = self.log_start is not None or self.log_stop is not None
        if has_values and has_range:
            raise ValueError("give either explicit values or a log range, not both")
        if has_range:
            if self.log_start is None or self.log_stop is None:
                raise ValueError("log range needs both log_start and log_stop")
            if self.log_start <= 0 or self.log_stop <= 0:
                raise ValueError("log range endpoints must be positive")
            if self.points < 2:
                raise ValueError("log range needs at least 2 points")
        return self

    def grid(self) -> list[float] | None:
        """Explicit grid, or None when the experiment should pick a default."""
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.log_start is not None:
            return list(
                np.logspace(math.log10(self.log_start), math.log10(self.log_stop), self.points)
            )
        return None


class PulseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    horizon: float = 60.0
    dt: float | None = None
    samples: int = 600


class BlochGridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_theta: int = 40
    n_phi: int = 80
    mode: Literal["pulse", "zeno"] = "pulse"

    @model_validator(mode="after")
    def _check(self) -> "BlochGridConfig":
        if self.n_theta < 3 or self.n_phi < 2:
            raise ValueError("sphere grid needs n_theta >= 3 and n_phi >= 2")
        return self


class FloquetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace_tau: float | None = None
    trace_points: int = 400
    fallback_substeps: int = 400


class ZenoReportConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    taus: list[float] = Field(default_factory=lambda: [1e-6, 1e-5])


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str | None = None
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    bath: BathConfig | None = Field(default_factory=BathConfig)
    measurement: MeasurementConfig = Field(default_factory=MeasurementConfig)
    sweep: SweepConfig | None = None
    pulse: PulseConfig = Field(default_factory=PulseConfig)
    bloch_grid: BlochGridConfig = Field(default_factory=BlochGridConfig)
    floquet: FloquetConfig = Field(default_factory=FloquetConfig)
    zeno: ZenoReportConfig = Field(default_factory=ZenoReportConfig)
    threads: int = 1
    output: OutputConfig | None = None

    def resolved(self) -> dict:
        """Plain-dict echo of the fully resolved configuration."""
        return self.model_dump(mode="json")


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return parse_config(data)


def spherical_to_unit(theta: float, phi: float) -> tuple[float, float, float]:
    st = math.sin(theta)
    return (st * math.cos(phi), st * math.sin(phi), math.cos(theta))


def unit_to_spherical(m: tuple[float, float, float]) -> tuple[float, float]:
    theta = math.acos(max(-1.0, min(1.0, m[2])))
    phi = math.atan2(m[1], m[0])
    return theta, phi
