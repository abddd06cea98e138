"""Scenario files: a YAML document validated against :class:`ScenarioConfig`.

All quantities are dimensionless: wall temperature 1, ball radius 1, ``c = 1``.
A ball of radius ``L`` with wall temperature ``theta_w`` maps onto this setting
by measuring speeds in units of ``sqrt(theta_w)``, lengths in units of ``L`` and
times in units of ``L / sqrt(theta_w)``; distribution functions keep their
shape and only the overall mass scale changes.
"""
import enum
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError


class Problem(str, enum.Enum):
    GAS = "gas"
    RADIATIVE = "radiative"
    BOUNDS = "bounds"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InitialDataConfig(_Strict):
    variant: Literal["equilibrium", "bounded_bump", "concentrated_box", "grey_shell", "gas_table", "grey_table"]
    c: float = Field(1.0, gt=0, description="equilibrium multiple")
    bound_constant: float = Field(2.0, gt=0, description="C in 0 <= f_in <= C M")
    epsilon: float = Field(0.2, gt=0, lt=1, description="concentrated-box radius")
    a: float = Field(0.2, ge=0, lt=1, description="grey shell inner squared radius")
    b: float = Field(0.5, gt=0, le=1, description="grey shell outer squared radius")
    amplitude: float = Field(1.0, gt=0)
    path: Optional[str] = Field(None, description="table file for *_table variants")

    @model_validator(mode="after")
    def _check(self):
        if self.variant.endswith("_table") and not self.path:
            raise ValueError("table variants need 'path'")
        if self.variant == "grey_shell" and not self.a < self.b:
            raise ValueError("grey shell needs a < b")
        return self


class FitWindows(_Strict):
    power: Tuple[float, float] = (20.0, 200.0)
    exponential: Tuple[float, float] = (5.0, 40.0)


class MonteCarloConfig(_Strict):
    enabled: bool = False
    particle_count: int = Field(1_000_000, ge=1)
    seed: int = 0
    bin_width: float = Field(0.5, gt=0)
    horizon: Optional[float] = Field(None, gt=0, description="defaults to min(horizon, 40)")


class BoundsConfig(_Strict):
    epsilon: float = Field(0.2, gt=0)
    T: float = Field(1.0, gt=0)
    R: float = Field(0.5, gt=0)
    p: List[float] = Field(default_factory=lambda: [1.5, 2.0, 4.0])
    t_min: float = Field(1e2, gt=0)
    t_max: float = Field(1e6, gt=0)
    points: int = Field(25, ge=2)
    chain_samples: int = Field(20, ge=0)
    seed: int = 0
    with_energy: bool = False


class ConstantsConfig(_Strict):
    mode: Literal["dimensionless", "si"] = "dimensionless"


class ScenarioConfig(_Strict):
    problem: Problem
    initial_data: Optional[InitialDataConfig] = None
    horizon: float = Field(..., gt=0)
    dt: float = Field(..., gt=0)
    norms: List[float] = Field(default_factory=lambda: [1.0, 6.0])
    fit_windows: FitWindows = Field(default_factory=FitWindows)
    field_points: int = Field(40, ge=10, description="log-spaced evaluation times in the power window")
    spectral_strip_depth: float = Field(3.0, gt=0)
    monte_carlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)
    constants: ConstantsConfig = Field(default_factory=ConstantsConfig)
    output_dir: str = "kinrelax-out"

    @model_validator(mode="after")
    def _check(self):
        if not self.horizon > self.dt:
            raise ValueError("horizon must exceed dt")
        if self.problem is not Problem.BOUNDS and self.initial_data is None:
            raise ValueError("initial_data is required for gas and radiative problems")
        if self.initial_data is not None:
            grey = self.initial_data.variant in ("grey_shell", "grey_table")
            if grey != (self.problem is Problem.RADIATIVE):
                raise ValueError(f"initial data '{self.initial_data.variant}' do not fit problem '{self.problem.value}'")
        if any(p < 1 for p in self.norms):
            raise ValueError("norm exponents must be at least 1")
        return self


def build_initial_data(cfg):
    """The :mod:`kinrelax.sources` object described by an :class:`InitialDataConfig`."""
    from . import sources

    v = cfg.variant
    if v == "equilibrium":
        return sources.EquilibriumMultiple(cfg.c)
    if v == "bounded_bump":
        return sources.bounded_bump(cfg.bound_constant)
    if v == "concentrated_box":
        return sources.ConcentratedBox(cfg.epsilon)
    if v == "grey_shell":
        return sources.grey_shell(cfg.a, cfg.b, cfg.amplitude)
    if v == "gas_table":
        return sources.BoundedRadial.from_table(cfg.path)
    if v == "grey_table":
        return sources.RadialShellGrey.from_table(cfg.path)
    raise DomainError(f"unknown initial data variant {v!r}")


def preset_names():
    return sorted(p.name[:-5] for p in (resources.files("kinrelax") / "presets").iterdir() if p.name.endswith(".yaml"))


def load_preset(name):
    path = resources.files("kinrelax") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise DomainError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return ScenarioConfig.model_validate(yaml.safe_load(path.read_text(encoding="utf-8")))


def load_config(source):
    """A scenario from a YAML path, or from a shipped preset name."""
    path = Path(source)
    if path.is_file():
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        return ScenarioConfig.model_validate(data or {})
    return load_preset(str(source))


def schema():
    return ScenarioConfig.model_json_schema()
