#!/usr/bin/env python3
"""Configuration data."""
from pathlib import Path
from typing import List

try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

import tomli
from pydantic import (
    BaseModel,
    Field,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)


class ConfigError(Exception):
    """Raised in case of an invalid laboratory configuration."""

    pass


class RunConfig(BaseModel):
    """Store run-wide parameters."""

    seed: int = Field(default=20240601, ge=0)
    jobs: PositiveInt = 1  # Worker processes for independent cells
    out: Path = Path("lab_out")
    timestamps: bool = False  # Stamp CSV headers, breaks byte determinism
    inconclusive_quota: int = Field(default=0, ge=0)


class SearchConfig(BaseModel):
    """Store parameters of the random-restart Rayleigh searches."""

    lelong_restarts: PositiveInt = 64
    cone_restarts: PositiveInt = 256
    lyh_restarts: PositiveInt = 64
    max_iterations: PositiveInt = 500
    gtol: PositiveFloat = 1e-12
    tol_in: PositiveFloat = 1e-8  # Relative to the operator norm
    tol_out: PositiveFloat = 1e-6  # Relative to the operator norm
    witness_tol: PositiveFloat = 1e-10

    @model_validator(mode="after")
    def check_bands(self) -> Self:
        if self.tol_out <= self.tol_in:
            raise ValueError("tol_out must exceed tol_in")
        return self


class ConeCheckConfig(BaseModel):
    """Store parameters of the cone-check suite."""

    m: int = Field(default=2, ge=1, le=6)
    ranks: List[PositiveInt] = [1, 2, 3, 4]
    constants: List[float] = [1.0, -1.0]
    psd_samples: PositiveInt = 4
    psd_rank: PositiveInt = 3


class OdeConfig(BaseModel):
    """Store parameters of the curvature ODE suite."""

    m: int = Field(default=2, ge=1, le=4)
    p: PositiveInt = 2
    trajectories: PositiveInt = 50
    dt: PositiveFloat = 1e-3  # Scaled by 1/|Rm0|
    horizon: PositiveFloat = 10.0  # Max time, in units of 1/|Rm0|
    blowup_factor: float = Field(default=1e3, gt=1.0)
    snapshot_every: PositiveInt = 25  # Steps between cone re-tests
    perturbation: float = Field(default=0.05, ge=0.0)

    @model_validator(mode="after")
    def check_rank(self) -> Self:
        if self.p > self.m * self.m:
            raise ValueError("ODE rank p exceeds m^2")
        return self


class LyhConfig(BaseModel):
    """Store parameters of the LYH quadratic form suite."""

    kahler_dims: List[PositiveInt] = [2, 3]
    riem_dims: List[PositiveInt] = [3, 4]
    riem_ranks: List[PositiveInt] = [1, 2]
    times: List[PositiveFloat] = [0.1, 1.0, 10.0]
    extension_samples: PositiveInt = 5

    @model_validator(mode="after")
    def check_times(self) -> Self:
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("LYH time grid must be strictly increasing")
        return self


class HeatConfig(BaseModel):
    """Store parameters of the flat torus heat suite."""

    m: int = Field(default=2, ge=1, le=3)
    ranks: List[PositiveInt] = [1, 2]
    cutoff: PositiveInt = 8  # Max |k|_inf of retained modes
    modes: PositiveInt = 2  # Oscillatory modes in generated data
    amplitude: float = Field(default=0.5, gt=0.0, lt=1.0)  # Fraction of the positivity margin
    samples: PositiveInt = 10  # Initial data per rank
    points: PositiveInt = 16  # Random sample points of the pointwise identity checks
    times: List[PositiveFloat] = [0.05, 0.1, 0.5]

    @model_validator(mode="after")
    def check_grid(self) -> Self:
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("Heat time grid must be strictly increasing")
        if any(p > self.m for p in self.ranks):
            raise ValueError("Heat rank exceeds dimension")
        return self


class OracleConfig(BaseModel):
    """Store sample counts of the oracle battery."""

    kb_samples: PositiveInt = 200
    kb_sign_samples: PositiveInt = 1000
    identification_samples: PositiveInt = 500
    appendix_samples: PositiveInt = 100
    null_samples: PositiveInt = 200
    mok_samples: PositiveInt = 1000
    identity_samples: PositiveInt = 100
    identity_dims: List[PositiveInt] = [1, 2, 3]  # Dimensions m drawn by the identity battery

    @model_validator(mode="after")
    def check_identity_dims(self) -> Self:
        if not self.identity_dims or max(self.identity_dims) > 3:
            raise ValueError("Identity dimensions must be a nonempty list with m <= 3")
        return self


class LabConfig(BaseModel):
    """Configuration of the entire laboratory."""

    run: RunConfig = RunConfig()
    search: SearchConfig = SearchConfig()
    cones: ConeCheckConfig = ConeCheckConfig()
    ode: OdeConfig = OdeConfig()
    lyh: LyhConfig = LyhConfig()
    heat: HeatConfig = HeatConfig()
    oracle: OracleConfig = OracleConfig()


def load_config(file: Path) -> LabConfig:
    """Load a LabConfig from a TOML file.

    Args:
        file (Path): The configuration file

    Returns:
        LabConfig: The loaded configuration

    """
    try:
        with file.open("rb") as f:
            config_data = tomli.load(f)
        return LabConfig(**config_data)
    except (OSError, tomli.TOMLDecodeError) as e:
        raise ConfigError(f"Cannot read {file}: {e}") from e
    except ValidationError as e:
        locations = ", ".join(
            ".".join(str(x) for x in err["loc"]) for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration at {locations}: {e}") from e


def apply_overrides(
    config: LabConfig,
    seed: int | None = None,
    out: Path | None = None,
    tol: float | None = None,
    jobs: int | None = None,
) -> LabConfig:
    """Return a re-validated copy of the configuration with command-line overrides.

    Args:
        config (LabConfig): The loaded configuration
        seed (int | None): Root seed
        out (Path | None): Output directory
        tol (float | None): Certificate tolerance tol_in
        jobs (int | None): Worker processes

    Returns:
        LabConfig: The updated configuration

    """
    data = config.model_dump()
    for key, value in (("seed", seed), ("out", out), ("jobs", jobs)):
        if value is not None:
            data["run"][key] = value
    if tol is not None:
        data["search"]["tol_in"] = tol
    try:
        return LabConfig(**data)
    except ValidationError as e:
        locations = ", ".join(
            ".".join(str(x) for x in err["loc"]) for err in e.errors()
        )
        raise ConfigError(f"Invalid override at {locations}: {e}") from e
