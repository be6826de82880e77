#!/usr/bin/env python3
"""Random-restart Rayleigh quotient minimization and certified verdicts."""

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Protocol, Tuple

import numpy as np
from scipy.optimize import minimize

from ._compat import StrEnum
from .config import SearchConfig

logger = logging.getLogger(__name__)

_SCALE_PENALTY = 1.0


class VerdictStatus(StrEnum):
    """Outcome of a certified minimization."""

    IN = "In"
    OUT = "Out"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SearchBudget:
    """Budget and tolerances of a restart search."""

    restarts: int = 64
    max_iterations: int = 500
    gtol: float = 1e-12
    tol_in: float = 1e-8
    tol_out: float = 1e-6
    witness_tol: float = 1e-10

    @classmethod
    def from_config(cls, config: SearchConfig, restarts: int) -> "SearchBudget":
        return cls(
            restarts=restarts,
            max_iterations=config.max_iterations,
            gtol=config.gtol,
            tol_in=config.tol_in,
            tol_out=config.tol_out,
            witness_tol=config.witness_tol,
        )


@dataclass(frozen=True)
class ConeVerdict:
    """Certified membership result with an optional witness."""

    status: VerdictStatus
    min_value: float
    witness: Any = None
    restarts_used: int = 0
    scale: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.status == VerdictStatus.OUT and self.witness is None:
            raise ValueError("An Out verdict needs a witness")

    def to_dict(self) -> Dict[str, Any]:
        """Render the verdict as a JSON-ready dictionary."""
        witness = self.witness
        if witness is not None and hasattr(witness, "to_dict"):
            witness = witness.to_dict()
        elif isinstance(witness, np.ndarray):
            witness = _complex_list(witness)
        return {
            "status": str(self.status),
            "min_value": self.min_value,
            "witness": witness,
            "restarts_used": self.restarts_used,
            "seed": self.seed,
        }


def _complex_list(a: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).reshape(-1)]


class RayleighProblem(Protocol):
    """A real quotient N(z)/D(z) over complex variables z."""

    size: int

    def evaluate(self, z: np.ndarray) -> Tuple[float, np.ndarray, float, np.ndarray]:
        """Return N, dN/dzbar, D, dD/dzbar."""
        ...


@dataclass
class SearchResult:
    """Best quotient found by a restart search."""

    value: float
    z: np.ndarray
    restarts_used: int
    minima: list = field(default_factory=list)


def _objective(problem: RayleighProblem, x: np.ndarray) -> Tuple[float, np.ndarray]:
    n = problem.size
    z = x[:n] + 1j * x[n:]
    num, g_num, den, g_den = problem.evaluate(z)
    if den <= 1e-300:
        return 0.0, np.zeros_like(x)
    value = num / den
    grad = (g_num - value * g_den) / den
    nz = float(np.vdot(z, z).real)
    value_pen = value + _SCALE_PENALTY * (nz - 1.0) ** 2
    grad = grad + 2.0 * _SCALE_PENALTY * (nz - 1.0) * z
    return value_pen, 2.0 * np.concatenate([grad.real, grad.imag])


def quotient(problem: RayleighProblem, z: np.ndarray) -> float:
    """Evaluate N(z)/D(z) without the scale penalty."""
    num, _, den, _ = problem.evaluate(z)
    return num / den if den > 1e-300 else 0.0


def minimize_quotient(
    problem: RayleighProblem,
    rng: np.random.Generator,
    budget: SearchBudget,
    stop_below: float | None = None,
) -> SearchResult:
    """Minimize a Rayleigh quotient by L-BFGS-B from random restarts.

    Args:
        problem (RayleighProblem): The quotient
        rng (np.random.Generator): Source of starting points
        budget (SearchBudget): Restart and iteration budget
        stop_below (float | None): Stop as soon as a value below this is found

    Returns:
        SearchResult: The best value and its argument

    """
    best_value = np.inf
    best_z = np.zeros(problem.size, dtype=complex)
    minima = []
    used = 0
    for used in range(1, budget.restarts + 1):
        z0 = rng.standard_normal(problem.size) + 1j * rng.standard_normal(problem.size)
        z0 /= np.linalg.norm(z0)
        res = minimize(
            lambda x: _objective(problem, x),
            np.concatenate([z0.real, z0.imag]),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": budget.max_iterations, "gtol": budget.gtol},
        )
        z = res.x[: problem.size] + 1j * res.x[problem.size :]
        value = quotient(problem, z)
        minima.append(value)
        if value < best_value:
            best_value, best_z = value, z
        if stop_below is not None and best_value < stop_below:
            break
    logger.debug(f"Restart minima: min={best_value:.3e} after {used} restarts")
    return SearchResult(value=float(best_value), z=best_z, restarts_used=used, minima=minima)


def classify(
    min_value: float,
    scale: float,
    budget: SearchBudget,
    witness_value: float | None = None,
) -> VerdictStatus:
    """Map a minimum to a three-band status.

    Args:
        min_value (float): The minimum found
        scale (float): Operator norm the tolerances are relative to
        budget (SearchBudget): Tolerances
        witness_value (float | None): Independent re-evaluation of the witness

    Returns:
        VerdictStatus: In, Out or Inconclusive

    """
    if scale == 0.0:
        return VerdictStatus.IN
    if min_value >= -budget.tol_in * scale:
        return VerdictStatus.IN
    if min_value <= -budget.tol_out * scale:
        if witness_value is not None and abs(witness_value - min_value) <= budget.witness_tol * max(1.0, scale):
            return VerdictStatus.OUT
        logger.warning(f"Witness re-evaluation mismatch: {witness_value} vs {min_value}")
    return VerdictStatus.INCONCLUSIVE
