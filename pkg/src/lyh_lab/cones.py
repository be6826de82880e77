#!/usr/bin/env python3
"""Certified membership in the curvature cones C_p, C~_k and the PSD cone."""

import enum
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._compat import StrEnum
from .curvature import (
    KahlerCurvature,
    OneOneVector,
    RiemCurvature,
    TwoVector,
    kahler_to_riemannian,
    oneone_from_matrix,
    pairing,
    pairing_riem,
    random_kahler,
    skew_decompose,
)
from .rng import make_rng
from .search import (
    ConeVerdict,
    SearchBudget,
    VerdictStatus,
    classify,
    minimize_quotient,
)
from .tensor_core import DimensionError, vec_to_skew

logger = logging.getLogger(__name__)


class ConePerturbationError(Exception):
    """Raised when a perturbed operator fails re-certification."""

    pass


class ConeKind(StrEnum):
    """Supported cones."""

    KAHLER_CP = "Kahler_Cp"
    RIEM_CK = "Riem_Ck"
    FULL_PSD = "FullPSD"


@dataclass(frozen=True)
class ConeSpec:
    """A cone with its rank parameter and dimension."""

    kind: ConeKind
    rank: int
    dim: int

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"Cone rank must be >= 1, got {self.rank}")

    @property
    def collapses(self) -> bool:
        """True when the cone equals the PSD cone and eigenvalues decide exactly."""
        if self.kind == ConeKind.FULL_PSD:
            return True
        if self.kind == ConeKind.KAHLER_CP:
            return self.rank >= self.dim
        return self.rank >= self.dim // 2


Operator = KahlerCurvature | RiemCurvature


class _KahlerConeQuotient:
    """Pairing of sum X_k ^ Ybar_k over (sum |X_k|^2 + |Y_k|^2)^2 / (2p)^2."""

    def __init__(self, rm: KahlerCurvature, p: int) -> None:
        self.m, self.p = rm.m, p
        self.size = 2 * rm.m * p
        self._op = rm.op_matrix()

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        half = self.m * self.p
        return z[:half].reshape(self.m, self.p), z[half:].reshape(self.m, self.p)

    def evaluate(self, z: np.ndarray) -> tuple:
        x, y = self.split(z)
        a = (x @ y.conj().T).reshape(-1)
        g = (self._op @ a).reshape(self.m, self.m)
        num = float(np.vdot(a, self._op @ a).real)
        grad = np.concatenate([(g @ y).reshape(-1), (g.conj().T @ x).reshape(-1)])
        s = float(np.vdot(z, z).real) / (2 * self.p)
        return num, grad, s * s, 2 * s * z / (2 * self.p)


class _RiemConeQuotient:
    """Pairing of sum Z_k ^ W_k over (sum |Z_k|^2 + |W_k|^2)^2 / (2k)^2."""

    def __init__(self, rm: RiemCurvature, k: int) -> None:
        self.n, self.k = rm.n, k
        self.size = 2 * rm.n * k
        self._op = rm.op_matrix()
        self._rows, self._cols = np.triu_indices(rm.n, k=1)

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        half = self.n * self.k
        return z[:half].reshape(self.n, self.k), z[half:].reshape(self.n, self.k)

    def evaluate(self, z: np.ndarray) -> tuple:
        zz, ww = self.split(z)
        u = zz @ ww.T - ww @ zz.T
        v = u[self._rows, self._cols]
        ov = self._op @ v
        num = float(np.vdot(v, ov).real)
        gf = vec_to_skew(self.n, ov)
        grad = np.concatenate([(gf @ ww.conj()).reshape(-1), (-gf @ zz.conj()).reshape(-1)])
        s = float(np.vdot(z, z).real) / (2 * self.k)
        return num, grad, s * s, 2 * s * z / (2 * self.k)


def _exact_psd(op: Operator, budget: SearchBudget) -> ConeVerdict:
    mat = op.op_matrix()
    scale = float(np.linalg.norm(mat, 2))
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    value = float(w[0])
    vec = v[:, 0]
    if isinstance(op, KahlerCurvature):
        witness: OneOneVector | TwoVector = oneone_from_matrix(vec.reshape(op.m, op.m))
        check = pairing(op, witness, witness).real
    else:
        u = vec_to_skew(op.n, vec)
        zz, ww = skew_decompose(u)
        witness = TwoVector(u, zz, ww)
        check = pairing_riem(op, witness, witness).real
    status = classify(value, scale, budget, check)
    return ConeVerdict(status, value, witness if status == VerdictStatus.OUT else None, 0, scale)


def membership(
    op: Operator,
    spec: ConeSpec,
    budget: SearchBudget = SearchBudget(restarts=256),
    rng: np.random.Generator | None = None,
) -> ConeVerdict:
    """Certify membership of a curvature operator in a cone.

    Minimizes the pairing over rank-p decomposables normalized by their
    constituent vectors; the PSD collapse regime uses eigenvalues.

    Args:
        op (Operator): Kaehler or Riemannian curvature
        spec (ConeSpec): The cone
        budget (SearchBudget): Restart budget and tolerances
        rng (np.random.Generator | None): Restart generator

    Returns:
        ConeVerdict: The certified verdict

    """
    dim = op.m if isinstance(op, KahlerCurvature) else op.n
    if spec.dim != dim:
        raise DimensionError(f"Cone of dimension {spec.dim} for an operator of dimension {dim}")
    if spec.kind == ConeKind.RIEM_CK and not isinstance(op, RiemCurvature):
        raise DimensionError("C~_k membership needs a Riemannian operator")
    if spec.kind == ConeKind.KAHLER_CP and not isinstance(op, KahlerCurvature):
        raise DimensionError("C_p membership needs a Kaehler operator")
    if spec.collapses:
        return _exact_psd(op, budget)

    scale = op.norm()
    if scale == 0.0:
        return ConeVerdict(VerdictStatus.IN, 0.0, None, 0, 0.0)
    rng = rng if rng is not None else make_rng(0)
    problem: _KahlerConeQuotient | _RiemConeQuotient
    if isinstance(op, KahlerCurvature):
        problem = _KahlerConeQuotient(op, spec.rank)
    else:
        problem = _RiemConeQuotient(op, spec.rank)
    result = minimize_quotient(problem, rng, budget, stop_below=-budget.tol_out * scale)
    z = result.z * np.sqrt(2 * spec.rank) / np.linalg.norm(result.z)
    a, b = problem.split(z)
    if isinstance(op, KahlerCurvature):
        witness: OneOneVector | TwoVector = OneOneVector.from_pairs(a, b)
        check = pairing(op, witness, witness).real
    else:
        witness = TwoVector.from_pairs(a, b)
        check = pairing_riem(op, witness, witness).real
    status = classify(result.value, scale, budget, check)
    if status == VerdictStatus.INCONCLUSIVE:
        logger.warning(f"Inconclusive {spec.kind} rank {spec.rank} verdict, min={result.value:.3e}")
    return ConeVerdict(status, result.value, witness, result.restarts_used, scale)


def nesting_check(
    op: Operator,
    spec_low: ConeSpec,
    spec_high: ConeSpec,
    budget: SearchBudget = SearchBudget(restarts=256),
    rng: np.random.Generator | None = None,
) -> bool:
    """Check that membership at the higher rank implies membership at the lower one."""
    if spec_low.kind != spec_high.kind or spec_low.rank > spec_high.rank:
        raise ValueError("Nesting compares two ranks of the same cone, low <= high")
    high = membership(op, spec_high, budget, rng)
    if high.status != VerdictStatus.IN:
        return True
    low = membership(op, spec_low, budget, rng)
    if low.status != VerdictStatus.IN:
        logger.warning(f"Nesting violated: In at rank {spec_high.rank}, {low.status} at rank {spec_low.rank}")
        return False
    return True


def cone_perturbed(
    base: KahlerCurvature,
    eps: float,
    rng: np.random.Generator,
    spec: ConeSpec,
    budget: SearchBudget = SearchBudget(restarts=256),
) -> Tuple[KahlerCurvature, ConeVerdict]:
    """Subtract eps times a normalized symmetric perturbation and re-certify.

    Args:
        base (KahlerCurvature): Operator inside the cone
        eps (float): Relative perturbation size
        rng (np.random.Generator): Source of the perturbation and restarts
        spec (ConeSpec): Cone the result must stay in
        budget (SearchBudget): Certification budget

    Returns:
        Tuple[KahlerCurvature, ConeVerdict]: Perturbed operator and its In verdict

    """
    s = random_kahler(rng, base.m)
    s = s * (base.norm() / s.norm())
    out = base - eps * s
    verdict = membership(out, spec, budget, rng)
    if verdict.status != VerdictStatus.IN:
        raise ConePerturbationError(f"Perturbation eps={eps} leaves {spec.kind} rank {spec.rank}: {verdict.status}")
    return out, verdict


def siu_check(
    rm: KahlerCurvature,
    budget: SearchBudget = SearchBudget(restarts=256),
    rng: np.random.Generator | None = None,
) -> ConeVerdict:
    """Nonnegative complex sectional curvature of the realified tensor, equivalent to C_2."""
    real = kahler_to_riemannian(rm)
    return membership(real, ConeSpec(ConeKind.RIEM_CK, 1, real.n), budget, rng)
