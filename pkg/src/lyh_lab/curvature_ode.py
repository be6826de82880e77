#!/usr/bin/env python3
"""Curvature ODEs of Ricci flow and their cone-invariance experiments."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from .cones import ConeSpec, membership
from .curvature import (
    KahlerCurvature,
    RiemCurvature,
    project_kahler,
    project_riemann,
    ricci,
    riem_ode_rhs,
    scalar,
    scalar_riem,
)
from .pp_forms import PreconditionError
from .rng import make_rng
from .search import ConeVerdict, SearchBudget, VerdictStatus
from .tensor_core import InvariantError

logger = logging.getLogger(__name__)

SOLITON_THRESHOLD = 1e-6

Operator = KahlerCurvature | RiemCurvature


def krf_quadratic(rm: KahlerCurvature) -> np.ndarray:
    """Return the three quadratic curvature terms of the Kaehler-Ricci flow."""
    r = rm.R
    return (
        np.einsum("abxy,yxcd->abcd", r, r)
        - np.einsum("axcy,xbyd->abcd", r, r)
        + np.einsum("adxy,yxcb->abcd", r, r)
    )


def krf_ode_rhs(rm: KahlerCurvature) -> KahlerCurvature:
    """Return the Kaehler-Ricci flow curvature evolution, quadratic terms minus the half-Ricci terms.

    Args:
        rm (KahlerCurvature): Curvature in a unitary frame

    Returns:
        KahlerCurvature: The right-hand side, projected on the symmetry subspace

    """
    r = rm.R
    ric = ricci(rm)
    out = krf_quadratic(rm) - 0.5 * (
        np.einsum("ax,xbcd->abcd", ric, r)
        + np.einsum("xb,axcd->abcd", ric, r)
        + np.einsum("cx,abxd->abcd", ric, r)
        + np.einsum("xd,abcx->abcd", ric, r)
    )
    residual = float(np.max(np.abs(project_kahler(out) - out), initial=0.0))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(out), initial=0.0))):
        raise InvariantError(f"Kaehler-Ricci rhs leaves the symmetry subspace, residual {residual:.3e}")
    return KahlerCurvature(rm.m, project_kahler(out))


def uhlenbeck_rhs(rm: Operator) -> np.ndarray:
    """Curvature ODE in a moving orthonormal frame, quadratic terms only."""
    if isinstance(rm, KahlerCurvature):
        return krf_quadratic(rm)
    return riem_ode_rhs(rm).R


class ExplicitRungeKutta:
    """Explicit Runge-Kutta stepper driven by a Butcher table."""

    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> None:
        self.s = len(b)
        self.a, self.b, self.c = a, b, c

    def step(self, f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
        """Advance the autonomous system y' = f(y) by h."""
        ks: List[np.ndarray] = []
        for i in range(self.s):
            yi = y + h * sum(self.a[i, j] * ks[j] for j in range(i)) if i else y
            ks.append(f(yi))
        return y + h * sum(bi * k for bi, k in zip(self.b, ks))


class RK4(ExplicitRungeKutta):
    """Classical fourth-order Runge-Kutta."""

    def __init__(self) -> None:
        super().__init__(
            a=np.array([[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]]),
            b=np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6]),
            c=np.array([0, 0.5, 0.5, 1]),
        )


def _wrap(rm: Operator, r: np.ndarray) -> Operator:
    if isinstance(rm, KahlerCurvature):
        return KahlerCurvature(rm.m, project_kahler(r))
    return RiemCurvature(rm.n, project_riemann(r))


def ode_step(rm: Operator, h: float, stepper: ExplicitRungeKutta | None = None) -> Operator:
    """Take one Runge-Kutta step of the moving-frame curvature ODE and re-project."""
    stepper = stepper if stepper is not None else RK4()
    r = stepper.step(lambda y: uhlenbeck_rhs(_wrap(rm, y)), rm.R, h)
    projected = _wrap(rm, r)
    logger.debug(f"Re-projection residual {float(np.max(np.abs(projected.R - r), initial=0.0)):.3e}")
    return projected


def const_model_coefficient(c0: float, m: int, t: float) -> float:
    """Closed form of c' = (m + 1) c^2 for the constant holomorphic sectional model."""
    return c0 / (1 - (m + 1) * c0 * t)


def sphere_coefficient(k0: float, n: int, t: float) -> float:
    """Closed form of k' = (n - 1) k^2 for the round sphere."""
    return k0 / (1 - (n - 1) * k0 * t)


@dataclass
class Snapshot:
    """Trajectory sample with its cone verdict."""

    t: float
    op_norm: float
    scalar_curv: float
    verdict: ConeVerdict
    min_q: float | None = None
    flags: List[str] = field(default_factory=list)


@dataclass
class Trajectory:
    """Integrated curvature trajectory."""

    times: List[float] = field(default_factory=list)
    operators: List[Operator] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    termination: str = "horizon"

    @property
    def verdicts(self) -> List[ConeVerdict]:
        return [s.verdict for s in self.snapshots]

    def rows(self) -> List[dict]:
        """CSV rows (t, op_norm, scalar_curv, verdict_status, min_pairing, min_Q, flags)."""
        return [
            {
                "t": repr(s.t),
                "op_norm": repr(s.op_norm),
                "scalar_curv": repr(s.scalar_curv),
                "verdict_status": str(s.verdict.status),
                "min_pairing": repr(s.verdict.min_value),
                "min_Q": "" if s.min_q is None else repr(s.min_q),
                "flags": ";".join(s.flags),
            }
            for s in self.snapshots
        ]


def evolve(
    rm0: Operator,
    horizon: float,
    dt: float,
    spec: ConeSpec,
    budget: SearchBudget = SearchBudget(restarts=256),
    rng: np.random.Generator | None = None,
    blowup_factor: float = 1e3,
    snapshot_every: int = 25,
    q_probe: Callable[[Operator, float], float] | None = None,
) -> Trajectory:
    """Integrate the curvature ODE with RK4, re-testing cone membership at snapshots.

    The step is dt |Rm_0| / |Rm_k|, so dt is in units of the initial curvature scale.

    Args:
        rm0 (Operator): Initial curvature, certified inside the cone
        horizon (float): Final time
        dt (float): Initial time step
        spec (ConeSpec): Cone re-tested along the trajectory
        budget (SearchBudget): Cone certification budget
        rng (np.random.Generator | None): Restart generator
        blowup_factor (float): Stop when |Rm| exceeds this multiple of |Rm_0|
        snapshot_every (int): Steps between snapshots
        q_probe (Callable[[Operator, float], float] | None): Optional LYH minimum evaluated at snapshots

    Returns:
        Trajectory: Times, operators and snapshot verdicts

    """
    rng = rng if rng is not None else make_rng(0)
    start = membership(rm0, spec, budget, rng)
    if start.status != VerdictStatus.IN:
        raise PreconditionError(f"Initial curvature not certified in {spec.kind} rank {spec.rank}: {start.status}")

    stepper = RK4()
    norm0 = rm0.norm()
    traj = Trajectory()
    rm, t, k = rm0, 0.0, 0

    def _snapshot(rm: Operator, t: float, verdict: ConeVerdict) -> Snapshot:
        curv = scalar(rm) if isinstance(rm, KahlerCurvature) else scalar_riem(rm)
        snap = Snapshot(t, rm.norm(), curv, verdict)
        if q_probe is not None and t > 0:
            snap.min_q = q_probe(rm, t)
            if snap.op_norm > 0 and abs(snap.min_q) / snap.op_norm < SOLITON_THRESHOLD:
                snap.flags.append("soliton-candidate")
        return snap

    traj.times.append(t)
    traj.operators.append(rm)
    traj.snapshots.append(_snapshot(rm, t, start))
    while t < horizon:
        norm = rm.norm()
        h = dt * norm0 / norm if norm > 0 and norm0 > 0 else dt
        h = min(h, horizon - t)
        rm = ode_step(rm, h, stepper)
        t += h
        k += 1
        traj.times.append(t)
        traj.operators.append(rm)
        blown = norm0 > 0 and rm.norm() > blowup_factor * norm0
        if k % snapshot_every == 0 or blown or t >= horizon:
            verdict = membership(rm, spec, budget, rng)
            snap = _snapshot(rm, t, verdict)
            traj.snapshots.append(snap)
            if verdict.status == VerdictStatus.OUT:
                snap.flags.append("cone-exit")
                traj.termination = "cone-exit"
                logger.error(f"Trajectory left {spec.kind} rank {spec.rank} at t={t:.6g}, min={verdict.min_value:.3e}")
                break
        if blown:
            traj.snapshots[-1].flags.append("blow-up")
            traj.termination = "blow-up"
            logger.info(f"Blow-up guard reached at t={t:.6g} after {k} steps")
            break
    return traj
