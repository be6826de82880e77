#!/usr/bin/env python3
"""Verification suites assembled from independent seeded cells."""

import enum
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Dict, Iterator, List

import numpy as np

from ._compat import StrEnum
from . import exterior
from .cones import ConeKind, ConePerturbationError, ConeSpec, cone_perturbed, membership, nesting_check, siu_check
from .config import LabConfig
from .curvature import (
    KahlerCurvature,
    OneOneVector,
    TwoVector,
    const_hol_sec,
    kb_reaction,
    kb_sign_check,
    pairing_equality_check,
    psd_generated,
    psd_with_null,
    random_kahler,
    random_riem,
    ricci,
    rm_sharp,
    second_variation_positivity,
    sharp_nonneg_at_null,
    sphere,
)
from .curvature_ode import Operator, const_model_coefficient, evolve, sphere_coefficient
from .lyh import (
    build_M_P,
    eval_Q_krf,
    eval_Qtilde_rf,
    eval_Z,
    eval_Z_riem,
    kahler_extension_check,
    lyh_probe,
    min_Q_admissible,
    min_Qtilde_admissible,
    mok_check,
    mok_frobenius_rhs,
    p_collapse_check,
    random_mok_blocks,
    riem_extension_check,
)
from .pp_forms import PPForm, random_real
from .reports import (
    ORACLE_FIELDS,
    CheckRecord,
    Manifest,
    get_version_string,
    utc_stamp,
    write_csv,
    write_manifest,
)
from .rng import cell_seeds, complex_normal, make_rng
from .search import ConeVerdict, SearchBudget, VerdictStatus
from .tensor_core import SkewC, exp_ad_consistency
from .torus_heat import (
    GRID_CUTOFF,
    SpectralPPField,
    VectorField,
    adjointness_residuals,
    closed_positive_field,
    commutation_residuals,
    divergence_identification_check,
    duality_check,
    frames,
    kahler_identities_check,
    lambda_commutes_with_Q,
    li_yau_scalar,
    monotonicity_check,
    periodized_gaussian,
    positive_field,
    positivity_preservation_run,
    q_minimum_run,
    random_field,
    sample_points,
)

logger = logging.getLogger(__name__)

GAUSSIAN_TIME = 0.04
IDENTITY_CUTOFF = 4
CHUNK = 50

KB_TOL = 1e-11
KB_SIGN_TOL = 1e-10
IDENTIFICATION_TOL = 1e-12
IDENTITY_TOL = 1e-10
EXTENSION_TOL = 1e-9
Z_FORM_TOL = 1e-12
CLOSED_FORM_TOL = 1e-8
LI_YAU_EQUALITY_TOL = 1e-6


class SuiteName(StrEnum):
    """Available suites, named as their subcommands."""

    CONE_CHECK = "cone-check"
    EVOLVE_ODE = "evolve-ode"
    HEAT_RUN = "heat-run"
    VERIFY_LYH = "verify-lyh"
    ORACLE_SUITE = "oracle-suite"
    IDENTITIES = "identities"


class ExitCode(enum.IntEnum):
    """Process exit codes of a suite run."""

    OK = 0
    ASSERTION_FAILED = 1
    INVALID_CONFIG = 2
    INCONCLUSIVE = 3


TABLE_FIELDS: Dict[str, List[str]] = {
    "cone_verdicts": ["operator", "kind", "rank", "status", "expected", "min_value", "restarts_used", "tolerance", "seed", "version"],
    "trajectories": ["trajectory", "t", "op_norm", "scalar_curv", "verdict_status", "min_pairing", "min_Q", "flags", "seed", "version"],
    "positivity": ["field", "p", "t", "min_positivity", "tolerance", "seed", "version"],
    "q_report": ["field", "p", "t", "point", "frame_id", "min_paired_Q", "V_used", "tolerance", "seed", "version"],
    "monotonicity": ["field", "p", "t", "value", "tolerance", "seed", "version"],
    "lyh_verdicts": ["variant", "dim", "p", "t", "status", "min_value", "restarts_used", "tolerance", "seed", "version"],
    "mok": ["n", "cross", "lhs", "rhs", "frobenius_rhs", "seed", "version"],
}


@dataclass
class CellResult:
    """Rows and checks produced by one experiment cell."""

    seed: int
    tables: Dict[str, List[dict]] = field(default_factory=dict)
    checks: List[CheckRecord] = field(default_factory=list)
    inconclusive: int = 0

    def add_row(self, table: str, row: dict) -> None:
        self.tables.setdefault(table, []).append({**row, "seed": self.seed})

    def check(self, name: str, value: float, tolerance: float, passed: bool) -> bool:
        """Record an assertion outcome."""
        self.checks.append(CheckRecord(check=name, seed=self.seed, value=float(value), tolerance=tolerance, passed=bool(passed)))
        if not passed:
            logger.error(f"Check failed: {name}, value {value:.3e}, tolerance {tolerance:.1e}")
        return bool(passed)

    def expect(self, name: str, verdict: ConeVerdict, expected: VerdictStatus, tolerance: float) -> None:
        """Record a certified verdict against its expected status; Inconclusive counts against the quota."""
        if verdict.status == VerdictStatus.INCONCLUSIVE:
            self.inconclusive += 1
            self.checks.append(
                CheckRecord(check=name, seed=self.seed, value=verdict.min_value, tolerance=tolerance, passed=False, inconclusive=True)
            )
            logger.warning(f"Inconclusive: {name}, min {verdict.min_value:.3e}")
            return
        self.check(name, verdict.min_value, tolerance, verdict.status == expected)


Cell = Callable[[LabConfig, int], CellResult]


@dataclass
class SuiteResult:
    """Merged outcome of all cells of a suite, in cell order."""

    suite: SuiteName
    tables: Dict[str, List[dict]] = field(default_factory=dict)
    checks: List[CheckRecord] = field(default_factory=list)
    inconclusive: int = 0

    @property
    def failures(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed and not c.inconclusive]

    def exit_code(self, quota: int = 0) -> ExitCode:
        if self.failures:
            return ExitCode.ASSERTION_FAILED
        if self.inconclusive > quota:
            return ExitCode.INCONCLUSIVE
        return ExitCode.OK


def _budget(config: LabConfig, restarts: int) -> SearchBudget:
    return SearchBudget.from_config(config.search, restarts)


def _chunks(total: int, size: int = CHUNK) -> Iterator[int]:
    for start in range(0, total, size):
        yield min(size, total - start)


def _worst(values: List[float]) -> float:
    return max(values, default=0.0)


# cone-check


def const_cone_cell(config: LabConfig, seed: int, c: float, rank: int) -> CellResult:
    """Certify const_hol_sec(c, m) in C_rank; In expected for c >= 0, Out otherwise."""
    cfg = config.cones
    res = CellResult(seed)
    spec = ConeSpec(ConeKind.KAHLER_CP, rank, cfg.m)
    verdict = membership(const_hol_sec(c, cfg.m), spec, _budget(config, config.search.cone_restarts), make_rng(seed))
    expected = VerdictStatus.IN if c >= 0 else VerdictStatus.OUT
    res.add_row(
        "cone_verdicts",
        {
            "operator": f"const_hol_sec({c!r})",
            "kind": str(spec.kind),
            "rank": rank,
            "status": str(verdict.status),
            "expected": str(expected),
            "min_value": verdict.min_value,
            "restarts_used": verdict.restarts_used,
            "tolerance": config.search.tol_in,
        },
    )
    res.expect(f"cone const_hol_sec({c!r}) rank {rank}", verdict, expected, config.search.tol_in)
    return res


def psd_cone_cell(config: LabConfig, seed: int, sample: int) -> CellResult:
    """Certify a PSD-generated operator at every rank, its nesting and its Siu condition."""
    cfg = config.cones
    res = CellResult(seed)
    rng = make_rng(seed)
    budget = _budget(config, config.search.cone_restarts)
    op = psd_generated(rng, cfg.m, cfg.psd_rank)
    ranks = sorted(cfg.ranks)
    for rank in ranks:
        spec = ConeSpec(ConeKind.KAHLER_CP, rank, cfg.m)
        verdict = membership(op, spec, budget, rng)
        res.add_row(
            "cone_verdicts",
            {
                "operator": f"psd_generated[{sample}]",
                "kind": str(spec.kind),
                "rank": rank,
                "status": str(verdict.status),
                "expected": str(VerdictStatus.IN),
                "min_value": verdict.min_value,
                "restarts_used": verdict.restarts_used,
                "tolerance": config.search.tol_in,
            },
        )
        res.expect(f"cone psd_generated[{sample}] rank {rank}", verdict, VerdictStatus.IN, config.search.tol_in)
    for low, high in zip(ranks, ranks[1:]):
        nested = nesting_check(op, ConeSpec(ConeKind.KAHLER_CP, low, cfg.m), ConeSpec(ConeKind.KAHLER_CP, high, cfg.m), budget, rng)
        res.check(f"cone nesting psd_generated[{sample}] {low}<={high}", 0.0 if nested else 1.0, 0.0, nested)
    siu = siu_check(op, budget, rng)
    res.expect(f"siu psd_generated[{sample}]", siu, VerdictStatus.IN, config.search.tol_in)
    return res


def _cone_cells(config: LabConfig) -> List[Cell]:
    cfg = config.cones
    cells: List[Cell] = [partial(const_cone_cell, c=c, rank=r) for c in cfg.constants for r in cfg.ranks]
    cells += [partial(psd_cone_cell, sample=s) for s in range(cfg.psd_samples)]
    return cells


# evolve-ode


def trajectory_cell(config: LabConfig, seed: int, index: int) -> CellResult:
    """Integrate a perturbed C_p start to the blow-up guard and require In at every snapshot."""
    cfg = config.ode
    res = CellResult(seed)
    rng = make_rng(seed)
    budget = _budget(config, config.search.cone_restarts)
    spec = ConeSpec(ConeKind.KAHLER_CP, min(cfg.p + index % 2, cfg.m * cfg.m), cfg.m)
    base = psd_generated(rng, cfg.m, cfg.m) + float(rng.uniform(0.1, 1.0)) * const_hol_sec(1.0, cfg.m)
    try:
        rm0, _ = cone_perturbed(base, cfg.perturbation, rng, spec, budget)
    except ConePerturbationError as e:
        logger.warning(f"Trajectory {index}: {e}, starting unperturbed")
        rm0 = base
    norm0 = rm0.norm()
    probe = lyh_probe(p=cfg.m + 1, t=1.0, budget=_budget(config, config.search.lyh_restarts), seed=seed)
    traj = evolve(rm0, cfg.horizon / norm0, cfg.dt / norm0, spec, budget, rng, cfg.blowup_factor, cfg.snapshot_every, probe)
    for row in traj.rows():
        res.add_row("trajectories", {"trajectory": index, **row})
    statuses = [v.status for v in traj.verdicts]
    res.inconclusive += statuses.count(VerdictStatus.INCONCLUSIVE)
    worst = min(v.min_value / v.scale if v.scale > 0 else 0.0 for v in traj.verdicts)
    res.check(
        f"ode cone invariance trajectory {index} rank {spec.rank} ({traj.termination})",
        worst,
        config.search.tol_in,
        VerdictStatus.OUT not in statuses,
    )
    return res


def closed_form_cell(config: LabConfig, seed: int, model: str) -> CellResult:
    """Track the single-coefficient ODE of a constant curvature model against its closed form."""
    cfg = config.ode
    res = CellResult(seed)
    rm0: Operator
    if model == "kahler":
        rm0 = const_hol_sec(1.0, cfg.m)
        spec = ConeSpec(ConeKind.KAHLER_CP, cfg.m, cfg.m)

        def coefficient(r: np.ndarray) -> float:
            return float(r[0, 0, 0, 0].real) / 2

        def exact(t: float) -> float:
            return const_model_coefficient(1.0, cfg.m, t)

    else:
        n = cfg.m + 1
        rm0 = sphere(1.0, n)
        spec = ConeSpec(ConeKind.RIEM_CK, n // 2, n)

        def coefficient(r: np.ndarray) -> float:
            return float(r[0, 1, 0, 1])

        def exact(t: float) -> float:
            return sphere_coefficient(1.0, n, t)

    norm0 = rm0.norm()
    budget = _budget(config, config.search.cone_restarts)
    traj = evolve(rm0, cfg.horizon / norm0, cfg.dt / norm0, spec, budget, make_rng(seed), cfg.blowup_factor, cfg.snapshot_every)
    errors = [abs(coefficient(op.R) / exact(t) - 1.0) for t, op in zip(traj.times, traj.operators)]
    rate = max(errors) / max(traj.times[-1], 1e-300)
    res.check(f"ode closed form {model} ({traj.termination})", rate, CLOSED_FORM_TOL, rate <= CLOSED_FORM_TOL)
    return res


def _ode_cells(config: LabConfig) -> List[Cell]:
    cells: List[Cell] = [partial(trajectory_cell, index=i) for i in range(config.ode.trajectories)]
    cells += [partial(closed_form_cell, model="kahler"), partial(closed_form_cell, model="sphere")]
    return cells


# heat-run


def heat_cell(config: LabConfig, seed: int, p: int, sample: int) -> CellResult:
    """Evolve positive data, re-test positivity and the frame-paired Q with optimal V on the grid."""
    cfg = config.heat
    res = CellResult(seed)
    rng = make_rng(seed)
    tol = config.search.tol_in
    name = f"p{p}-s{sample}"
    phi0 = positive_field(rng, cfg.m, p, cfg.cutoff, cfg.modes, cfg.amplitude)
    report = positivity_preservation_run(phi0, cfg.times, None, _budget(config, config.search.lelong_restarts), rng)
    for t, value in zip(report.times, report.minima):
        res.add_row("positivity", {"field": name, "p": p, "t": t, "min_positivity": value, "tolerance": tol})
    res.check(f"heat positivity {name}", report.minimum, tol, report.passed(tol))
    run = q_minimum_run(phi0, cfg.times, frames(rng, cfg.m, p - 1, extra=1))
    for row in run.rows:
        res.add_row("q_report", {"field": name, "p": p, **row, "tolerance": tol})
    res.check(f"heat Q with optimal V {name}", run.minimum, tol, run.minimum >= -tol)
    return res


def monotonicity_cell(config: LabConfig, seed: int, p: int, sample: int) -> CellResult:
    """Check that t times the total mass of Lambda phi is nondecreasing on d-closed positive data."""
    cfg = config.heat
    res = CellResult(seed)
    name = f"p{p}-s{sample}"
    phi0 = closed_positive_field(make_rng(seed), cfg.m, p, cfg.cutoff, cfg.modes, cfg.amplitude)
    series = monotonicity_check(phi0, cfg.times)
    for t, value in zip(series.times, series.values):
        res.add_row("monotonicity", {"field": name, "p": p, "t": t, "value": value, "tolerance": IDENTITY_TOL})
    slope = float(np.min(series.slopes(), initial=0.0))
    res.check(f"heat monotonicity {name}", slope, IDENTITY_TOL, series.nondecreasing(IDENTITY_TOL) and slope >= -IDENTITY_TOL)
    return res


def gaussian_cell(config: LabConfig, seed: int) -> CellResult:
    """Scalar Li-Yau equality for the heat kernel at the centre of the torus."""
    cfg = config.heat
    res = CellResult(seed)
    psi = periodized_gaussian(cfg.m, max(cfg.cutoff, GRID_CUTOFF), GAUSSIAN_TIME)
    value = float(li_yau_scalar(psi, GAUSSIAN_TIME, np.zeros((1, 2 * cfg.m)))[0])
    res.check("heat Li-Yau equality on the heat kernel", abs(value), LI_YAU_EQUALITY_TOL, abs(value) <= LI_YAU_EQUALITY_TOL)
    return res


def _heat_cells(config: LabConfig) -> List[Cell]:
    cfg = config.heat
    cells: List[Cell] = []
    for p in cfg.ranks:
        cells += [partial(heat_cell, p=p, sample=s) for s in range(cfg.samples)]
        cells += [partial(monotonicity_cell, p=p, sample=s) for s in range(cfg.samples)]
    cells.append(gaussian_cell)
    return cells


# verify-lyh


def _lyh_row(res: CellResult, variant: str, dim: int, p: int, t: float, verdict: ConeVerdict, tol: float) -> None:
    res.add_row(
        "lyh_verdicts",
        {
            "variant": variant,
            "dim": dim,
            "p": p,
            "t": t,
            "status": str(verdict.status),
            "min_value": verdict.min_value,
            "restarts_used": verdict.restarts_used,
            "tolerance": tol,
        },
    )


def kahler_lyh_cell(config: LabConfig, seed: int, m: int, p: int, t: float) -> CellResult:
    """Admissible minimum of Q on const_hol_sec(1, m) in homogeneous mode."""
    res = CellResult(seed)
    rm = const_hol_sec(1.0, m)
    verdict = min_Q_admissible(build_M_P(rm, t), rm, p, None, _budget(config, config.search.lyh_restarts), make_rng(seed))
    _lyh_row(res, "kahler", m, p, t, verdict, config.search.tol_in)
    res.expect(f"lyh kahler m={m} p={p} t={t!r}", verdict, VerdictStatus.IN, config.search.tol_in)
    return res


def riem_lyh_cell(config: LabConfig, seed: int, n: int, p: int, t: float) -> CellResult:
    """Admissible minimum of Q~ on the round sphere in homogeneous mode."""
    res = CellResult(seed)
    rm = sphere(1.0, n)
    verdict = min_Qtilde_admissible(build_M_P(rm, t), rm, p, None, _budget(config, config.search.lyh_restarts), make_rng(seed))
    _lyh_row(res, "riemannian", n, p, t, verdict, config.search.tol_in)
    res.expect(f"lyh riemannian n={n} p={p} t={t!r}", verdict, VerdictStatus.IN, config.search.tol_in)
    return res


def lyh_consistency_cell(config: LabConfig, seed: int, m: int) -> CellResult:
    """Z-form agreement at p = 1, the collapse check and the extension trace identities."""
    cfg = config.lyh
    res = CellResult(seed)
    rng = make_rng(seed)
    budget = _budget(config, config.search.lyh_restarts)
    z_err, ext_err = [], []
    for _ in range(cfg.extension_samples):
        rm = random_kahler(rng, m)
        rm = rm * (1 / rm.norm())
        t = float(rng.choice(cfg.times))
        ten = build_M_P(rm, t)
        w, v = complex_normal(rng, m), complex_normal(rng, m)
        q = eval_Q_krf(ten, rm, OneOneVector.from_pairs(w[:, None], v[:, None]), w)
        z_err.append(abs(q - eval_Z(ten, rm, w, v)) / max(1.0, abs(q)))
        p = int(rng.integers(1, m + 1))
        ext_err.append(kahler_extension_check(rm, complex_normal(rng, m, p), complex_normal(rng, m, p), t).defect)

        n = m + 1
        rr = random_riem(rng, n)
        rr = rr * (1 / rr.norm())
        ten_r = build_M_P(rr, t)
        w, z = complex_normal(rng, n), complex_normal(rng, n)
        q = eval_Qtilde_rf(ten_r, rr, w, TwoVector.from_pairs(w[:, None], z[:, None]))
        z_err.append(abs(q - eval_Z_riem(ten_r, rr, w, z)) / max(1.0, abs(q)))
        ext_err.append(riem_extension_check(rr, complex_normal(rng, n, p), complex_normal(rng, n, p), t).defect)
    res.check(f"lyh Z-form agreement m={m}", _worst(z_err), Z_FORM_TOL, _worst(z_err) <= Z_FORM_TOL)
    res.check(f"lyh extension trace identity m={m}", _worst(ext_err), EXTENSION_TOL, _worst(ext_err) <= EXTENSION_TOL)

    rm = psd_generated(rng, m, m) + const_hol_sec(0.5, m)
    agree, searched, exact = p_collapse_check(build_M_P(rm, 1.0), rm, m + 1, budget, rng)
    res.check(f"lyh collapse m={m}", abs(searched.min_value - exact), budget.tol_out, agree)
    return res


def _lyh_cells(config: LabConfig) -> List[Cell]:
    cfg = config.lyh
    cells: List[Cell] = [
        partial(kahler_lyh_cell, m=m, p=p, t=t) for m in cfg.kahler_dims for p in range(1, m + 1) for t in cfg.times
    ]
    cells += [partial(riem_lyh_cell, n=n, p=p, t=t) for n in cfg.riem_dims for p in cfg.riem_ranks for t in cfg.times]
    cells += [partial(lyh_consistency_cell, m=m) for m in cfg.kahler_dims]
    return cells


# identities


def identity_cell(config: LabConfig, seed: int, sample: int) -> CellResult:
    """Exterior algebra, Kaehler identities, commutations, adjointness, divergences and duality."""
    res = CellResult(seed)
    rng = make_rng(seed)
    m = int(rng.choice(config.oracle.identity_dims))
    cutoff = min(IDENTITY_CUTOFF, config.heat.cutoff)
    a, b = map(int, rng.integers(0, m + 1, size=2))

    x = exterior.random_form(rng, m, a, b)
    k = a + b
    lhs = exterior.lefschetz(exterior.contract(x)) - exterior.contract(exterior.lefschetz(x))
    residuals: Dict[str, float] = {"[L, Lambda] = (k - m)": (lhs - x * (k - m)).max_abs() / max(1.0, x.max_abs())}
    via_star = exterior.hodge_star(exterior.lefschetz(exterior.hodge_star(x))) * (-1) ** k
    residuals["Lambda = (-1)^k *L*"] = (exterior.contract(x) - via_star).max_abs() / max(1.0, x.max_abs())

    phi = random_field(rng, m, a, b, cutoff)
    residuals["Kaehler identity del"], residuals["Kaehler identity dbar"] = kahler_identities_check(phi)
    residuals.update(commutation_residuals(phi))

    a2, b2 = map(int, rng.integers(0, m, size=2))
    psi = random_field(rng, m, a2, b2, cutoff)
    residuals["dbar adjoint"], residuals["del adjoint"] = adjointness_residuals(
        psi, random_field(rng, m, a2, b2 + 1, cutoff), random_field(rng, m, a2 + 1, b2, cutoff)
    )

    p = int(rng.integers(1, m + 1))
    points = sample_points(rng, m, config.heat.points)
    real = random_field(rng, m, p, p, cutoff, real=True)
    assert isinstance(real, SpectralPPField)
    residuals.update(divergence_identification_check(real, complex_normal(rng, config.heat.points, m), points))

    positive = positive_field(rng, m, p, cutoff, config.heat.modes, config.heat.amplitude)
    v = VectorField(complex_normal(rng, config.heat.points, m))
    t = float(rng.choice(config.heat.times))
    residuals["duality"] = duality_check(positive, v, t, points)
    if p >= 2:
        residuals["Lambda Q = Q Lambda"] = lambda_commutes_with_Q(positive, v, t, points)

    for name, value in residuals.items():
        res.check(f"identity {name}", value, IDENTITY_TOL, value <= IDENTITY_TOL)
    return res


def _identity_cells(config: LabConfig) -> List[Cell]:
    return [partial(identity_cell, sample=s) for s in range(config.oracle.identity_samples)]


# oracle-suite


def kb_index_sum(rm: KahlerCurvature, phi: PPForm) -> PPForm:
    """KB(phi) by explicit index sums over full tensors."""
    m, p = phi.m, phi.p
    t = phi.full_tensor()
    ric = ricci(rm)
    out = np.zeros_like(t)
    for idx in itertools.product(range(m), repeat=2 * p):
        big_i, big_j = list(idx[:p]), list(idx[p:])
        acc = 0j
        for mu in range(p):
            for nu in range(p):
                for k in range(m):
                    for l in range(m):
                        ii, jj = big_i.copy(), big_j.copy()
                        ii[mu], jj[nu] = k, l
                        acc += rm.R[big_i[mu], big_j[nu], l, k] * t[tuple(ii + jj)]
        for nu in range(p):
            for l in range(m):
                jj = big_j.copy()
                jj[nu] = l
                acc -= 0.5 * ric[l, big_j[nu]] * t[tuple(big_i + jj)]
        for mu in range(p):
            for k in range(m):
                ii = big_i.copy()
                ii[mu] = k
                acc -= 0.5 * ric[big_i[mu], k] * t[tuple(ii + big_j)]
        out[idx] = acc
    return PPForm.from_full_tensor(m, p, out)


def kb_oracle_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Compare kb_reaction with the index-sum oracle at m <= 3, p <= 2."""
    res = CellResult(seed)
    rng = make_rng(seed)
    errors = []
    for _ in range(samples):
        m = int(rng.integers(2, 4))
        p = int(rng.integers(1, 3))
        rm = random_kahler(rng, m)
        rm = rm * (1 / rm.norm())
        phi = random_real(rng, m, p)
        errors.append(float(np.max(np.abs(kb_reaction(rm, ricci(rm), phi).coeffs - kb_index_sum(rm, phi).coeffs))))
    res.check("oracle KB index sum", _worst(errors), KB_TOL, _worst(errors) <= KB_TOL)
    return res


def kb_sign_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Re <KB(phi), phibar> <= 0 on certified C_2 curvature at m = 3."""
    res = CellResult(seed)
    rng = make_rng(seed)
    budget = _budget(config, config.search.cone_restarts)
    values = []
    for _ in range(samples):
        rm = psd_generated(rng, 3, int(rng.integers(1, 4))) + float(rng.uniform(0.0, 1.0)) * const_hol_sec(1.0, 3)
        rm = rm * (1 / rm.norm())
        certificate = membership(rm, ConeSpec(ConeKind.KAHLER_CP, 2, 3), budget, rng)
        if certificate.status != VerdictStatus.IN:
            res.expect("oracle KB sign certificate", certificate, VerdictStatus.IN, config.search.tol_in)
            continue
        phi = random_real(rng, 3, int(rng.integers(1, 3)))
        phi = phi * (1 / float(np.linalg.norm(phi.coeffs)))
        values.append(kb_sign_check(rm, phi, certificate))
    worst = max(values, default=0.0)
    res.check("oracle KB sign under C_2", worst, KB_SIGN_TOL, worst <= KB_SIGN_TOL)
    return res


def identification_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Pairing equality between C~_p on the realified tensor and C_2p."""
    res = CellResult(seed)
    rng = make_rng(seed)
    residuals = []
    for _ in range(samples):
        m = int(rng.integers(2, 4))
        p = int(rng.integers(1, 3))
        rm = random_kahler(rng, m)
        rm = rm * (1 / rm.norm())
        z, w = complex_normal(rng, 2 * m, p), complex_normal(rng, 2 * m, p)
        z /= np.linalg.norm(z, axis=0)
        w /= np.linalg.norm(w, axis=0)
        residuals.append(pairing_equality_check(rm, z, w))
    res.check("oracle cone identification", _worst(residuals), IDENTIFICATION_TOL, _worst(residuals) <= IDENTIFICATION_TOL)
    return res


def appendix_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Exponential consistency on so(n, C) and basis independence of Rm^#."""
    res = CellResult(seed)
    rng = make_rng(seed)
    exp_ok, sharp_err = True, []
    for _ in range(samples):
        n = int(rng.integers(3, 7))
        g = complex_normal(rng, n, n)
        exp_ok &= exp_ad_consistency(SkewC((g - g.T) / np.linalg.norm(g - g.T)), IDENTITY_TOL)
        n = int(rng.integers(3, 6))
        d = n * (n - 1) // 2
        s = rng.standard_normal((d, d))
        op = (s + s.T) / 2
        rotation = np.linalg.qr(rng.standard_normal((d, d)))[0]
        ref = rm_sharp(op)
        sharp_err.append(float(np.max(np.abs(ref - rm_sharp(op, rotation)))) / max(1.0, float(np.max(np.abs(ref)))))
    res.check("oracle exp(ad) = Ad(Exp)", 0.0 if exp_ok else 1.0, IDENTITY_TOL, exp_ok)
    res.check("oracle Rm^# basis independence", _worst(sharp_err), IDENTITY_TOL, _worst(sharp_err) <= IDENTITY_TOL)
    return res


def null_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Second variation and Rm^# at null directions of PSD operators."""
    res = CellResult(seed)
    rng = make_rng(seed)
    worst, second_ok = np.inf, True
    for _ in range(samples):
        op, v0 = psd_with_null(rng, int(rng.integers(3, 6)))
        scale = max(1.0, float(np.linalg.norm(op, 2)) ** 2 * float(np.vdot(v0, v0).real))
        worst = min(worst, sharp_nonneg_at_null(op, v0) / scale)
        second_ok &= second_variation_positivity(op, v0)
    res.check("oracle Rm^# at null directions", worst, IDENTITY_TOL, worst >= -IDENTITY_TOL)
    res.check("oracle second variation at null directions", 0.0 if second_ok else 1.0, 0.0, second_ok)
    return res


def mok_cell(config: LabConfig, seed: int, samples: int) -> CellResult:
    """Trace inequality for random nonnegative forms in both cross-term variants."""
    res = CellResult(seed)
    rng = make_rng(seed)
    worst = -np.inf
    for s in range(samples):
        n = int(rng.integers(1, 7))
        cross = "D" if s % 2 == 0 else "B"
        a, c, off = random_mok_blocks(rng, n, int(rng.integers(1, 2 * n + 1)), cross)
        lhs, rhs = mok_check(a, c, d=off) if cross == "D" else mok_check(a, c, b=off)
        scale = max(1.0, float(np.linalg.norm(a, 2) * np.linalg.norm(c, 2)))
        worst = max(worst, (rhs - lhs) / scale)
        res.add_row("mok", {"n": n, "cross": cross, "lhs": lhs, "rhs": rhs, "frobenius_rhs": mok_frobenius_rhs(off)})
    res.check("oracle trace inequality", worst, IDENTITY_TOL, worst <= IDENTITY_TOL)
    return res


def _oracle_cells(config: LabConfig) -> List[Cell]:
    cfg = config.oracle
    cells: List[Cell] = []
    for fn, total in (
        (kb_oracle_cell, cfg.kb_samples),
        (kb_sign_cell, cfg.kb_sign_samples),
        (identification_cell, cfg.identification_samples),
        (appendix_cell, cfg.appendix_samples),
        (null_cell, cfg.null_samples),
        (mok_cell, cfg.mok_samples),
    ):
        cells += [partial(fn, samples=n) for n in _chunks(total)]
    for builder in (_cone_cells, _ode_cells, _lyh_cells, _heat_cells, _identity_cells):
        cells += builder(config)
    return cells


SUITES: Dict[SuiteName, Callable[[LabConfig], List[Cell]]] = {
    SuiteName.CONE_CHECK: _cone_cells,
    SuiteName.EVOLVE_ODE: _ode_cells,
    SuiteName.HEAT_RUN: _heat_cells,
    SuiteName.VERIFY_LYH: _lyh_cells,
    SuiteName.ORACLE_SUITE: _oracle_cells,
    SuiteName.IDENTITIES: _identity_cells,
}


def _run_cell(cell: Cell, config: LabConfig, seed: int) -> CellResult:
    return cell(config, seed)


def run_suite(name: SuiteName, config: LabConfig) -> SuiteResult:
    """Run every cell of a suite and merge the results in cell order.

    Args:
        name (SuiteName): The suite
        config (LabConfig): Validated configuration

    Returns:
        SuiteResult: Tables, checks and the Inconclusive count

    """
    cells = SUITES[name](config)
    seeds = cell_seeds(config.run.seed, len(cells))
    logger.info(f"Running {name}: {len(cells)} cells, {config.run.jobs} job(s), seed {config.run.seed}")
    if config.run.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.run.jobs) as pool:
            results = list(pool.map(_run_cell, cells, [config] * len(cells), seeds))
    else:
        results = [_run_cell(cell, config, seed) for cell, seed in zip(cells, seeds)]

    version = get_version_string()
    suite = SuiteResult(name)
    for result in results:
        for table, rows in result.tables.items():
            suite.tables.setdefault(table, []).extend({**row, "version": version} for row in rows)
        suite.checks.extend(c.model_copy(update={"version": version}) for c in result.checks)
        suite.inconclusive += result.inconclusive
    logger.info(
        f"Finished {name}: {len(suite.checks)} checks, {len(suite.failures)} failed, {suite.inconclusive} inconclusive"
    )
    return suite


def write_reports(result: SuiteResult, config: LabConfig) -> Manifest:
    """Write the CSV tables, the check table and manifest.json into the output directory."""
    out: Path = config.run.out
    stamp = config.run.timestamps
    written = []
    for table, rows in result.tables.items():
        written.append(write_csv(out / f"{table}.csv", rows, TABLE_FIELDS[table], stamp).name)
    written.append(write_csv(out / "checks.csv", [c.row() for c in result.checks], ORACLE_FIELDS, stamp).name)
    code = result.exit_code(config.run.inconclusive_quota)
    manifest = Manifest(
        suite=str(result.suite),
        status=code.name.lower(),
        exit_code=int(code),
        seed=config.run.seed,
        version=get_version_string(),
        config=config.model_dump(mode="json"),
        tables=written,
        inconclusive=result.inconclusive,
        checks=result.checks,
        created=utc_stamp() if stamp else None,
    )
    write_manifest(out / "manifest.json", manifest)
    return manifest
