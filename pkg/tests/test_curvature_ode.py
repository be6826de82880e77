import numpy as np
import pytest

from lyh_lab import curvature as cv
from lyh_lab.cones import ConeKind, ConeSpec
from lyh_lab.curvature_ode import (
    RK4,
    const_model_coefficient,
    evolve,
    krf_ode_rhs,
    ode_step,
    sphere_coefficient,
)
from lyh_lab.lyh import lyh_probe
from lyh_lab.pp_forms import PreconditionError
from lyh_lab.rng import make_rng
from lyh_lab.search import SearchBudget

BUDGET = SearchBudget(restarts=4)


def test_rk4_on_exponential():
    y = np.array([1.0])
    for _ in range(10):
        y = RK4().step(lambda v: v, y, 0.1)
    np.testing.assert_allclose(y, np.e, rtol=1e-5)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_constant_model_closed_form(m):
    traj = evolve(cv.const_hol_sec(1.0, m), 0.1, 1e-3, ConeSpec(ConeKind.KAHLER_CP, m, m), BUDGET)
    t = traj.times[-1]
    np.testing.assert_allclose(t, 0.1)
    expected = cv.const_hol_sec(const_model_coefficient(1.0, m, t), m)
    np.testing.assert_allclose(traj.operators[-1].R, expected.R, rtol=1e-8, atol=1e-10)
    assert traj.termination == "horizon"


def test_sphere_closed_form():
    n = 3
    traj = evolve(cv.sphere(1.0, n), 0.1, 1e-3, ConeSpec(ConeKind.RIEM_CK, 1, n), BUDGET)
    expected = cv.sphere(sphere_coefficient(1.0, n, traj.times[-1]), n)
    np.testing.assert_allclose(traj.operators[-1].R, expected.R, rtol=1e-8, atol=1e-10)


def test_blow_up_guard():
    traj = evolve(cv.const_hol_sec(1.0, 2), 1.0, 1e-3, ConeSpec(ConeKind.KAHLER_CP, 2, 2), BUDGET, blowup_factor=10.0)
    assert traj.termination == "blow-up"
    assert "blow-up" in traj.snapshots[-1].flags
    assert traj.times[-1] < 1 / 3


def test_start_must_be_in_cone():
    with pytest.raises(PreconditionError):
        evolve(cv.const_hol_sec(-1.0, 2), 0.1, 1e-3, ConeSpec(ConeKind.KAHLER_CP, 2, 2), BUDGET)


def test_snapshot_rows_carry_lyh_minimum():
    traj = evolve(
        cv.const_hol_sec(1.0, 2),
        0.05,
        1e-3,
        ConeSpec(ConeKind.KAHLER_CP, 2, 2),
        BUDGET,
        snapshot_every=10,
        q_probe=lyh_probe(p=3, budget=BUDGET),
    )
    rows = traj.rows()
    assert rows[0]["min_Q"] == ""
    assert all(r["min_Q"] != "" for r in rows[1:])
    assert all(r["verdict_status"] == "In" for r in rows)
    assert set(rows[0]) == {"t", "op_norm", "scalar_curv", "verdict_status", "min_pairing", "min_Q", "flags"}


def test_step_stays_kahler():
    rm = cv.random_kahler(make_rng(0), 2)
    rm = rm * (1 / rm.norm())
    out = ode_step(rm, 1e-3)
    assert isinstance(out, cv.KahlerCurvature)
    krf_ode_rhs(rm)
