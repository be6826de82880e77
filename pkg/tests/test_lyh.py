import numpy as np
import pytest

from lyh_lab import curvature as cv
from lyh_lab import lyh
from lyh_lab.curvature import OneOneVector, TwoVector
from lyh_lab.pp_forms import PreconditionError
from lyh_lab.rng import complex_normal, make_rng
from lyh_lab.search import SearchBudget, VerdictStatus
from lyh_lab.tensor_core import DimensionError, TimeError

BUDGET = SearchBudget(restarts=8)


@pytest.mark.parametrize("m,c,t", [(2, 1.0, 1.0), (3, 0.5, 0.1)])
def test_constant_model_tensors(m, c, t):
    ten = lyh.build_M_P(cv.const_hol_sec(c, m), t)
    expected = ((m + 1) ** 2 * c**2 + (m + 1) * c / t) * np.eye(m)
    np.testing.assert_allclose(ten.M, expected, atol=1e-12)
    np.testing.assert_allclose(ten.P, 0.0)
    assert ten.homogeneous


@pytest.mark.parametrize("n,kappa,t", [(3, 1.0, 1.0), (4, 2.0, 0.5)])
def test_sphere_tensors(n, kappa, t):
    ten = lyh.build_M_P(cv.sphere(kappa, n), t)
    expected = (kappa**2 * (n - 1) ** 2 + kappa * (n - 1) / (2 * t)) * np.eye(n)
    np.testing.assert_allclose(ten.M, expected, atol=1e-12)


def test_time_must_be_positive():
    with pytest.raises(TimeError):
        lyh.build_M_P(cv.const_hol_sec(1.0, 2), 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_q_reduces_to_z_form(seed):
    rng = make_rng(seed)
    rm = cv.random_kahler(rng, 3)
    ten = lyh.build_M_P(rm, 0.5)
    w, v = complex_normal(rng, 3), complex_normal(rng, 3)
    q = lyh.eval_Q_krf(ten, rm, OneOneVector.from_pairs(w[:, None], v[:, None]), w)
    np.testing.assert_allclose(q, lyh.eval_Z(ten, rm, w, v), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_riemannian_q_reduces_to_z_form(seed):
    rng = make_rng(seed)
    rm = cv.random_riem(rng, 4)
    ten = lyh.build_M_P(rm, 0.5)
    w, z = complex_normal(rng, 4), complex_normal(rng, 4)
    q = lyh.eval_Qtilde_rf(ten, rm, w, TwoVector.from_pairs(w[:, None], z[:, None]))
    np.testing.assert_allclose(q, lyh.eval_Z_riem(ten, rm, w, z), rtol=1e-10, atol=1e-10)


def test_q_needs_w_as_last_pair():
    rm = cv.const_hol_sec(1.0, 2)
    ten = lyh.build_M_P(rm, 1.0)
    u = OneOneVector.from_pairs(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))
    with pytest.raises(PreconditionError):
        lyh.eval_Q_krf(ten, rm, u, np.array([0.0, 1.0]))
    with pytest.raises(PreconditionError):
        lyh.eval_Q_krf(ten, rm, OneOneVector(np.eye(2)), np.array([1.0, 0.0]))


def test_exact_minimum_on_constant_model():
    rm = cv.const_hol_sec(1.0, 2)
    verdict = lyh.min_Q_admissible(lyh.build_M_P(rm, 1.0), rm, 3, budget=BUDGET)
    assert verdict.status == VerdictStatus.IN
    np.testing.assert_allclose(verdict.min_value, 1.0)


@pytest.mark.parametrize("p", [1, 2])
def test_searched_minimum_on_constant_model(p):
    rm = cv.const_hol_sec(1.0, 2)
    verdict = lyh.min_Q_admissible(lyh.build_M_P(rm, 1.0), rm, p, budget=BUDGET, rng=make_rng(p))
    assert verdict.status == VerdictStatus.IN
    assert isinstance(verdict.witness, lyh.AdmissibleWitness)


def test_fixed_direction():
    rm = cv.const_hol_sec(1.0, 2)
    ten = lyh.build_M_P(rm, 1.0)
    verdict = lyh.min_Q_admissible(ten, rm, 1, w=np.array([1.0, 1j]), budget=BUDGET, rng=make_rng(0))
    assert verdict.status == VerdictStatus.IN
    with pytest.raises(DimensionError):
        lyh.min_Q_admissible(ten, rm, 1, w=np.zeros(2), budget=BUDGET)


def test_sphere_minimum():
    rm = cv.sphere(1.0, 4)
    verdict = lyh.min_Qtilde_admissible(lyh.build_M_P(rm, 1.0), rm, 1, budget=BUDGET, rng=make_rng(0))
    assert verdict.status == VerdictStatus.IN


def test_variant_mismatch():
    rm = cv.const_hol_sec(1.0, 2)
    ten = lyh.build_M_P(cv.sphere(1.0, 3), 1.0)
    with pytest.raises(PreconditionError):
        lyh.min_Q_admissible(ten, rm, 1)


def test_collapse_agrees_with_eigenvalue():
    rng = make_rng(3)
    rm = cv.psd_generated(rng, 2, 2) + cv.const_hol_sec(0.5, 2)
    agree, searched, exact = lyh.p_collapse_check(lyh.build_M_P(rm, 1.0), rm, 3, BUDGET, rng)
    assert agree
    assert searched.status == VerdictStatus.IN
    assert exact > 0
    with pytest.raises(PreconditionError):
        lyh.p_collapse_check(lyh.build_M_P(rm, 1.0), rm, 2, BUDGET, rng)


@pytest.mark.parametrize("seed", range(3))
def test_kahler_extension_trace_form(seed):
    rng = make_rng(seed)
    rm = cv.random_kahler(rng, 3)
    rm = rm * (1 / rm.norm())
    report = lyh.kahler_extension_check(rm, complex_normal(rng, 3, 2), complex_normal(rng, 3, 2), 0.5)
    assert report.defect < 1e-9
    assert report.square >= 0


@pytest.mark.parametrize("seed", range(3))
def test_riem_extension_trace_form(seed):
    rng = make_rng(seed)
    rm = cv.random_riem(rng, 4)
    rm = rm * (1 / rm.norm())
    report = lyh.riem_extension_check(rm, complex_normal(rng, 4, 2), complex_normal(rng, 4, 2), 0.5)
    assert report.defect < 1e-9


@pytest.mark.parametrize("cross", ["D", "B"])
@pytest.mark.parametrize("seed", range(4))
def test_mok_inequality(cross, seed):
    a, c, off = lyh.random_mok_blocks(make_rng(seed), 3, cross=cross)
    lhs, rhs = lyh.mok_check(a, c, d=off) if cross == "D" else lyh.mok_check(a, c, b=off)
    assert lhs >= rhs - 1e-10 * max(1.0, abs(lhs))


@pytest.mark.parametrize("cross", ["D", "B"])
def test_mok_equality_for_a_square(cross):
    a, c, off = lyh.random_mok_blocks(make_rng(9), 3, rank=1, cross=cross)
    lhs, rhs = lyh.mok_check(a, c, d=off) if cross == "D" else lyh.mok_check(a, c, b=off)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_frobenius_variant_fails():
    e0, e1 = np.array([[1.0, 0.0]]).T, np.array([[0.0, 1.0]]).T
    a, c, d = e0 @ e0.T, e1 @ e1.T, e0 @ e1.T
    lhs, rhs = lyh.mok_check(a, c, d=d)
    assert lhs == 0.0 and rhs == 0.0
    assert lyh.mok_frobenius_rhs(d) > lhs


def test_mok_needs_nonnegative_form():
    with pytest.raises(PreconditionError):
        lyh.mok_check(-np.eye(2), np.eye(2), d=np.zeros((2, 2)))
    with pytest.raises(PreconditionError):
        lyh.mok_form_matrix(np.eye(2), np.eye(2))
