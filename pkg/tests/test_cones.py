import numpy as np
import pytest

from lyh_lab import curvature as cv
from lyh_lab.cones import (
    ConeKind,
    ConeSpec,
    cone_perturbed,
    membership,
    nesting_check,
    siu_check,
)
from lyh_lab.curvature import OneOneVector, TwoVector
from lyh_lab.rng import make_rng
from lyh_lab.search import SearchBudget, VerdictStatus
from lyh_lab.tensor_core import DimensionError

BUDGET = SearchBudget(restarts=8)


def test_collapse_regime():
    assert ConeSpec(ConeKind.KAHLER_CP, 2, 2).collapses
    assert not ConeSpec(ConeKind.KAHLER_CP, 1, 2).collapses
    assert ConeSpec(ConeKind.RIEM_CK, 2, 4).collapses
    assert not ConeSpec(ConeKind.RIEM_CK, 1, 4).collapses
    assert ConeSpec(ConeKind.FULL_PSD, 1, 3).collapses
    with pytest.raises(ValueError):
        ConeSpec(ConeKind.KAHLER_CP, 0, 2)


@pytest.mark.parametrize("rank", [1, 2, 3, 4])
def test_positive_constant_model_in_every_rank(rank):
    verdict = membership(cv.const_hol_sec(1.0, 2), ConeSpec(ConeKind.KAHLER_CP, rank, 2), BUDGET, make_rng(rank))
    assert verdict.status == VerdictStatus.IN


@pytest.mark.parametrize("rank", [1, 2])
def test_negative_constant_model_is_out(rank):
    rm = cv.const_hol_sec(-1.0, 2)
    verdict = membership(rm, ConeSpec(ConeKind.KAHLER_CP, rank, 2), BUDGET, make_rng(rank))
    assert verdict.status == VerdictStatus.OUT
    assert isinstance(verdict.witness, OneOneVector)
    np.testing.assert_allclose(cv.pairing(rm, verdict.witness, verdict.witness).real, verdict.min_value, atol=1e-9)


def test_exact_collapse_value():
    verdict = membership(cv.const_hol_sec(-1.0, 2), ConeSpec(ConeKind.KAHLER_CP, 2, 2), BUDGET)
    np.testing.assert_allclose(verdict.min_value, -3.0)
    assert verdict.restarts_used == 0


def test_sphere_complex_sectional():
    spec = ConeSpec(ConeKind.RIEM_CK, 1, 4)
    assert membership(cv.sphere(1.0, 4), spec, BUDGET, make_rng(0)).status == VerdictStatus.IN
    out = membership(cv.sphere(-1.0, 4), spec, BUDGET, make_rng(0))
    assert out.status == VerdictStatus.OUT
    assert isinstance(out.witness, TwoVector)


def test_membership_checks_dimensions():
    with pytest.raises(DimensionError):
        membership(cv.const_hol_sec(1.0, 2), ConeSpec(ConeKind.KAHLER_CP, 1, 3))
    with pytest.raises(DimensionError):
        membership(cv.sphere(1.0, 2), ConeSpec(ConeKind.KAHLER_CP, 1, 2))


def test_zero_operator_is_in():
    verdict = membership(cv.const_hol_sec(0.0, 3), ConeSpec(ConeKind.KAHLER_CP, 1, 3), BUDGET)
    assert verdict.status == VerdictStatus.IN


@pytest.mark.parametrize("seed", range(2))
def test_nesting_on_generated_operators(seed):
    rng = make_rng(seed)
    rm = cv.psd_generated(rng, 2, 2)
    low, high = ConeSpec(ConeKind.KAHLER_CP, 1, 2), ConeSpec(ConeKind.KAHLER_CP, 2, 2)
    assert nesting_check(rm, low, high, BUDGET, rng)
    with pytest.raises(ValueError):
        nesting_check(rm, high, low, BUDGET, rng)


def test_siu_on_constant_model():
    assert siu_check(cv.const_hol_sec(1.0, 2), BUDGET, make_rng(1)).status == VerdictStatus.IN


def test_small_perturbation_stays_in():
    base = cv.const_hol_sec(1.0, 2)
    out, verdict = cone_perturbed(base, 0.05, make_rng(2), ConeSpec(ConeKind.KAHLER_CP, 2, 2), BUDGET)
    assert verdict.status == VerdictStatus.IN
    assert np.max(np.abs(out.R - base.R)) > 0
