import math

import numpy as np
import pytest

from lyh_lab import pp_forms
from lyh_lab.pp_forms import FrameTuple, PPForm, PreconditionError
from lyh_lab.rng import make_rng, random_unitary
from lyh_lab.search import ConeVerdict, SearchBudget, VerdictStatus
from lyh_lab.tensor_core import DimensionError, InvariantError

BUDGET = SearchBudget(restarts=4)


def _frame(seed, m, p):
    return FrameTuple(random_unitary(make_rng(seed), m)[:, :p], orthonormal=True)


def test_reality_condition():
    with pytest.raises(InvariantError):
        PPForm(2, 1, np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex))
    with pytest.raises(DimensionError):
        PPForm(3, 1, np.eye(2, dtype=complex))


@pytest.mark.parametrize("m,p", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_omega_power_on_unitary_frame(m, p):
    value = pp_forms.eval(PPForm.omega_power(m, p), _frame(m + p, m, p))
    np.testing.assert_allclose(value, math.factorial(p), rtol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_positive_forms_evaluate_nonnegative(seed):
    rng = make_rng(seed)
    phi = pp_forms.random_positive(rng, 4, 2, rank=2)
    x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    assert pp_forms.eval(phi, FrameTuple(x)) >= -1e-12


@pytest.mark.parametrize("seed", range(4))
def test_general_frames_reduce_to_unitary(seed):
    rng = make_rng(seed)
    phi = pp_forms.random_real(rng, 4, 2)
    x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    q, r = np.linalg.qr(x)
    expected = abs(np.linalg.det(r)) ** 2 * pp_forms.eval(phi, FrameTuple(q, orthonormal=True))
    np.testing.assert_allclose(pp_forms.eval(phi, FrameTuple(x)), expected, rtol=1e-9, atol=1e-10)


def test_eval_rejects_wrong_frame():
    with pytest.raises(DimensionError):
        pp_forms.eval(PPForm.omega_power(3, 2), _frame(0, 3, 1))


def test_coefficient_of_unsorted_indices():
    phi = pp_forms.random_real(make_rng(5), 3, 2)
    assert phi.coefficient((1, 0), (0, 1)) == -phi.coeffs[0, 0]
    assert phi.coefficient((1, 1), (0, 1)) == 0.0


def test_full_tensor_compresses_back():
    phi = pp_forms.random_real(make_rng(6), 3, 2)
    t = phi.full_tensor()
    np.testing.assert_allclose(t, -t.transpose(1, 0, 2, 3))
    back = PPForm.from_full_tensor(3, 2, t)
    np.testing.assert_allclose(back.coeffs, phi.coeffs)


def test_json_is_exact():
    phi = pp_forms.random_real(make_rng(7), 4, 2)
    back = PPForm.from_json(phi.to_json())
    np.testing.assert_array_equal(back.coeffs, phi.coeffs)


def test_form_conversion():
    phi = pp_forms.random_real(make_rng(8), 3, 1)
    back = PPForm.from_form(phi.to_form(), 1)
    np.testing.assert_allclose(back.coeffs, phi.coeffs)


@pytest.mark.parametrize("m,p", [(2, 1), (3, 2), (3, 3), (4, 2)])
def test_lelong_positive_forms_are_in(m, p):
    rng = make_rng(10 * m + p)
    phi = pp_forms.random_positive(rng, m, p)
    verdict = pp_forms.lelong_positivity(phi, BUDGET, rng)
    assert verdict.status == VerdictStatus.IN


@pytest.mark.parametrize("m,p", [(2, 1), (3, 2)])
def test_lelong_negative_omega_is_out(m, p):
    phi = PPForm.omega_power(m, p) * -1.0
    verdict = pp_forms.lelong_positivity(phi, BUDGET, make_rng(0))
    assert verdict.status == VerdictStatus.OUT
    np.testing.assert_allclose(pp_forms.eval(phi, verdict.witness), -math.factorial(p), rtol=1e-8)


@pytest.mark.parametrize("m,p", [(2, 1), (3, 1), (3, 2), (4, 2)])
def test_contraction_of_omega_power(m, p):
    lhs = pp_forms.lambda_contract(PPForm.omega_power(m, p))
    rhs = PPForm.omega_power(m, p - 1) * (p * (m - p + 1))
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs)


def test_lefschetz_of_omega_power():
    lhs = pp_forms.lefschetz(PPForm.omega_power(3, 1))
    np.testing.assert_allclose(lhs.coeffs, PPForm.omega_power(3, 2).coeffs, atol=1e-12)


@pytest.mark.parametrize("m,p", [(2, 1), (3, 1), (3, 2)])
def test_star_of_omega_power(m, p):
    lhs = pp_forms.hodge_star(PPForm.omega_power(m, p))
    rhs = PPForm.omega_power(m, m - p) * (math.factorial(p) / math.factorial(m - p))
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


def test_norm_of_omega():
    assert pp_forms.norm(PPForm.omega_power(5, 1)) == pytest.approx(math.sqrt(5))


def test_dominance_needs_certificate():
    phi = PPForm.omega_power(3, 2)
    with pytest.raises(PreconditionError):
        pp_forms.lambda_dominance_check(phi, 10.0, ConeVerdict(VerdictStatus.INCONCLUSIVE, -1e-7))
    result = pp_forms.lambda_dominance_check(phi, 10.0, ConeVerdict(VerdictStatus.IN, 2.0))
    assert result
    np.testing.assert_allclose(result.ratio, 0.5)


def test_calibrated_constant_bounds_samples():
    rng = make_rng(9)
    constant = pp_forms.calibrate_dominance_constant(rng, 3, 2, 20)
    assert constant > 0
    assert constant <= math.comb(3, 2)


def test_variations_at_a_null_frame():
    phi = PPForm(3, 1, np.diag([0.0, 1.0, 2.0]).astype(complex))
    frame = FrameTuple(np.eye(3, dtype=complex)[:, :1], orthonormal=True)
    assert pp_forms.eval(phi, frame) == 0.0
    np.testing.assert_allclose(pp_forms.first_variation(phi, frame), 0.0)
    j = pp_forms.second_variation_form(phi, frame)
    np.testing.assert_allclose(j, phi.coeffs.T)
    assert np.linalg.eigvalsh(j)[0] >= 0.0
