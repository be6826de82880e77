import numpy as np
import pytest

from lyh_lab import curvature as cv
from lyh_lab import pp_forms
from lyh_lab.pp_forms import FrameTuple, PreconditionError, minors
from lyh_lab.rng import complex_normal, make_rng, random_unitary
from lyh_lab.suites import kb_index_sum
from lyh_lab.tensor_core import DimensionError, InvariantError


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("c", [1.0, 0.5])
def test_constant_model(m, c):
    rm = cv.const_hol_sec(c, m)
    np.testing.assert_allclose(rm.norm(), c * (m + 1))
    np.testing.assert_allclose(cv.ricci(rm), (m + 1) * c * np.eye(m))


def test_symmetries_enforced():
    with pytest.raises(InvariantError):
        cv.KahlerCurvature(2, complex_normal(make_rng(0), 2, 2, 2, 2))
    with pytest.raises(InvariantError):
        cv.RiemCurvature(3, make_rng(0).standard_normal((3, 3, 3, 3)))
    with pytest.raises(DimensionError):
        cv.KahlerCurvature(3, np.zeros((2,) * 4, dtype=complex))


def test_random_kahler_operator_is_hermitian():
    op = cv.random_kahler(make_rng(1), 3).op_matrix()
    np.testing.assert_allclose(op, op.conj().T, atol=1e-12)


def test_kahler_json_generating_set():
    rm = cv.random_kahler(make_rng(2), 3)
    back = cv.KahlerCurvature.from_json(rm.to_json())
    np.testing.assert_allclose(back.R, rm.R, atol=1e-14)


def test_riem_op_roundtrip():
    rm = cv.random_riem(make_rng(3), 4)
    np.testing.assert_allclose(cv.RiemCurvature.from_op(4, rm.op_matrix()).R, rm.R, atol=1e-12)
    back = cv.RiemCurvature.from_json(rm.to_json())
    np.testing.assert_allclose(back.R, rm.R, atol=1e-12)


@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("seed", range(2))
def test_reaction_matches_index_sums(p, seed):
    rng = make_rng(seed)
    rm = cv.random_kahler(rng, 3)
    phi = pp_forms.random_real(rng, 3, p)
    fast = cv.kb_reaction(rm, cv.ricci(rm), phi)
    np.testing.assert_allclose(fast.coeffs, kb_index_sum(rm, phi).coeffs, atol=1e-10)


def test_reaction_splits_at_a_frame():
    rng = make_rng(4)
    rm = cv.random_kahler(rng, 3)
    phi = pp_forms.random_real(rng, 3, 2)
    frame = FrameTuple(complex_normal(rng, 3, 2))
    quadratic, ricci_part = cv.kb_frame_split(rm, phi, frame)
    xi = minors(frame.vectors)
    value = xi @ cv.kb_reaction(rm, cv.ricci(rm), phi).coeffs @ xi.conj()
    np.testing.assert_allclose(quadratic + ricci_part, value, atol=1e-10)


def test_sign_check_needs_certificate():
    with pytest.raises(PreconditionError):
        cv.kb_sign_check(cv.const_hol_sec(1.0, 2), pp_forms.PPForm.omega_power(2, 1), None)


def test_lambda_ric_with_identity_ricci():
    phi = pp_forms.random_real(make_rng(5), 3, 2)
    np.testing.assert_allclose(cv.lambda_ric(np.eye(3), phi).coeffs, pp_forms.lambda_contract(phi).coeffs, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_pairing_equality_on_realification(seed):
    rng = make_rng(seed)
    rm = cv.random_kahler(rng, 2)
    z, w = complex_normal(rng, 4, 2), complex_normal(rng, 4, 2)
    assert cv.pairing_equality_check(rm, z, w) < 1e-8


def test_unitary_frame_change_keeps_norm():
    rng = make_rng(6)
    rm = cv.random_kahler(rng, 3)
    rotated = cv.unitary_transform(rm, random_unitary(rng, 3))
    np.testing.assert_allclose(rotated.norm(), rm.norm())


def test_sphere_sharp_and_ode():
    n, kappa = 4, 0.7
    np.testing.assert_allclose(cv.rm_sharp(cv.sphere(1.0, n)), (n - 2) * np.eye(6), atol=1e-12)
    rhs = cv.riem_ode_rhs(cv.sphere(kappa, n))
    np.testing.assert_allclose(rhs.R, cv.sphere((n - 1) * kappa**2, n).R, atol=1e-12)


def test_sharp_is_basis_independent():
    rng = make_rng(7)
    a = rng.standard_normal((6, 6))
    a = a + a.T
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    np.testing.assert_allclose(cv.rm_sharp(a, rotation=q), cv.rm_sharp(a), atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sharp_nonnegative_at_null_direction(n):
    op, v0 = cv.psd_with_null(make_rng(n), n)
    assert np.linalg.eigvalsh(op)[0] > -1e-10
    assert abs(np.vdot(v0, op @ v0)) < 1e-9 * np.linalg.norm(op, 2)
    assert cv.sharp_nonneg_at_null(op, v0) >= -1e-9 * np.linalg.norm(op, 2) ** 2
    assert cv.second_variation_positivity(op, v0)


def test_null_direction_required():
    with pytest.raises(PreconditionError):
        cv.sharp_nonneg_at_null(np.eye(3), np.array([1.0, 0.0, 0.0]))
    with pytest.raises(DimensionError):
        cv.psd_with_null(make_rng(0), 2)


def test_skew_decompose():
    g = complex_normal(make_rng(8), 4, 4)
    u = g - g.T
    z, w = cv.skew_decompose(u)
    assert z.shape[1] <= 2
    np.testing.assert_allclose(cv.TwoVector.from_pairs(z, w).coeffs, u, atol=1e-12)
    assert cv.skew_decompose(np.zeros((3, 3)))[0].shape == (3, 0)


def test_oneone_from_matrix():
    alpha = complex_normal(make_rng(9), 3, 3)
    v = cv.oneone_from_matrix(alpha)
    assert v.x is not None and v.y is not None
    np.testing.assert_allclose(v.x @ v.y.conj().T, alpha, atol=1e-12)
