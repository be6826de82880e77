import itertools

import numpy as np
import pytest

from lyh_lab import torus_heat as th
from lyh_lab.exterior import DegreeError
from lyh_lab.rng import complex_normal, make_rng
from lyh_lab.search import SearchBudget
from lyh_lab.tensor_core import TimeError

CUTOFF = 3
TOL = 1e-10


@pytest.mark.parametrize("p,q", [(0, 0), (1, 0), (1, 1), (2, 1)])
def test_kahler_identities(p, q):
    phi = th.random_field(make_rng(10 * p + q), 2, p, q, CUTOFF)
    first, second = th.kahler_identities_check(phi)
    assert first < TOL and second < TOL


@pytest.mark.parametrize("p,q", [(1, 1), (0, 2)])
def test_commutation_identities(p, q):
    residuals = th.commutation_residuals(th.random_field(make_rng(p + q), 2, p, q, CUTOFF))
    assert len(residuals) == 9
    for name, value in residuals.items():
        assert value < TOL, name


def test_adjointness():
    rng = make_rng(4)
    phi = th.random_field(rng, 2, 1, 0, CUTOFF)
    r1, r2 = th.adjointness_residuals(phi, th.random_field(rng, 2, 1, 1, CUTOFF), th.random_field(rng, 2, 2, 0, CUTOFF))
    assert r1 < TOL and r2 < TOL


def test_adjoint_needs_degree():
    with pytest.raises(DegreeError):
        th.dbar_star(th.random_field(make_rng(0), 2, 1, 0, CUTOFF))


@pytest.mark.parametrize("p", [1, 2])
def test_divergence_identification(p):
    rng = make_rng(5 + p)
    phi = th.random_field(rng, 2, p, p, CUTOFF, real=True)
    assert isinstance(phi, th.SpectralPPField)
    points = th.sample_points(rng, 2, 6)
    residuals = th.divergence_identification_check(phi, complex_normal(rng, 6, 2), points)
    for name, value in residuals.items():
        assert value < TOL, name


def test_real_field_is_real():
    phi = th.random_field(make_rng(1), 2, 1, 1, CUTOFF, real=True)
    assert phi.reality_residual() < 1e-12
    with pytest.raises(DegreeError):
        th.random_field(make_rng(1), 2, 1, 0, CUTOFF, real=True)


def test_grid_synthesis_matches_pointwise():
    phi = th.random_field(make_rng(2), 1, 0, 1, CUTOFF)
    on_grid = phi.evaluate()
    at_points = phi.evaluate(th.grid_points(1, CUTOFF))
    key = ((), (0,))
    np.testing.assert_allclose(on_grid.terms[key], at_points.terms[key], atol=1e-10)


def test_padding_keeps_values():
    phi = th.random_field(make_rng(3), 1, 1, 0, CUTOFF)
    points = th.sample_points(make_rng(0), 1, 5)
    key = ((0,), ())
    np.testing.assert_allclose(phi.padded(CUTOFF + 2).evaluate(points).terms[key], phi.evaluate(points).terms[key])


def test_heat_flow():
    phi = th.random_field(make_rng(6), 2, 1, 1, CUTOFF)
    with pytest.raises(TimeError):
        th.heat_evolve(phi, -1.0)
    later = th.heat_evolve(phi, 0.1)
    centre = (CUTOFF,) * 4
    for key, v in phi.form.terms.items():
        assert later.form.terms[key][centre] == v[centre]
    assert later.max_abs() <= phi.max_abs()
    twice = th.heat_evolve(th.heat_evolve(phi, 0.1), 0.2)
    np.testing.assert_allclose(twice.form.terms[((0,), (0,))], th.heat_evolve(phi, 0.3).form.terms[((0,), (0,))], atol=1e-14)


def test_pp_field_degree():
    with pytest.raises(DegreeError):
        th.SpectralPPField.from_field(th.random_field(make_rng(0), 2, 1, 0, CUTOFF), 1)


def test_heat_kernel_li_yau_equality():
    m, t = 2, 0.04
    psi = th.periodized_gaussian(m, 8, t)
    value = th.li_yau_scalar(psi, t, np.zeros((1, 2 * m)))
    assert abs(value[0]) < 1e-6
    with pytest.raises(TimeError):
        th.periodized_gaussian(m, 8, 0.0)


@pytest.mark.parametrize("p", [1, 2])
def test_positivity_is_preserved(p):
    rng = make_rng(20 + p)
    phi0 = th.positive_field(rng, 2, p, CUTOFF, amplitude=0.9)
    report = th.positivity_preservation_run(phi0, [0.01, 0.1, 0.5], None, SearchBudget(restarts=4), rng)
    assert report.passed()
    assert len(report.minima) == 3


def test_positive_field_margin():
    phi0 = th.positive_field(make_rng(7), 2, 1, CUTOFF, amplitude=0.5)
    c = phi0.tensor_at(phi0.evaluate())
    assert np.linalg.eigvalsh(c)[:, 0].min() >= 0.5 - 1e-9
    with pytest.raises(ValueError):
        th.positive_field(make_rng(7), 2, 1, CUTOFF, amplitude=1.5)


def test_optimal_vector_field_attains_minimum():
    rng = make_rng(8)
    phi = th.positive_field(rng, 2, 1, CUTOFF)
    points = th.sample_points(rng, 2, 7)
    jet = th.QJet(phi, 0.2, points)
    v, minima = th.optimal_V(jet, None)
    assert v.optimal
    assert not np.any(v.singular)
    np.testing.assert_allclose(th.paired_Q(jet, v, None), minima, atol=1e-9)
    other = th.VectorField(v.values + 0.1 * complex_normal(rng, 7, 2))
    assert np.all(th.paired_Q(jet, other, None) >= minima - 1e-9)


def test_optimal_vector_field_beats_grid_search():
    rng = make_rng(11)
    phi = th.positive_field(rng, 2, 1, CUTOFF)
    points = th.sample_points(rng, 2, 3)
    _, minima = th.optimal_V(th.QJet(phi, 0.2, points), None)
    axis = np.linspace(-2.0, 2.0, 7)
    grid = np.array(list(itertools.product(axis, repeat=4)))
    vs = grid[:, :2] + 1j * grid[:, 2:]
    jet = th.QJet(phi, 0.2, np.repeat(points, len(vs), axis=0))
    values = th.paired_Q(jet, th.VectorField(np.tile(vs, (3, 1))), None).reshape(3, len(vs))
    assert np.all(minima <= values.min(axis=1) + 1e-8)


def test_optimal_v_is_log_gradient_for_top_degree():
    # p = m = 1: Q = psi (d dbar log psi + 1/t) + psi |V + dbar log psi|^2
    rng = make_rng(12)
    t = 0.1
    phi = th.SpectralPPField.from_field(th.heat_evolve(th.positive_field(rng, 1, 1, CUTOFF), t), 1)
    points = th.sample_points(rng, 1, 6)
    v, minima = th.optimal_V(th.QJet(phi, t, points), None)
    psi = th.lam(phi)
    values = psi.evaluate(points).terms[((), ())].real
    dbar_log = th.dbar(psi).evaluate(points).terms[((), (0,))] / values
    np.testing.assert_allclose(v.values[:, 0], -dbar_log, atol=1e-9)
    np.testing.assert_allclose(minima, values * th.li_yau_scalar(psi, t, points), atol=1e-9)


def test_optimal_v_on_degenerate_field():
    # rank one tensor, the dz_2 dzbar_2 direction carries no mass
    t = 0.1
    e = np.diag([1.0, 0.0]).astype(complex)
    phi0 = th.SpectralPPField.from_tensor_modes(2, 1, CUTOFF, {(0, 0, 0, 0): e, (1, 0, 0, 0): e / 4, (-1, 0, 0, 0): e / 4})
    phi = th.SpectralPPField.from_field(th.heat_evolve(phi0, t), 1)
    jet = th.QJet(phi, t, th.sample_points(make_rng(13), 2, 5))
    v, minima = th.optimal_V(jet, None)
    assert np.all(v.singular)
    _, plain = th.optimal_V(jet, None, eps=0.0)
    np.testing.assert_allclose(minima, plain, atol=1e-8)
    np.testing.assert_allclose(th.paired_Q(jet, v, None), minima, atol=1e-8)
    np.testing.assert_allclose(v.values[:, 1], 0, atol=1e-8)
    assert np.all(minima >= -1e-8)
    with pytest.raises(ValueError):
        th.optimal_V(jet, None, eps=-1.0)


@pytest.mark.parametrize("p", [1, 2])
def test_q_minima_converge_in_cutoff(p):
    rng = make_rng(40 + p)
    phi0 = th.positive_field(rng, 2, p, CUTOFF)
    fine = th.SpectralPPField.from_field(phi0.padded(2 * CUTOFF), p)
    points = th.sample_points(rng, 2, 6)
    frame_list = th.frames(rng, 2, p - 1)
    coarse_run = th.q_minimum_run(phi0, [0.05, 0.5], frame_list, points)
    fine_run = th.q_minimum_run(fine, [0.05, 0.5], frame_list, points)
    for a, b in zip(coarse_run.rows, fine_run.rows):
        assert abs(a["min_paired_Q"] - b["min_paired_Q"]) < 1e-6


@pytest.mark.parametrize("p", [1, 2])
def test_q_nonnegative_with_optimal_v(p):
    rng = make_rng(30 + p)
    phi0 = th.positive_field(rng, 2, p, CUTOFF)
    run = th.q_minimum_run(phi0, [0.05, 0.5], th.frames(rng, 2, p - 1, extra=1))
    assert run.minimum >= -1e-8
    assert {"t", "point", "frame_id", "min_paired_Q", "V_used"} <= set(run.rows[0])


def test_frames():
    frames = th.frames(make_rng(0), 3, 2, extra=1)
    assert [f[0] for f in frames] == ["e01", "e02", "e12", "random0"]
    assert th.frames(make_rng(0), 3, 0) == [("empty", None)]


@pytest.mark.parametrize("p", [1, 2])
def test_mass_monotonicity(p):
    phi0 = th.closed_positive_field(make_rng(40 + p), 2, p, CUTOFF)
    assert th.closedness_residual(phi0) < 1e-12
    series = th.monotonicity_check(phi0, [0.0, 0.05, 0.1, 0.5])
    assert series.nondecreasing()
    assert series.values[0] == 0.0


def test_monotonicity_needs_closed_data():
    phi0 = th.positive_field(make_rng(9), 2, 1, CUTOFF)
    with pytest.raises(th.ClosednessError):
        th.monotonicity_check(phi0, [0.1])


def test_duality_and_contraction():
    rng = make_rng(11)
    phi = th.positive_field(rng, 2, 2, CUTOFF)
    points = th.sample_points(rng, 2, 5)
    v = th.VectorField(complex_normal(rng, 5, 2))
    assert th.duality_check(phi, v, 0.1, points) < TOL
    assert th.lambda_commutes_with_Q(phi, v, 0.1, points) < TOL


def test_q_needs_positive_time():
    phi = th.positive_field(make_rng(12), 2, 1, CUTOFF)
    with pytest.raises(TimeError):
        th.eval_Q(phi, th.VectorField.zeros(1, 2), 0.0, np.zeros((1, 4)))


def test_snapshot_json_lists_modes():
    phi = th.positive_field(make_rng(13), 1, 1, CUTOFF)
    text = phi.snapshot_json()
    assert '"p": 1' in text and '"modes"' in text
