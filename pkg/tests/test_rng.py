import numpy as np

from lyh_lab.rng import cell_seeds, make_rng, random_psd, random_unitary, spawn


def test_same_seed_same_stream():
    a = make_rng(7).standard_normal(5)
    b = make_rng(7).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_cell_seeds_reproduce_spawned_streams():
    seeds = cell_seeds(11, 3)
    assert len(set(seeds)) == 3
    assert seeds == cell_seeds(11, 3)
    assert all(isinstance(s, int) for s in seeds)


def test_spawned_streams_differ():
    a, b = spawn(3, 2)
    assert not np.array_equal(a.standard_normal(4), b.standard_normal(4))


def test_random_unitary():
    u = random_unitary(make_rng(0), 4)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_random_psd_rank():
    a = random_psd(make_rng(1), 5, rank=2)
    w = np.linalg.eigvalsh(a)
    assert w[0] > -1e-12
    assert np.sum(w > 1e-9) == 2
