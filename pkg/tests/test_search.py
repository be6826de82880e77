import numpy as np
import pytest

from lyh_lab.rng import make_rng, random_hermitian
from lyh_lab.search import (
    ConeVerdict,
    SearchBudget,
    VerdictStatus,
    classify,
    minimize_quotient,
)


class HermitianQuotient:
    def __init__(self, a):
        self.a = a
        self.size = a.shape[0]

    def evaluate(self, z):
        az = self.a @ z
        return float(np.vdot(z, az).real), az, float(np.vdot(z, z).real), z


def test_classify_bands():
    budget = SearchBudget()
    assert classify(-1e-9, 1.0, budget) == VerdictStatus.IN
    assert classify(-1e-7, 1.0, budget) == VerdictStatus.INCONCLUSIVE
    assert classify(-1e-3, 1.0, budget, -1e-3) == VerdictStatus.OUT
    assert classify(-1e-3, 1.0, budget, 0.5) == VerdictStatus.INCONCLUSIVE
    assert classify(-5.0, 0.0, budget) == VerdictStatus.IN


def test_bands_scale_with_norm():
    budget = SearchBudget()
    assert classify(-1e-7, 100.0, budget) == VerdictStatus.IN


@pytest.mark.parametrize("seed", range(3))
def test_minimize_quotient_finds_lowest_eigenvalue(seed):
    a = random_hermitian(make_rng(seed), 4)
    result = minimize_quotient(HermitianQuotient(a), make_rng(100 + seed), SearchBudget(restarts=4))
    np.testing.assert_allclose(result.value, np.linalg.eigvalsh(a)[0], atol=1e-8)
    assert result.restarts_used == 4
    assert len(result.minima) == 4


def test_minimize_quotient_stops_early():
    a = np.diag([-1.0, 1.0, 2.0]).astype(complex)
    result = minimize_quotient(HermitianQuotient(a), make_rng(0), SearchBudget(restarts=10), stop_below=0.0)
    assert result.restarts_used < 10


def test_out_verdict_needs_witness():
    with pytest.raises(ValueError):
        ConeVerdict(VerdictStatus.OUT, -1.0)
    d = ConeVerdict(VerdictStatus.OUT, -1.0, witness=np.array([1j]), seed=3).to_dict()
    assert d["status"] == "Out"
    assert d["witness"] == [[0.0, 1.0]]
