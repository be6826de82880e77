import csv

import pytest

from lyh_lab.config import LabConfig
from lyh_lab.reports import CheckRecord
from lyh_lab.search import ConeVerdict, VerdictStatus
from lyh_lab.suites import CellResult, ExitCode, SuiteName, SuiteResult, identity_cell, run_suite, write_reports

SMALL = {
    "search": {"lelong_restarts": 4, "cone_restarts": 8, "lyh_restarts": 4},
    "cones": {"m": 2, "ranks": [1, 2], "constants": [1.0, -1.0], "psd_samples": 1, "psd_rank": 2},
    "ode": {"m": 2, "p": 2, "trajectories": 2, "horizon": 0.1, "snapshot_every": 20},
    "lyh": {"kahler_dims": [2], "riem_dims": [3], "riem_ranks": [1], "times": [1.0], "extension_samples": 2},
    "heat": {"m": 2, "ranks": [1], "cutoff": 3, "samples": 1, "points": 4, "times": [0.05, 0.5]},
    "oracle": {"identity_samples": 2, "identity_dims": [2]},
}


def _config(tmp_path, **run):
    return LabConfig(**SMALL, run={"out": str(tmp_path), **run})


def _record(passed, inconclusive=False):
    return CheckRecord(check="c", seed=0, value=0.0, tolerance=0.0, passed=passed, inconclusive=inconclusive)


def test_exit_codes():
    assert SuiteResult(SuiteName.IDENTITIES, checks=[_record(True)]).exit_code() == ExitCode.OK
    assert SuiteResult(SuiteName.IDENTITIES, checks=[_record(False)]).exit_code() == ExitCode.ASSERTION_FAILED
    pending = SuiteResult(SuiteName.IDENTITIES, checks=[_record(False, True)], inconclusive=1)
    assert pending.exit_code() == ExitCode.INCONCLUSIVE
    assert pending.exit_code(quota=1) == ExitCode.OK


def test_inconclusive_verdicts_are_counted():
    res = CellResult(7)
    res.expect("x", ConeVerdict(VerdictStatus.INCONCLUSIVE, -1e-7), VerdictStatus.IN, 1e-8)
    res.expect("y", ConeVerdict(VerdictStatus.IN, 0.0), VerdictStatus.IN, 1e-8)
    assert res.inconclusive == 1
    assert [c.passed for c in res.checks] == [False, True]
    assert res.checks[0].inconclusive


@pytest.mark.parametrize(
    "suite", [SuiteName.CONE_CHECK, SuiteName.EVOLVE_ODE, SuiteName.VERIFY_LYH, SuiteName.HEAT_RUN, SuiteName.IDENTITIES]
)
def test_small_suites_pass(tmp_path, suite):
    config = _config(tmp_path)
    result = run_suite(suite, config)
    assert result.checks
    assert not result.failures, [c.check for c in result.failures]
    manifest = write_reports(result, config)
    assert manifest.exit_code == 0
    assert manifest.status == "ok"
    assert (tmp_path / "manifest.json").exists()
    for name in manifest.tables:
        assert (tmp_path / name).exists()


def test_cone_rows_carry_seed_and_version(tmp_path):
    config = _config(tmp_path)
    write_reports(run_suite(SuiteName.CONE_CHECK, config), config)
    with (tmp_path / "cone_verdicts.csv").open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 2 + 2
    assert all(r["seed"] and r["version"] for r in rows)
    assert {r["expected"] for r in rows} == {"In", "Out"}


def test_runs_are_reproducible(tmp_path):
    first = _config(tmp_path / "a", seed=11)
    second = _config(tmp_path / "b", seed=11, jobs=2)
    write_reports(run_suite(SuiteName.VERIFY_LYH, first), first)
    write_reports(run_suite(SuiteName.VERIFY_LYH, second), second)
    for name in ("lyh_verdicts.csv", "checks.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("m", [1, 3])
def test_identity_battery_dimensions(tmp_path, m):
    config = LabConfig(**{**SMALL, "oracle": {"identity_dims": [m]}}, run={"out": str(tmp_path)})
    res = identity_cell(config, 5, 0)
    assert res.checks
    assert all(c.passed for c in res.checks), [c.check for c in res.checks if not c.passed]
