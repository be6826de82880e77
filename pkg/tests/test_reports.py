import json

from lyh_lab.reports import ORACLE_FIELDS, CheckRecord, Manifest, get_version_string, write_csv, write_manifest
from lyh_lab.rng import RNG_ALGORITHM


def test_check_row():
    row = CheckRecord(check="x", seed=3, value=0.1, tolerance=1e-8, passed=True, version="1").row()
    assert list(row) == ORACLE_FIELDS
    assert row["passed"] == "true"
    assert row["value"] == "0.1"


def test_csv_is_byte_stable(tmp_path):
    rows = [{"a": 1, "b": 0.1, "extra": "ignored"}, {"a": 2, "b": 1e-20}]
    first = write_csv(tmp_path / "one" / "t.csv", rows, ["a", "b"]).read_bytes()
    second = write_csv(tmp_path / "two" / "t.csv", rows, ["a", "b"]).read_bytes()
    assert first == second
    assert first == b"a,b\n1,0.1\n2,1e-20\n"


def test_csv_stamp(tmp_path):
    text = write_csv(tmp_path / "t.csv", [], ["a"], stamp=True).read_text()
    assert text.startswith("# generated ")
    assert text.endswith("a\n")


def test_manifest(tmp_path):
    manifest = Manifest(suite="identities", status="ok", exit_code=0, seed=1, version=get_version_string(), config={})
    data = json.loads(write_manifest(tmp_path / "manifest.json", manifest).read_text())
    assert data["rng_algorithm"] == RNG_ALGORITHM
    assert data["created"] is None
    assert data["version"]
