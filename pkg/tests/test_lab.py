from typer.testing import CliRunner

from lab import app

runner = CliRunner()

SMALL = """
[heat]
m = 2
cutoff = 3
points = 4

[oracle]
identity_samples = 2
identity_dims = [2]
"""


def test_malformed_config_exits_with_two(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[search]\ntol_in = 1e-6\ntol_out = 1e-8\n")
    result = runner.invoke(app, ["identities", "--config", str(path)])
    assert result.exit_code == 2


def test_identities_run(tmp_path):
    path = tmp_path / "lab.toml"
    path.write_text(SMALL)
    out = tmp_path / "out"
    result = runner.invoke(app, ["identities", "--config", str(path), "--out", str(out), "--seed", "5"])
    assert result.exit_code == 0, result.output
    assert (out / "manifest.json").exists()
    assert (out / "checks.csv").exists()


def test_tolerance_override_is_validated(tmp_path):
    result = runner.invoke(app, ["identities", "--tol", "1e-3", "--out", str(tmp_path)])
    assert result.exit_code == 2
