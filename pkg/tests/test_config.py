from pathlib import Path

import pytest

from lyh_lab.config import ConfigError, LabConfig, apply_overrides, load_config

SHIPPED = Path(__file__).parents[1] / "lab_config.toml"


def test_load_shipped_config():
    config = load_config(SHIPPED)
    assert config.ode.trajectories == 50
    assert config.search.tol_out > config.search.tol_in


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[run\nseed = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_inverted_bands(tmp_path):
    path = tmp_path / "bands.toml"
    path.write_text("[search]\ntol_in = 1e-6\ntol_out = 1e-8\n")
    with pytest.raises(ConfigError, match="search"):
        load_config(path)


def test_heat_rank_above_dimension(tmp_path):
    path = tmp_path / "heat.toml"
    path.write_text("[heat]\nm = 2\nranks = [3]\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_overrides():
    config = apply_overrides(LabConfig(), seed=5, out=Path("x"), tol=1e-9, jobs=2)
    assert config.run.seed == 5
    assert config.run.out == Path("x")
    assert config.run.jobs == 2
    assert config.search.tol_in == 1e-9
    assert LabConfig().run.seed != 5


def test_override_breaking_bands():
    with pytest.raises(ConfigError):
        apply_overrides(LabConfig(), tol=1e-5)


def test_defaults_meet_acceptance_counts():
    config = LabConfig()
    assert config.ode.trajectories == 50
    assert config.oracle.kb_sign_samples == 1000
    assert config.oracle.identity_samples == 100
    assert config.oracle.identity_dims == [1, 2, 3]
    shipped = load_config(SHIPPED)
    assert shipped.oracle.kb_sign_samples == 1000
    assert shipped.oracle.identity_dims == [1, 2, 3]


def test_identity_dims_are_bounded(tmp_path):
    path = tmp_path / "dims.toml"
    path.write_text("[oracle]\nidentity_dims = [2, 4]\n")
    with pytest.raises(ConfigError, match="oracle"):
        load_config(path)
