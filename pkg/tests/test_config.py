"""Tests for the configuration module."""

import pytest

from boltzlab.core.config import (
    RESOLVED_CONFIG_NAME,
    build_family,
    load_config,
    read_config_file,
    write_resolved_config,
)
from boltzlab.core.errors import ConfigError
from boltzlab.core.kernel import GAMMA_ENDPOINT_OFFSET

@pytest.fixture
def config_file(tmp_path):
    """Create a small configuration file."""
    path = tmp_path / "run.env"
    path.write_text(
        "# two-dimensional soft potentials\n"
        "kinetic.d = 2\n"
        "kinetic.gamma = -1.5\n"
        "kinetic.s = 0.3\n"
        "quadrature.grid_nodes = 16\n"
        "family.kind = bi_maxwellian\n"
        "family.separations = 2,4\n"
    )
    return path

@pytest.fixture(autouse=True)
def no_jobs_env(monkeypatch, tmp_path):
    """Keep BOLTZLAB_JOBS and stray .env files out of the tests."""
    monkeypatch.delenv("BOLTZLAB_JOBS", raising=False)
    monkeypatch.chdir(tmp_path)

def test_load_config_file(config_file):
    """Test that file values reach the parameters and settings."""
    config = load_config(config_file)
    assert config.params.d == 2
    assert config.params.gamma == -1.5
    assert config.params.s == 0.3
    assert config.spec.grid_nodes == 16
    assert config.spec.jobs == 1
    assert config.family_kind == "bi_maxwellian"
    assert config.get("family.separations") == (2.0, 4.0)
    assert config.method == "auto"

def test_overrides_beat_file(config_file):
    """Test that command-line values take precedence."""
    config = load_config(config_file, overrides={"kinetic.s": "0.6", "kinetic.gamma": None, "run.method": "mc"})
    assert config.params.s == 0.6
    assert config.params.gamma == -1.5
    assert config.method == "monte_carlo"

def test_missing_required_field(tmp_path):
    """Test that a missing kinetic field is named with its flag."""
    path = tmp_path / "partial.env"
    path.write_text("kinetic.d = 2\nkinetic.gamma = -1\n")
    with pytest.raises(ConfigError, match="kinetic.s.*--s"):
        load_config(path)

    # Check that commands without kinetic parameters still load
    config = load_config(path, require_kinetic=False)
    assert config.params is None

def test_unknown_field_names_the_line(tmp_path):
    """Test that an unknown key is reported with its line number."""
    path = tmp_path / "typo.env"
    path.write_text("kinetic.d = 2\nkinetic.zeta = 1\n")
    with pytest.raises(ConfigError, match="line 2: unknown field kinetic.zeta"):
        read_config_file(path)

def test_malformed_lines(tmp_path):
    """Test keys without values, invalid values and missing files."""
    path = tmp_path / "bad.env"
    path.write_text("kinetic.d\n")
    with pytest.raises(ConfigError, match="has no value"):
        read_config_file(path)

    path.write_text("kinetic.d = two\nkinetic.gamma = -1\nkinetic.s = 0.3\n")
    with pytest.raises(ConfigError, match="invalid value"):
        load_config(path)

    path.write_text("kinetic.d = 2.5\nkinetic.gamma = -1\nkinetic.s = 0.3\n")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(path)

    with pytest.raises(ConfigError, match="not found"):
        read_config_file(tmp_path / "missing.env")

def test_invalid_kinetic_parameters():
    """Test that inadmissible parameters become configuration errors."""
    with pytest.raises(ConfigError, match="invalid kinetic parameters"):
        load_config(overrides={"kinetic.d": 2, "kinetic.gamma": -2.5, "kinetic.s": 0.3})
    with pytest.raises(ConfigError, match="invalid kinetic parameters"):
        load_config(overrides={"kinetic.d": 2, "kinetic.gamma": -1.0, "kinetic.s": 1.0})

def test_gamma_endpoint_is_moved_inside(tmp_path, caplog):
    """Test that gamma = -d runs just inside the admissible range and is recorded."""
    for d in (2, 3):
        config = load_config(overrides={"kinetic.d": d, "kinetic.gamma": float(-d), "kinetic.s": 0.3})
        assert config.params.gamma == pytest.approx(-d + GAMMA_ENDPOINT_OFFSET)
    assert "outside (-3, 2]" in caplog.text

    path = write_resolved_config(config, tmp_path / "out")
    assert load_config(path).params.gamma == config.params.gamma

    config = load_config(overrides={"kinetic.d": 3, "kinetic.gamma": -2.0, "kinetic.s": 0.3})
    assert config.params.gamma == -2.0

def test_invalid_choices():
    """Test the family kind and method choices."""
    overrides = {"kinetic.d": 2, "kinetic.gamma": -1.0, "kinetic.s": 0.3}
    with pytest.raises(ConfigError, match="family.kind"):
        load_config(overrides={**overrides, "family.kind": "uniform"})
    with pytest.raises(ConfigError, match="run.method"):
        load_config(overrides={**overrides, "run.method": "simpson"})
    with pytest.raises(ConfigError, match="unknown field"):
        load_config(overrides={**overrides, "solver.steps": 3})

def test_jobs_environment_fallback(monkeypatch):
    """Test that BOLTZLAB_JOBS sets the thread count when no flag does."""
    monkeypatch.setenv("BOLTZLAB_JOBS", "3")
    overrides = {"kinetic.d": 2, "kinetic.gamma": -1.0, "kinetic.s": 0.3}
    assert load_config(overrides=overrides).spec.jobs == 3
    assert load_config(overrides={**overrides, "run.jobs": 2}).spec.jobs == 2

def test_resolved_config_roundtrip(config_file, tmp_path):
    """Test that the written configuration reloads to the same run."""
    config = load_config(config_file, overrides={"run.output_dir": str(tmp_path / "out")})
    path = write_resolved_config(config)
    assert path.name == RESOLVED_CONFIG_NAME
    reloaded = load_config(path)
    assert reloaded.params == config.params
    assert reloaded.spec == config.spec
    assert reloaded.get("family.separations") == (2.0, 4.0)

def test_build_family(config_file):
    """Test family construction from the configuration."""
    config = load_config(config_file)
    members = build_family(config)
    assert len(members) == 2
    assert all(f.d == 2 for _, f in members)

    single = load_config(config_file, overrides={"family.kind": "maxwellian", "family.temperature": 2.0})
    assert len(build_family(single)) == 1

def test_build_family_errors(config_file):
    """Test empty and misconfigured families."""
    empty = load_config(config_file, overrides={"family.separations": ""})
    with pytest.raises(ConfigError, match="empty bi_maxwellian family"):
        build_family(empty)

    histogram = load_config(config_file, overrides={"family.kind": "histogram"})
    with pytest.raises(ConfigError, match="family.path"):
        build_family(histogram)
