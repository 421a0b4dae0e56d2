"""Tests for the command-line interface."""

import json
import math

import pytest
from typer.testing import CliRunner

from boltzlab.cli import app
from boltzlab.core.io import read_csv

runner = CliRunner()

FAST_QUADRATURE = (
    "quadrature.grid_nodes = 16\n"
    "quadrature.theta_min = 1e-2\n"
    "quadrature.grading_ratio = 2\n"
    "quadrature.panel_order = 3\n"
    "quadrature.direction_nodes = 8\n"
    "quadrature.mc_samples = 2000\n"
)

@pytest.fixture(autouse=True)
def isolated(monkeypatch, tmp_path):
    """Run every command from an empty directory without BOLTZLAB_JOBS."""
    monkeypatch.delenv("BOLTZLAB_JOBS", raising=False)
    monkeypatch.chdir(tmp_path)

@pytest.fixture
def config_file(tmp_path):
    """Create a fast two-dimensional configuration."""
    path = tmp_path / "fast.env"
    path.write_text("kinetic.d = 2\nkinetic.gamma = -1.5\nkinetic.s = 0.6\n" + FAST_QUADRATURE)
    return path

def test_help_lists_commands():
    """Test that the help text lists every command."""
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("dissipate", "verify", "solve", "cone", "norms"):
        assert command in result.output

def test_missing_s_is_a_config_error(tmp_path, caplog):
    """Test that a missing kinetic.s exits with code 1 and names the flag."""
    path = tmp_path / "partial.env"
    path.write_text("kinetic.d = 2\nkinetic.gamma = -1\n")
    result = runner.invoke(app, ["dissipate", "--config", str(path), "-o", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "kinetic.s" in caplog.text

def test_dissipate_writes_outputs(config_file, tmp_path):
    """Test that dissipate writes its report, table and resolved config."""
    out = tmp_path / "out"
    config_file.write_text(config_file.read_text() + "family.kind = maxwellian\nfamily.temperature = 1\n")
    result = runner.invoke(app, ["dissipate", "-c", str(config_file), "-o", str(out)])
    assert result.exit_code == 0
    assert (out / "resolved_config.env").is_file()
    report = json.loads((out / "dissipation.json").read_text())
    assert len(report) == 1
    assert report[0]["functional"] == "entropy_dissipation"
    rows = read_csv(out / "dissipation.csv")
    assert rows[0]["member"] == "maxwellian"
    assert abs(float(rows[0]["value"])) <= float(rows[0]["abs_error"]) + 1e-12

def test_dissipate_monte_carlo_is_reproducible(config_file, tmp_path):
    """Test that the same seed reproduces the Monte Carlo table."""
    config_file.write_text(config_file.read_text() + "family.kind = bi_maxwellian\nfamily.separations = 4\n")
    tables = []
    for name in ("first", "second"):
        out = tmp_path / name
        args = ["dissipate", "-c", str(config_file), "-o", str(out), "--method", "mc", "--seed", "5"]
        result = runner.invoke(app, args)
        assert result.exit_code == 0
        tables.append((out / "dissipation.csv").read_text())
    assert tables[0] == tables[1]

def test_overrides_on_command_line(config_file, tmp_path):
    """Test that flags override the config file."""
    out = tmp_path / "out"
    config_file.write_text(config_file.read_text() + "family.kind = maxwellian\nfamily.temperature = 1\n")
    result = runner.invoke(app, ["dissipate", "-c", str(config_file), "-o", str(out), "--gamma=-1.0", "--s", "0.3"])
    assert result.exit_code == 0
    rows = read_csv(out / "dissipation.csv")
    assert float(rows[0]["gamma"]) == -1.0
    assert float(rows[0]["s"]) == 0.3

def test_empty_family_exits_with_config_error(config_file, tmp_path, caplog):
    """Test that an empty family is a configuration error."""
    config_file.write_text(config_file.read_text() + "family.separations =\n")
    result = runner.invoke(app, ["dissipate", "-c", str(config_file), "-o", str(tmp_path / "out"), "-f", "bi_maxwellian"])
    assert result.exit_code == 1
    assert "empty bi_maxwellian family" in caplog.text

def test_bad_variant(config_file, tmp_path):
    """Test that an unknown kinetic variant is rejected."""
    result = runner.invoke(app, ["dissipate", "-c", str(config_file), "-o", str(tmp_path / "out"), "--variant", "half"])
    assert result.exit_code == 1

def test_predicate_only(tmp_path):
    """Test the predicate table without kinetic parameters."""
    out = tmp_path / "out"
    result = runner.invoke(app, ["verify", "--predicate-only", "--d", "3", "-o", str(out)])
    assert result.exit_code == 0
    rows = read_csv(out / "predicate.csv")
    finite = {(float(r["gamma"]), float(r["s"])): r["finite"] for r in rows}
    assert finite[(-3.0, 0.6)] == "true"
    assert finite[(-3.0, 0.4)] == "false"
    assert finite[(-2.0, 0.3)] == "true"

def test_predicate_pairs(tmp_path):
    """Test explicit gamma:s pairs and their validation."""
    out = tmp_path / "out"
    result = runner.invoke(app, ["verify", "--predicate-only", "--d", "2", "-o", str(out), "--pairs=-1.5:0.2,-1:0.6"])
    assert result.exit_code == 0
    assert [r["finite"] for r in read_csv(out / "predicate.csv")] == ["true", "true"]

    result = runner.invoke(app, ["verify", "--predicate-only", "--d", "2", "-o", str(out), "--pairs=-1.5"])
    assert result.exit_code == 1

def test_unknown_check(config_file, tmp_path):
    """Test that an unknown verification check is rejected."""
    result = runner.invoke(app, ["verify", "-c", str(config_file), "-o", str(tmp_path / "out"), "--check", "lemma9"])
    assert result.exit_code == 1

def test_solve_rejects_zero_snapshots(config_file, tmp_path):
    """Test that solve needs at least one snapshot."""
    result = runner.invoke(app, ["solve", "-c", str(config_file), "-o", str(tmp_path / "out"), "--snapshots", "0"])
    assert result.exit_code == 1

def test_solve_writes_trajectory(config_file, tmp_path):
    """Test a short relaxation run with a hard potential."""
    out = tmp_path / "out"
    args = ["solve", "-c", str(config_file), "-o", str(out), "--gamma", "0.5", "--s", "0.3"]
    args += ["-n", "2000", "-T", "0.2", "--snapshots", "1", "--seed", "3"]
    result = runner.invoke(app, args)
    assert result.exit_code == 0
    rows = read_csv(out / "trajectory.csv")
    assert [float(r["t"]) for r in rows] == [0.0, 0.2]
    assert (out / "checkpoint.csv").read_text().startswith("v_1,v_2")
    assert json.loads((out / "trajectory.json").read_text())["holder_holds"] == [True, True]

def test_cone_at_origin(config_file, tmp_path):
    """Test that the cone of a Maxwellian at v = 0 covers the circle."""
    out = tmp_path / "out"
    result = runner.invoke(app, ["cone", "-c", str(config_file), "-o", str(out), "--v", "0,0"])
    assert result.exit_code == 0
    report = json.loads((out / "cone.json").read_text())
    assert report["member"] == "maxwellian-0"
    assert report["measure_hat"] == pytest.approx(2.0 * math.pi, rel=1e-9)
    assert report["n_directions"] == 64

def test_cone_rejects_wrong_dimension(config_file, tmp_path, caplog):
    """Test that the base velocity must match the dimension."""
    result = runner.invoke(app, ["cone", "-c", str(config_file), "-o", str(tmp_path / "out"), "--v", "1,2,3"])
    assert result.exit_code == 1
    assert "cone.v" in caplog.text

def test_norms(config_file, tmp_path):
    """Test the norms table of a single Maxwellian."""
    out = tmp_path / "out"
    config_file.write_text(config_file.read_text() + "family.kind = maxwellian\nfamily.temperature = 1\n")
    result = runner.invoke(app, ["norms", "-c", str(config_file), "-o", str(out)])
    assert result.exit_code == 0
    rows = read_csv(out / "norms.csv")
    assert len(rows) == 1
    assert float(rows[0]["M0"]) == pytest.approx(1.0)
    assert float(rows[0]["E0"]) == pytest.approx(2.0)
    assert float(rows[0]["norm_l1_2"]) == pytest.approx(3.0, rel=1e-3)
    assert float(rows[0]["seminorm"]) > 0

def test_dissipate_at_gamma_endpoint(config_file, tmp_path, caplog):
    """Test that gamma = -d in d = 2 runs just inside the range and records the value used."""
    out = tmp_path / "out"
    config_file.write_text(config_file.read_text() + "family.kind = maxwellian\nfamily.temperature = 1\n")
    args = ["dissipate", "-c", str(config_file), "-o", str(out), "--family", "maxwellian"]
    result = runner.invoke(app, args + ["--gamma=-2", "--s", "0.3", "--d", "2"])
    assert result.exit_code == 0
    assert "outside (-2, 2]" in caplog.text
    rows = read_csv(out / "dissipation.csv")
    assert float(rows[0]["gamma"]) == pytest.approx(-1.99)
    assert abs(float(rows[0]["value"])) <= float(rows[0]["abs_error"]) + 1e-12
    resolved = (out / "resolved_config.env").read_text().splitlines()
    assert "kinetic.gamma = -2" not in resolved

def test_solve_at_gamma_endpoint(config_file, tmp_path):
    """Test a short very-soft relaxation run at gamma = -d."""
    out = tmp_path / "out"
    args = ["solve", "-c", str(config_file), "-o", str(out), "--gamma=-2", "--s", "0.3"]
    args += ["-n", "2000", "-T", "0.2", "--snapshots", "1", "--seed", "3"]
    result = runner.invoke(app, args)
    assert result.exit_code == 0
    rows = read_csv(out / "trajectory.csv")
    assert len(rows) == 2
    assert all(math.isfinite(float(r["holder_lhs"])) for r in rows)

def test_construction_background_must_be_a_member(config_file, tmp_path, caplog):
    """Test that the construction check rejects an unknown background member."""
    config_file.write_text(config_file.read_text() + "family.kind = maxwellian\nfamily.temperature = 1\n")
    args = ["verify", "-c", str(config_file), "-o", str(tmp_path / "out"), "--check", "construction"]
    result = runner.invoke(app, args + ["--background", "bi_maxwellian-sep4"])
    assert result.exit_code == 1
    assert "verify.background" in caplog.text
