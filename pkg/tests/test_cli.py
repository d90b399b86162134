import json

import pytest

from ambit_field_engine.cli import run
from ambit_field_engine.constants import ExitCode


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch, tmp_path):
    for name in ("AMBIT_THREADS", "AMBIT_OUTPUT_DIR", "AMBIT_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    # keeps a stray .env out of the settings
    monkeypatch.chdir(tmp_path)


def test_geometry_needs_no_seed(write_config, cp_config, tmp_path):
    del cp_config["seed"]
    out = tmp_path / "geometry"
    assert run(["geometry", "--config", str(write_config(cp_config)), "--output", str(out)]) == ExitCode.OK
    report = json.loads((out / "geometry.json").read_text())
    assert report["regularity"]["passed"]
    assert report["twice_perimeter"] == pytest.approx(2 * 3.141592653589793)
    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["argv"][0] == "geometry"
    assert metadata["config_sha256"] == report["provenance"]["config_sha256"]


def test_stochastic_commands_need_a_seed(write_config, cp_config, tmp_path):
    del cp_config["seed"]
    assert run(["simulate", "--config", str(write_config(cp_config)), "--output", str(tmp_path)]) == ExitCode.CONFIG_ERROR


def test_invalid_config(write_config, cp_config, tmp_path):
    path = write_config({**cp_config, "replicates": 5})
    assert run(["simulate", "--config", str(path), "--output", str(tmp_path)]) == ExitCode.CONFIG_ERROR


@pytest.mark.parametrize("argv", [["dance", "--config", "x.json"], ["simulate"]], ids=["subcommand", "no-config"])
def test_bad_arguments(argv):
    assert run(argv) == ExitCode.CONFIG_ERROR


def test_simulate_outputs(write_config, cp_config, tmp_path):
    out = tmp_path / "sim"
    assert run(["simulate", "--config", str(write_config(cp_config)), "--output", str(out), "--seed", "3"]) == ExitCode.OK
    lines = (out / "functionals.csv").read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "r,x,y,flux,circulation"
    # three radii at two points
    assert len(lines) == 2 + 6
    assert (out / "field.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["regime"]["tag"] == "Classical"


def test_simulate_is_reproducible(write_config, cp_config, tmp_path):
    path = str(write_config(cp_config))
    assert run(["simulate", "--config", path, "--output", str(tmp_path / "a")]) == ExitCode.OK
    assert run(["simulate", "--config", path, "--output", str(tmp_path / "b"), "--threads", "4"]) == ExitCode.OK
    for name in ("field.csv", "functionals.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_dir_from_environment(write_config, cp_config, tmp_path, monkeypatch):
    monkeypatch.setenv("AMBIT_OUTPUT_DIR", str(tmp_path / "env-out"))
    assert run(["geometry", "--config", str(write_config(cp_config))]) == ExitCode.OK
    assert (tmp_path / "env-out" / "geometry.json").exists()


def test_failing_verdict(write_config, gaussian_config, tmp_path):
    path = write_config({**gaussian_config, "claimed_exponent": 3.0})
    assert run(["flux-scan", "--config", str(path), "--output", str(tmp_path)]) == ExitCode.VERDICT_FAILURE
    assert json.loads((tmp_path / "report.json").read_text())["passed"] is False


def test_isotropy_on_a_square(write_config, cp_config, tmp_path):
    square = {"kind": "polygon", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}
    path = write_config({**cp_config, "set": square})
    argv = ["model-demo", "--config", str(path), "--output", str(tmp_path), "--test", "isotropy"]
    assert run(argv) == ExitCode.CONFIG_ERROR


def test_audit_rejects_gaussian_basis(write_config, gaussian_config, tmp_path):
    path = write_config(gaussian_config)
    assert run(["decomposition-audit", "--config", str(path), "--output", str(tmp_path)]) == ExitCode.CONFIG_ERROR


def test_audit_passes(write_config, cp_config, tmp_path):
    assert run(["decomposition-audit", "--config", str(write_config(cp_config)), "--output", str(tmp_path)]) == ExitCode.OK
    lines = (tmp_path / "audit.csv").read_text().splitlines()
    assert lines[1] == "r,max_residual,sigma_relative_error,boundary_over_r2"


def test_flux_scan_writes_replicate_rows(write_config, gaussian_config, tmp_path):
    path = write_config({**gaussian_config, "points": [[0.0, 0.0], [0.2, -0.1]]})
    assert run(["flux-scan", "--config", str(path), "--output", str(tmp_path)]) in (ExitCode.OK, ExitCode.VERDICT_FAILURE)
    lines = (tmp_path / "replicates.csv").read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "replicate,p_x,p_y,r,value,normalizer,N_theta,seed"
    # three radii x 200 replicates
    assert len(lines) == 2 + 3 * 200
    first, second = lines[2].split(","), lines[3].split(",")
    assert (first[0], float(first[1]), float(first[3])) == ("0", 0.0, 0.1)
    assert (second[0], float(second[1]), float(second[2])) == ("1", 0.2, -0.1)
    assert first[6:] == ["256", "5"]
    regime = json.loads((tmp_path / "report.json").read_text())["regime"]
    assert float(first[5]) == pytest.approx(regime["normalizer_constant"] * 0.1**1.5)


def test_domain_errors_exit_as_configuration_errors(write_config, gaussian_config, tmp_path):
    kernel = {"kind": "isotropic", "profile": {"kind": "power", "p": -3.0}}
    path = write_config({**gaussian_config, "kernel": kernel})
    assert run(["flux-scan", "--config", str(path), "--output", str(tmp_path)]) == ExitCode.CONFIG_ERROR
    assert not (tmp_path / "report.json").exists()
