import pytest

from ambit_field_engine.config import parse_config
from ambit_field_engine.constants import ModelTest, Subcommand
from ambit_field_engine.engine import AmbitEngine
from ambit_field_engine.exceptions import ConfigError
from ambit_field_engine.settings import EngineSettings


@pytest.fixture
def settings(tmp_path) -> EngineSettings:
    return EngineSettings(_env_file=None, output_dir=tmp_path / "results")


def test_context_creates_the_output_dir(cp_config, settings):
    with AmbitEngine(parse_config(cp_config), settings) as engine:
        assert engine.output_dir.is_dir()
        assert engine.experiment.seed == 11
        assert engine.provenance.startswith(f"# config_sha256={engine.config_hash}")


class TestSettings:
    def test_environment_threads_win(self, monkeypatch):
        monkeypatch.setenv("AMBIT_THREADS", "3")
        assert EngineSettings(_env_file=None).resolve_threads(8) == 3

    def test_flag_without_environment(self, monkeypatch):
        monkeypatch.delenv("AMBIT_THREADS", raising=False)
        settings = EngineSettings(_env_file=None)
        assert settings.resolve_threads(4) == 4
        assert settings.resolve_threads(None) == 1


class TestSimulate:
    def test_dump_and_replay(self, cp_config, settings, tmp_path):
        dump = tmp_path / "realization.npz"
        with AmbitEngine(parse_config(cp_config), settings, output_dir=tmp_path / "first") as engine:
            engine.run_subcommand(Subcommand.SIMULATE, dump=dump)
        with AmbitEngine(parse_config(cp_config), settings, seed=99, output_dir=tmp_path / "second") as engine:
            outcome = engine.run_subcommand("simulate", replay=dump)
        assert outcome.passed
        first = (tmp_path / "first" / "functionals.csv").read_bytes()
        assert (tmp_path / "second" / "functionals.csv").read_bytes().splitlines()[1:] == first.splitlines()[1:]

    def test_replay_needs_the_same_triplet(self, cp_config, settings, tmp_path):
        dump = tmp_path / "realization.npz"
        with AmbitEngine(parse_config(cp_config), settings) as engine:
            engine.simulate(dump=dump)
        other = {**cp_config, "triplet": {"nu": {"kind": "cp", "rate": 1.0, "jumps": {"law": "constant", "value": 2.0}}}}
        with AmbitEngine(parse_config(other), settings) as engine:
            with pytest.raises(ConfigError, match="different triplet"):
                engine.simulate(replay=dump)


def test_flux_scan_writes_every_replicate(gaussian_config, settings):
    with AmbitEngine(parse_config(gaussian_config), settings) as engine:
        outcome = engine.flux_scan()
    rates = engine.output_dir / "rates.csv"
    assert rates in outcome.files
    assert engine.output_dir / "replicates.csv" in outcome.files
    # provenance, header, then 3 radii x 200 replicates
    assert len(rates.read_text().splitlines()) == 2 + 3 * 200
    assert outcome.report["expected_exponent"] == 1.5


def test_model_demo_files(cp_config, settings):
    kernel = {"kind": "isotropic", "phi": 0.0, "profile": {"kind": "polynomial", "coeffs": [1.0]}}
    with AmbitEngine(parse_config({**cp_config, "kernel": kernel}), settings) as engine:
        outcome = engine.model_demo(ModelTest.IRROTATIONALITY)
    assert outcome.passed
    assert [path.name for path in outcome.files] == ["irrotationality.json", "irrotationality.csv"]
    assert outcome.report["test"] == "irrotationality"
