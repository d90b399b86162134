import json

import numpy as np
import pytest
from pydantic_settings import BaseSettings, SettingsConfigDict

from ambit_field_engine.objects import AmbitSet, ConvexPolygon, Disk
from ambit_field_engine.utils import stream


class LabTestConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env.test", extra="ignore", env_prefix="AMBIT_TEST_"
    )
    seed: int = 20240611
    replicates: int = 2000
    threads: int = 1


@pytest.fixture(scope="session")
def lab_config() -> LabTestConfig:
    return LabTestConfig()


@pytest.fixture(scope="session")
def seed(lab_config: LabTestConfig) -> int:
    return lab_config.seed


@pytest.fixture
def rng(seed: int) -> np.random.Generator:
    return stream(seed, 0)


@pytest.fixture(scope="session")
def unit_disk() -> AmbitSet:
    return AmbitSet(Disk((0.0, 0.0), 1.0))


@pytest.fixture(scope="session")
def unit_square() -> AmbitSet:
    return AmbitSet(ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))))


@pytest.fixture
def write_config(tmp_path):
    """Dump a config dict to ``tmp_path/<name>`` and return its path."""

    def _write(payload: dict, name: str = "experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def cp_config() -> dict:
    """Compound Poisson basis with jumps of size 2, so the drift density is zero."""
    return {
        "triplet": {"gamma": 0.0, "nu": {"kind": "cp", "rate": 5.0, "jumps": {"law": "constant", "value": 2.0}}},
        "kernel": {"kind": "polynomial", "cx": [[0.0, 2.0], [1.0, 0.0]], "cy": [[0.0, 1.0], [0.5, 0.0]]},
        "set": {"kind": "disk", "center": [0.0, 0.0], "radius": 0.5},
        "points": [[0.0, 0.0], [0.1, 0.1]],
        "r_grid": [0.04, 0.02, 0.01],
        "replicates": 100,
        "seed": 11,
    }


@pytest.fixture
def gaussian_config() -> dict:
    return {
        "triplet": {"gamma": 0.0, "b": 1.0},
        "kernel": {"kind": "polynomial", "cx": [[1.0]], "cy": [[0.0]]},
        "set": {"kind": "disk", "center": [0.0, 0.0], "radius": 0.3},
        "r_grid": [0.1, 0.07, 0.05],
        "replicates": 200,
        "seed": 5,
    }

