from .config import ExperimentConfig, load_config, parse_config
from .constants import FunctionalMode, Subcommand
from .engine import AmbitEngine
from .objects import AmbitSet, CharacteristicTriplet, Experiment
from .settings import EngineSettings
