import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ambit_field_engine import ambit_geometry, asymptotics_lab, field_engine, functionals
from ambit_field_engine.config import ExperimentConfig, config_hash
from ambit_field_engine.constants import FunctionalMode, ModelTest, StreamPurpose, Subcommand
from ambit_field_engine.exceptions import ConfigError, NumericalFailureError
from ambit_field_engine.kernels import vanishes_on_boundary
from ambit_field_engine.levy_basis import classify_regime, integrability_check
from ambit_field_engine.objects import AmbitSet, AtomRealization, Experiment, ModelReport
from ambit_field_engine.settings import EngineSettings
from ambit_field_engine.utils import provenance_line, replicate_stream, version_string, write_csv, write_json

logger = logging.getLogger(__name__)

SIMULATION_GROUP = 1 << 18
REPLICATE_COLUMNS = ("replicate", "p_x", "p_y", "r", "value", "normalizer", "N_theta", "seed")


@dataclass
class Outcome:
    """What a subcommand produced: its verdict, the files written and the JSON report."""

    subcommand: Subcommand
    passed: bool
    files: list[Path] = field(default_factory=list)
    report: dict = field(default_factory=dict)


class AmbitEngine:
    def __init__(
        self,
        config: ExperimentConfig,
        settings: EngineSettings | None = None,
        seed: int | None = None,
        threads: int | None = None,
        output_dir: Path | str | None = None,
    ):
        """Wire an experiment config, runtime settings and the lab together.

        Parameters
        ----------
        config : ExperimentConfig
            Validated experiment file
        settings : EngineSettings | None, optional
            Runtime settings, by default read from the environment
        seed : int | None, optional
            Overrides the seed of the config, by default None
        threads : int | None, optional
            Worker threads; ``AMBIT_THREADS`` takes precedence, by default 1
        output_dir : Path | str | None, optional
            Where outputs go, by default ``settings.output_dir``
        """
        self.config = config
        self.settings = settings or EngineSettings()
        self.seed = seed
        self.threads = self.settings.resolve_threads(threads)
        self.output_dir = Path(output_dir) if output_dir is not None else self.settings.output_dir
        self.config_hash = config_hash(config)
        self.version = version_string()
        self._experiment: Experiment | None = None

    def __enter__(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Engine ready: config {self.config_hash[:12]}, {self.threads} thread(s), output {self.output_dir}")
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        # kernel/set integrals are cached per process
        field_engine._drift_integral.cache_clear()
        if exc_type is not None:
            logger.error(f"Run aborted by {exc_type.__name__}: {exc_value}")
        return False

    @property
    def experiment(self) -> Experiment:
        if self._experiment is None:
            self._experiment = self.config.build(self.seed)
        return self._experiment

    @property
    def provenance(self) -> str:
        return provenance_line(self.config_hash, self.version)

    def _csv(self, name: str, header, rows) -> Path:
        return write_csv(self.output_dir / name, header, rows, self.provenance)

    def _json(self, name: str, payload: dict) -> Path:
        return write_json(self.output_dir / name, payload, self.config_hash, self.version)

    def run_subcommand(self, name: Subcommand | str, dump: Path | None = None, replay: Path | None = None) -> Outcome:
        subcommand = Subcommand(name)
        logger.info(f"Running {subcommand}")
        match subcommand:
            case Subcommand.GEOMETRY:
                return self.geometry()
            case Subcommand.SIMULATE:
                return self.simulate(dump, replay)
            case Subcommand.FLUX_SCAN:
                return self.flux_scan()
            case Subcommand.LIMIT_CHECK:
                return self.limit_check()
            case Subcommand.MODEL_DEMO:
                return self.model_demo()
            case Subcommand.DECOMPOSITION_AUDIT:
                return self.decomposition_audit()

    def geometry(self) -> Outcome:
        """Area, H^1, diameter, boundary regularity, parallel-set areas and Minkowski content."""
        ambit_set = AmbitSet(self.config.ambit_set.build())
        regularity = ambit_geometry.boundary_regularity(ambit_set)
        try:
            content = ambit_geometry.minkowski_content(ambit_set)
        except NumericalFailureError as e:
            logger.warning(f"Minkowski content did not settle; reporting the last estimate ({e})")
            content = e.partial_estimate
        report = {
            "set": ambit_set.to_dict(),
            "area": ambit_set.area,
            "perimeter": ambit_set.perimeter,
            "diameter": ambit_set.diameter,
            "bbox": list(ambit_set.bbox),
            "regularity": regularity.to_dict(),
            "minkowski_content": content,
            "twice_perimeter": 2.0 * ambit_set.perimeter,
            "parallel_set_areas": [
                {"r": r, "area": ambit_geometry.parallel_set_area(ambit_set, r)} for r in self.config.r_grid
            ],
        }
        files = [self._json("geometry.json", report)]
        return Outcome(Subcommand.GEOMETRY, regularity.passed, files, report)

    def simulate(self, dump: Path | None = None, replay: Path | None = None) -> Outcome:
        """One realization: the field at the points and both functionals on the r-grid.

        ``replay`` reads a realization dump instead of sampling; ``dump`` writes one.
        """
        experiment = self.experiment
        points = np.asarray(experiment.points, dtype=float)
        if replay is not None:
            realization = field_engine.load_realization(replay)
            if realization.triplet != experiment.triplet:
                raise ConfigError(f"replay: {replay} was sampled from a different triplet")
        else:
            window = field_engine.window_for(experiment.ambit_set, points, experiment.r_grid[0], experiment.h)
            rng = replicate_stream(experiment.seed, 0, StreamPurpose.NOISE, group=SIMULATION_GROUP)
            realization = field_engine.realize(experiment.triplet, window, experiment.h, rng, experiment.allow_approximation)
        if dump is not None:
            field_engine.save_realization(dump, realization)

        vol = None
        if experiment.volatility is not None:
            vol_rng = replicate_stream(experiment.seed, 0, StreamPurpose.VOLATILITY, group=SIMULATION_GROUP)
            vol = field_engine.realize_volatility(experiment.volatility, realization.window, experiment.h, vol_rng)
        values = field_engine.eval_field_modulated(realization, experiment.kernel, experiment.ambit_set, vol, points)

        rows = []
        for r in experiment.r_grid:
            for p in points:
                pair = [self._functional(realization, p, r, mode, vol) for mode in FunctionalMode]
                rows.append((r, p[0], p[1], *pair))
        files = [
            self._csv("field.csv", ("x", "y", "field_x", "field_y"), [(*p, *v) for p, v in zip(points, values)]),
            self._csv("functionals.csv", ("r", "x", "y", "flux", "circulation"), rows),
        ]
        nonzero = not vanishes_on_boundary(experiment.kernel, experiment.ambit_set)
        report = {
            "realization": realization.header(),
            "integrability": integrability_check(experiment.triplet, experiment.kernel, experiment.ambit_set).to_dict(),
            "regime": classify_regime(experiment.triplet, nonzero).to_dict(),
        }
        files.append(self._json("report.json", report))
        return Outcome(Subcommand.SIMULATE, True, files, report)

    def _functional(self, realization, p, r: float, mode: FunctionalMode, vol) -> float:
        experiment = self.experiment
        if isinstance(realization, AtomRealization):
            return functionals.line_functional(
                realization, experiment.kernel, experiment.ambit_set, p, r, experiment.n_theta, mode, vol
            )
        return functionals.cell_functional(
            realization, experiment.kernel, experiment.ambit_set, p, r, experiment.n_theta, mode, vol
        )

    def flux_scan(self) -> Outcome:
        report = asymptotics_lab.rate_scan(self.experiment, self.threads, self.settings.chunk_size)
        files = [
            self._csv("rates.csv", ("r", "replicate", "value", "normalized_value"), report.rows()),
            self._csv("replicates.csv", REPLICATE_COLUMNS, report.replicate_rows()),
            self._json("report.json", report.to_dict()),
        ]
        return Outcome(Subcommand.FLUX_SCAN, report.passed, files, report.to_dict())

    def limit_check(self) -> Outcome:
        report = asymptotics_lab.limit_distribution_test(self.experiment, None, self.threads, self.settings.chunk_size)
        files = [
            self._csv("cf.csv", ("z", "cf_emp_re", "cf_emp_im", "cf_oracle_re", "cf_oracle_im"), report.rows()),
            self._json("report.json", report.to_dict()),
        ]
        return Outcome(Subcommand.LIMIT_CHECK, report.passed, files, report.to_dict())

    def model_demo(self, test: ModelTest | None = None) -> Outcome:
        test = ModelTest(test or self.config.model.test)
        match test:
            case ModelTest.INCOMPRESSIBILITY:
                report = asymptotics_lab.incompressibility_test(self.experiment, self.threads, self.settings.chunk_size)
            case ModelTest.IRROTATIONALITY:
                report = asymptotics_lab.irrotationality_test(self.experiment, self.threads, self.settings.chunk_size)
            case ModelTest.ISOTROPY:
                report = asymptotics_lab.isotropy_test(self.experiment, self.threads, self.settings.chunk_size)
        payload = {"test": test.value, **report.to_dict()}
        files = [self._json(f"{test.value}.json", payload)]
        if isinstance(report, ModelReport):
            rows = zip(report.r_grid, report.vanishing_medians, report.reference_medians)
            files.append(self._csv(f"{test.value}.csv", ("r", "vanishing_median", "reference_median"), rows))
        return Outcome(Subcommand.MODEL_DEMO, report.passed, files, payload)

    def decomposition_audit(self) -> Outcome:
        report = asymptotics_lab.decomposition_audit(self.experiment, self.threads)
        rows = zip(report.r_grid, report.max_residual, report.sigma_relative_error, report.boundary_over_r2)
        files = [
            self._csv("audit.csv", ("r", "max_residual", "sigma_relative_error", "boundary_over_r2"), rows),
            self._json("report.json", report.to_dict()),
        ]
        return Outcome(Subcommand.DECOMPOSITION_AUDIT, report.passed, files, report.to_dict())
