"""Monte Carlo harness: rate scans, limit-law checks, the model battery and decomposition audits."""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, TypeVar

import numpy as np
from scipy import stats

from ambit_field_engine.ambit_geometry import as_ambit_set
from ambit_field_engine.constants import FunctionalMode, ModelTest, RegimeTag, ScaleStatistic, StreamPurpose
from ambit_field_engine.exceptions import (
    ConfigError,
    DomainError,
    InvalidParameterError,
    UnsupportedLawError,
)
from ambit_field_engine.field_engine import realize, realize_volatility, window_for
from ambit_field_engine.functionals import (
    cf_distance,
    cf_limit_exact,
    cf_sigma_exact,
    empirical_cf,
    flux_decomposition,
    functional_weights,
    limit_omega,
    limit_sigma,
    line_functional,
    simulate_limit_field,
)
from ambit_field_engine.kernels import check_kernel_on_set, eval_F, vanishes_on_boundary
from ambit_field_engine.levy_basis import (
    classify_regime,
    integrability_check,
    linear_form_law,
    sample_cells,
    sample_linear_form,
)
from ambit_field_engine.objects import (
    AuditReport,
    CFReport,
    Experiment,
    IndependentGridVolatility,
    IsotropyReport,
    LatticeVolatility,
    ModelReport,
    RateReport,
    Regime,
)
from ambit_field_engine.utils import replicate_stream

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_TOLERANCE = 0.1
STABLE_TOLERANCE = 0.15
CF_SIGMA_BANDS = 3.0
WEIGHT_CUTOFF = 1e-13
LAB_DISK_RULE = (4, 8)
RESIDUAL_TOLERANCE = 1e-10
SIGMA_TOLERANCE = 0.02
BOUNDARY_GROWTH = 2.0
ISOTROPY_GROUP = 1 << 16
AUDIT_GROUP = 1 << 17
LIMIT_GROUP = 1 << 19
DEFAULT_MESH_ARCS = 1024


def run_replicates(task: Callable[[int], T], count: int, threads: int = 1) -> list[T]:
    """Run ``task(0), ..., task(count - 1)`` on a thread pool; results come back in index order."""
    if threads <= 1:
        return [task(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(count)))


def scale_statistic(values, statistic: ScaleStatistic) -> float:
    """IQR, median absolute value or standard deviation of the samples."""
    values = np.asarray(values, dtype=float)
    match ScaleStatistic(statistic):
        case ScaleStatistic.IQR:
            q25, q75 = np.percentile(values, [25.0, 75.0])
            return float(q75 - q25)
        case ScaleStatistic.MEDIAN_ABS:
            return float(np.median(np.abs(values)))
        case ScaleStatistic.STD:
            return float(np.std(values, ddof=1))


def _group(r_index: int, mode: FunctionalMode) -> int:
    return 2 * r_index + (0 if FunctionalMode(mode) == FunctionalMode.FLUX else 1)


@dataclass
class FunctionalSampler:
    """Draws of the flux or circulation, one fresh basis realization per replicate.

    Compound Poisson and deterministic bases are realized as atoms and
    the functional is taken literally on the circle. Every other law is
    discretized on cells of side ``experiment.h`` and the functional is drawn
    as the linear form ``sum_c g(c) V(c) L(c)`` over the cells with non-zero
    weight, which is exact in law for the cell model.
    """

    experiment: Experiment
    threads: int = 1
    chunk_size: int = 1 << 20
    _plans: dict = field(default_factory=dict, init=False, repr=False)

    @cached_property
    def regime(self) -> Regime:
        experiment = self.experiment
        nonzero = not vanishes_on_boundary(experiment.kernel, experiment.ambit_set)
        regime = classify_regime(experiment.triplet, nonzero)
        logger.info(f"Regime {regime.tag} with rate exponent {regime.rate_exponent:.4g}")
        return regime

    @property
    def uses_atoms(self) -> bool:
        return self.experiment.triplet.has_exact_atoms

    def point(self, replicate: int) -> np.ndarray:
        points = self.experiment.points
        return np.asarray(points[replicate % len(points)], dtype=float)

    def _cell_plan(self, p: tuple[float, float], r: float, mode: FunctionalMode):
        key = (p, r, FunctionalMode(mode))
        if key in self._plans:
            return self._plans[key]
        experiment = self.experiment
        ambit_set, h = experiment.ambit_set, experiment.h
        window = window_for(ambit_set, [p], r, h)
        x0, y0, x1, y1 = ambit_set.bbox
        nx, ny = window.shape(h)
        ax = window.x0 + (np.arange(nx) + 0.5) * h
        ay = window.y0 + (np.arange(ny) + 0.5) * h
        ax = ax[(ax >= x0 + p[0] - r - h) & (ax <= x1 + p[0] + r + h)]
        ay = ay[(ay >= y0 + p[1] - r - h) & (ay <= y1 + p[1] + r + h)]
        gx, gy = np.meshgrid(ax, ay, indexing="ij")
        centers = np.column_stack((gx.ravel(), gy.ravel()))
        weights = functional_weights(
            experiment.kernel, ambit_set, p, r, centers, experiment.n_theta, mode, LAB_DISK_RULE
        )
        largest = float(np.max(np.abs(weights))) if weights.size else 0.0
        keep = np.abs(weights) > WEIGHT_CUTOFF * largest if largest > 0 else np.zeros(weights.size, dtype=bool)
        centers, weights = centers[keep], weights[keep]
        if isinstance(experiment.volatility, LatticeVolatility):
            weights = weights * experiment.volatility.interpolator()(centers)
        elif experiment.volatility is not None and not isinstance(experiment.volatility, IndependentGridVolatility):
            weights = weights * experiment.volatility.c
        logger.debug(f"Cell plan at r={r:.4g}: {weights.size} of {keep.size} cells carry weight")
        law = None
        if not isinstance(experiment.volatility, IndependentGridVolatility):
            law = linear_form_law(experiment.triplet, h * h, weights)
        self._plans[key] = (weights, law)
        return weights, law

    def _draw_cells(self, r: float, r_index: int, mode: FunctionalMode, count: int) -> np.ndarray:
        experiment = self.experiment
        group = _group(r_index, mode)

        def task(replicate: int) -> float:
            p = tuple(self.point(replicate).tolist())
            weights, law = self._cell_plan(p, r, mode)
            rng = replicate_stream(experiment.seed, replicate, StreamPurpose.NOISE, group=group)
            if law is not None:
                return float(law.sample(1, rng)[0])
            if isinstance(experiment.volatility, IndependentGridVolatility):
                vol_rng = replicate_stream(experiment.seed, replicate, StreamPurpose.VOLATILITY, group=group)
                weights = weights * vol_rng.uniform(experiment.volatility.low, experiment.volatility.high, weights.size)
            return float(
                sample_linear_form(
                    experiment.triplet,
                    experiment.h**2,
                    weights,
                    1,
                    rng,
                    experiment.allow_approximation,
                    self.chunk_size,
                )[0]
            )

        # plans are built before the pool starts so workers only read them
        for p in experiment.points[: min(count, len(experiment.points))]:
            self._cell_plan(p, r, mode)
        return np.asarray(run_replicates(task, count, self.threads))

    def _draw_atoms(self, r: float, r_index: int, mode: FunctionalMode, count: int) -> np.ndarray:
        experiment = self.experiment
        group = _group(r_index, mode)

        def task(replicate: int) -> float:
            p = self.point(replicate)
            window = window_for(experiment.ambit_set, [p], r, experiment.h)
            rng = replicate_stream(experiment.seed, replicate, StreamPurpose.NOISE, group=group)
            realization = realize(experiment.triplet, window, experiment.h, rng)
            vol = None
            if experiment.volatility is not None:
                vol_rng = replicate_stream(experiment.seed, replicate, StreamPurpose.VOLATILITY, group=group)
                vol = realize_volatility(experiment.volatility, window, experiment.h, vol_rng)
            return line_functional(realization, experiment.kernel, experiment.ambit_set, p, r, experiment.n_theta, mode, vol)

        return np.asarray(run_replicates(task, count, self.threads))

    def samples(self, r_index: int, mode: FunctionalMode | None = None, count: int | None = None) -> np.ndarray:
        """Raw functional values at ``r_grid[r_index]``, in replicate order."""
        experiment = self.experiment
        mode = FunctionalMode(mode or experiment.mode)
        count = count or experiment.replicates
        r = experiment.r_grid[r_index]
        draw = self._draw_atoms if self.uses_atoms else self._draw_cells
        return draw(r, r_index, mode, count)


def _require_integrable(experiment: Experiment):
    check_kernel_on_set(experiment.kernel, experiment.ambit_set)
    report = integrability_check(experiment.triplet, experiment.kernel, experiment.ambit_set)
    if not report:
        raise DomainError(f"Kernel is not integrable against the basis: {report.detail}")


def _tolerance(experiment: Experiment, regime: Regime) -> float:
    if experiment.tolerance is not None:
        return experiment.tolerance
    if regime.tag == RegimeTag.STABLE_ATTRACTOR:
        return STABLE_TOLERANCE
    return DEFAULT_TOLERANCE


def rate_scan(experiment: Experiment, threads: int = 1, chunk_size: int = 1 << 20) -> RateReport:
    """Fit the log-log slope of the functional's scale against ``r`` and compare it with the regime.

    Raises
    ------
    UnclassifiableRegimeError
        If the basis has no asymptotic regime
    DomainError
        If the kernel is not integrable against the basis
    """
    started = time.perf_counter()
    _require_integrable(experiment)
    sampler = FunctionalSampler(experiment, threads, chunk_size)
    regime = sampler.regime
    samples, scales = {}, []
    for r_index, r in enumerate(experiment.r_grid):
        values = sampler.samples(r_index)
        samples[r] = values
        scales.append(scale_statistic(values, experiment.statistic))
        logger.info(f"r={r:.4g}: {experiment.statistic} scale {scales[-1]:.6g}")

    log_r = np.log(np.asarray(experiment.r_grid))
    with np.errstate(divide="ignore"):
        log_scale = np.log(np.asarray(scales))
    if not np.all(np.isfinite(log_scale)):
        raise InvalidParameterError(f"Scale statistic vanished on the r-grid: {scales}; the functional is degenerate")
    fit = stats.linregress(log_r, log_scale)
    half_width = float(stats.t.ppf(0.975, len(scales) - 2) * fit.stderr) if len(scales) > 2 else math.inf
    expected = experiment.claimed_exponent if experiment.claimed_exponent is not None else regime.rate_exponent
    tolerance = _tolerance(experiment, regime)
    passed = abs(fit.slope - expected) <= tolerance
    logger.info(f"Slope {fit.slope:.4f} (+/- {half_width:.3g}) against {expected:.4f}: {'pass' if passed else 'FAIL'}")
    return RateReport(
        mode=experiment.mode.value,
        statistic=experiment.statistic.value,
        regime=regime,
        r_grid=experiment.r_grid,
        scales=tuple(scales),
        slope=float(fit.slope),
        slope_ci=(float(fit.slope) - half_width, float(fit.slope) + half_width),
        intercept=float(fit.intercept),
        expected_exponent=float(expected),
        tolerance=tolerance,
        passed=bool(passed),
        n_replicates=experiment.replicates,
        runtime=time.perf_counter() - started,
        samples=samples,
        points=experiment.points,
        n_theta=experiment.n_theta,
        seed=experiment.seed,
    )


def limit_cumulant(experiment: Experiment, regime: Regime, z) -> np.ndarray:
    """Cumulant of the limit law of the normalized functional under ``regime``."""
    z = np.asarray(z, dtype=float)
    kernel, ambit_set, mode = experiment.kernel, experiment.ambit_set, experiment.mode
    match regime.tag:
        case RegimeTag.CLASSICAL:
            return cf_sigma_exact(experiment.triplet, kernel, ambit_set, z, mode, regime.gamma_d)
        case RegimeTag.STABLE_ATTRACTOR if regime.beta == 1.0:
            return stable_rate_r2_composition(experiment, z, regime)
        case _:
            return cf_limit_exact(regime.seed, kernel, ambit_set, z, mode)


def stable_rate_r2_composition(experiment: Experiment, z, regime: Regime | None = None) -> np.ndarray:
    """Cumulant of ``sigma + D_1`` for a 1-stable attractor normalized by ``pi r^2``.

    The interior term is the classical limit of ``L - gamma_hat Leb`` and the
    boundary term the 1-stable line integral; their cumulants add.
    """
    if regime is None:
        nonzero = not vanishes_on_boundary(experiment.kernel, experiment.ambit_set)
        regime = classify_regime(experiment.triplet, nonzero)
    if regime.tag != RegimeTag.STABLE_ATTRACTOR or regime.beta != 1.0:
        raise InvalidParameterError(f"The r^2 composition applies to 1-stable attractors, got {regime.tag} beta={regime.beta}")
    kernel, ambit_set, mode = experiment.kernel, experiment.ambit_set, experiment.mode
    interior = cf_sigma_exact(experiment.triplet, kernel, ambit_set, z, mode, regime.gamma_d)
    boundary = cf_limit_exact(regime.seed, kernel, ambit_set, z, mode)
    return np.asarray(interior) + np.asarray(boundary)


def _limit_field_draws(experiment: Experiment, regime: Regime) -> np.ndarray:
    """Direct draws of the boundary limit field at the first point, on its own stream."""
    ambit_set = experiment.ambit_set
    mesh = experiment.mesh or ambit_set.perimeter / DEFAULT_MESH_ARCS
    rng = replicate_stream(experiment.seed, 0, StreamPurpose.LIMIT_FIELD, group=LIMIT_GROUP)
    draws = simulate_limit_field(
        ambit_set,
        experiment.kernel,
        regime.seed,
        mesh,
        rng,
        [experiment.points[0]],
        experiment.mode,
        experiment.replicates,
    )
    return draws[:, 0]


def limit_distribution_test(
    experiment: Experiment,
    z_grid=None,
    threads: int = 1,
    chunk_size: int = 1 << 20,
) -> CFReport:
    """Compare the empirical CF of the normalized functional at the smallest ``r`` with the limit CF.

    Passes when the sup distance is below ``3 / sqrt(M)`` plus the discretization allowance.
    """
    _require_integrable(experiment)
    sampler = FunctionalSampler(experiment, threads, chunk_size)
    regime = sampler.regime
    z = np.asarray(experiment.z_grid if z_grid is None else z_grid, dtype=float)
    r_index = len(experiment.r_grid) - 1
    r = experiment.r_grid[r_index]
    normalized = sampler.samples(r_index) / regime.normalizer(r)
    empirical = empirical_cf(normalized, z)
    oracle = np.exp(limit_cumulant(experiment, regime, z))
    distance = cf_distance(empirical, oracle)
    threshold = CF_SIGMA_BANDS / math.sqrt(experiment.replicates) + experiment.cf_allowance
    limit_distance = None
    if regime.has_boundary_limit and not regime.has_interior_limit:
        limit_distance = cf_distance(empirical_cf(_limit_field_draws(experiment, regime), z), oracle)
        logger.info(f"Simulated limit field CF distance {limit_distance:.4g}")
    logger.info(f"CF distance {distance:.4g} against threshold {threshold:.4g} at r={r:.4g}")
    return CFReport(
        r=r,
        z_grid=z,
        empirical=empirical,
        oracle=oracle,
        distance=distance,
        threshold=threshold,
        passed=distance <= threshold,
        n_replicates=experiment.replicates,
        regime=regime,
        limit_distance=limit_distance,
    )


def _unit_scale(experiment: Experiment) -> float:
    """``median |2 L(R)|``, the scale of the basis divergence unit."""
    rng = replicate_stream(experiment.seed, 0, StreamPurpose.REFERENCE, group=0)
    draws = sample_cells(
        experiment.triplet,
        experiment.ambit_set.area,
        experiment.replicates,
        rng,
        experiment.allow_approximation,
    )
    return float(np.median(np.abs(2.0 * draws)))


def _model_test(experiment: Experiment, test: ModelTest, threads: int, chunk_size: int) -> ModelReport:
    _require_integrable(experiment)
    vanishing, reference = (
        (FunctionalMode.FLUX, FunctionalMode.CIRCULATION)
        if test == ModelTest.INCOMPRESSIBILITY
        else (FunctionalMode.CIRCULATION, FunctionalMode.FLUX)
    )
    sampler = FunctionalSampler(experiment, threads, chunk_size)
    vanishing_medians, reference_medians = [], []
    for r_index, r in enumerate(experiment.r_grid):
        area = math.pi * r * r
        vanishing_medians.append(float(np.median(np.abs(sampler.samples(r_index, vanishing) / area))))
        reference_medians.append(float(np.median(np.abs(sampler.samples(r_index, reference) / area))))
        logger.info(f"r={r:.4g}: median |{vanishing}| {vanishing_medians[-1]:.4g}, |{reference}| {reference_medians[-1]:.4g}")

    unit = _unit_scale(experiment)
    reference_scale = reference_medians[-1] if reference_medians[-1] > 1e-9 * max(unit, 1e-300) else unit
    final_ratio = vanishing_medians[-1] / reference_scale if reference_scale > 0 else math.inf
    decreasing = vanishing_medians[-1] <= vanishing_medians[0] * (1.0 + 1e-9) + 1e-300
    passed = final_ratio < experiment.model.threshold and decreasing
    logger.info(f"{test}: final ratio {final_ratio:.4g} against {experiment.model.threshold}: {'pass' if passed else 'FAIL'}")
    return ModelReport(
        test=ModelTest(test).value,
        r_grid=experiment.r_grid,
        vanishing_medians=tuple(vanishing_medians),
        reference_medians=tuple(reference_medians),
        reference_scale=reference_scale,
        final_ratio=final_ratio,
        threshold=experiment.model.threshold,
        passed=bool(passed),
        n_replicates=experiment.replicates,
    )


def incompressibility_test(experiment: Experiment, threads: int = 1, chunk_size: int = 1 << 20) -> ModelReport:
    """``(pi r^2)^-1`` flux shrinks to a small fraction of the reference scale.

    The reference is the normalized circulation scale when it is non-zero,
    otherwise ``median |2 L(R)|``.
    """
    return _model_test(experiment, ModelTest.INCOMPRESSIBILITY, threads, chunk_size)


def irrotationality_test(experiment: Experiment, threads: int = 1, chunk_size: int = 1 << 20) -> ModelReport:
    """Mirror of :func:`incompressibility_test`: the circulation vanishes against the flux."""
    return _model_test(experiment, ModelTest.IRROTATIONALITY, threads, chunk_size)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _masked_kernel(experiment: Experiment, p: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Rows ``F(p - c) 1_R(c - p)``."""
    out = np.zeros_like(centers)
    inside = np.asarray(experiment.ambit_set.contains(centers - p))
    if inside.any():
        out[inside] = eval_F(experiment.kernel, p - centers[inside])
    return out


def _moment_z_scores(first: np.ndarray, second: np.ndarray):
    """z-scores of the mean and covariance differences of two independent samples of 2-vectors."""

    def moments(sample):
        mean = sample.mean(axis=0)
        centered = sample - mean
        products = np.stack([centered[:, i] * centered[:, j] for i, j in ((0, 0), (0, 1), (1, 1))], axis=1)
        return (
            mean,
            sample.var(axis=0, ddof=1) / sample.shape[0],
            products.mean(axis=0),
            products.var(axis=0, ddof=1) / sample.shape[0],
        )

    m1, v1, c1, s1 = moments(first)
    m2, v2, c2, s2 = moments(second)
    diffs = np.concatenate((m1 - m2, c1 - c2))
    spread = np.sqrt(np.concatenate((v1 + v2, s1 + s2)))
    z = np.divide(np.abs(diffs), spread, out=np.zeros_like(diffs), where=spread > 0)
    z[(spread == 0) & (diffs != 0)] = math.inf
    return (m1, c1), (m2, c2), float(z.max())


def isotropy_test(experiment: Experiment, threads: int = 1, chunk_size: int = 1 << 20) -> IsotropyReport:
    """Compare increments ``X(p + p0) - X(p)`` with their rotations ``R^-1 [X(R(p + p0)) - X(R p)]``.

    The two samples come from independent realizations on cells of side
    ``model.cell_size``; means and covariances must agree within ``model.band``
    Monte Carlo standard errors.

    Raises
    ------
    ConfigError
        For a non-isotropic set, unless the run is a declared negative control
    """
    model = experiment.model
    ambit_set = as_ambit_set(experiment.ambit_set)
    if not ambit_set.is_isotropic and not model.negative_control:
        raise ConfigError(f"Isotropy needs a disk or annulus ambit set, got {ambit_set.spec.kind}")
    if isinstance(experiment.volatility, LatticeVolatility):
        raise ConfigError("Isotropy needs a stationary volatility")
    check_kernel_on_set(experiment.kernel, ambit_set)

    h = model.cell_size
    rotation = _rotation(model.theta)
    p = np.asarray(experiment.points[0], dtype=float)
    p_shifted = p + np.asarray(model.offset)
    anchors = np.vstack((p, p_shifted, rotation @ p, rotation @ p_shifted))
    window = window_for(ambit_set, anchors, 0.0, h)
    nx, ny = window.shape(h)
    gx, gy = np.meshgrid(window.x0 + (np.arange(nx) + 0.5) * h, window.y0 + (np.arange(ny) + 0.5) * h, indexing="ij")
    centers = np.column_stack((gx.ravel(), gy.ravel()))
    increment = _masked_kernel(experiment, p_shifted, centers) - _masked_kernel(experiment, p, centers)
    rotated = (
        _masked_kernel(experiment, rotation @ p_shifted, centers) - _masked_kernel(experiment, rotation @ p, centers)
    ) @ rotation
    support = np.any(increment != 0, axis=1) | np.any(rotated != 0, axis=1)
    increment, rotated = increment[support], rotated[support]
    logger.debug(f"Isotropy weights on {int(support.sum())} cells of side {h}")

    rows = max(1, chunk_size // max(1, increment.shape[0]))
    n_chunks = math.ceil(experiment.replicates / rows)

    def draw(weights: np.ndarray, purpose: StreamPurpose) -> np.ndarray:
        def task(chunk: int) -> np.ndarray:
            size = min(rows, experiment.replicates - chunk * rows)
            rng = replicate_stream(experiment.seed, chunk, purpose, group=ISOTROPY_GROUP)
            cells = sample_cells(experiment.triplet, h * h, (size, weights.shape[0]), rng, experiment.allow_approximation)
            if isinstance(experiment.volatility, IndependentGridVolatility):
                vol_rng = replicate_stream(experiment.seed, chunk, StreamPurpose.VOLATILITY, group=ISOTROPY_GROUP + int(purpose))
                cells = cells * vol_rng.uniform(experiment.volatility.low, experiment.volatility.high, cells.shape)
            elif experiment.volatility is not None:
                cells = cells * experiment.volatility.c
            return cells @ weights

        return np.vstack(run_replicates(task, n_chunks, threads))

    first = draw(increment, StreamPurpose.NOISE)
    second = draw(rotated, StreamPurpose.ROTATED)
    (mean, cov), (mean_rot, cov_rot), max_z = _moment_z_scores(first, second)
    passed = max_z <= model.band
    logger.info(f"Isotropy at theta={model.theta:.4g}: max z-score {max_z:.3g} against {model.band}: {'pass' if passed else 'FAIL'}")
    as_matrix = lambda c: ((float(c[0]), float(c[1])), (float(c[1]), float(c[2])))
    return IsotropyReport(
        theta=model.theta,
        offset=tuple(model.offset),
        mean=tuple(float(m) for m in mean),
        mean_rotated=tuple(float(m) for m in mean_rot),
        covariance=as_matrix(cov),
        covariance_rotated=as_matrix(cov_rot),
        max_z_score=max_z,
        band=model.band,
        passed=bool(passed),
        n_replicates=experiment.replicates,
    )


def boundary_verdict(r_grid, boundary_over_r2, kernel_vanishes: bool, growth: float = BOUNDARY_GROWTH) -> bool:
    """Whether ``|boundary| / r^2`` behaves as the classical split predicts across ``r_grid``.

    It may not grow by more than ``growth`` from the largest to the smallest
    radius. When the kernel vanishes on the boundary it must also shrink, to at
    most ``sqrt(r_min / r_max)`` times its first value; linear decay in ``r``
    reaches ``r_min / r_max``.
    """
    first, last = boundary_over_r2[0], boundary_over_r2[-1]
    bounded = last <= growth * first
    if not kernel_vanishes:
        return bool(bounded)
    shrink = math.sqrt(r_grid[-1] / r_grid[0])
    return bool(bounded and last <= shrink * first)


def decomposition_audit(
    experiment: Experiment,
    threads: int = 1,
    residual_tolerance: float = RESIDUAL_TOLERANCE,
    sigma_tolerance: float = SIGMA_TOLERANCE,
) -> AuditReport:
    """Trace the interior/boundary split of the functional across ``r`` on exact atom realizations.

    Per radius: the largest relative residual of ``total = interior + boundary``,
    the median relative error of ``interior / (pi r^2)`` against ``sigma`` of the
    basis itself, and the mean ``|boundary| / r^2``. The audit passes when the
    split is exact, the interior matches ``sigma`` at the smallest radius and
    the boundary term is ``O(r^2)``, shrinking further when the kernel vanishes
    on the boundary (see :func:`boundary_verdict`).

    Raises
    ------
    UnsupportedLawError
        If the basis is not compound Poisson without a Gaussian part
    """
    triplet = experiment.triplet
    if not triplet.has_exact_atoms or triplet.is_deterministic:
        raise UnsupportedLawError("The decomposition audit needs a compound Poisson basis without Gaussian part")
    kernel, ambit_set, mode = experiment.kernel, experiment.ambit_set, experiment.mode
    vanishes = vanishes_on_boundary(kernel, ambit_set)
    sampler = FunctionalSampler(experiment, threads)
    max_residuals, sigma_errors, boundary_ratios = [], [], []
    for r_index, r in enumerate(experiment.r_grid):

        def task(replicate: int):
            p = sampler.point(replicate)
            window = window_for(ambit_set, [p], r, experiment.h)
            rng = replicate_stream(experiment.seed, replicate, StreamPurpose.NOISE, group=AUDIT_GROUP + r_index)
            realization = realize(triplet, window, experiment.h, rng)
            parts = flux_decomposition(realization, kernel, ambit_set, p, r, experiment.n_theta, mode)
            classical = limit_sigma if mode == FunctionalMode.FLUX else limit_omega
            sigma = classical(realization, kernel, ambit_set, p, gamma_d=0.0)
            return parts.relative_residual, parts.interior / (math.pi * r * r), sigma, parts.boundary / (r * r)

        results = run_replicates(task, experiment.replicates, threads)
        residuals, interiors, sigmas, boundaries = (np.asarray(column) for column in zip(*results))
        relevant = np.abs(sigmas) > 1e-12
        errors = np.abs(interiors[relevant] - sigmas[relevant]) / np.abs(sigmas[relevant])
        max_residuals.append(float(residuals.max()))
        sigma_errors.append(float(np.median(errors)) if errors.size else 0.0)
        boundary_ratios.append(float(np.mean(np.abs(boundaries))))
        logger.info(
            f"r={r:.4g}: residual {max_residuals[-1]:.3g}, sigma error {sigma_errors[-1]:.3g}, "
            f"|boundary|/r^2 {boundary_ratios[-1]:.3g}"
        )

    passed = (
        max(max_residuals) < residual_tolerance
        and sigma_errors[-1] < sigma_tolerance
        and boundary_verdict(experiment.r_grid, boundary_ratios, vanishes)
    )
    return AuditReport(
        r_grid=experiment.r_grid,
        max_residual=tuple(max_residuals),
        sigma_relative_error=tuple(sigma_errors),
        boundary_over_r2=tuple(boundary_ratios),
        residual_tolerance=residual_tolerance,
        sigma_tolerance=sigma_tolerance,
        passed=bool(passed),
        n_replicates=experiment.replicates,
        kernel_vanishes=vanishes,
    )
