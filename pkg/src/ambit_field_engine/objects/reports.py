from dataclasses import asdict, dataclass, field

import numpy as np

from .triplet import Regime


def _complex_pairs(values: np.ndarray) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex)]


@dataclass(frozen=True)
class IntegrabilityReport:
    """Outcome of the ``int_R Phi0(|F(-q)|) dq < inf`` check; truthy when integrable."""

    integrable: bool
    value: float | None
    divergence_at: tuple[float, float] | None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.integrable

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TailFit:
    beta: float
    slopes: tuple[float, ...]
    k_tilde_plus: float
    k_tilde_minus: float
    regular: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ComponentDiagnostic:
    kind: str
    length: float
    reach: float
    corners: int
    outward: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegularityReport:
    """Per-component regularity of the boundary: reach bound, corner count and verdict."""

    components: tuple[ComponentDiagnostic, ...]
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components], "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class FluxDecomposition:
    """``total = interior + boundary``; the drift parts are included in both sides."""

    total: float
    interior: float
    boundary: float
    interior_drift: float
    boundary_drift: float
    r: float
    p: tuple[float, float]
    n_theta: int
    mode: str
    n_interior_atoms: int = 0
    n_boundary_atoms: int = 0

    @property
    def residual(self) -> float:
        return self.total - (self.interior + self.boundary)

    @property
    def relative_residual(self) -> float:
        scale = max(abs(self.total), abs(self.interior), abs(self.boundary), np.finfo(float).tiny)
        return abs(self.residual) / scale

    def to_dict(self) -> dict:
        return {**asdict(self), "residual": self.residual}


@dataclass(frozen=True)
class RateReport:
    """Scale of the functional per radius, the fitted log-log slope and the verdict."""

    mode: str
    statistic: str
    regime: Regime
    r_grid: tuple[float, ...]
    scales: tuple[float, ...]
    slope: float
    slope_ci: tuple[float, float]
    intercept: float
    expected_exponent: float
    tolerance: float
    passed: bool
    n_replicates: int
    runtime: float
    samples: dict = field(default_factory=dict, repr=False)
    points: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    n_theta: int = 256
    seed: int | None = None

    def rows(self):
        """``(r, replicate, value, normalized_value)`` per replicate."""
        for r in self.r_grid:
            normalizer = self.regime.normalizer(r)
            for index, value in enumerate(self.samples.get(r, ())):
                yield r, index, float(value), float(value) / normalizer

    def replicate_rows(self):
        """``(replicate, p_x, p_y, r, value, normalizer, n_theta, seed)`` per replicate.

        Replicate ``k`` is evaluated at ``points[k % len(points)]``.
        """
        for r in self.r_grid:
            normalizer = self.regime.normalizer(r)
            for index, value in enumerate(self.samples.get(r, ())):
                p_x, p_y = self.points[index % len(self.points)]
                yield index, p_x, p_y, r, float(value), normalizer, self.n_theta, self.seed

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "statistic": self.statistic,
            "regime": self.regime.to_dict(),
            "r_grid": list(self.r_grid),
            "scales": list(self.scales),
            "slope": self.slope,
            "slope_ci": list(self.slope_ci),
            "intercept": self.intercept,
            "expected_exponent": self.expected_exponent,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "n_replicates": self.n_replicates,
            "runtime": self.runtime,
        }


@dataclass(frozen=True)
class CFReport:
    """Sup distance between the empirical and the limit characteristic functions.

    ``limit_distance`` is the distance of a direct simulation of the boundary
    limit field from the same oracle, when the limit is a boundary field.
    """

    r: float
    z_grid: np.ndarray = field(repr=False)
    empirical: np.ndarray = field(repr=False)
    oracle: np.ndarray = field(repr=False)
    distance: float
    threshold: float
    passed: bool
    n_replicates: int
    regime: Regime | None = None
    limit_distance: float | None = None

    def rows(self):
        for z, emp, ora in zip(self.z_grid, self.empirical, self.oracle):
            yield float(z), float(emp.real), float(emp.imag), float(ora.real), float(ora.imag)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "z_grid": [float(z) for z in self.z_grid],
            "empirical": _complex_pairs(self.empirical),
            "oracle": _complex_pairs(self.oracle),
            "distance": self.distance,
            "threshold": self.threshold,
            "passed": self.passed,
            "n_replicates": self.n_replicates,
            "regime": self.regime.to_dict() if self.regime else None,
            "limit_distance": self.limit_distance,
        }


@dataclass(frozen=True)
class ModelReport:
    """Incompressibility or irrotationality: the vanishing functional against a reference scale."""

    test: str
    r_grid: tuple[float, ...]
    vanishing_medians: tuple[float, ...]
    reference_medians: tuple[float, ...]
    reference_scale: float
    final_ratio: float
    threshold: float
    passed: bool
    n_replicates: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IsotropyReport:
    """Moments of increments against their rotated counterparts, with MC standard errors."""

    theta: float
    offset: tuple[float, float]
    mean: tuple[float, float]
    mean_rotated: tuple[float, float]
    covariance: tuple[tuple[float, float], tuple[float, float]]
    covariance_rotated: tuple[tuple[float, float], tuple[float, float]]
    max_z_score: float
    band: float
    passed: bool
    n_replicates: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AuditReport:
    """Decomposition traces across radii for a compound Poisson basis."""

    r_grid: tuple[float, ...]
    max_residual: tuple[float, ...]
    sigma_relative_error: tuple[float, ...]
    boundary_over_r2: tuple[float, ...]
    residual_tolerance: float
    sigma_tolerance: float
    passed: bool
    n_replicates: int
    kernel_vanishes: bool = False

    def to_dict(self) -> dict:
        return asdict(self)
