"""Homogeneous Levy bases: exponents, cell sampling, modular function and regime detection."""

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from ambit_field_engine import ambit_geometry, kernels
from ambit_field_engine.constants import RegimeTag
from ambit_field_engine.exceptions import (
    DomainError,
    InvalidParameterError,
    NumericalFailureError,
    UnclassifiableRegimeError,
    UnsupportedLawError,
)
from ambit_field_engine.objects import (
    CharacteristicTriplet,
    CompoundPoisson,
    GHDensity,
    IntegrabilityReport,
    LevyMeasure,
    Regime,
    SeedStableParams,
    StableDensity,
    TailFit,
)
from ambit_field_engine.utils import gauss_legendre

logger = logging.getLogger(__name__)

QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 200
GH_SMALL_JUMP_THRESHOLD = 1e-3
TAIL_FIT_POINTS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
TAIL_SLOPE_TOL = 0.05


# ---------------------------------------------------------------------------
# Levy-Khintchine exponent
# ---------------------------------------------------------------------------


def _stable_side(z: np.ndarray, beta: float) -> np.ndarray:
    """``int_0^inf (e^{izx} - 1 - izx 1{x<=1}) x^(-1-beta) dx`` in closed form."""
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    sign = np.sign(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        if beta == 1.0:
            log_term = np.where(az > 0, np.log(np.where(az > 0, az, 1.0)), 0.0)
            value = -0.5 * math.pi * az + 1j * z * (1.0 - np.euler_gamma - log_term)
        else:
            value = special.gamma(-beta) * az**beta * np.exp(-0.5j * math.pi * beta * sign) - 1j * z / (
                1.0 - beta
            )
    return np.where(az > 0, value, 0.0 + 0.0j)


def _one_minus_cos(u):
    return 2.0 * np.sin(0.5 * u) ** 2


def _sin_minus_linear(u):
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    return np.where(small, -(u**3) / 6.0 + u**5 / 120.0, np.sin(u) - u)


def _quad(fn: Callable[[float], float], a: float, b: float, *, what: str, **kwargs) -> float:
    value, abserr = integrate.quad(fn, a, b, epsabs=QUAD_ABS_TOL, limit=QUAD_LIMIT, **kwargs)
    if not np.isfinite(value) or abserr > max(1e-8, 1e-6 * abs(value)):
        raise NumericalFailureError(
            f"Quadrature for {what} did not converge on [{a}, {b}] (error estimate {abserr:.3g})",
            partial_estimate=value,
            trace=[(a, b, value, abserr)],
        )
    return value


def _side_density(measure: LevyMeasure, sign: int) -> Callable[[float], float]:
    return lambda x: float(measure.density(sign * x))


def _side_upper(measure: LevyMeasure) -> float:
    return measure.cutoff if isinstance(measure, GHDensity) else np.inf


def _levy_integral_side_quad(measure: LevyMeasure, z: float, sign: int) -> complex:
    """``int_0^inf (e^{i z s x} - 1 - i z s x 1{x<=1}) nu(s x) dx`` for one sign ``s``."""
    density = _side_density(measure, sign)
    w = sign * z
    aw = abs(w)
    if aw == 0.0:
        return 0.0 + 0.0j
    upper = _side_upper(measure)
    breaks = [1.0 / aw] if 1.0 / aw < 1.0 else None

    real = -_quad(lambda x: _one_minus_cos(w * x) * density(x), 0.0, 1.0, points=breaks, what="Re psi")
    imag = _quad(lambda x: float(_sin_minus_linear(w * x)) * density(x), 0.0, 1.0, points=breaks, what="Im psi")

    if np.isinf(upper):
        mass = measure.tail(1.0, sign)
        cos_part = _quad(density, 1.0, np.inf, weight="cos", wvar=aw, what="Re psi tail")
        sin_part = _quad(density, 1.0, np.inf, weight="sin", wvar=aw, what="Im psi tail")
        real += cos_part - mass
        imag += math.copysign(1.0, w) * sin_part
    elif upper > 1.0:
        n_waves = int(aw * upper / math.pi) + 1
        limit = max(QUAD_LIMIT, 4 * n_waves)
        real += integrate.quad(lambda x: -_one_minus_cos(w * x) * density(x), 1.0, upper, limit=limit)[0]
        imag += integrate.quad(lambda x: math.sin(w * x) * density(x), 1.0, upper, limit=limit)[0]
    return complex(real, imag)


def levy_integral_quad(measure: LevyMeasure, z: float) -> complex:
    """``int (e^{izx} - 1 - izx 1{|x|<=1}) nu(dx)`` by adaptive quadrature, split at 0.

    Works for every measure with a density; used as the production path for
    generalized hyperbolic measures and as an oracle for the closed forms.
    """
    if isinstance(measure, CompoundPoisson):
        return complex(_levy_integral_closed(measure, np.asarray(z, dtype=float)))
    return _levy_integral_side_quad(measure, float(z), +1) + _levy_integral_side_quad(measure, float(z), -1)


def _levy_integral_closed(measure: LevyMeasure, z: np.ndarray) -> np.ndarray:
    if isinstance(measure, StableDensity):
        return measure.k_plus * _stable_side(z, measure.beta) + measure.k_minus * _stable_side(-z, measure.beta)
    if isinstance(measure, CompoundPoisson):
        compensator = measure.rate * measure.jumps.expect(lambda x: np.where(np.abs(x) <= 1.0, x, 0.0))
        return measure.rate * (measure.jumps.cf(z) - 1.0) - 1j * z * compensator
    raise UnsupportedLawError(f"No closed form exponent for {type(measure).__name__}")


def psi(triplet: CharacteristicTriplet, z, method: str = "auto"):
    """Levy-Khintchine exponent of the basis seed.

    ``psi(z) = i gamma z - b^2 z^2 / 2 + int (e^{izx} - 1 - izx 1{|x|<=1}) nu(dx)``.

    Parameters
    ----------
    triplet : CharacteristicTriplet
        Law of the basis
    z : float | array_like
        Arguments, must be finite
    method : str, optional
        ``"auto"`` uses closed forms for stable and compound Poisson measures
        and quadrature for GH; ``"quad"`` forces quadrature, by default "auto"

    Returns
    -------
    complex | np.ndarray
        Exponent values with the shape of ``z``

    Raises
    ------
    NumericalFailureError
        If the quadrature does not reach its tolerance
    """
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise InvalidParameterError("psi needs finite arguments")
    value = 1j * triplet.gamma * z_arr - 0.5 * triplet.b**2 * z_arr**2 + 0j
    measure = triplet.levy_measure
    if measure is not None:
        if method == "auto" and not isinstance(measure, GHDensity):
            value = value + _levy_integral_closed(measure, z_arr)
        else:
            flat = np.array([levy_integral_quad(measure, float(v)) for v in z_arr.reshape(-1)])
            value = value + flat.reshape(z_arr.shape)
    return complex(value) if np.ndim(z) == 0 else value


def psi_stable_seed(params: SeedStableParams, z):
    """Exponent of a strictly beta-stable seed, in closed form.

    Satisfies ``r * psi(r ** (-1 / beta) * z) == psi(z)`` for every ``r > 0``.
    """
    z_arr = np.asarray(z, dtype=float)
    if params.is_gaussian:
        value = -0.5 * params.b**2 * z_arr**2 + 0j
    elif params.beta == 1.0:
        value = 1j * params.gamma_hat * z_arr - math.pi * params.k_plus * np.abs(z_arr) + 0j
    else:
        az = np.abs(z_arr)
        phase = 0.5j * math.pi * params.beta * np.sign(z_arr)
        value = special.gamma(-params.beta) * az**params.beta * (
            params.k_plus * np.exp(-phase) + params.k_minus * np.exp(phase)
        )
        value = np.where(az > 0, value, 0.0 + 0.0j)
    return complex(value) if np.ndim(z) == 0 else value


# ---------------------------------------------------------------------------
# Integrals against the Levy measure
# ---------------------------------------------------------------------------


def measure_integral(measure: LevyMeasure, fn: Callable[[np.ndarray], np.ndarray], points=()) -> float:
    """``int fn(x) nu(dx)`` for a vectorized ``fn``; ``points`` are kinks of ``fn`` on ``x > 0``."""
    if isinstance(measure, CompoundPoisson):
        breaks = sorted({p for p in points} | {-p for p in points})
        return measure.rate * measure.jumps.expect(fn, points=breaks)
    upper = _side_upper(measure)
    total = 0.0
    for sign in (+1, -1):
        density = _side_density(measure, sign)
        integrand = lambda x, s=sign: float(fn(np.asarray([s * x]))[0]) * density(x)
        cuts = sorted({0.0, 1.0, *[p for p in points if 0 < p < upper]})
        if upper > cuts[-1]:
            cuts.append(upper)
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += _quad(integrand, a, b, what="Levy measure integral")
    return total


def truncated_first_moment(measure: LevyMeasure | None, low: float = 0.0, high: float = 1.0) -> float:
    """``int_{low < |x| <= high} x nu(dx)``; ``low = 0`` needs finite variation near 0."""
    if measure is None:
        return 0.0
    if isinstance(measure, CompoundPoisson):
        return measure.rate * measure.jumps.expect(
            lambda x: np.where((np.abs(x) > low) & (np.abs(x) <= high), x, 0.0), points=[-high, -low, low, high]
        )
    if isinstance(measure, StableDensity):
        k = measure.k_plus - measure.k_minus
        beta = measure.beta
        if low == 0.0 and beta >= 1.0 and k != 0.0:
            raise InvalidParameterError(f"int_(|x|<={high}) x nu(dx) diverges for beta={beta}")
        if k == 0.0:
            return 0.0
        if beta == 1.0:
            return k * math.log(high / low)
        return k * (high ** (1 - beta) - low ** (1 - beta)) / (1 - beta)
    side = lambda s: _quad(lambda x: x * float(measure.density(s * x)), low, high, what="first moment")
    return side(+1) - side(-1)


def pv_first_moment(measure: LevyMeasure | None) -> float:
    """Cauchy principal value ``PV int_{-1}^{1} x nu(dx)``.

    Raises
    ------
    InvalidParameterError
        If the principal value does not exist
    """
    if measure is None:
        return 0.0
    if isinstance(measure, StableDensity):
        if measure.k_plus == measure.k_minus:
            return 0.0
        if measure.beta >= 1.0:
            raise InvalidParameterError("Principal value diverges for a skewed stable density with beta >= 1")
        return truncated_first_moment(measure)
    if isinstance(measure, CompoundPoisson):
        return truncated_first_moment(measure)
    # symmetric part cancels pointwise; the odd part x(nu(x) - nu(-x)) is bounded
    return _quad(
        lambda x: x * (float(measure.density(x)) - float(measure.density(-x))), 0.0, 1.0, what="principal value"
    )


def has_finite_variation(measure: LevyMeasure | None) -> bool:
    """Whether ``int (1 ^ |x|) nu(dx) < inf``."""
    if measure is None or isinstance(measure, CompoundPoisson):
        return True
    if isinstance(measure, StableDensity):
        return measure.beta < 1.0
    return False


def gamma_tau(triplet: CharacteristicTriplet) -> float:
    """Drift under the truncation ``tau(x) = x / (1 v |x|)``."""
    measure = triplet.levy_measure
    if measure is None:
        return triplet.gamma
    return triplet.gamma + measure.tail(1.0, +1) - measure.tail(1.0, -1)


def gamma_from_tau(drift_tau: float, measure: LevyMeasure | None) -> float:
    """Inverse of :func:`gamma_tau`: the ``1{|x| <= 1}`` drift for a ``tau`` drift."""
    if measure is None:
        return drift_tau
    return drift_tau - measure.tail(1.0, +1) + measure.tail(1.0, -1)


def drift_gamma_d(triplet: CharacteristicTriplet, kernel_vanishes_on_boundary: bool) -> float:
    """Drift removed from the basis in the classical limits sigma and omega.

    ``gamma - int_{|x|<=1} x nu(dx)`` for a finite-variation basis under a kernel
    that does not vanish on the boundary, ``gamma`` otherwise.
    """
    if not kernel_vanishes_on_boundary and triplet.b == 0 and has_finite_variation(triplet.levy_measure):
        return triplet.gamma - truncated_first_moment(triplet.levy_measure)
    return triplet.gamma


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _cms_standard(alpha: float, skew, size, rng: np.random.Generator) -> np.ndarray:
    """Standard ``S1(alpha, skew, 1, 0)`` variates by the Chambers-Mallows-Stuck transform."""
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=size)
    w = rng.exponential(1.0, size=size)
    skew = np.asarray(skew, dtype=float)
    if alpha == 1.0:
        half_pi = 0.5 * math.pi
        shifted = half_pi + skew * v
        return (shifted * np.tan(v) - skew * np.log(half_pi * w * np.cos(v) / shifted)) / half_pi
    zeta = skew * math.tan(0.5 * math.pi * alpha)
    b_shift = np.arctan(zeta) / alpha
    s_factor = (1.0 + zeta**2) ** (1.0 / (2.0 * alpha))
    return (
        s_factor
        * np.sin(alpha * (v + b_shift))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b_shift)) / w) ** ((1.0 - alpha) / alpha)
    )


@dataclass(frozen=True)
class StableLaw:
    """``S1(alpha, skew, scale, loc)`` plus an independent ``N(0, gauss_var)`` part."""

    alpha: float
    skew: np.ndarray | float
    scale: np.ndarray | float
    loc: np.ndarray | float
    gauss_var: np.ndarray | float = 0.0

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        x = _cms_standard(self.alpha, self.skew, size, rng)
        scale = np.asarray(self.scale, dtype=float)
        if self.alpha == 1.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_scale = np.where(scale > 0, np.log(np.where(scale > 0, scale, 1.0)), 0.0)
            value = scale * x + self.loc + (2.0 / math.pi) * np.asarray(self.skew) * scale * log_scale
        else:
            value = scale * x + self.loc
        gauss_sd = np.sqrt(np.asarray(self.gauss_var, dtype=float))
        if np.any(gauss_sd > 0):
            value = value + gauss_sd * rng.standard_normal(size)
        return value


def stable_cell_law(triplet: CharacteristicTriplet, area) -> StableLaw:
    """S1 parameters of ``L(A)`` for a stable-density basis and ``Leb(A) = area``."""
    measure = triplet.levy_measure
    if not isinstance(measure, StableDensity):
        raise UnsupportedLawError("stable_cell_law needs a stable Levy density")
    area = np.asarray(area, dtype=float)
    beta = measure.beta
    k_sum = measure.k_plus + measure.k_minus
    k_diff = measure.k_plus - measure.k_minus
    skew = k_diff / k_sum
    if beta == 1.0:
        scale = 0.5 * math.pi * k_sum * area
        loc = area * (triplet.gamma + k_diff * (1.0 - np.euler_gamma))
    else:
        unit_scale_pow = -special.gamma(-beta) * math.cos(0.5 * math.pi * beta) * k_sum
        scale = (area * unit_scale_pow) ** (1.0 / beta)
        loc = area * (triplet.gamma - k_diff / (1.0 - beta))
    return StableLaw(beta, skew, scale, loc, triplet.b**2 * area)


@lru_cache(maxsize=16)
def _gh_big_jump_table(measure: GHDensity, eps: float):
    grids, cumulatives, masses = [], [], []
    for sign in (+1, -1):
        grid = np.geomspace(eps, measure.cutoff, 4000)
        weights = measure.density(sign * grid) * grid
        cumulative = integrate.cumulative_trapezoid(weights, np.log(grid), initial=0.0)
        grids.append(grid)
        cumulatives.append(cumulative)
        masses.append(cumulative[-1])
    logger.debug(f"GH big-jump table at eps={eps}: masses {masses}")
    return grids, cumulatives, masses


def _gh_cell_parts(triplet: CharacteristicTriplet, eps: float):
    measure = triplet.levy_measure
    small_var = sum(
        _quad(lambda x, s=s: x * x * float(measure.density(s * x)), 0.0, eps, what="GH small-jump variance")
        for s in (+1, -1)
    )
    compensated = truncated_first_moment(measure, eps, 1.0) if eps < 1.0 else 0.0
    return small_var, compensated


def _sample_gh(triplet, area, size, rng, eps):
    measure = triplet.levy_measure
    grids, cumulatives, masses = _gh_big_jump_table(measure, eps)
    small_var, compensated = _gh_cell_parts(triplet, eps)
    area = np.broadcast_to(np.asarray(area, dtype=float), size)
    value = area * (triplet.gamma - compensated)
    value = value + np.sqrt(area * (triplet.b**2 + small_var)) * rng.standard_normal(size)
    total_mass = masses[0] + masses[1]
    counts = rng.poisson(area * total_mass)
    n_jumps = int(counts.sum())
    if n_jumps:
        positive = rng.uniform(size=n_jumps) < masses[0] / total_mass
        u = rng.uniform(size=n_jumps)
        jumps = np.where(
            positive,
            np.interp(u * masses[0], cumulatives[0], grids[0]),
            -np.interp(u * masses[1], cumulatives[1], grids[1]),
        )
        owner = np.repeat(np.arange(counts.size), counts.reshape(-1))
        value = value + np.bincount(owner, weights=jumps, minlength=counts.size).reshape(counts.shape)
    return value


def _sample_compound_poisson(triplet, area, size, rng):
    measure = triplet.levy_measure
    area = np.broadcast_to(np.asarray(area, dtype=float), size)
    drift = triplet.gamma - truncated_first_moment(measure)
    value = drift * area
    if triplet.b > 0:
        value = value + triplet.b * np.sqrt(area) * rng.standard_normal(size)
    counts = rng.poisson(measure.rate * area)
    n_jumps = int(counts.sum())
    if n_jumps:
        jumps = measure.jumps.sample(rng, n_jumps)
        owner = np.repeat(np.arange(counts.size), counts.reshape(-1))
        value = value + np.bincount(owner, weights=jumps, minlength=counts.size).reshape(counts.shape)
    return value


def is_exact_law(triplet: CharacteristicTriplet) -> bool:
    """Whether :func:`sample_cells` draws exactly from the cell law."""
    return not isinstance(triplet.levy_measure, GHDensity)


def sample_cells(
    triplet: CharacteristicTriplet,
    area,
    size=None,
    rng: np.random.Generator | None = None,
    allow_approximation: bool = False,
    gh_threshold: float = GH_SMALL_JUMP_THRESHOLD,
) -> np.ndarray:
    """Independent draws of ``L(A)`` with cumulant ``area * psi``.

    Parameters
    ----------
    triplet : CharacteristicTriplet
        Law of the basis
    area : float | array_like
        Lebesgue measure of each cell, broadcast against ``size``
    size : int | tuple, optional
        Output shape; defaults to the shape of ``area``
    rng : np.random.Generator
        Counter-based stream the draws are taken from
    allow_approximation : bool, optional
        Allow the small-jump Gaussian substitution for GH measures, by default False
    gh_threshold : float, optional
        Jumps below this size are replaced by a Gaussian, by default 1e-3

    Returns
    -------
    np.ndarray
        Cell values

    Raises
    ------
    UnsupportedLawError
        For GH measures when ``allow_approximation`` is False
    """
    if rng is None:
        raise InvalidParameterError("sample_cells needs an explicit random stream")
    area_arr = np.asarray(area, dtype=float)
    if np.any(area_arr <= 0):
        raise InvalidParameterError("Cell areas must be positive")
    if size is None:
        size = area_arr.shape
    measure = triplet.levy_measure

    if measure is None:
        area_b = np.broadcast_to(area_arr, size)
        value = triplet.gamma * area_b
        if triplet.b > 0:
            value = value + triplet.b * np.sqrt(area_b) * rng.standard_normal(size)
        return np.array(value, dtype=float)
    if isinstance(measure, StableDensity):
        law = stable_cell_law(triplet, np.broadcast_to(area_arr, size))
        return law.sample(size, rng)
    if isinstance(measure, CompoundPoisson):
        return _sample_compound_poisson(triplet, area_arr, size, rng)
    if not allow_approximation:
        raise UnsupportedLawError(
            "Generalized hyperbolic cells are sampled only approximately; set allow_approximation"
        )
    return _sample_gh(triplet, area_arr, size, rng, gh_threshold)


def sample_cell(
    triplet: CharacteristicTriplet,
    area: float,
    rng: np.random.Generator,
    allow_approximation: bool = False,
) -> float:
    """One draw of ``L(A)`` for a set of Lebesgue measure ``area``."""
    if not area > 0:
        raise InvalidParameterError(f"Cell area must be positive, got {area}")
    return float(sample_cells(triplet, area, (), rng, allow_approximation)[()])


def linear_form_law(triplet: CharacteristicTriplet, cell_area: float, weights: np.ndarray) -> StableLaw | None:
    """Exact law of ``sum_c w_c L(cell_c)`` over iid cells, when it is stable or Gaussian.

    Returns None when the law is not closed under linear combinations
    (compound Poisson and GH bases).
    """
    weights = np.asarray(weights, dtype=float)
    weights = weights[weights != 0.0]
    measure = triplet.levy_measure
    w_sum = float(weights.sum())
    gauss_var = triplet.b**2 * cell_area * float(np.dot(weights, weights))
    if measure is None:
        return StableLaw(2.0, 0.0, 0.0, triplet.gamma * cell_area * w_sum, gauss_var)
    if not isinstance(measure, StableDensity):
        return None
    cell = stable_cell_law(triplet, cell_area)
    beta = measure.beta
    if weights.size == 0:
        return StableLaw(beta, 0.0, 0.0, 0.0, 0.0)
    abs_w = np.abs(weights)
    if beta == 1.0:
        scale = float(cell.scale) * float(abs_w.sum())
        skew = float(cell.skew) * w_sum / float(abs_w.sum())
        loc = float(cell.loc) * w_sum - (2.0 / math.pi) * float(cell.skew) * float(cell.scale) * float(
            np.dot(weights, np.log(abs_w))
        )
    else:
        pow_sum = float(np.sum(abs_w**beta))
        scale = float(cell.scale) * pow_sum ** (1.0 / beta)
        skew = float(cell.skew) * float(np.sum(np.sign(weights) * abs_w**beta)) / pow_sum
        loc = float(cell.loc) * w_sum
    return StableLaw(beta, skew, scale, loc, gauss_var)


def sample_linear_form(
    triplet: CharacteristicTriplet,
    cell_area: float,
    weights: np.ndarray,
    size: int,
    rng: np.random.Generator,
    allow_approximation: bool = False,
    chunk_size: int = 1 << 20,
) -> np.ndarray:
    """Draws of ``sum_c w_c L(cell_c)`` for iid cells of equal area.

    Gaussian and stable bases are aggregated exactly into one variate per draw;
    other laws draw every cell with a non-zero weight.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    law = linear_form_law(triplet, cell_area, weights)
    if law is not None:
        return law.sample(size, rng)
    support = weights[weights != 0.0]
    out = np.empty(size)
    rows = max(1, chunk_size // max(1, support.size))
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        cells = sample_cells(triplet, cell_area, (stop - start, support.size), rng, allow_approximation)
        out[start:stop] = cells @ support
    return out


# ---------------------------------------------------------------------------
# Modular function and integrability
# ---------------------------------------------------------------------------


def _tau(x):
    x = np.asarray(x, dtype=float)
    return x / np.maximum(1.0, np.abs(x))


def _jump_square_part(measure: LevyMeasure, y: float) -> float:
    """``int (1 ^ |y x|^2) nu(dx)``."""
    if isinstance(measure, StableDensity):
        beta = measure.beta
        return (measure.k_plus + measure.k_minus) * abs(y) ** beta * (1.0 / (2.0 - beta) + 1.0 / beta)
    cut = 1.0 / abs(y)
    return measure_integral(measure, lambda x: np.minimum(1.0, (y * x) ** 2), points=[cut])


def modular_phi0(triplet: CharacteristicTriplet, y: float) -> float:
    """Modular ``U_tau(y) + b^2 y^2 + int (1 ^ |yx|^2) nu(dx)`` of the basis.

    ``U_tau(y) = |y gamma_tau + int [tau(yx) - y tau(x)] nu(dx)|`` with
    ``tau(x) = x / (1 v |x|)`` and ``gamma_tau`` the drift under ``tau``.
    The function is even with ``Phi(0) = 0``.
    """
    y = float(y)
    if not math.isfinite(y):
        raise InvalidParameterError("modular_phi0 needs a finite argument")
    if y == 0.0:
        return 0.0
    measure = triplet.levy_measure
    drift = y * gamma_tau(triplet)
    jumps = 0.0
    if measure is not None:
        cut = 1.0 / abs(y)
        drift += measure_integral(measure, lambda x: _tau(y * x) - y * _tau(x), points=[cut])
        jumps = _jump_square_part(measure, y)
    return abs(drift) + triplet.b**2 * y**2 + jumps


def _phi0_profile(triplet: CharacteristicTriplet, values: np.ndarray) -> np.ndarray:
    """``Phi0`` on many arguments, interpolated in log-log from a table."""
    values = np.abs(np.asarray(values, dtype=float))
    positive = values[values > 0]
    out = np.zeros_like(values)
    if positive.size == 0:
        return out
    lo, hi = float(positive.min()), float(positive.max())
    if hi / lo < 1.0 + 1e-9:
        out[values > 0] = modular_phi0(triplet, lo)
        return out
    grid = np.geomspace(lo, hi, 96)
    table = np.array([modular_phi0(triplet, float(g)) for g in grid])
    floor = np.finfo(float).tiny
    log_table = np.log(np.maximum(table, floor))
    out[values > 0] = np.exp(np.interp(np.log(positive), np.log(grid), log_table))
    return out


def integrability_check(triplet: CharacteristicTriplet, kernel, ambit_set, shells: int = 8) -> IntegrabilityReport:
    """Whether ``int_R Phi0(|F(-q)|) dq`` is finite.

    Bounded kernels on the compact set always pass. For each kernel
    singularity inside the set, the integral over dyadic shells around it is
    refined; shells that stop shrinking signal divergence.

    Returns
    -------
    IntegrabilityReport
        Truthy when integrable; carries the divergence location otherwise
    """
    ambit_set = ambit_geometry.as_ambit_set(ambit_set)
    integrand = lambda q: _phi0_profile(triplet, np.linalg.norm(kernels.eval_F(kernel, -q), axis=-1))

    for singular in kernel.singular_points():
        center = -np.asarray(singular, dtype=float)
        touches = bool(ambit_set.contains(center)) or ambit_set.boundary_distance(center) <= ambit_set.tol_boundary
        if not touches:
            continue
        outer = 0.25 * ambit_set.diameter
        contributions = []
        theta = 2.0 * np.pi * np.arange(64) / 64
        for k in range(shells):
            r_hi, r_lo = outer * 2.0**-k, outer * 2.0 ** -(k + 1)
            rho, w_rho = gauss_legendre(8, r_lo, r_hi)
            pts = center + (rho[:, None, None] * np.stack((np.cos(theta), np.sin(theta)), -1)[None]).reshape(-1, 2)
            w = (w_rho[:, None] * rho[:, None] * np.full(64, 2 * np.pi / 64)).reshape(-1)
            inside = ambit_set.contains(pts)
            value = float(np.sum(w[inside] * integrand(pts[inside]))) if inside.any() else 0.0
            contributions.append(value)
        tail = contributions[-3:]
        ratios = [b / a for a, b in zip(tail[:-1], tail[1:]) if a > 0]
        logger.debug(f"Shell contributions around {center.tolist()}: {contributions}")
        if ratios and min(ratios) > 0.9:
            return IntegrabilityReport(
                integrable=False,
                value=None,
                divergence_at=tuple(center.tolist()),
                detail=f"shell integrals stop shrinking near {center.tolist()} (ratios {ratios})",
            )
        return IntegrabilityReport(
            integrable=True,
            value=None,
            divergence_at=None,
            detail=f"integrable singularity at {center.tolist()}",
        )

    value = ambit_geometry.integrate_over(ambit_set, integrand)
    return IntegrabilityReport(integrable=bool(np.isfinite(value)), value=float(value), divergence_at=None, detail="bounded kernel")


# ---------------------------------------------------------------------------
# Tails and regimes
# ---------------------------------------------------------------------------


def nu_tail(measure: LevyMeasure | None, x: float, sign: int) -> float:
    """``nu(x, inf)`` for ``sign = +1`` or ``nu(-inf, -x)`` for ``sign = -1``."""
    if not x > 0:
        raise InvalidParameterError(f"Tail needs x > 0, got {x}")
    if sign not in (+1, -1):
        raise InvalidParameterError(f"Tail sign must be +1 or -1, got {sign}")
    if measure is None:
        return 0.0
    return float(measure.tail(float(x), sign))


def fit_tail_index(measure: LevyMeasure, points=TAIL_FIT_POINTS) -> TailFit:
    """Fit ``nu_+(x) + nu_-(x) ~ K x^(-beta)`` from log-log slopes at small ``x``.

    The fit is regular when every local slope agrees with the mean slope to
    within 0.05.
    """
    xs = np.asarray(points, dtype=float)
    plus = np.array([nu_tail(measure, x, +1) for x in xs])
    minus = np.array([nu_tail(measure, x, -1) for x in xs])
    total = plus + minus
    if np.any(total <= 0):
        return TailFit(beta=float("nan"), slopes=(), k_tilde_plus=0.0, k_tilde_minus=0.0, regular=False)
    slopes = np.diff(np.log(total)) / np.diff(np.log(xs))
    beta = float(-np.mean(slopes))
    regular = bool(np.all(np.abs(slopes + beta) <= TAIL_SLOPE_TOL))
    x_min = xs[-1]
    return TailFit(
        beta=beta,
        slopes=tuple(float(s) for s in slopes),
        k_tilde_plus=float(plus[-1] * x_min**beta),
        k_tilde_minus=float(minus[-1] * x_min**beta),
        regular=regular,
    )


@lru_cache(maxsize=32)
def v_beta(beta: float) -> float:
    """Normalization ``v_beta = 2 (int_{-1}^{1} (1 - s^2)^(beta/2) ds)^(1/beta)``.

    Raises
    ------
    DomainError
        If ``beta`` lies outside ``[1, 2]``
    NumericalFailureError
        If the quadrature error estimate is large relative to the value
    """
    if not 1.0 <= beta <= 2.0:
        raise DomainError(f"v_beta is defined for beta in [1, 2], got {beta}")
    value = _quad(lambda s: (1.0 - s * s) ** (0.5 * beta), -1.0, 1.0, what=f"v_beta({beta})", epsrel=1e-12)
    return 2.0 * value ** (1.0 / beta)


def classify_regime(triplet: CharacteristicTriplet, kernel_nonzero_on_boundary: bool) -> Regime:
    """Decide which asymptotic regime the flux and circulation follow.

    Parameters
    ----------
    triplet : CharacteristicTriplet
        Law of the basis
    kernel_nonzero_on_boundary : bool
        Whether the kernel is non-zero somewhere on ``-dR``

    Returns
    -------
    Regime
        Gaussian attractor (rate 3/2), stable attractor (rate 1 + 1/beta) or classical (rate 2)

    Raises
    ------
    UnclassifiableRegimeError
        If the basis has unbounded variation without a regular tail index in ``[1, 2)``
    """
    measure = triplet.levy_measure
    if not kernel_nonzero_on_boundary:
        return Regime(RegimeTag.CLASSICAL, 2.0, math.pi, gamma_d=drift_gamma_d(triplet, True))
    if triplet.b > 0:
        return Regime(
            RegimeTag.GAUSSIAN_ATTRACTOR,
            1.5,
            v_beta(2.0),
            beta=2.0,
            seed=SeedStableParams(beta=2.0, b=triplet.b),
            gamma_d=triplet.gamma,
        )
    if has_finite_variation(measure):
        return Regime(RegimeTag.CLASSICAL, 2.0, math.pi, gamma_d=drift_gamma_d(triplet, False))

    if isinstance(measure, StableDensity):
        beta = measure.beta
        k_tilde_plus, k_tilde_minus = measure.k_plus / beta, measure.k_minus / beta
    else:
        fit = fit_tail_index(measure)
        logger.debug(f"Tail index fit: {fit}")
        if not fit.regular:
            raise UnclassifiableRegimeError(f"No regular tail index: local slopes {fit.slopes}")
        beta = 1.0 if abs(fit.beta - 1.0) <= TAIL_SLOPE_TOL else fit.beta
        k_tilde_plus, k_tilde_minus = fit.k_tilde_plus, fit.k_tilde_minus
    if not 1.0 <= beta < 2.0:
        raise UnclassifiableRegimeError(f"Tail index {beta} outside [1, 2) for an unbounded-variation basis")

    if beta == 1.0:
        if not math.isclose(k_tilde_plus, k_tilde_minus, rel_tol=0.05):
            raise UnclassifiableRegimeError(
                f"beta = 1 needs balanced tails, got K+~{k_tilde_plus:.4g}, K-~{k_tilde_minus:.4g}"
            )
        k = 0.5 * (k_tilde_plus + k_tilde_minus)
        seed = SeedStableParams(k, k, 1.0, gamma_hat=0.0)
        gamma_hat = triplet.gamma - pv_first_moment(measure)
        logger.info(f"Stable attractor beta=1 with principal-value drift {gamma_hat:.6g}")
        return Regime(RegimeTag.STABLE_ATTRACTOR, 2.0, v_beta(1.0), beta=1.0, seed=seed, gamma_d=gamma_hat)

    seed = SeedStableParams(beta * k_tilde_plus, beta * k_tilde_minus, beta)
    return Regime(
        RegimeTag.STABLE_ATTRACTOR,
        1.0 + 1.0 / beta,
        v_beta(beta),
        beta=beta,
        seed=seed,
        gamma_d=triplet.gamma,
    )


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_json(triplet: CharacteristicTriplet) -> str:
    """``{"gamma": ..., "b": ..., "nu": {"kind": ..., ...}}``."""
    return json.dumps(triplet.to_dict(), sort_keys=True)


def triplet_from_json(text: str) -> CharacteristicTriplet:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Triplet is not valid JSON: {e}") from e
    try:
        return CharacteristicTriplet.from_dict(payload)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidParameterError(f"Malformed triplet spec {payload!r}: {e}") from e
