import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from ambit_field_engine.constants import JumpLawKind, MeasureKind
from ambit_field_engine.exceptions import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantJumps:
    value: float

    def __post_init__(self):
        if self.value == 0.0:
            raise InvalidParameterError("A jump of size 0 is not a jump")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))

    def cf(self, z):
        return np.exp(1j * np.asarray(z, dtype=float) * self.value)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray], points=None) -> float:
        return float(fn(np.asarray([self.value], dtype=float))[0])

    def tail(self, x: float, sign: int) -> float:
        return float(sign * self.value > x)

    def to_dict(self) -> dict:
        return {"law": JumpLawKind.CONSTANT.value, "value": self.value}


@dataclass(frozen=True)
class DiscreteJumps:
    values: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probabilities) or not self.values:
            raise InvalidParameterError("Discrete jump law needs one probability per value")
        if any(p < 0 for p in self.probabilities) or not math.isclose(
            sum(self.probabilities), 1.0, rel_tol=1e-9
        ):
            raise InvalidParameterError(
                f"Jump probabilities must be non-negative and sum to 1, got {self.probabilities}"
            )
        if any(v == 0.0 for v in self.values):
            raise InvalidParameterError("A jump of size 0 is not a jump")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.values, dtype=float), size=size, p=self.probabilities)

    def cf(self, z):
        z = np.asarray(z, dtype=float)
        values = np.asarray(self.values)
        probs = np.asarray(self.probabilities)
        return np.sum(probs * np.exp(1j * z[..., None] * values), axis=-1)

    def expect(self, fn, points=None) -> float:
        return float(np.dot(self.probabilities, fn(np.asarray(self.values, dtype=float))))

    def tail(self, x: float, sign: int) -> float:
        values = np.asarray(self.values)
        return float(np.sum(np.asarray(self.probabilities)[sign * values > x]))

    def to_dict(self) -> dict:
        return {
            "law": JumpLawKind.DISCRETE.value,
            "values": list(self.values),
            "probabilities": list(self.probabilities),
        }


@dataclass(frozen=True)
class NormalJumps:
    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise InvalidParameterError(f"Normal jump std must be positive, got {self.std}")

    def sample(self, rng, size):
        return rng.normal(self.mean, self.std, size=size)

    def cf(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(1j * self.mean * z - 0.5 * (self.std * z) ** 2)

    def expect(self, fn, points=None) -> float:
        lo, hi = self.mean - 12 * self.std, self.mean + 12 * self.std
        breaks = sorted(p for p in (points or ()) if lo < p < hi)
        value, _ = integrate.quad(
            lambda x: fn(np.asarray([x]))[0] * stats.norm.pdf(x, self.mean, self.std),
            lo,
            hi,
            points=breaks or None,
            limit=200,
        )
        return value

    def tail(self, x: float, sign: int) -> float:
        if sign > 0:
            return float(stats.norm.sf(x, self.mean, self.std))
        return float(stats.norm.cdf(-x, self.mean, self.std))

    def to_dict(self) -> dict:
        return {"law": JumpLawKind.NORMAL.value, "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class ExponentialJumps:
    """Positive jumps with mean ``scale``; a compound Poisson basis with these is non-negative."""

    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidParameterError(f"Exponential jump scale must be positive, got {self.scale}")

    def sample(self, rng, size):
        return rng.exponential(self.scale, size=size)

    def cf(self, z):
        z = np.asarray(z, dtype=float)
        return 1.0 / (1.0 - 1j * self.scale * z)

    def expect(self, fn, points=None) -> float:
        hi = 60.0 * self.scale
        breaks = sorted(p for p in (points or ()) if 0 < p < hi)
        value, _ = integrate.quad(
            lambda x: fn(np.asarray([x]))[0] * math.exp(-x / self.scale) / self.scale,
            0.0,
            hi,
            points=breaks or None,
            limit=200,
        )
        return value

    def tail(self, x: float, sign: int) -> float:
        return math.exp(-x / self.scale) if sign > 0 else 0.0

    def to_dict(self) -> dict:
        return {"law": JumpLawKind.EXPONENTIAL.value, "scale": self.scale}


JumpLaw = ConstantJumps | DiscreteJumps | NormalJumps | ExponentialJumps


@dataclass(frozen=True)
class StableDensity:
    """Levy density ``K+ x^(-1-beta)`` on the positive and ``K- |x|^(-1-beta)`` on the negative axis."""

    k_plus: float
    k_minus: float
    beta: float

    def __post_init__(self):
        if self.k_plus < 0 or self.k_minus < 0 or self.k_plus + self.k_minus <= 0:
            raise InvalidParameterError(
                f"Stable density needs K+, K- >= 0 with K+ + K- > 0, got ({self.k_plus}, {self.k_minus})"
            )
        if not 0.0 < self.beta < 2.0:
            raise InvalidParameterError(f"Stable index must lie in (0, 2), got {self.beta}")

    def density(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            power = np.where(ax > 0, ax, np.inf) ** (-1.0 - self.beta)
        return np.where(x > 0, self.k_plus, self.k_minus) * power

    def tail(self, x: float, sign: int) -> float:
        k = self.k_plus if sign > 0 else self.k_minus
        return k * x ** (-self.beta) / self.beta

    def to_dict(self) -> dict:
        return {
            "kind": MeasureKind.STABLE.value,
            "k_plus": self.k_plus,
            "k_minus": self.k_minus,
            "beta": self.beta,
        }


@dataclass(frozen=True)
class CompoundPoisson:
    rate: float
    jumps: JumpLaw

    def __post_init__(self):
        if self.rate <= 0:
            raise InvalidParameterError(f"Compound Poisson rate must be positive, got {self.rate}")

    @property
    def total_mass(self) -> float:
        return self.rate

    def tail(self, x: float, sign: int) -> float:
        return self.rate * self.jumps.tail(x, sign)

    def to_dict(self) -> dict:
        return {
            "kind": MeasureKind.COMPOUND_POISSON.value,
            "rate": self.rate,
            "jumps": self.jumps.to_dict(),
        }


@dataclass(frozen=True)
class GHDensity:
    """Levy density of the generalized hyperbolic law.

    ``nu(x) = exp(theta x) k(|x|) / |x|`` where ``k`` is written as the normal
    inverse Gaussian part ``delta alpha K_1(alpha x) / pi`` plus a smooth
    Bessel correction (zero when ``lam == -1/2``) plus ``lam exp(-alpha x)``
    when ``lam >= 0``. The correction is tabulated once per measure.
    """

    lam: float
    alpha: float
    theta: float
    delta: float
    table_size: int = field(default=160, compare=False, repr=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidParameterError(f"GH delta must be positive, got {self.delta}")
        if not self.alpha > abs(self.theta):
            raise InvalidParameterError(
                f"GH requires alpha > |theta|, got alpha={self.alpha}, theta={self.theta}"
            )

    @property
    def is_nig(self) -> bool:
        return self.lam == -0.5

    @property
    def cutoff(self) -> float:
        """Radius beyond which the density is below ``exp(-50)`` of its scale."""
        return 50.0 / (self.alpha - abs(self.theta))

    def _bessel_excess(self, t: float) -> float:
        order = abs(self.lam)
        arg = self.delta * t
        modulus = special.jv(order, arg) ** 2 + special.yv(order, arg) ** 2
        if not np.isfinite(modulus):
            return -self.delta / math.pi
        return 2.0 / (math.pi**2 * t * modulus) - self.delta / math.pi

    def _correction_at(self, x: float) -> float:
        integrand = lambda t: math.exp(-math.sqrt(t * t + self.alpha**2) * x) * self._bessel_excess(t)
        head, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
        tail, _ = integrate.quad(integrand, 1.0, np.inf, limit=200)
        return head + tail

    @cached_property
    def _correction_table(self) -> tuple[np.ndarray, np.ndarray]:
        grid = np.concatenate(([0.0], np.geomspace(1e-8, self.cutoff, self.table_size)))
        if self.is_nig:
            return grid, np.zeros_like(grid)
        logger.debug(f"Tabulating GH Bessel correction on {grid.size} radii")
        values = np.array([self._correction_at(float(x)) for x in grid])
        return grid, values

    def k_function(self, x):
        """``k(x)`` for ``x > 0``."""
        x = np.asarray(x, dtype=float)
        grid, values = self._correction_table
        correction = np.where(x <= self.cutoff, np.interp(x, grid, values), 0.0)
        with np.errstate(over="ignore"):
            nig = self.delta * self.alpha * special.kv(1, self.alpha * x) / math.pi
        gamma_part = self.lam * np.exp(-self.alpha * x) if self.lam >= 0 else 0.0
        return nig + correction + gamma_part

    def density(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        safe = np.where(ax > 0, ax, 1.0)
        value = np.exp(self.theta * x) * self.k_function(safe) / safe
        return np.where((ax > 0) & (ax <= self.cutoff), value, 0.0)

    def tail(self, x: float, sign: int) -> float:
        if x >= self.cutoff:
            return 0.0
        # integrate in log-radius; the density spans many decades near 0
        integrand = lambda s: float(self.density(sign * math.exp(s))) * math.exp(s)
        value, _ = integrate.quad(integrand, math.log(x), math.log(self.cutoff), limit=400)
        return value

    def to_dict(self) -> dict:
        return {
            "kind": MeasureKind.GENERALIZED_HYPERBOLIC.value,
            "lam": self.lam,
            "alpha": self.alpha,
            "theta": self.theta,
            "delta": self.delta,
        }


LevyMeasure = StableDensity | CompoundPoisson | GHDensity


def jump_law_from_dict(payload: dict) -> JumpLaw:
    law = JumpLawKind(payload["law"])
    match law:
        case JumpLawKind.CONSTANT:
            return ConstantJumps(float(payload["value"]))
        case JumpLawKind.DISCRETE:
            return DiscreteJumps(
                tuple(float(v) for v in payload["values"]),
                tuple(float(p) for p in payload["probabilities"]),
            )
        case JumpLawKind.NORMAL:
            return NormalJumps(float(payload["mean"]), float(payload["std"]))
        case JumpLawKind.EXPONENTIAL:
            return ExponentialJumps(float(payload["scale"]))


def levy_measure_from_dict(payload: dict | None) -> LevyMeasure | None:
    if payload is None:
        return None
    kind = MeasureKind(payload["kind"])
    match kind:
        case MeasureKind.NONE:
            return None
        case MeasureKind.STABLE:
            return StableDensity(float(payload["k_plus"]), float(payload["k_minus"]), float(payload["beta"]))
        case MeasureKind.COMPOUND_POISSON:
            return CompoundPoisson(float(payload["rate"]), jump_law_from_dict(payload["jumps"]))
        case MeasureKind.GENERALIZED_HYPERBOLIC:
            return GHDensity(
                float(payload["lam"]),
                float(payload["alpha"]),
                float(payload["theta"]),
                float(payload["delta"]),
            )
