import math
from dataclasses import dataclass

from ambit_field_engine.constants import MeasureKind, RegimeTag
from ambit_field_engine.exceptions import InvalidParameterError

from .levy_measures import (
    CompoundPoisson,
    GHDensity,
    LevyMeasure,
    StableDensity,
    levy_measure_from_dict,
)


@dataclass(frozen=True)
class CharacteristicTriplet:
    """Characteristic triplet ``(gamma, b, nu)`` of a homogeneous Levy basis.

    ``gamma`` is the drift under the truncation ``1{|x| <= 1}``, ``b`` the
    Gaussian scale and ``levy_measure`` the Levy measure (``None`` for no jumps).
    Every measure of the catalog satisfies ``int (1 ^ x^2) nu(dx) < inf`` by
    construction of its parameter checks.
    """

    gamma: float = 0.0
    b: float = 0.0
    levy_measure: LevyMeasure | None = None

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise InvalidParameterError(f"Drift must be finite, got {self.gamma}")
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise InvalidParameterError(f"Gaussian scale b must be >= 0, got {self.b}")
        if self.levy_measure is not None and not isinstance(
            self.levy_measure, (StableDensity, CompoundPoisson, GHDensity)
        ):
            raise InvalidParameterError(f"Unknown Levy measure {self.levy_measure!r}")

    @property
    def is_deterministic(self) -> bool:
        return self.b == 0 and self.levy_measure is None

    @property
    def has_exact_atoms(self) -> bool:
        """Whether the basis is a finite set of atoms plus a drift density (compound Poisson or deterministic)."""
        return self.b == 0 and (self.levy_measure is None or isinstance(self.levy_measure, CompoundPoisson))

    def to_dict(self) -> dict:
        nu = self.levy_measure.to_dict() if self.levy_measure is not None else {"kind": MeasureKind.NONE.value}
        return {"gamma": self.gamma, "b": self.b, "nu": nu}

    @classmethod
    def from_dict(cls, payload: dict) -> "CharacteristicTriplet":
        return cls(
            gamma=float(payload.get("gamma", 0.0)),
            b=float(payload.get("b", 0.0)),
            levy_measure=levy_measure_from_dict(payload.get("nu")),
        )


@dataclass(frozen=True)
class SeedStableParams:
    """Parameters ``(K+, K-, beta, gamma_hat)`` of a strictly beta-stable seed.

    ``beta == 2`` is the Gaussian seed with scale ``b`` (the K's are ignored).
    ``gamma_hat`` is the drift under ``1{|x| <= 1}``; strict stability fixes it to
    ``(K+ - K-) / (1 - beta)`` when ``beta != 1`` and to ``0`` when ``beta == 2``,
    so it defaults to that value and any other value is rejected.
    """

    k_plus: float = 0.0
    k_minus: float = 0.0
    beta: float = 2.0
    gamma_hat: float | None = None
    b: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 2.0:
            raise InvalidParameterError(f"Seed index must lie in (0, 2], got {self.beta}")
        if self.beta == 2.0:
            if self.b < 0:
                raise InvalidParameterError(f"Gaussian seed scale must be >= 0, got {self.b}")
            if self.gamma_hat not in (None, 0.0):
                raise InvalidParameterError("A strictly 2-stable seed has no drift")
            object.__setattr__(self, "gamma_hat", 0.0)
            return

        if self.k_plus < 0 or self.k_minus < 0:
            raise InvalidParameterError(f"Seed K+, K- must be >= 0, got ({self.k_plus}, {self.k_minus})")
        if self.beta == 1.0:
            if not math.isclose(self.k_plus, self.k_minus, rel_tol=1e-12, abs_tol=1e-300):
                raise InvalidParameterError(
                    f"A 1-stable seed must be symmetric, got K+={self.k_plus}, K-={self.k_minus}"
                )
            if self.gamma_hat is None:
                object.__setattr__(self, "gamma_hat", 0.0)
            return

        strict = (self.k_plus - self.k_minus) / (1.0 - self.beta)
        if self.gamma_hat is None:
            object.__setattr__(self, "gamma_hat", strict)
        elif not math.isclose(self.gamma_hat, strict, rel_tol=1e-9, abs_tol=1e-12):
            raise InvalidParameterError(
                f"gamma_hat={self.gamma_hat} is not strictly {self.beta}-stable, expected {strict}"
            )

    @property
    def is_gaussian(self) -> bool:
        return self.beta == 2.0

    @property
    def is_degenerate(self) -> bool:
        if self.is_gaussian:
            return self.b == 0.0
        return self.k_plus == 0.0 and self.k_minus == 0.0 and self.gamma_hat == 0.0

    def to_triplet(self) -> CharacteristicTriplet:
        """The seed as a basis triplet, so cells of the limit basis reuse the basis samplers."""
        if self.is_gaussian:
            return CharacteristicTriplet(gamma=0.0, b=self.b)
        if self.k_plus == 0.0 and self.k_minus == 0.0:
            return CharacteristicTriplet(gamma=self.gamma_hat)
        return CharacteristicTriplet(
            gamma=self.gamma_hat,
            levy_measure=StableDensity(self.k_plus, self.k_minus, self.beta),
        )

    def to_dict(self) -> dict:
        return {
            "k_plus": self.k_plus,
            "k_minus": self.k_minus,
            "beta": self.beta,
            "gamma_hat": self.gamma_hat,
            "b": self.b,
        }


@dataclass(frozen=True)
class Regime:
    """Asymptotic regime of the normalized flux and circulation.

    ``normalizer(r) = constant * r ** rate_exponent`` with constant ``v_2``,
    ``v_beta`` or ``pi``. ``gamma_d`` is the drift removed from the basis in the
    classical limits; for ``beta == 1`` it is the principal-value drift.
    """

    tag: RegimeTag
    rate_exponent: float
    normalizer_constant: float
    beta: float | None = None
    seed: SeedStableParams | None = None
    gamma_d: float = 0.0

    def __post_init__(self):
        match self.tag:
            case RegimeTag.GAUSSIAN_ATTRACTOR:
                expected = 1.5
            case RegimeTag.STABLE_ATTRACTOR:
                if self.beta is None or not 1.0 <= self.beta < 2.0:
                    raise InvalidParameterError(f"Stable attractor needs beta in [1, 2), got {self.beta}")
                expected = 1.0 + 1.0 / self.beta
            case RegimeTag.CLASSICAL:
                expected = 2.0
        if not math.isclose(self.rate_exponent, expected, rel_tol=1e-12):
            raise InvalidParameterError(
                f"Rate exponent {self.rate_exponent} inconsistent with {self.tag}, expected {expected}"
            )

    def normalizer(self, r: float) -> float:
        return self.normalizer_constant * r**self.rate_exponent

    @property
    def has_boundary_limit(self) -> bool:
        """True when a boundary line-integral field appears in the limit."""
        return self.tag != RegimeTag.CLASSICAL

    @property
    def has_interior_limit(self) -> bool:
        """True when the divergence/curl field appears in the limit (classical rate)."""
        return self.rate_exponent == 2.0

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "rate_exponent": self.rate_exponent,
            "normalizer_constant": self.normalizer_constant,
            "beta": self.beta,
            "seed": self.seed.to_dict() if self.seed else None,
            "gamma_d": self.gamma_d,
        }
