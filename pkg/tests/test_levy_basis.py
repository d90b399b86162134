import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambit_field_engine.constants import RegimeTag
from ambit_field_engine.exceptions import (
    DomainError,
    InvalidParameterError,
    NumericalFailureError,
    UnclassifiableRegimeError,
    UnsupportedLawError,
)
from ambit_field_engine.levy_basis import (
    classify_regime,
    fit_tail_index,
    gamma_from_tau,
    gamma_tau,
    integrability_check,
    linear_form_law,
    modular_phi0,
    nu_tail,
    psi,
    psi_stable_seed,
    sample_cell,
    sample_cells,
    triplet_from_json,
    to_json,
    v_beta,
)
from ambit_field_engine.objects import (
    CharacteristicTriplet,
    CompoundPoisson,
    ConstantJumps,
    ExponentialJumps,
    GHDensity,
    Isotropic,
    NormalJumps,
    Polynomial,
    PowerLaw,
    SeedStableParams,
    StableDensity,
)
from ambit_field_engine.utils import stream

Z_GRID = np.linspace(-2.0, 2.0, 9)


def _cf_gap(draws: np.ndarray, expected: np.ndarray) -> float:
    empirical = np.exp(1j * np.outer(Z_GRID, draws)).mean(axis=1)
    return float(np.max(np.abs(empirical - expected)))


def test_psi_gaussian():
    triplet = CharacteristicTriplet(gamma=0.5, b=2.0)
    assert psi(triplet, 1.5) == pytest.approx(complex(-4.5, 0.75))


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5])
def test_psi_stable_closed_form_matches_quadrature(beta: float):
    k_minus = 1.0 if beta == 1.0 else 0.4
    triplet = CharacteristicTriplet(gamma=0.2, levy_measure=StableDensity(1.0, k_minus, beta))
    z = np.array([-1.3, 0.5, 2.0])
    closed = psi(triplet, z)
    quad = psi(triplet, z, method="quad")
    np.testing.assert_allclose(closed, quad, rtol=1e-5, atol=1e-7)


def test_psi_compound_poisson_matches_quadrature():
    triplet = CharacteristicTriplet(gamma=0.1, levy_measure=CompoundPoisson(2.0, NormalJumps(0.3, 0.5)))
    z = np.array([-0.7, 1.1])
    np.testing.assert_allclose(psi(triplet, z), psi(triplet, z, method="quad"), rtol=1e-8)


def test_psi_rejects_non_finite_argument():
    with pytest.raises(InvalidParameterError):
        psi(CharacteristicTriplet(b=1.0), float("inf"))


@settings(max_examples=50, deadline=None)
@given(
    r=st.floats(min_value=1e-3, max_value=10.0),
    z=st.floats(min_value=-5.0, max_value=5.0),
    beta=st.sampled_from([0.7, 1.0, 1.5, 2.0]),
)
def test_seed_exponent_is_strictly_stable(r: float, z: float, beta: float):
    params = SeedStableParams(1.0, 1.0 if beta == 1.0 else 0.3, beta, b=1.0)
    scaled = r * psi_stable_seed(params, r ** (-1.0 / beta) * z)
    assert scaled == pytest.approx(psi_stable_seed(params, z), rel=1e-9, abs=1e-12)


def test_seed_rejects_non_strict_drift():
    with pytest.raises(InvalidParameterError, match="not strictly"):
        SeedStableParams(1.0, 0.0, 1.5, gamma_hat=0.1)


def test_v_beta_constants():
    assert v_beta(2.0) == pytest.approx(2.0 * math.sqrt(4.0 / 3.0), abs=1e-10)
    assert v_beta(1.0) == pytest.approx(math.pi, abs=1e-10)
    with pytest.raises(DomainError):
        v_beta(0.5)


def test_v_beta_reports_a_failed_quadrature(monkeypatch):
    v_beta.cache_clear()
    monkeypatch.setattr("ambit_field_engine.levy_basis.integrate.quad", lambda *args, **kwargs: (1.2, 0.5))
    with pytest.raises(NumericalFailureError, match="v_beta") as excinfo:
        v_beta(1.3)
    assert excinfo.value.partial_estimate == 1.2
    assert excinfo.value.trace == [(-1.0, 1.0, 1.2, 0.5)]


def test_tau_drift_round_trip():
    measure = CompoundPoisson(3.0, NormalJumps(0.0, 2.0))
    triplet = CharacteristicTriplet(gamma=0.7, levy_measure=measure)
    assert gamma_from_tau(gamma_tau(triplet), measure) == pytest.approx(0.7)


def test_modular_is_even_and_vanishes_at_zero():
    triplet = CharacteristicTriplet(gamma=0.3, b=0.5, levy_measure=StableDensity(1.0, 0.5, 1.2))
    assert modular_phi0(triplet, 0.0) == 0.0
    assert modular_phi0(triplet, 0.8) == pytest.approx(modular_phi0(triplet, -0.8), rel=1e-8)
    assert modular_phi0(triplet, 2.0) > modular_phi0(triplet, 0.5)


class TestSampling:
    def test_requires_explicit_stream(self):
        with pytest.raises(InvalidParameterError, match="explicit random stream"):
            sample_cells(CharacteristicTriplet(b=1.0), 0.1, 10)

    def test_rejects_empty_cells(self, rng):
        with pytest.raises(InvalidParameterError):
            sample_cell(CharacteristicTriplet(b=1.0), 0.0, rng)

    def test_gh_needs_approximation_flag(self, rng):
        triplet = CharacteristicTriplet(levy_measure=GHDensity(-0.5, 2.0, 0.0, 1.0))
        with pytest.raises(UnsupportedLawError, match="allow_approximation"):
            sample_cells(triplet, 0.1, 10, rng)

    def test_same_stream_same_draws(self, seed):
        triplet = CharacteristicTriplet(levy_measure=StableDensity(1.0, 1.0, 1.5))
        first = sample_cells(triplet, 0.2, 50, stream(seed, 3, 4))
        second = sample_cells(triplet, 0.2, 50, stream(seed, 3, 4))
        np.testing.assert_array_equal(first, second)

    @pytest.mark.parametrize(
        "triplet",
        [
            CharacteristicTriplet(gamma=0.3, b=1.2),
            CharacteristicTriplet(gamma=0.1, levy_measure=StableDensity(1.0, 1.0, 1.5)),
            CharacteristicTriplet(gamma=0.1, levy_measure=StableDensity(1.0, 0.25, 1.5)),
            CharacteristicTriplet(gamma=-0.2, levy_measure=StableDensity(1.0, 0.4, 1.0)),
            CharacteristicTriplet(gamma=0.0, levy_measure=StableDensity(0.5, 0.1, 0.6)),
            CharacteristicTriplet(gamma=0.2, b=0.3, levy_measure=CompoundPoisson(3.0, ExponentialJumps(0.5))),
        ],
        ids=["gaussian", "stable-symmetric", "stable-skewed", "stable-one", "stable-finite-variation", "cp"],
    )
    def test_cell_law_matches_exponent(self, triplet, seed):
        area, n = 0.7, 40_000
        draws = sample_cells(triplet, area, n, stream(seed, 1))
        expected = np.exp(area * psi(triplet, Z_GRID))
        assert _cf_gap(draws, expected) < 3.0 / math.sqrt(n) + 0.005

    @pytest.mark.parametrize("beta", [1.0, 1.5])
    def test_linear_form_law_matches_cellwise_sum(self, beta, seed):
        triplet = CharacteristicTriplet(gamma=0.2, levy_measure=StableDensity(1.0, 0.5 if beta != 1.0 else 1.0, beta))
        weights = np.array([0.5, -1.5, 2.0, 0.25])
        cell_area, n = 0.1, 40_000
        law = linear_form_law(triplet, cell_area, weights)
        draws = law.sample(n, stream(seed, 2))
        cumulant = cell_area * psi(triplet, np.outer(Z_GRID, weights)).sum(axis=1)
        assert _cf_gap(draws, np.exp(cumulant)) < 3.0 / math.sqrt(n) + 0.005

    def test_linear_form_law_is_none_for_compound_poisson(self):
        triplet = CharacteristicTriplet(levy_measure=CompoundPoisson(1.0, ConstantJumps(1.0)))
        assert linear_form_law(triplet, 0.1, np.ones(3)) is None


class TestRegime:
    def test_gaussian_attractor(self):
        regime = classify_regime(CharacteristicTriplet(gamma=0.4, b=1.0), True)
        assert regime.tag == RegimeTag.GAUSSIAN_ATTRACTOR
        assert regime.rate_exponent == 1.5
        assert regime.normalizer(0.01) == pytest.approx(v_beta(2.0) * 0.01**1.5)

    def test_compound_poisson_is_classical(self):
        triplet = CharacteristicTriplet(gamma=1.0, levy_measure=CompoundPoisson(2.0, ConstantJumps(0.5)))
        regime = classify_regime(triplet, True)
        assert regime.tag == RegimeTag.CLASSICAL
        assert regime.rate_exponent == 2.0
        # drift minus the truncated first moment 2.0 * 0.5
        assert regime.gamma_d == pytest.approx(0.0)

    def test_vanishing_kernel_is_classical(self):
        regime = classify_regime(CharacteristicTriplet(b=1.0), False)
        assert regime.tag == RegimeTag.CLASSICAL
        assert not regime.has_boundary_limit

    def test_stable_attractor(self):
        triplet = CharacteristicTriplet(levy_measure=StableDensity(1.0, 0.0, 1.7))
        regime = classify_regime(triplet, True)
        assert regime.tag == RegimeTag.STABLE_ATTRACTOR
        assert regime.rate_exponent == pytest.approx(1.0 + 1.0 / 1.7)
        assert regime.seed.k_plus == pytest.approx(1.0)
        assert regime.seed.k_minus == 0.0

    def test_finite_variation_stable_is_classical(self):
        triplet = CharacteristicTriplet(levy_measure=StableDensity(1.0, 1.0, 0.6))
        assert classify_regime(triplet, True).tag == RegimeTag.CLASSICAL

    def test_skewed_cauchy_is_unclassifiable(self):
        triplet = CharacteristicTriplet(levy_measure=StableDensity(1.0, 0.2, 1.0))
        with pytest.raises(UnclassifiableRegimeError, match="balanced"):
            classify_regime(triplet, True)

    def test_nig_tail_gives_one_stable_attractor(self):
        triplet = CharacteristicTriplet(levy_measure=GHDensity(-0.5, 2.0, 0.0, 1.0))
        regime = classify_regime(triplet, True)
        assert regime.tag == RegimeTag.STABLE_ATTRACTOR
        assert regime.beta == 1.0
        assert regime.seed.k_plus == pytest.approx(1.0 / math.pi, rel=0.05)

    def test_tail_fit_recovers_stable_index(self):
        fit = fit_tail_index(StableDensity(2.0, 1.0, 1.3))
        assert fit.regular
        assert fit.beta == pytest.approx(1.3, abs=1e-9)
        assert fit.k_tilde_plus == pytest.approx(2.0 / 1.3)


class TestIntegrability:
    def test_bounded_kernel(self, unit_disk):
        triplet = CharacteristicTriplet(levy_measure=CompoundPoisson(2.0, ConstantJumps(1.0)))
        report = integrability_check(triplet, Polynomial.constant(1.0, 0.0), unit_disk)
        assert report
        assert math.isfinite(report.value)

    def test_mild_singularity_is_integrable(self, unit_disk):
        kernel = Isotropic(0.0, PowerLaw(1.0, -1.5))
        assert integrability_check(CharacteristicTriplet(b=1.0), kernel, unit_disk)

    def test_strong_singularity_diverges(self, unit_disk):
        kernel = Isotropic(0.0, PowerLaw(1.0, -3.0))
        report = integrability_check(CharacteristicTriplet(b=1.0), kernel, unit_disk)
        assert not report
        assert report.divergence_at == (0.0, 0.0)


def test_triplet_json_round_trip():
    triplet = CharacteristicTriplet(0.1, 0.2, CompoundPoisson(1.5, NormalJumps(0.0, 1.0)))
    assert triplet_from_json(to_json(triplet)) == triplet


def test_triplet_json_rejects_garbage():
    with pytest.raises(InvalidParameterError):
        triplet_from_json("{not json")


class TestTails:
    def test_stable_closed_form(self):
        assert nu_tail(StableDensity(1.0, 0.0, 0.5), 4.0, +1) == pytest.approx(1.0)
        assert nu_tail(StableDensity(1.0, 0.0, 0.5), 4.0, -1) == 0.0

    def test_compound_poisson_counts_jumps(self):
        measure = CompoundPoisson(1.0, ConstantJumps(2.0))
        assert nu_tail(measure, 1.0, +1) == 1.0
        assert nu_tail(measure, 3.0, +1) == 0.0

    def test_nig_small_jump_tail(self):
        # x nu_+(x) tends to delta / pi
        assert 1e-4 * nu_tail(GHDensity(-0.5, 2.0, 0.0, 1.0), 1e-4, +1) == pytest.approx(1.0 / math.pi, rel=0.05)

    def test_bad_arguments(self):
        with pytest.raises(InvalidParameterError):
            nu_tail(StableDensity(1.0, 1.0, 1.5), 0.0, +1)
        with pytest.raises(InvalidParameterError, match="sign"):
            nu_tail(StableDensity(1.0, 1.0, 1.5), 1.0, 2)
