import math
from dataclasses import replace

import numpy as np
import pytest

from ambit_field_engine.asymptotics_lab import (
    FunctionalSampler,
    boundary_verdict,
    decomposition_audit,
    incompressibility_test,
    irrotationality_test,
    isotropy_test,
    limit_cumulant,
    limit_distribution_test,
    rate_scan,
    run_replicates,
    scale_statistic,
    stable_rate_r2_composition,
)
from ambit_field_engine.config import parse_config
from ambit_field_engine.constants import FunctionalMode, RegimeTag, ScaleStatistic
from ambit_field_engine.exceptions import (
    ConfigError,
    DomainError,
    InvalidParameterError,
    UnclassifiableRegimeError,
    UnsupportedLawError,
)
from ambit_field_engine.functionals import cf_sigma_exact
from ambit_field_engine.objects import (
    AmbitSet,
    CharacteristicTriplet,
    ConvexPolygon,
    Disk,
    Experiment,
    Isotropic,
    ModelOptions,
    Polynomial,
    PolynomialRadial,
    StableDensity,
)

QUARTER_TURN = 0.5 * math.pi
RECTANGLE = AmbitSet(ConvexPolygon(((-1.0, -0.25), (1.0, -0.25), (1.0, 0.25), (-1.0, 0.25))))


def _flux_experiment(triplet: CharacteristicTriplet, replicates: int, **overrides) -> Experiment:
    """Constant kernel (1, 0) on the unit disk: no interior term, pure boundary scaling."""
    options = dict(
        triplet=triplet,
        kernel=Polynomial.constant(1.0, 0.0),
        ambit_set=AmbitSet(Disk((0.0, 0.0), 1.0)),
        seed=3,
        r_grid=(0.2, 0.1, 0.05),
        replicates=replicates,
    )
    return Experiment(**{**options, **overrides})


def _cp_experiment(cp_config: dict, kernel: dict, **overrides) -> Experiment:
    return parse_config({**cp_config, "kernel": kernel, **overrides}).build()


def _isotropic(phi: float) -> dict:
    return {"kind": "isotropic", "phi": phi, "profile": {"kind": "polynomial", "coeffs": [1.0]}}


class TestHelpers:
    @pytest.mark.parametrize(
        "statistic, expected",
        [(ScaleStatistic.IQR, 2.0), (ScaleStatistic.MEDIAN_ABS, 1.0), (ScaleStatistic.STD, math.sqrt(5.0 / 2.0))],
    )
    def test_scale_statistic(self, statistic, expected):
        # 25th/75th percentiles are -1 and 1
        assert scale_statistic([-2.0, -1.0, 0.0, 1.0, 2.0], statistic) == pytest.approx(expected)

    @pytest.mark.parametrize("threads", [1, 4])
    def test_replicates_keep_index_order(self, threads):
        assert run_replicates(lambda index: index * index, 50, threads) == [k * k for k in range(50)]


class TestSampler:
    def test_atoms_for_compound_poisson(self, cp_config):
        sampler = FunctionalSampler(parse_config(cp_config).build())
        assert sampler.uses_atoms
        assert sampler.regime.tag == RegimeTag.CLASSICAL
        np.testing.assert_array_equal(sampler.point(3), (0.1, 0.1))

    def test_cells_for_gaussian(self, gaussian_config):
        sampler = FunctionalSampler(parse_config(gaussian_config).build())
        assert not sampler.uses_atoms
        assert sampler.regime.tag == RegimeTag.GAUSSIAN_ATTRACTOR

    @pytest.mark.parametrize("fixture", ["cp_config", "gaussian_config"])
    def test_thread_count_does_not_change_draws(self, fixture, request):
        experiment = parse_config(request.getfixturevalue(fixture)).build()
        single = FunctionalSampler(experiment, threads=1).samples(1)
        pooled = FunctionalSampler(experiment, threads=4).samples(1)
        np.testing.assert_array_equal(single, pooled)

    def test_modes_draw_independently(self, gaussian_config):
        sampler = FunctionalSampler(parse_config(gaussian_config).build())
        flux = sampler.samples(0, FunctionalMode.FLUX, count=100)
        circulation = sampler.samples(0, FunctionalMode.CIRCULATION, count=100)
        assert flux.shape == circulation.shape == (100,)
        assert not np.array_equal(flux, circulation)


class TestRateScan:
    def test_gaussian_boundary_rate(self, lab_config):
        experiment = _flux_experiment(CharacteristicTriplet(b=1.0), lab_config.replicates)
        report = rate_scan(experiment, threads=lab_config.threads)
        assert report.regime.tag == RegimeTag.GAUSSIAN_ATTRACTOR
        assert report.expected_exponent == 1.5
        assert report.tolerance == 0.1
        assert report.passed, report.to_dict()
        assert report.slope_ci[0] < report.slope < report.slope_ci[1]
        assert len(list(report.rows())) == 3 * lab_config.replicates

    def test_stable_boundary_rate(self, lab_config):
        triplet = CharacteristicTriplet(levy_measure=StableDensity(1.0, 1.0, 1.5))
        report = rate_scan(_flux_experiment(triplet, lab_config.replicates), threads=lab_config.threads)
        assert report.regime.tag == RegimeTag.STABLE_ATTRACTOR
        assert report.expected_exponent == pytest.approx(1.0 + 1.0 / 1.5)
        assert report.tolerance == 0.15
        assert report.passed, report.to_dict()

    def test_wrong_claim_fails(self, gaussian_config):
        experiment = parse_config({**gaussian_config, "claimed_exponent": 3.0}).build()
        report = rate_scan(experiment)
        assert report.expected_exponent == 3.0
        assert not report.passed

    def test_degenerate_functional(self, cp_config):
        experiment = _cp_experiment(cp_config, {"kind": "polynomial", "cx": [[0.0]], "cy": [[0.0]]})
        with pytest.raises(InvalidParameterError, match="degenerate"):
            rate_scan(experiment)

    def test_singular_kernel_is_rejected(self, gaussian_config):
        kernel = {"kind": "isotropic", "profile": {"kind": "power", "p": -3.0}}
        experiment = parse_config({**gaussian_config, "kernel": kernel}).build()
        with pytest.raises(DomainError):
            rate_scan(experiment)

    def test_skewed_cauchy_has_no_regime(self, gaussian_config):
        triplet = {"nu": {"kind": "stable", "k_plus": 1.0, "k_minus": 0.2, "beta": 1.0}}
        experiment = parse_config({**gaussian_config, "triplet": triplet}).build()
        with pytest.raises(UnclassifiableRegimeError):
            rate_scan(experiment)

    @pytest.mark.slow
    def test_unit_disk_acceptance(self, lab_config):
        experiment = _flux_experiment(
            CharacteristicTriplet(b=1.0), 2000, r_grid=(0.04, 0.028, 0.02, 0.014, 0.01)
        )
        report = rate_scan(experiment, threads=lab_config.threads)
        assert abs(report.slope - 1.5) <= 0.1


class TestLimitLaw:
    def test_classical_cumulant_is_the_sigma_law(self, cp_config):
        experiment = parse_config(cp_config).build()
        regime = FunctionalSampler(experiment).regime
        z = np.array([0.0, 0.5, 1.5])
        expected = cf_sigma_exact(experiment.triplet, experiment.kernel, experiment.ambit_set, z, experiment.mode, 0.0)
        cumulant = limit_cumulant(experiment, regime, z)
        np.testing.assert_allclose(cumulant, expected)
        assert cumulant[0] == 0.0

    def test_composition_needs_a_one_stable_attractor(self, gaussian_config):
        with pytest.raises(InvalidParameterError, match="1-stable"):
            stable_rate_r2_composition(parse_config(gaussian_config).build(), [0.5])

    def test_gaussian_boundary_limit(self, gaussian_config):
        experiment = parse_config({**gaussian_config, "replicates": 400}).build()
        report = limit_distribution_test(experiment)
        assert report.r == 0.05
        assert report.threshold == pytest.approx(3.0 / 20.0 + 0.03)
        assert report.passed, report.to_dict()
        assert report.limit_distance is not None
        assert report.limit_distance <= report.threshold

    def test_deterministic_basis_has_a_degenerate_limit(self, gaussian_config):
        experiment = parse_config({**gaussian_config, "triplet": {"gamma": 5.0}}).build()
        sampler = FunctionalSampler(experiment)
        assert sampler.uses_atoms
        np.testing.assert_allclose(sampler.samples(2), 0.0, atol=1e-12)
        report = limit_distribution_test(experiment)
        assert report.regime.tag == RegimeTag.CLASSICAL
        np.testing.assert_allclose(report.oracle, 1.0, atol=1e-12)
        assert report.distance < 1e-9
        assert report.passed

    def test_classical_limit(self, cp_config):
        # small radii keep collar atoms rare
        experiment = parse_config({**cp_config, "r_grid": [0.004, 0.002, 0.001], "replicates": 200}).build()
        report = limit_distribution_test(experiment)
        assert report.regime.tag == RegimeTag.CLASSICAL
        assert report.limit_distance is None
        assert report.passed, report.to_dict()
        assert len(list(report.rows())) == len(report.z_grid)


class TestModels:
    def test_rotated_kernel_is_incompressible(self, cp_config):
        report = incompressibility_test(_cp_experiment(cp_config, _isotropic(QUARTER_TURN)))
        assert report.passed, report
        assert report.vanishing_medians[-1] <= report.vanishing_medians[0]
        # deep atoms spin the circle at twice the jump mass
        assert report.reference_medians[-1] > 1.0

    def test_radial_kernel_is_irrotational(self, cp_config):
        report = irrotationality_test(_cp_experiment(cp_config, _isotropic(0.0)))
        assert report.passed, report
        assert report.test == "irrotationality"

    def test_rotated_kernel_is_not_irrotational(self, cp_config):
        report = irrotationality_test(_cp_experiment(cp_config, _isotropic(QUARTER_TURN)))
        assert not report.passed
        assert report.final_ratio > 0.5

    def test_isotropy_needs_a_round_set(self, seed):
        experiment = Experiment(
            CharacteristicTriplet(b=1.0), Isotropic(0.0, PolynomialRadial((1.0,))), RECTANGLE, seed, replicates=200
        )
        with pytest.raises(ConfigError, match="disk or annulus"):
            isotropy_test(experiment)

    def test_rectangle_negative_control(self, seed, lab_config):
        experiment = Experiment(
            CharacteristicTriplet(b=1.0),
            Isotropic(0.0, PolynomialRadial((1.0,))),
            RECTANGLE,
            seed,
            replicates=lab_config.replicates,
            model=ModelOptions(negative_control=True),
        )
        report = isotropy_test(experiment, threads=lab_config.threads)
        assert not report.passed
        assert report.max_z_score > report.band

    @pytest.mark.slow
    def test_disk_is_isotropic(self, seed, lab_config):
        experiment = Experiment(
            CharacteristicTriplet(b=1.0),
            Isotropic(0.3, PolynomialRadial((1.0, -0.5))),
            AmbitSet(Disk((0.0, 0.0), 1.0)),
            seed,
            points=((0.2, -0.1),),
            replicates=lab_config.replicates,
        )
        report = isotropy_test(experiment, threads=lab_config.threads)
        assert report.passed, report


class TestDecompositionAudit:
    def test_compound_poisson(self, cp_config):
        report = decomposition_audit(parse_config(cp_config).build())
        assert report.passed, report
        assert max(report.max_residual) < 1e-10
        assert not report.kernel_vanishes
        assert report.boundary_over_r2[-1] <= 2.0 * report.boundary_over_r2[0]

    def test_circulation_mode(self, cp_config):
        experiment = parse_config(cp_config).build()
        report = decomposition_audit(replace(experiment, mode=FunctionalMode.CIRCULATION))
        assert report.passed, report

    def test_gaussian_basis_is_rejected(self, gaussian_config):
        with pytest.raises(UnsupportedLawError, match="compound Poisson"):
            decomposition_audit(parse_config(gaussian_config).build())

    def test_vanishing_kernel_shrinks_the_boundary_term(self, cp_config):
        kernel = {"kind": "isotropic", "phi": 0.0, "profile": {"kind": "bump", "a": 0.2, "b": 0.5}}
        ring = {"kind": "annulus", "inner": 0.2, "outer": 0.5}
        report = decomposition_audit(_cp_experiment(cp_config, kernel, set=ring, replicates=200))
        assert report.kernel_vanishes
        assert report.passed, report
        assert report.boundary_over_r2[-1] < report.boundary_over_r2[0]

    @pytest.mark.parametrize(
        "ratios, vanishes, expected",
        [
            ((1.0, 1.1, 0.9), False, True),
            ((1.0, 1.6, 2.5), False, False),
            ((1.0, 0.5, 0.25), True, True),
            ((1.0, 1.0, 1.0), True, False),
            ((0.0, 0.0, 0.0), True, True),
        ],
        ids=["bounded", "growing", "shrinking", "flat-but-vanishing", "zero"],
    )
    def test_boundary_verdict(self, ratios, vanishes, expected):
        assert boundary_verdict((0.04, 0.02, 0.01), ratios, vanishes) is expected
