import math

import numpy as np
import pytest

from ambit_field_engine.constants import FunctionalMode
from ambit_field_engine.exceptions import (
    DomainError,
    GeometryError,
    InvalidParameterError,
    UnsupportedLawError,
)
from ambit_field_engine.field_engine import realize, window_for
from ambit_field_engine.functionals import (
    cell_functional,
    cf_distance,
    cf_flux_exact,
    cf_limit_exact,
    cf_sigma_exact,
    circulation,
    circulation_of_field,
    disk_weights,
    empirical_cf,
    flux,
    flux_decomposition,
    flux_of_field,
    limit_omega,
    limit_sigma,
    line_functional,
    partial_circle_integral,
    partial_circle_limit,
    simulate_limit_field,
    source_weights,
)
from ambit_field_engine.levy_basis import v_beta
from ambit_field_engine.objects import (
    AmbitSet,
    AtomRealization,
    CharacteristicTriplet,
    CompoundPoisson,
    ConstantJumps,
    Disk,
    Polynomial,
    SeedStableParams,
    Window,
)
from ambit_field_engine.utils import stream

# F = (x + y^2, y + x y / 2): div = 2 + x / 2, curl = y / 2 - 2 y
QUADRATIC = Polynomial(((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)), ((0.0, 1.0), (0.0, 0.5)))
CP_TRIPLET = CharacteristicTriplet(levy_measure=CompoundPoisson(5.0, ConstantJumps(2.0)))
WINDOW = Window(-3.0, -3.0, 3.0, 3.0)
GAUSSIAN_SEED = SeedStableParams(beta=2.0, b=1.0)
# jumps of size 2 have no truncated first moment, so the drift density is zero
DENSE_CP = CharacteristicTriplet(levy_measure=CompoundPoisson(200.0, ConstantJumps(2.0)))


def _stokes_field(q: np.ndarray) -> np.ndarray:
    # div = 3x, curl = y
    return np.column_stack((q[:, 0] ** 2, q[:, 0] * q[:, 1]))


def _smooth_field(q: np.ndarray) -> np.ndarray:
    return np.column_stack((np.exp(q[:, 0]), q[:, 0] * np.sin(q[:, 1])))


def _atoms(positions, weights, drift: float = 0.0) -> AtomRealization:
    return AtomRealization(WINDOW, np.asarray(positions, dtype=float), np.asarray(weights, dtype=float), drift, CP_TRIPLET)


class TestDeterministicFields:
    @pytest.mark.parametrize("p", [(1.0, 0.5), (0.5, -1.0), (-2.0, 1.0)])
    def test_stokes_and_gauss(self, p):
        r = 1e-2
        area = math.pi * r * r
        assert flux_of_field(_stokes_field, p, r) / area == pytest.approx(3.0 * p[0], rel=1e-3)
        assert circulation_of_field(_stokes_field, p, r) / area == pytest.approx(p[1], rel=1e-3)

    def test_second_order_convergence(self):
        p = (0.3, 0.2)
        divergence = math.exp(p[0]) + p[0] * math.cos(p[1])

        def error(r: float) -> float:
            return abs(flux_of_field(_smooth_field, p, r) / (math.pi * r * r) - divergence)

        order = math.log2(error(0.1) / error(0.05))
        assert order >= 1.9


class TestWeights:
    def test_single_collar_atom(self, unit_disk):
        atom = np.array([0.95, 0.02])
        r = 0.1
        # dense trapezoid of 2 F(r u - q) . u over the nodes where q - r u stays in the unit disk
        theta = np.linspace(0.0, 2.0 * math.pi, 1 << 20, endpoint=False)
        u = np.column_stack((np.cos(theta), np.sin(theta)))
        x, y = (r * u - atom).T
        values = np.column_stack((x + y**2, y + 0.5 * x * y))
        inside = np.linalg.norm(atom - r * u, axis=1) < 1.0
        expected = 2.0 * r * (2.0 * math.pi / theta.size) * np.einsum("ij,ij->i", values, u)[inside].sum()
        assert abs(expected) > 0.05
        value = line_functional(_atoms([atom], [2.0]), QUADRATIC, unit_disk, (0.0, 0.0), r, n_theta=8192)
        assert value == pytest.approx(expected, rel=2e-3)

    @pytest.mark.parametrize("mode", list(FunctionalMode))
    def test_disk_rule_matches_circle_rule_for_deep_sources(self, unit_disk, mode):
        sources = np.array([[0.2, 0.1], [-0.4, 0.3], [0.0, -0.6]])
        circle = source_weights(QUADRATIC, unit_disk, (0.1, 0.0), 0.05, sources, mode=mode)
        disk = disk_weights(QUADRATIC, (0.1, 0.0), 0.05, sources, mode)
        np.testing.assert_allclose(disk, circle, rtol=1e-10, atol=1e-14)

    def test_sources_outside_weigh_nothing(self, unit_disk):
        weights = source_weights(QUADRATIC, unit_disk, (0.0, 0.0), 0.05, np.array([[2.0, 2.0]]))
        assert weights[0] == 0.0


class TestDecomposition:
    @pytest.mark.parametrize("mode", list(FunctionalMode))
    def test_residual_is_roundoff(self, mode, seed):
        ambit_set = AmbitSet(Disk((0.0, 0.0), 0.5))
        window = window_for(ambit_set, [[0.0, 0.0]], 0.05, 0.005)
        real = realize(DENSE_CP, window, 0.005, stream(seed, 21))
        assert real.drift == 0.0
        parts = flux_decomposition(real, QUADRATIC, ambit_set, (0.0, 0.0), 0.05, mode=mode)
        assert parts.n_interior_atoms + parts.n_boundary_atoms > 0
        assert abs(parts.residual) < 1e-10

    def test_grid_realizations_are_rejected(self, rng, unit_disk):
        real = realize(CharacteristicTriplet(b=1.0), WINDOW, 0.5, rng)
        with pytest.raises(UnsupportedLawError):
            flux_decomposition(real, QUADRATIC, unit_disk, (0.0, 0.0), 0.05)

    def test_deep_atoms_give_the_classical_limit(self, unit_disk):
        real = _atoms([[0.2, 0.1], [-0.3, 0.4], [0.1, -0.5]], [1.0, -0.5, 2.0])
        r = 0.01
        sigma = limit_sigma(real, QUADRATIC, unit_disk, (0.0, 0.0), gamma_d=0.0)
        omega = limit_omega(real, QUADRATIC, unit_disk, (0.0, 0.0), gamma_d=0.0)
        assert flux(real, QUADRATIC, unit_disk, (0.0, 0.0), r) / (math.pi * r * r) == pytest.approx(sigma, rel=1e-9)
        assert circulation(real, QUADRATIC, unit_disk, (0.0, 0.0), r) / (math.pi * r * r) == pytest.approx(
            omega, rel=1e-9
        )

    def test_limit_sigma_of_deep_atoms(self, unit_disk):
        real = _atoms([[0.2, 0.1]], [3.0])
        # div F(p - q) at p - q = (-0.2, -0.1)
        assert limit_sigma(real, QUADRATIC, unit_disk, (0.0, 0.0), gamma_d=0.0) == pytest.approx(3.0 * 1.9)


class TestPartialCircles:
    @pytest.mark.parametrize("s", [-0.5, 0.0, 0.7])
    @pytest.mark.parametrize("side", [1, 2])
    def test_first_order(self, unit_disk, s, side):
        kernel = Polynomial.constant(1.0, 0.0)
        r = 1e-3
        value = partial_circle_integral(kernel, unit_disk, (1.0, 0.0), s, r, side) / r
        expected = partial_circle_limit(kernel, unit_disk, (1.0, 0.0), s, side, order=1)
        assert expected == pytest.approx((-1) ** side * 2 * math.sqrt(1 - s * s))
        assert value == pytest.approx(expected, rel=0.02)

    @pytest.mark.parametrize("s", [-0.5, 0.0, 0.7])
    @pytest.mark.parametrize("side", [1, 2])
    def test_second_order_for_kernels_vanishing_at_the_point(self, unit_disk, s, side):
        # F(x) = x - (1, 0), div F = 2
        kernel = Polynomial(((-1.0,), (1.0,)), ((0.0, 1.0),))
        r = 1e-3
        value = partial_circle_integral(kernel, unit_disk, (1.0, 0.0), s, r, side) / (r * r)
        expected = partial_circle_limit(kernel, unit_disk, (1.0, 0.0), s, side, order=2)
        inside = math.acos(s) - s * math.sqrt(1 - s * s)
        assert expected == pytest.approx(2.0 * (inside if side == 1 else math.pi - inside))
        assert value == pytest.approx(expected, rel=0.02)

    @pytest.mark.parametrize("s", [-1.0, 1.0])
    def test_vanishes_at_the_ends(self, unit_disk, s):
        kernel = Polynomial.constant(1.0, 0.0)
        assert partial_circle_limit(kernel, unit_disk, (0.0, 1.0), s, 1, order=1) == pytest.approx(0.0, abs=1e-12)

    def test_corner(self, unit_square):
        with pytest.raises(DomainError, match="corner"):
            partial_circle_integral(Polynomial.constant(1.0, 0.0), unit_square, (1.0, 1.0), 0.0, 1e-3, 1)

    def test_off_boundary(self, unit_disk):
        with pytest.raises(DomainError):
            partial_circle_limit(Polynomial.constant(1.0, 0.0), unit_disk, (0.5, 0.0), 0.0, 1)

    def test_bad_arguments(self, unit_disk):
        kernel = Polynomial.constant(1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            partial_circle_integral(kernel, unit_disk, (1.0, 0.0), 0.0, 1e-3, 3)
        with pytest.raises(InvalidParameterError):
            partial_circle_integral(kernel, unit_disk, (1.0, 0.0), 1.5, 1e-3, 1)
        with pytest.raises(InvalidParameterError):
            partial_circle_limit(kernel, unit_disk, (1.0, 0.0), 0.0, 1, order=3)


class TestBoundaryLimit:
    def test_shape_and_repeated_points(self, unit_disk, rng):
        draws = simulate_limit_field(
            unit_disk, Polynomial.constant(1.0, 0.0), GAUSSIAN_SEED, 0.05, rng, [[0.0, 0.0], [0.3, 0.0], [0.0, 0.0]], size=4000
        )
        assert draws.shape == (4000, 3)
        np.testing.assert_array_equal(draws[:, 0], draws[:, 2])
        assert abs(np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]) < 0.06

    def test_gaussian_variance(self, unit_disk, rng):
        draws = simulate_limit_field(unit_disk, Polynomial.constant(1.0, 0.0), GAUSSIAN_SEED, 0.05, rng, [[0.0, 0.0]], size=20_000)
        assert draws.var() == pytest.approx(math.pi, rel=0.05)

    def test_shared_segments(self, unit_square, rng):
        with pytest.raises(GeometryError, match="share a segment"):
            simulate_limit_field(
                unit_square, Polynomial.constant(1.0, 0.0), GAUSSIAN_SEED, 0.1, rng, [[0.0, 0.0], [1.0, 0.0]]
            )

    def test_exact_cumulant(self, unit_disk):
        z = np.array([0.5, 1.0, 2.0])
        cumulant = cf_limit_exact(GAUSSIAN_SEED, Polynomial.constant(1.0, 0.0), unit_disk, z)
        np.testing.assert_allclose(cumulant.real, -0.5 * z**2 * math.pi, rtol=1e-10)
        np.testing.assert_allclose(cumulant.imag, 0.0, atol=1e-12)

    def test_flux_cumulant_approaches_the_limit(self, unit_disk):
        r = 0.01
        norm = v_beta(2.0) * r**1.5
        z = np.array([0.5, 1.0])
        kernel = Polynomial.constant(1.0, 0.0)
        flux_cumulant = cf_flux_exact(CharacteristicTriplet(b=1.0), kernel, unit_disk, (0.0, 0.0), r, z / norm, n_theta=1024)
        limit = cf_limit_exact(GAUSSIAN_SEED, kernel, unit_disk, z)
        np.testing.assert_allclose(flux_cumulant.real, limit.real, rtol=0.05)


class TestCumulants:
    def test_sigma_cumulant_for_a_linear_kernel(self, unit_disk):
        triplet = CharacteristicTriplet(gamma=0.4, levy_measure=CompoundPoisson(2.0, ConstantJumps(0.5)))
        kernel = Polynomial.linear([[1.0, 0.0], [0.0, 1.0]])
        z = 0.8
        # compensated drift -0.6 leaves psi_tilde(u) = 2 (exp(i u / 2) - 1) at u = 2 z
        expected = math.pi * 2.0 * (np.exp(1j * z) - 1.0)
        assert cf_sigma_exact(triplet, kernel, unit_disk, z) == pytest.approx(expected, rel=1e-10)

    def test_empirical_cf(self):
        samples = np.zeros(10)
        np.testing.assert_allclose(empirical_cf(samples, [0.0, 1.0, 2.0]), 1.0)
        assert cf_distance([1.0, 0.5j], [1.0, 0.0]) == pytest.approx(0.5)


def test_cell_functional_matches_line_functional(rng):
    ambit_set = AmbitSet(Disk((0.0, 0.0), 0.3))
    kernel = Polynomial.linear([[1.0, 0.5], [-0.5, 2.0]])
    h, r = 0.02, 0.05
    window = window_for(ambit_set, [[0.0, 0.0]], r, h)
    real = realize(CharacteristicTriplet(b=1.0), window, h, rng)
    for mode in FunctionalMode:
        by_cells = cell_functional(real, kernel, ambit_set, (0.0, 0.0), r, mode=mode)
        by_circle = line_functional(real, kernel, ambit_set, (0.0, 0.0), r, mode=mode)
        assert by_cells == pytest.approx(by_circle, rel=1e-8, abs=1e-12)


class TestDeterministicBasis:
    @pytest.mark.parametrize("kernel", [Polynomial.constant(1.0, 0.0), QUADRATIC], ids=["constant", "quadratic"])
    @pytest.mark.parametrize("p", [(0.0, 0.0), (0.0034, 0.0), (0.4, -0.2)])
    def test_functionals_vanish(self, rng, unit_disk, kernel, p):
        r = 0.05
        window = window_for(unit_disk, [p], r, 0.01)
        real = realize(CharacteristicTriplet(gamma=5.0), window, 0.01, rng)
        assert flux(real, kernel, unit_disk, p, r) == pytest.approx(0.0, abs=1e-12)
        assert circulation(real, kernel, unit_disk, p, r) == pytest.approx(0.0, abs=1e-12)


def test_flux_cf_matches_monte_carlo(lab_config, seed):
    ambit_set = AmbitSet(Disk((0.0, 0.0), 0.3))
    r = 0.1
    z = np.array([5.0, 10.0, 20.0])
    window = window_for(ambit_set, [[0.0, 0.0]], r, 0.01)
    draws = np.array(
        [
            flux(realize(CP_TRIPLET, window, 0.01, stream(seed, 31, k)), QUADRATIC, ambit_set, (0.0, 0.0), r)
            for k in range(lab_config.replicates)
        ]
    )
    oracle = np.exp(cf_flux_exact(CP_TRIPLET, QUADRATIC, ambit_set, (0.0, 0.0), r, z))
    # the law is far from degenerate on this grid
    assert np.min(np.abs(oracle - 1.0)) > 0.1
    assert cf_distance(empirical_cf(draws, z), oracle) < 3.0 / math.sqrt(lab_config.replicates) + 0.01
