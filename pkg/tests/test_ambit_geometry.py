import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ambit_field_engine.ambit_geometry import (
    boundary_distance,
    boundary_quadrature,
    boundary_regularity,
    check_separation,
    collar_quadrature,
    discretize_boundary,
    integrate_over,
    minkowski_content,
    outward_normal,
    parallel_set_area,
    shape_from_json,
    shape_to_json,
    translate,
)
from ambit_field_engine.exceptions import DomainError, GeometryError, InvalidParameterError
from ambit_field_engine.objects import AmbitSet, Annulus, ConvexPolygon, Disk, SetDifference

SQUARE_PARALLEL_AREA = 8 * 0.1 + math.pi * 0.01 - 4 * 0.01


@pytest.fixture(scope="module")
def holed_disk() -> AmbitSet:
    return AmbitSet(SetDifference(Disk((0.0, 0.0), 1.0), (Disk((0.5, 0.0), 0.3),)))


@pytest.fixture(scope="module")
def annulus() -> AmbitSet:
    return AmbitSet(Annulus((0.0, 0.0), 0.5, 1.0))


class TestParallelSets:
    def test_disk(self, unit_disk):
        assert parallel_set_area(unit_disk, 0.1) == pytest.approx(4 * math.pi * 0.1)

    def test_square(self, unit_square):
        assert parallel_set_area(unit_square, 0.1) == pytest.approx(SQUARE_PARALLEL_AREA, rel=1e-12)

    def test_holes_add_their_neighborhood(self, holed_disk):
        assert parallel_set_area(holed_disk, 0.05) == pytest.approx(4 * math.pi * 1.3 * 0.05)

    def test_merging_neighborhoods(self, holed_disk):
        check_separation(holed_disk, 0.05)
        with pytest.raises(GeometryError, match="neighborhoods merge"):
            parallel_set_area(holed_disk, 0.15)

    def test_radius_must_be_positive(self, unit_disk):
        with pytest.raises(InvalidParameterError):
            parallel_set_area(unit_disk, 0.0)

    @pytest.mark.parametrize(
        "spec, expected",
        [
            (Disk((0.0, 0.0), 1.0), 4 * math.pi),
            (ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))), 8.0),
            (Annulus((0.0, 0.0), 0.5, 1.0), 6 * math.pi),
        ],
        ids=["disk", "square", "annulus"],
    )
    def test_minkowski_content_is_twice_the_perimeter(self, spec, expected):
        assert minkowski_content(AmbitSet(spec)) == pytest.approx(expected, rel=5e-3)


class TestShapes:
    def test_hole_touching_outer_boundary(self):
        with pytest.raises(GeometryError, match="Hole 0"):
            SetDifference(Disk((0.0, 0.0), 1.0), (Disk((0.7, 0.0), 0.3),))

    def test_overlapping_holes(self):
        with pytest.raises(GeometryError, match="overlap"):
            SetDifference(Disk((0.0, 0.0), 2.0), (Disk((0.3, 0.0), 0.5), Disk((-0.3, 0.0), 0.5)))

    def test_non_convex_polygon(self):
        with pytest.raises(InvalidParameterError):
            ConvexPolygon(((0.0, 0.0), (2.0, 0.0), (1.0, 0.2), (1.0, 2.0)))

    def test_holes_are_excluded(self, holed_disk):
        assert not holed_disk.contains((0.5, 0.0))
        assert holed_disk.contains((0.2, 0.0))
        assert holed_disk.contains((-0.5, 0.0))
        assert holed_disk.area == pytest.approx(math.pi * (1.0 - 0.09))

    def test_translate(self, unit_square):
        moved = translate(unit_square, (2.0, -1.0))
        assert moved.bbox == pytest.approx((2.0, -1.0, 3.0, 0.0))
        assert moved.area == pytest.approx(1.0)

    def test_json(self, holed_disk):
        assert shape_from_json(shape_to_json(holed_disk)) == holed_disk

    def test_bad_json(self):
        with pytest.raises(InvalidParameterError, match="Malformed shape"):
            shape_from_json('{"kind": "disk"}')

    @given(
        x=st.floats(min_value=-2.0, max_value=2.0),
        y=st.floats(min_value=-2.0, max_value=2.0),
    )
    def test_disk_membership(self, x: float, y: float):
        disk = AmbitSet(Disk((0.0, 0.0), 1.0))
        distance = math.hypot(x, y)
        if abs(distance - 1.0) > 1e-6:
            assert disk.contains((x, y)) == (distance < 1.0)


class TestDistances:
    @pytest.mark.parametrize(
        "fixture, point, expected",
        [("unit_disk", (0.0, 0.0), 1.0), ("unit_disk", (1.3, 0.0), 0.3), ("unit_square", (0.5, 0.5), 0.5)],
    )
    def test_boundary_distance(self, fixture, point, expected, request):
        ambit_set = request.getfixturevalue(fixture)
        assert boundary_distance(ambit_set, point) == pytest.approx(expected)

    def test_hole_boundary_counts(self, holed_disk):
        assert boundary_distance(holed_disk, (0.5, 0.0)) == pytest.approx(0.3)


class TestNormals:
    def test_outer_circle(self, unit_disk):
        point = (math.cos(0.3), math.sin(0.3))
        np.testing.assert_allclose(outward_normal(unit_disk, point), point, atol=1e-12)

    def test_hole_normal_points_into_the_hole(self, holed_disk):
        np.testing.assert_allclose(outward_normal(holed_disk, (0.2, 0.0)), (1.0, 0.0), atol=1e-12)

    def test_square_edge_and_corner(self, unit_square):
        np.testing.assert_allclose(outward_normal(unit_square, (0.5, 0.0)), (0.0, -1.0), atol=1e-12)
        np.testing.assert_array_equal(outward_normal(unit_square, (1.0, 1.0)), (0.0, 0.0))

    def test_off_boundary(self, unit_disk):
        with pytest.raises(DomainError):
            outward_normal(unit_disk, (0.5, 0.0))


class TestBoundaryRules:
    def test_discretization_respects_mesh(self, holed_disk):
        disc = discretize_boundary(holed_disk, 0.1)
        assert disc.lengths.max() <= 0.1 + 1e-12
        assert disc.total_length == pytest.approx(2 * math.pi * 1.3)
        assert set(np.unique(disc.component).tolist()) == {0, 1}

    def test_square_discretization(self, unit_square):
        disc = discretize_boundary(unit_square, 0.3)
        assert len(disc) == 16
        assert disc.total_length == pytest.approx(4.0)

    @pytest.mark.parametrize("fixture, area", [("unit_disk", math.pi), ("unit_square", 1.0), ("holed_disk", 0.91 * math.pi)])
    def test_divergence_theorem(self, fixture, area, request):
        ambit_set = request.getfixturevalue(fixture)
        pts, w, normals = boundary_quadrature(ambit_set)
        assert w.sum() == pytest.approx(ambit_set.perimeter, rel=1e-12)
        # div q = 2
        assert np.sum(w * np.sum(pts * normals, axis=1)) == pytest.approx(2 * area, rel=1e-10)

    def test_collar_weights_match_parallel_area(self, unit_square):
        pts, w, in_set = collar_quadrature(unit_square, 0.1)
        assert w.sum() == pytest.approx(SQUARE_PARALLEL_AREA, rel=1e-12)
        assert w[in_set].sum() == pytest.approx(4 * 0.1 - 4 * 0.01, rel=1e-12)
        np.testing.assert_array_equal(unit_square.contains(pts[in_set]), True)

    def test_disk_collar(self, unit_disk):
        pts, w, in_set = collar_quadrature(unit_disk, 0.05)
        assert w.sum() == pytest.approx(parallel_set_area(unit_disk, 0.05), rel=1e-12)
        assert np.all(np.linalg.norm(pts[in_set], axis=1) <= 1.0)

    def test_regularity(self, unit_square, holed_disk):
        square = boundary_regularity(unit_square)
        assert square.passed
        assert square.components[0].corners == 4
        holed = boundary_regularity(holed_disk)
        assert [c.outward for c in holed.components] == [True, False]
        assert holed.components[1].reach == pytest.approx(0.3)

    def test_round_sets_have_positive_reach(self, unit_disk, annulus):
        disk = boundary_regularity(unit_disk)
        assert disk.passed
        assert (disk.components[0].reach, disk.components[0].corners) == (pytest.approx(1.0), 0)
        ring = boundary_regularity(annulus)
        assert ring.passed
        assert len(ring.components) == 2


class TestAreaRule:
    def test_disk_second_moment(self, unit_disk):
        assert integrate_over(unit_disk, lambda q: q[:, 0] ** 2) == pytest.approx(math.pi / 4, rel=1e-12)

    def test_square_second_moment(self, unit_square):
        assert integrate_over(unit_square, lambda q: q[:, 0] ** 2) == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_holes_are_subtracted(self, holed_disk, annulus):
        assert integrate_over(holed_disk, lambda q: np.ones(len(q))) == pytest.approx(holed_disk.area, rel=1e-12)
        assert integrate_over(annulus, lambda q: np.ones(len(q))) == pytest.approx(0.75 * math.pi, rel=1e-12)
