import math

import numpy as np
import pytest

from twophase.coefficient import INFINITE, MetricParams
from twophase.curves import (
    Path,
    length_functional,
    piecewise_geodesic_refine,
    push_to_walls,
    segment_cost,
    snap_to_matrix,
)
from twophase.errors import CurveError
from twophase.geometry import Disk, Square, periodic_signed_distance_array
from twophase.grid_solver import GridSpec

DISK = Disk((0.5, 0.5), 0.25)
SINGLE = MetricParams.single_scale(2.0)


def test_path_drops_repeated_vertices():
    path = Path([(0, 0), (0, 0), (1, 0), (1, 0), (1, 1)])
    assert len(path) == 3
    assert path.euclidean_length == 2


def test_path_constant():
    path = Path([(0.5, 0.5), (0.5, 0.5)])
    assert len(path) == 2
    assert path.is_degenerate
    assert path.euclidean_length == 0


def test_path_invalid():
    with pytest.raises(CurveError):
        Path([])
    with pytest.raises(CurveError):
        Path([(0, 0, 0)])
    with pytest.raises(CurveError):
        Path([(0, 0), (math.nan, 1)])


def test_path_vertices_read_only():
    path = Path([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        path.vertices[0, 0] = 2


def test_path_points_at():
    path = Path([(0, 0), (1, 0), (1, 1)])
    np.testing.assert_allclose(path.points_at([0, 0.5, 1.5, 5]), [(0, 0), (0.5, 0), (1, 0.5), (1, 1)])
    np.testing.assert_allclose(path.arclength, [0, 1, 2])


def test_path_reversed_and_scaled():
    path = Path([(0, 0), (1, 0), (1, 1)])
    assert path.reversed().start == (1, 1)
    assert path.scaled(2).end == (2, 2)


def test_path_concatenate():
    path = Path.concatenate([Path([(0, 0), (1, 0)]), Path([(1, 0), (1, 1)])])
    assert path == Path([(0, 0), (1, 0), (1, 1)])


def test_path_hausdorff_distance():
    a = Path([(0, 0), (1, 0)])
    b = Path([(0, 0.5), (1, 0.5)])
    assert a.hausdorff_distance(b) == pytest.approx(0.5)
    assert a.hausdorff_distance(a) == 0


def test_path_records():
    table = Path([(0, 0), (0.5, 1)]).records()
    assert table.fields == ["x", "y"]
    assert table.records[1] == {"x": "0.5", "y": "1"}


def test_length_functional_matrix_only():
    path = Path([(0, 0.1), (1, 0.1)])
    assert length_functional(DISK, SINGLE, path) == pytest.approx(1.0)


def test_length_functional_through_inclusion():
    path = Path([(0, 0.5), (1, 0.5)])
    assert length_functional(DISK, SINGLE, path) == pytest.approx(0.5 + 2 * 0.5)


def test_length_functional_scaled_medium():
    # Period 1/2 and p = 1: the inclusion weight is 4.
    params = MetricParams(2.0, 1, 0.5)
    path = Path([(0, 0.25), (1, 0.25)])
    assert length_functional(DISK, params, path) == pytest.approx(0.5 + 4 * 0.5)


def test_length_functional_obstacle():
    params = MetricParams(2.0, INFINITE, 1.0)
    assert length_functional(DISK, params, Path([(0, 0.5), (1, 0.5)])) == math.inf
    assert length_functional(DISK, params, Path([(0, 0.1), (1, 0.1)])) == pytest.approx(1)


def test_segment_cost_tangent_is_euclidean():
    params = MetricParams(2.0, INFINITE, 1.0)
    assert segment_cost(DISK, params, (0, 0.75), (1, 0.75)) == pytest.approx(1.0)


def test_length_functional_at_least_euclidean():
    path = Path([(0.1, 0.0), (0.6, 0.6), (1.2, 0.3)])
    assert length_functional(DISK, SINGLE, path) >= path.euclidean_length


def test_snap_to_matrix_keeps_matrix_points():
    assert snap_to_matrix(DISK, 1.0, (0.1, 0.1)) == (0.1, 0.1)
    assert snap_to_matrix(DISK, 1.0, (0.75, 0.5)) == (0.75, 0.5)


def test_snap_to_matrix_center():
    assert snap_to_matrix(DISK, 1.0, (0.5, 0.5)) == pytest.approx((0.75, 0.5))
    assert snap_to_matrix(DISK, 0.5, (0.25, 0.25)) == pytest.approx((0.375, 0.25))


def test_snap_to_matrix_idempotent():
    for eps in (1.0, 1 / 3, 0.1):
        once = snap_to_matrix(DISK, eps, (0.4, 0.45))
        assert snap_to_matrix(DISK, eps, once) == once
        assert once.distance((0.4, 0.45)) <= math.sqrt(2) * eps


def test_push_to_walls_untouched_path():
    path = Path([(0, 0.1), (1, 0.1)])
    assert push_to_walls(DISK, 1.0, path) == path


def test_push_to_walls_horizontal():
    path = Path([(0, 0.5), (1, 0.5)])
    pushed = push_to_walls(DISK, 1.0, path)
    assert pushed.start == (0, 0.5)
    assert pushed.end == (1, 0.5)
    assert pushed.euclidean_length == pytest.approx(0.5 + math.pi * 0.25, rel=1e-3)
    assert pushed.deviation_from(path) <= math.sqrt(2)
    inside = periodic_signed_distance_array(DISK, pushed.vertices)
    assert np.all(inside >= -1e-9)


def test_push_to_walls_diagonal_length():
    pushed = push_to_walls(DISK, 1.0, Path([(0, 0), (1, 1)]))
    expected = math.sqrt(2) - 0.5 + math.pi * 0.25
    assert pushed.euclidean_length == pytest.approx(expected, abs=1e-3)


def test_push_to_walls_is_matrix_length():
    path = Path([(0.05, 0.1), (0.9, 0.95)])
    for eps in (1.0, 0.5, 0.25):
        pushed = push_to_walls(DISK, eps, path)
        params = MetricParams(2.0, 1, eps)
        assert length_functional(DISK, params, pushed) == pytest.approx(
            pushed.euclidean_length
        )
        assert pushed.deviation_from(path) <= math.sqrt(2) * eps


def test_push_to_walls_square():
    square = Square((0.5, 0.5), 0.2)
    pushed = push_to_walls(square, 1.0, Path([(0, 0.5), (1, 0.5)]))
    assert pushed.euclidean_length == pytest.approx(0.3 + 0.4 + 0.4 + 0.3)


def test_push_to_walls_endpoint_inside():
    with pytest.raises(CurveError):
        push_to_walls(DISK, 1.0, Path([(0.5, 0.5), (1, 0.5)]))


def test_piecewise_geodesic_refine_straight():
    path = Path([(0.1, 0.1), (0.9, 0.1)])
    spec = GridSpec(nodes_per_cell=16)
    for M in (1, 2):
        refined = piecewise_geodesic_refine(DISK, SINGLE, path, M, spec)
        assert refined.start == path.start
        assert refined.end == path.end
        assert refined.euclidean_length == pytest.approx(0.8)


def test_piecewise_geodesic_refine_invalid_pieces():
    with pytest.raises(CurveError):
        piecewise_geodesic_refine(DISK, SINGLE, Path([(0, 0), (1, 0)]), 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_length_functional_ignores_collinear_vertices(seed):
    rng = np.random.default_rng(seed)
    params = MetricParams(2, 0.5, 0.5)
    vertices = rng.uniform(-1.0, 2.0, size=(5, 2))
    t = rng.uniform(0.0, 1.0, size=(4, 1))
    inserted = vertices[:-1] + t * (vertices[1:] - vertices[:-1])
    denser = np.empty((9, 2))
    denser[0::2] = vertices
    denser[1::2] = inserted
    assert length_functional(DISK, params, Path(denser)) == pytest.approx(
        length_functional(DISK, params, Path(vertices)), rel=1e-12
    )


def test_piecewise_geodesic_refine_diagonal_detour():
    detour = 2 * math.sqrt(0.5 - 0.0625) + 0.25 * (
        math.pi - 2 * math.acos(0.25 / math.sqrt(0.5))
    )
    obstacle = MetricParams(2, INFINITE, 1.0)
    wall = push_to_walls(DISK, 1.0, Path([(0, 0), (1, 1)]))
    spec = GridSpec(nodes_per_cell=32)
    for M in (1, 2):
        refined = piecewise_geodesic_refine(DISK, obstacle, wall, M, spec)
        value = length_functional(DISK, obstacle, refined)
        assert value == pytest.approx(detour, rel=0.01)
        assert value >= detour * (1 - 1e-9)
        assert value <= length_functional(DISK, obstacle, wall)
