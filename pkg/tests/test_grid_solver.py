import math

import numpy as np
import pytest

from twophase.coefficient import INFINITE, MetricParams
from twophase.curves import Path, length_functional
from twophase.errors import (
    ObstacleEndpointError,
    ParameterError,
    ResourceLimitError,
    WindowError,
)
from twophase.geometry import Disk
from twophase.grid_solver import (
    GridSpec,
    Stencil,
    build_field,
    build_graph,
    distance_folded,
    distance_on_field,
    graph_distances,
    local_shorten,
    shortest_path,
    shortest_paths,
)

DISK = Disk((0.5, 0.5), 0.25)
SINGLE = MetricParams.single_scale(2.0)
# Tangent, arc, tangent around the disk from (0, 0) to (1, 1).
DETOUR = 2 * math.sqrt(0.5 - 0.0625) + 0.25 * (math.pi - 2 * math.acos(0.25 / math.sqrt(0.5)))


@pytest.fixture(scope="module")
def spec():
    return GridSpec(nodes_per_cell=32)


def test_detour_constant():
    assert DETOUR == pytest.approx(1.50356, abs=1e-5)


def test_grid_spec_validation():
    with pytest.raises(ParameterError):
        GridSpec(nodes_per_cell=8)
    with pytest.raises(ParameterError):
        GridSpec(stencil="N4")
    assert GridSpec(stencil="n8").stencil is Stencil.N8


def test_grid_spec_window_snaps_outward():
    spec = GridSpec(nodes_per_cell=16, window=(0.01, 0.01, 0.99, 0.99))
    assert spec.window == (0.0, 0.0, 1.0, 1.0)
    assert spec.grid_shape == (17, 17)
    assert spec.node_bounds == (0, 0, 16, 16)


def test_grid_spec_window_empty():
    with pytest.raises(WindowError):
        GridSpec(window=(1, 0, 0, 1))


def test_grid_spec_resource_limits():
    with pytest.raises(ResourceLimitError):
        GridSpec(nodes_per_cell=16, max_cells=10, window=(0, 0, 20, 1))
    with pytest.raises(ResourceLimitError):
        GridSpec(nodes_per_cell=16, max_nodes=100, window=(0, 0, 1, 1))


def test_grid_spec_around_and_covers():
    spec = GridSpec(nodes_per_cell=16).around((0, 0), (2, 1))
    assert spec.window == (-1.0, -1.0, 3.0, 2.0)
    assert spec.covers((2, 1), padding=1)
    assert not spec.covers((3.5, 0))


def test_build_field_needs_window():
    with pytest.raises(WindowError):
        build_field(DISK, SINGLE, GridSpec(nodes_per_cell=16))


def test_build_field_window_too_small():
    spec = GridSpec(nodes_per_cell=16, window=(0, 0, 1, 1))
    with pytest.raises(WindowError):
        build_field(DISK, SINGLE, spec, endpoints=[(0.5, 0.5)])


def test_build_field_weights():
    spec = GridSpec(nodes_per_cell=16, window=(0, 0, 1, 1))
    field = build_field(DISK, SINGLE, spec)
    assert field.node_weight.shape == (17, 17)
    assert field.node_weight[8, 8] == 2
    assert field.node_weight[0, 0] == 1
    assert not field.obstacle_mask.any()
    np.testing.assert_allclose(field.node_points(np.array([8 * 17 + 8])), [[0.5, 0.5]])


def test_euclidean_medium(spec):
    params = MetricParams.single_scale(1.0)
    result = distance_folded(DISK, params, (0.1, 0.2), (0.8, 0.7), spec)
    assert result.value == pytest.approx(math.hypot(0.7, 0.5), rel=1e-9)
    assert result.path.start == (0.1, 0.2)
    assert result.path.end == (0.8, 0.7)


def test_zero_distance(spec):
    result = distance_folded(DISK, SINGLE, (0.3, 0.3), (0.3, 0.3), spec)
    assert result.value == 0
    assert result.path.is_degenerate


def test_detour_around_disk(spec):
    result = distance_folded(DISK, SINGLE, (0, 0), (1, 1), spec)
    assert result.value == pytest.approx(DETOUR, rel=0.01)
    assert result.value >= DETOUR * (1 - 1e-9)
    assert result.stats.graph_value >= result.value * (1 - 1e-9)


def test_value_is_length_of_path(spec):
    result = distance_folded(DISK, SINGLE, (0.05, 0.3), (0.95, 0.6), spec)
    assert result.value == pytest.approx(length_functional(DISK, SINGLE, result.path))


def test_symmetry(spec):
    a, b = (0.1, 0.35), (1.2, 0.8)
    forward = distance_folded(DISK, SINGLE, a, b, spec)
    backward = distance_folded(DISK, SINGLE, b, a, spec)
    assert forward.value == backward.value
    assert forward.path == backward.path.reversed()


@pytest.mark.parametrize("seed", range(4))
def test_metric_axioms_on_random_triples(seed, spec):
    rng = np.random.default_rng(seed)
    params = MetricParams(2, 0.5, 0.5)
    a, b, c = (tuple(x) for x in rng.uniform(0.0, 1.0, size=(3, 2)))

    def d(x, y):
        return distance_folded(DISK, params, x, y, spec).value

    assert d(a, b) == pytest.approx(d(b, a), rel=1e-6)
    assert d(a, c) <= (d(a, b) + d(b, c)) * (1 + 0.02)
    assert d(a, c) >= math.dist(a, c) * (1 - 1e-9)


def test_distance_grows_with_contrast(spec):
    a, b = (0.05, 0.3), (1.45, 0.9)
    values = [
        distance_folded(DISK, MetricParams(beta, 0.5, 0.5), a, b, spec).value
        for beta in (1.0, 1.5, 2.0, 4.0, 8.0)
    ]
    for lower, higher in zip(values, values[1:]):
        assert higher >= lower * (1 - 0.02)


def test_period_scaling(spec):
    unit = distance_folded(DISK, SINGLE, (0, 0), (1, 1), spec)
    half = distance_folded(DISK, SINGLE.with_epsilon(0.5), (0, 0), (0.5, 0.5), spec)
    assert half.value == pytest.approx(0.5 * unit.value, rel=1e-12)


def test_obstacle_detour(spec):
    params = MetricParams(2.0, INFINITE, 1.0)
    result = distance_folded(DISK, params, (0, 0), (1, 1), spec)
    assert result.value == pytest.approx(DETOUR, rel=0.01)
    assert math.isfinite(length_functional(DISK, params, result.path))


def test_obstacle_endpoint(spec):
    params = MetricParams(2.0, INFINITE, 1.0)
    with pytest.raises(ObstacleEndpointError):
        distance_folded(DISK, params, (0, 0), (0.5, 0.5), spec)


def test_resource_limit():
    params = MetricParams(2.0, 1, 1e-4)
    with pytest.raises(ResourceLimitError):
        distance_folded(DISK, params, (0, 0), (1, 1), GridSpec(nodes_per_cell=16))


def test_shortest_paths_matches_single_queries(spec):
    field = build_field(DISK, SINGLE, spec.around((0, 0), (2, 1)))
    targets = [(1, 1), (2, 1), (0.5, 0.1)]
    results = shortest_paths(field, (0, 0), targets)
    for t, result in zip(targets, results):
        single = shortest_path(field, (0, 0), t)
        assert result.value == pytest.approx(single.value)


def test_distance_on_field_matches_distance_folded(spec):
    params = MetricParams(2.0, 0.5, 0.5)
    field = build_field(DISK, params, spec.around((0, 0), (2, 2)))
    on_field = distance_on_field(field, (0.1, 0.0), (0.9, 0.6))
    folded = distance_folded(DISK, params, (0.1, 0.0), (0.9, 0.6), spec)
    assert on_field.value == pytest.approx(folded.value, rel=0.01)


def test_dijkstra_matches_bellman_ford():
    spec = GridSpec(nodes_per_cell=16, window=(0, 0, 1.25, 1))
    field = build_field(DISK, SINGLE, spec)
    graph = build_graph(field, (0.03, 0.07), [(1.1, 0.9)])
    np.testing.assert_allclose(
        graph_distances(graph, "dijkstra"), graph_distances(graph, "bellman_ford")
    )
    with pytest.raises(ValueError):
        graph_distances(graph, "astar")


def test_local_shorten_collapses_free_zigzag():
    spec = GridSpec(nodes_per_cell=16, window=(-1, -1, 2, 2))
    field = build_field(DISK, SINGLE, spec)
    zigzag = Path([(0.0, 0.0), (0.1, 0.1), (0.2, 0.0), (0.3, 0.1), (0.4, 0.05)])
    shortened = local_shorten(field, zigzag)
    assert shortened.start == zigzag.start
    assert shortened.end == zigzag.end
    assert len(shortened) < len(zigzag)
    assert length_functional(DISK, SINGLE, shortened) <= length_functional(
        DISK, SINGLE, zigzag
    )


def test_local_shorten_keeps_detour():
    spec = GridSpec(nodes_per_cell=16, window=(-1, -1, 2, 2))
    field = build_field(DISK, MetricParams(2.0, INFINITE, 1.0), spec)
    around = Path([(0.0, 0.5), (0.5, 0.2), (1.0, 0.5)])
    assert local_shorten(field, around) == around
