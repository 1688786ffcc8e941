import math

import pytest

from twophase.curves import Path
from twophase.errors import ParameterError
from twophase.geometry import ConvexPolygon, Disk, Square
from twophase.grid_solver import GridSpec
from twophase.opacity import estimate_lambda, incursion_depth, verify_avoidance

DISK = Disk((0.5, 0.5), 0.25)
SQUARE = Square((0.5, 0.5), 0.2)


def test_lambda_disk():
    estimate = estimate_lambda(DISK)
    assert estimate.lambda_hat == pytest.approx(math.pi / 2, abs=1e-4)
    a, b = estimate.worst_pair
    # Antipodal points.
    assert a.distance(b) == pytest.approx(0.5)
    assert estimate.n_samples == 256


def test_lambda_square():
    estimate = estimate_lambda(SQUARE)
    assert estimate.lambda_hat == pytest.approx(2.0, abs=1e-3)
    a, b = estimate.worst_pair
    # Midpoints of opposite sides.
    assert a.distance(b) == pytest.approx(0.4, abs=1e-3)
    assert estimate.lambda_hat > estimate_lambda(DISK).lambda_hat


def test_lambda_is_scale_invariant():
    small = estimate_lambda(Disk((0.5, 0.5), 0.1)).lambda_hat
    assert small == pytest.approx(estimate_lambda(DISK).lambda_hat, abs=1e-6)


def test_lambda_triangle():
    triangle = ConvexPolygon([(0.2, 0.2), (0.8, 0.2), (0.5, 0.8)])
    lambda_hat = estimate_lambda(triangle).lambda_hat
    assert 1 <= lambda_hat < math.inf


def test_lambda_needs_samples():
    with pytest.raises(ParameterError):
        estimate_lambda(DISK, n_samples=32)


def test_incursion_depth():
    assert incursion_depth(DISK, Path([(0, 0.5), (1, 0.5)]), 0.1) == pytest.approx(0.25)
    assert incursion_depth(DISK, Path([(0, 0.1), (2, 0.1)]), 0.1) == 0.0


def test_verify_avoidance_disk():
    spec = GridSpec(nodes_per_cell=16)
    report = verify_avoidance(
        DISK, 2.0, n_trials=6, spec=spec, seed=1, lambda_hat=math.pi / 2, cells=2.0
    )
    assert report.asserted
    assert len(report.trials) == 6
    assert report.violations == []
    assert report.max_depth <= spec.h
    assert report.records().fields == [
        "trial", "sx", "sy", "tx", "ty", "distance", "depth", "violation",
    ]


def test_verify_avoidance_is_reproducible():
    spec = GridSpec(nodes_per_cell=16)
    first = verify_avoidance(DISK, 2.0, n_trials=2, spec=spec, lambda_hat=math.pi / 2, cells=2.0)
    second = verify_avoidance(DISK, 2.0, n_trials=2, spec=spec, lambda_hat=math.pi / 2, cells=2.0)
    assert first.records() == second.records()


def test_verify_avoidance_below_threshold_is_not_asserted():
    report = verify_avoidance(
        DISK, 1.2, n_trials=2, spec=GridSpec(nodes_per_cell=16), lambda_hat=math.pi / 2, cells=2.0
    )
    assert not report.asserted
    assert len(report.trials) == 2


@pytest.mark.slow
def test_verify_avoidance_square():
    report = verify_avoidance(
        SQUARE, 2.5, n_trials=50, spec=GridSpec(nodes_per_cell=32), lambda_hat=2.0
    )
    assert report.violations == []


def test_verify_avoidance_with_workers():
    spec = GridSpec(nodes_per_cell=16)
    args = dict(n_trials=3, spec=spec, seed=4, lambda_hat=math.pi / 2, cells=2.0)
    inline = verify_avoidance(DISK, 2.0, **args)
    pooled = verify_avoidance(DISK, 2.0, workers=2, **args)
    assert pooled.records() == inline.records()
