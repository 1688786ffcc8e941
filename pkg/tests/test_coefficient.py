import math

import numpy as np
import pytest

from twophase.coefficient import (
    INFINITE,
    MetricParams,
    check_admissible,
    eval_contrast,
    eval_contrast_array,
    eval_single_scale,
    format_exponent,
    parse_exponent,
)
from twophase.errors import ParameterError
from twophase.geometry import Disk

DISK = Disk((0.5, 0.5), 0.25)
LAMBDA_DISK = math.pi / 2


@pytest.mark.parametrize(
    "text,expected", [("0.5", 0.5), ("2", 2.0), (1, 1.0), ("inf", INFINITE), ("INF", INFINITE)]
)
def test_parse_exponent(text, expected):
    assert parse_exponent(text) == expected


def test_parse_exponent_invalid():
    with pytest.raises(ParameterError):
        parse_exponent("-1")
    with pytest.raises(ParameterError):
        parse_exponent("big")


def test_format_exponent():
    assert format_exponent(INFINITE) == "inf"
    assert format_exponent(0.5) == "0.5"
    assert format_exponent(2.0) == "2"


def test_metric_params_validation():
    with pytest.raises(ParameterError):
        MetricParams(beta=0, p=1)
    with pytest.raises(ParameterError):
        MetricParams(beta=2, p=1, epsilon=0)
    with pytest.raises(ParameterError):
        MetricParams(beta=2, p=-0.5)


def test_inclusion_weight():
    assert MetricParams(2, 1, 0.25).inclusion_weight == pytest.approx(8)
    assert MetricParams(2, 0.5, 0.25).inclusion_weight == pytest.approx(4)
    assert MetricParams(2, INFINITE, 0.25).inclusion_weight == math.inf
    assert MetricParams.single_scale(3, 0.1).inclusion_weight == 3


def test_unfolded_keeps_weight():
    params = MetricParams(2, 1, 0.2)
    unit = params.unfolded()
    assert unit.epsilon == 1
    assert unit.inclusion_weight == pytest.approx(params.inclusion_weight)
    assert MetricParams(2, INFINITE, 0.2).unfolded().is_obstacle


def test_eval_single_scale():
    assert eval_single_scale(DISK, 2, (0.5, 0.5)) == 2
    assert eval_single_scale(DISK, 2, (1.5, -0.5)) == 2
    assert eval_single_scale(DISK, 2, (0.0, 0.0)) == 1
    # Boundary points take the matrix value.
    assert eval_single_scale(DISK, 2, (0.75, 0.5)) == 1


def test_eval_contrast():
    params = MetricParams(2, 1, 0.5)
    assert eval_contrast(DISK, params, (0.5, 0.5)) == pytest.approx(4)
    assert eval_contrast(DISK, params, (0.0, 0.5)) == 1
    obstacle = MetricParams(2, INFINITE, 0.5)
    assert eval_contrast(DISK, obstacle, (0.5, 0.5)) == math.inf


def test_eval_contrast_array():
    params = MetricParams(2, 1, 0.5)
    xy = np.array([[0.5, 0.5], [0.0, 0.0], [2.5, 1.5]])
    np.testing.assert_allclose(eval_contrast_array(DISK, params, xy), [4, 1, 4])


def test_check_admissible():
    assert check_admissible(MetricParams(2, 0.5, 0.25), LAMBDA_DISK)
    assert check_admissible(MetricParams(2, INFINITE, 0.25), LAMBDA_DISK)


def test_check_admissible_beta_too_small():
    result = check_admissible(MetricParams(1.5, 1, 0.1), LAMBDA_DISK)
    assert not result
    assert result.diagnostic == "beta ≤ lambda"


def test_check_admissible_beta_too_small_obstacle():
    assert not check_admissible(MetricParams(1.5, INFINITE, 0.1), LAMBDA_DISK)


def test_check_admissible_epsilon_too_large():
    # epsilon^p must stay below beta / lambda.
    result = check_admissible(MetricParams(1.6, 1, 1.5), LAMBDA_DISK)
    assert not result
    assert result.diagnostic == "epsilon^p ≥ beta/lambda"
    assert check_admissible(MetricParams(1.6, 1, 0.5), LAMBDA_DISK)


def test_check_admissible_invalid_lambda():
    with pytest.raises(ParameterError):
        check_admissible(MetricParams(2, 1, 0.5), 0)


@pytest.mark.parametrize("p", [0.5, 1.0, INFINITE])
def test_eval_contrast_is_periodic(p):
    rng = np.random.default_rng(2)
    params = MetricParams(2, p, 0.25)
    xy = rng.uniform(0.0, 1.0, size=(200, 2))
    shift = rng.integers(-6, 7, size=(200, 2)) * params.epsilon
    np.testing.assert_array_equal(
        eval_contrast_array(DISK, params, xy), eval_contrast_array(DISK, params, xy + shift)
    )
