import math

import pytest

from src.analysis.theory import (
    TheoryBound,
    expected_ldof_center,
    false_detection_alpha,
    false_detection_bound,
    ldof_lower_bound,
    required_k,
    uniform_ball_mean_square,
)
from src.core.errors import ParameterError

HUGE_D = 10 ** 9


def test_lower_bound_constants():
    assert ldof_lower_bound() == 0.5


@pytest.mark.parametrize("d", [1, 2, 3, 10, 100])
def test_centre_ratio_from_the_ball_moment(d):
    assert expected_ldof_center(d, 2.5) == pytest.approx(0.5, rel=1e-15)


def test_centre_ratio_needs_a_radius():
    with pytest.raises(ParameterError):
        expected_ldof_center(3, 0.0)


def test_alpha_values():
    assert false_detection_alpha(2, 1.0) == pytest.approx(0.005, rel=1e-12)
    assert false_detection_alpha(HUGE_D, 1.0) == pytest.approx(1 / 50, rel=1e-6)
    assert false_detection_alpha(3, 0.5 + 1e-9) < 1e-15


def test_alpha_increases_in_d_and_c():
    ds = [1, 2, 3, 5, 10, 100]
    cs = [0.6, 0.8, 1.0, 2.0, 5.0]
    for c in cs:
        values = [false_detection_alpha(d, c) for d in ds]
        assert values == sorted(values) and len(set(values)) == len(values)
    for d in ds:
        values = [false_detection_alpha(d, c) for c in cs]
        assert values == sorted(values) and len(set(values)) == len(values)


def test_bound_values():
    assert false_detection_bound(2, 5, 1.0) == 1.0
    assert false_detection_bound(1002, HUGE_D, 1.0) == pytest.approx(math.exp(-20), rel=1e-5)
    assert false_detection_bound(1002, HUGE_D, 1.0) == pytest.approx(2.06e-9, rel=1e-2)


def test_bound_decreases_in_k():
    values = [false_detection_bound(k, 4, 1.5) for k in range(3, 200)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("c", [0.5, 0.4, -1.0])
def test_threshold_must_exceed_one_half(c):
    with pytest.raises(ParameterError, match="degenerates"):
        false_detection_alpha(3, c)
    with pytest.raises(ParameterError):
        false_detection_bound(10, 3, c)


def test_bound_needs_k_two():
    with pytest.raises(ParameterError):
        false_detection_bound(1, 3, 1.0)


def test_required_k_is_the_smallest_sufficient_k():
    for d, c, p in [(2, 1.0, 0.1), (5, 1.0, 0.01), (10, 2.0, 1e-4)]:
        k = required_k(d, c, p)
        assert false_detection_bound(k, d, c) <= p
        assert k == 3 or false_detection_bound(k - 1, d, c) > p
    with pytest.raises(ParameterError):
        required_k(2, 1.0, 1.5)


def test_uniform_ball_mean_square():
    assert uniform_ball_mean_square(1, 1.0) == pytest.approx(1 / 3)
    assert uniform_ball_mean_square(2, 1.0) == 0.5
    assert uniform_ball_mean_square(3, 2.0) == pytest.approx(4 * 0.6)
    assert uniform_ball_mean_square(4, 0.0) == 0.0
    with pytest.raises(ParameterError):
        uniform_ball_mean_square(0, 1.0)


def test_theory_bound_record():
    bound = TheoryBound.evaluate(60, 5, 1.0)
    assert bound.alpha == false_detection_alpha(5, 1.0)
    assert bound.bound == false_detection_bound(60, 5, 1.0)
    assert 0.0 < bound.bound < 1.0
