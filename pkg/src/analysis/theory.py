"""LDOF Theory
Closed-form values behind the detector: the LDOF lower bound of
interior points, the false-detection probability bound, and the
mean square length of a uniform d-ball.
"""
import math
from dataclasses import dataclass

from ..core.errors import ParameterError

LOWER_BOUND = 0.5


def ldof_lower_bound() -> float:
    return LOWER_BOUND


def expected_ldof_center(d: int, r: float = 1.0) -> float:
    """E[d̄]/E[D̄] for a query at the centre of a uniform d-ball under
    squared Euclidean distance. With a = E|x|^2 the query-to-point mean
    is a and, for independent centred points, the pair mean is 2a."""
    a = uniform_ball_mean_square(d, r)
    if a == 0:
        raise ParameterError("radius must be positive for the centre ratio")
    return a / (2.0 * a)


def _check_threshold(c: float) -> None:
    if not c > LOWER_BOUND:
        raise ParameterError(
            f"threshold c={c} must exceed 1/2: choosing c close to 1/2 degenerates the bound (alpha -> 0)")


def false_detection_alpha(d: int, c: float) -> float:
    _check_threshold(c)
    if int(d) < 1:
        raise ParameterError(f"dimension must be at least 1, got {d}")
    shrink = d / (d + 2.0)
    return (2.0 / 25.0) * (1.0 - 1.0 / (2.0 * c)) ** 2 * shrink ** 2


def false_detection_bound(k: int, d: int, c: float) -> float:
    """Upper bound on P[LDOF_k > c] for a record inside a uniform neighbourhood."""
    if int(k) < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    alpha = false_detection_alpha(d, c)
    return min(1.0, math.exp(-alpha * (k - 2)))


def required_k(d: int, c: float, probability: float) -> int:
    """Smallest k whose false-detection bound is at most `probability`."""
    if not 0.0 < probability < 1.0:
        raise ParameterError(f"probability must lie in (0, 1), got {probability}")
    alpha = false_detection_alpha(d, c)
    k = 2 + math.ceil(-math.log(probability) / alpha)
    while k > 3 and false_detection_bound(k - 1, d, c) <= probability:
        k -= 1
    return max(k, 3)


def uniform_ball_mean_square(d: int, r: float) -> float:
    if int(d) < 1:
        raise ParameterError(f"dimension must be at least 1, got {d}")
    if r < 0:
        raise ParameterError(f"radius must be non-negative, got {r}")
    return d / (d + 2.0) * r * r


@dataclass(frozen=True)
class TheoryBound:
    k: int
    d: int
    c: float
    alpha: float
    bound: float

    @classmethod
    def evaluate(cls, k: int, d: int, c: float) -> "TheoryBound":
        return cls(k=int(k), d=int(d), c=float(c),
                   alpha=false_detection_alpha(d, c),
                   bound=false_detection_bound(k, d, c))
