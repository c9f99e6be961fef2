"""Kullback-Leibler divergence H(t, x) and tail-event discretization.

H(t, x) = t*log(t/x) - t + x (with H(0, x) = x) is the exponential rate
in every Chernoff-type bound downstream.  Callers multiply it by n and
exponentiate, so H must be accurate in absolute terms even where the
naive formula cancels catastrophically (t/x near 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "Side",
    "TailQuery",
    "DiscretizedThreshold",
    "kl_divergence",
    "discretize",
]

# Relative snap distance for n*threshold before floor/ceil; guards against
# 15.000000000000002-style misrounding shifting the tail event by one mass point.
_SNAP_REL = 1e-9


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class TailQuery:
    """A tail event: P(N >= n*threshold) for RIGHT, P(N <= n*threshold) for LEFT,
    where N is Poisson with mean n*x."""

    n: int
    x: float
    threshold: float
    side: Side

    def __post_init__(self) -> None:
        n = self.n
        if isinstance(n, float):
            if not n.is_integer():
                raise ValueError("n must be an integer, got %r" % (n,))
            object.__setattr__(self, "n", int(n))
        elif not isinstance(n, int):
            raise ValueError("n must be an integer, got %r" % (n,))
        if self.n < 1:
            raise ValueError("n must be >= 1, got %d" % self.n)
        x = float(self.x)
        if not (math.isfinite(x) and x > 0.0):
            raise ValueError("x must be positive and finite, got %r" % (self.x,))
        object.__setattr__(self, "x", x)
        thr = float(self.threshold)
        if not (math.isfinite(thr) and thr > 0.0):
            raise ValueError("threshold must be positive and finite, got %r" % (self.threshold,))
        object.__setattr__(self, "threshold", thr)
        if not isinstance(self.side, Side):
            raise ValueError("side must be a Side member, got %r" % (self.side,))

    def hypothesis_failure(self) -> str | None:
        """Text describing why the side hypothesis fails, or None if it holds.

        Right tail needs 0 < x <= threshold; left tail needs 1/n <= threshold <= x.
        Violations are representable here and flagged by the bound operations.
        """
        if self.side is Side.RIGHT:
            if self.threshold < self.x:
                return "right tail requires x <= b, got x=%g > b=%g" % (self.x, self.threshold)
            return None
        if self.threshold * self.n < 1.0 - _SNAP_REL:
            return "left tail requires a >= 1/n, got a=%g < 1/%d" % (self.threshold, self.n)
        if self.threshold > self.x:
            return "left tail requires a <= x, got a=%g > x=%g" % (self.threshold, self.x)
        return None


@dataclass(frozen=True)
class DiscretizedThreshold:
    """The grid point the tail event actually lives on: index = ceil(n*b)
    (right) or floor(n*a) (left), grid_value = index/n."""

    raw: float
    grid_value: float
    grid_index: int


def _snap(scaled: float) -> tuple[float, bool]:
    """Snap n*threshold to the nearest integer when within 1e-9 relative."""
    nearest = round(scaled)
    if abs(scaled - nearest) <= _SNAP_REL * max(1.0, abs(scaled)):
        return float(nearest), True
    return scaled, False


def discretize(query: TailQuery) -> DiscretizedThreshold:
    """Map the raw threshold to beta = ceil(nb)/n (right) or alpha = floor(na)/n (left)."""
    scaled, snapped = _snap(query.n * query.threshold)
    if snapped:
        index = int(scaled)
    elif query.side is Side.RIGHT:
        index = math.ceil(scaled)
    else:
        index = math.floor(scaled)
    return DiscretizedThreshold(
        raw=query.threshold,
        grid_value=index / query.n,
        grid_index=index,
    )


def kl_divergence(t: float, x: float) -> float:
    """H(t, x) = t*log(t/x) - t + x, with H(0, x) = x.

    Evaluated through the symmetric variable v = (t-x)/(t+x):

        H = (t+x) * v^2 * [1 + (1+v) * sum_{j>=1} v^(2j-1)/(2j+1)]

    Every factor keeps the bracket in [0.9, 1.1]-ish without subtractive
    cancellation, so H comes out with relative error of a few ulp for all
    arguments; the direct formula is only used when |v| > 0.9, where its
    own cancellation is mild.
    """
    x = float(x)
    t = float(t)
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError("x must be positive and finite, got %r" % (x,))
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError("t must be non-negative and finite, got %r" % (t,))
    if t == 0.0:
        return x
    if t == x:
        return 0.0
    v = (t - x) / (t + x)
    if abs(v) > 0.9:
        return t * math.log(t / x) - t + x
    v2 = v * v
    term = v
    acc = 0.0
    for j in range(1, 400):
        inc = term / (2 * j + 1)
        acc += inc
        if abs(inc) <= 1e-18 * (1.0 + abs(acc)):
            break
        term *= v2
    return (t + x) * v2 * (1.0 + (1.0 + v) * acc)
