"""Closed-form Poisson tail bounds: the two-sided KL-divergence theorems
with their prefactor envelopes R_n, L_n, and the comparator families
(exponential-moment bounds, the normal-cdf sandwich, the explicit
one-term bound, the window-mass sandwich).

Every bound is assembled in log space first; `value` is its exponential
and underflows gracefully to 0.0, while `log_value` stays finite so deep
tails remain comparable (the strictness tests rely on that).

Bound families never call the exact oracle internally, with the single
exception of the window-mass sandwich whose lower bound IS a probability;
"bound" and "truth" stay separated at the API surface.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import scipy.special as sc

from . import exact
from .divergence import Side, TailQuery, _snap, discretize, kl_divergence

__all__ = [
    "BoundFamily",
    "BoundResult",
    "EnvelopeConstants",
    "normal_cdf",
    "log_normal_cdf",
    "envelope_constants",
    "thm1_bounds",
    "thm2_bounds",
    "blm_bounds",
    "short_phi_sandwich",
    "short_explicit",
    "klar_sandwich",
]

_TWO_PI = 2.0 * math.pi
_SQRT2 = math.sqrt(2.0)
# integer-vs-product precondition comparisons share the discretization snap
_SNAP_REL = 1e-9


class BoundFamily(enum.Enum):
    THM1_UPPER = "Thm1Upper"
    THM1_LOWER = "Thm1Lower"
    THM1_LOWER_SHARP = "Thm1LowerSharp"
    THM2_UPPER = "Thm2Upper"
    THM2_LOWER = "Thm2Lower"
    THM2_LOWER_SHARP = "Thm2LowerSharp"
    BLM_RIGHT = "BLMRight"
    BLM_LEFT = "BLMLeft"
    SHORT_PHI_LOWER = "ShortPhiLower"
    SHORT_PHI_UPPER = "ShortPhiUpper"
    SHORT_EXPLICIT = "ShortExplicit"
    KLAR_LOWER = "KlarLower"
    KLAR_UPPER = "KlarUpper"


@dataclass(frozen=True)
class BoundResult:
    """One family's bound at one query.  `value` is meaningful only when
    `valid`; `log_value` is its natural log (-inf on linear underflow)."""

    family: BoundFamily
    value: float
    valid: bool
    precondition_note: str
    log_value: float


@dataclass(frozen=True)
class EnvelopeConstants:
    """The prefactors multiplying e^{-nH}: R for the right tail at beta,
    L for the left tail at alpha.  Both sit below 1/2 + 1/sqrt(2 pi nbeta)
    (resp. alpha) by construction of the min."""

    R: float
    L: float


def _invalid(family: BoundFamily, note: str) -> BoundResult:
    return BoundResult(family, math.nan, False, note, math.nan)


def _from_log(family: BoundFamily, log_value: float) -> BoundResult:
    return BoundResult(family, math.exp(log_value), True, "", log_value)


def normal_cdf(z: float) -> float:
    """Standard normal distribution function via the complementary error
    function; uniformly accurate including the deep tails."""
    # divide rather than multiply by a rounded constant: the quotient is
    # correctly rounded, and the tail is exponentially sensitive to z
    return 0.5 * math.erfc(-float(z) / _SQRT2)


def log_normal_cdf(z: float) -> float:
    """log of the standard normal cdf, finite for arbitrarily deep z."""
    return float(sc.log_ndtr(float(z)))


def _envelope_r(n: int, x: float, m: int) -> float:
    # R_n(x, beta) = min(x / ((beta - x + 1/n) sqrt(2 pi nbeta)), 1/2) + 1/sqrt(2 pi nbeta)
    s = math.sqrt(_TWO_PI * m)
    gap = m / n - x + 1.0 / n
    return min(x / (gap * s), 0.5) + 1.0 / s


def _envelope_l(n: int, x: float, l: int) -> float:
    # L_n(x, alpha) = min(x / ((x - alpha + 1/n) sqrt(2 pi nalpha)), 1/2) + 1/sqrt(2 pi nalpha)
    s = math.sqrt(_TWO_PI * l)
    gap = x - l / n + 1.0 / n
    return min(x / (gap * s), 0.5) + 1.0 / s


def _right_index(query: TailQuery) -> int:
    m = discretize(query).grid_index
    # b > 0 makes ceil(nb) >= 1; the snap can only lose that for b < 1e-9/n
    return max(m, 1)


def thm1_bounds(query: TailQuery) -> tuple[BoundResult, BoundResult, BoundResult]:
    """Right-tail sandwich on P(N_{nx} >= ceil(nb)) at beta = ceil(nb)/n:
    lower with the stated constant e^{-1/(2nbeta)}, lower_sharp with the
    proof-derived e^{-1/(12nbeta)}, upper with the R_n envelope."""
    if query.side is not Side.RIGHT:
        raise ValueError("thm1_bounds takes a right-side query")
    note = query.hypothesis_failure()
    if note is not None:
        return (
            _invalid(BoundFamily.THM1_LOWER, note),
            _invalid(BoundFamily.THM1_LOWER_SHARP, note),
            _invalid(BoundFamily.THM1_UPPER, note),
        )
    n, x = query.n, query.x
    m = _right_index(query)
    g = n * kl_divergence(m / n, x)
    half_log = 0.5 * math.log(_TWO_PI * m)
    return (
        _from_log(BoundFamily.THM1_LOWER, -1.0 / (2.0 * m) - half_log - g),
        _from_log(BoundFamily.THM1_LOWER_SHARP, -1.0 / (12.0 * m) - half_log - g),
        _from_log(BoundFamily.THM1_UPPER, math.log(_envelope_r(n, x, m)) - g),
    )


def thm2_bounds(query: TailQuery) -> tuple[BoundResult, BoundResult, BoundResult]:
    """Left-tail sandwich on P(N_{nx} <= floor(na)) at alpha = floor(na)/n."""
    if query.side is not Side.LEFT:
        raise ValueError("thm2_bounds takes a left-side query")
    note = query.hypothesis_failure()
    if note is not None:
        return (
            _invalid(BoundFamily.THM2_LOWER, note),
            _invalid(BoundFamily.THM2_LOWER_SHARP, note),
            _invalid(BoundFamily.THM2_UPPER, note),
        )
    n, x = query.n, query.x
    l = discretize(query).grid_index
    if l < 1:
        raise exact.InternalConsistencyError("floor(na) < 1 after hypothesis check")
    g = n * kl_divergence(l / n, x)
    half_log = 0.5 * math.log(_TWO_PI * l)
    return (
        _from_log(BoundFamily.THM2_LOWER, -1.0 / (2.0 * l) - half_log - g),
        _from_log(BoundFamily.THM2_LOWER_SHARP, -1.0 / (12.0 * l) - half_log - g),
        _from_log(BoundFamily.THM2_UPPER, math.log(_envelope_l(n, x, l)) - g),
    )


def blm_bounds(query: TailQuery) -> BoundResult:
    """Exponential-moment upper bounds: e^{-nH(b,x)} right (at b itself,
    not beta), e^{-nH(a,x)} left (requires nx >= 1)."""
    note = query.hypothesis_failure()
    if query.side is Side.RIGHT:
        if note is not None:
            return _invalid(BoundFamily.BLM_RIGHT, note)
        return _from_log(
            BoundFamily.BLM_RIGHT, -query.n * kl_divergence(query.threshold, query.x)
        )
    if query.threshold > query.x:
        return _invalid(BoundFamily.BLM_LEFT, note or "left tail requires a <= x")
    nx = query.n * query.x
    if nx < 1.0 - _SNAP_REL * max(1.0, nx):
        return _invalid(BoundFamily.BLM_LEFT, "left bound requires nx >= 1, got nx=%g" % nx)
    return _from_log(BoundFamily.BLM_LEFT, -query.n * kl_divergence(query.threshold, query.x))


def short_phi_sandwich(n: int, x: float, c: float) -> tuple[BoundResult, BoundResult]:
    """Normal-cdf sandwich on P(N_{nx} <= floor(nc)) with gamma = floor(nc)/n:

        Phi(sgn(gamma - x)     * sqrt(2 n H(gamma, x)))      < cdf
        Phi(sgn(gamma + 1/n - x) * sqrt(2 n H(gamma + 1/n, x))) > cdf

    The sign is taken per argument: with a single shared sign(floor(nc) - nx),
    the upper argument would be zeroed out at floor(nc) = nx and Phi(0) = 1/2
    would sit strictly below the cdf, breaking the guaranteed strict bracket.
    Everywhere else the two conventions coincide.
    """
    query = TailQuery(n=n, x=x, threshold=c, side=Side.LEFT)
    scaled, snapped = _snap(query.n * query.threshold)
    j = int(scaled) if snapped else math.floor(scaled)
    if j < 1:
        note = "requires floor(nc) >= 1, got floor(%g * %g) = %d" % (n, c, j)
        return (
            _invalid(BoundFamily.SHORT_PHI_LOWER, note),
            _invalid(BoundFamily.SHORT_PHI_UPPER, note),
        )
    n, x = query.n, query.x
    nx = n * x
    arg_lo = math.copysign(1.0, j - nx) if j != nx else 0.0
    arg_lo *= math.sqrt(2.0 * n * kl_divergence(j / n, x))
    arg_up = math.copysign(1.0, (j + 1) - nx) if (j + 1) != nx else 0.0
    arg_up *= math.sqrt(2.0 * n * kl_divergence((j + 1) / n, x))
    return (
        BoundResult(
            BoundFamily.SHORT_PHI_LOWER, normal_cdf(arg_lo), True, "", log_normal_cdf(arg_lo)
        ),
        BoundResult(
            BoundFamily.SHORT_PHI_UPPER, normal_cdf(arg_up), True, "", log_normal_cdf(arg_up)
        ),
    )


def short_explicit(query: TailQuery) -> BoundResult:
    """Explicit right-tail upper bound
    e^{-nH(beta - 1/n, x)} / max(2, sqrt(4 pi n H(beta - 1/n, x)));
    needs ceil(nb) >= nx + 1 so that beta - 1/n >= x."""
    if query.side is not Side.RIGHT:
        raise ValueError("short_explicit takes a right-side query")
    note = query.hypothesis_failure()
    if note is not None:
        return _invalid(BoundFamily.SHORT_EXPLICIT, note)
    n, x = query.n, query.x
    m = _right_index(query)
    nx = n * x
    if m < nx + 1.0 - _SNAP_REL * max(1.0, nx):
        return _invalid(
            BoundFamily.SHORT_EXPLICIT,
            "requires ceil(nb) >= nx + 1, got ceil(nb)=%d, nx=%g" % (m, nx),
        )
    g = n * kl_divergence((m - 1) / n, x)
    return _from_log(
        BoundFamily.SHORT_EXPLICIT, -g - math.log(max(2.0, math.sqrt(4.0 * math.pi * g)))
    )


def klar_sandwich(
    n: int, x: float, b: float, k: int, literal_product: bool = False
) -> tuple[BoundResult, BoundResult]:
    """Window-mass sandwich on P(N_{nx} >= ceil(nb)) with m = ceil(nb):
    lower = P(m <= N <= m+k-1) (exact window mass), upper = lower/(1 - rho).

    The source prints the upper bound's product as prod_{i=1..k}(m + 1),
    ignoring i; the consecutive-ratio argument it comes from gives
    prod_{i=1..k}(m + i).  Default is the (m + i) form; pass
    literal_product=True for the printed one.  Either way rho < 1 whenever
    the precondition m + 1 > nx holds, and the sandwich stays valid.
    """
    query = TailQuery(n=n, x=x, threshold=b, side=Side.RIGHT)
    if not isinstance(k, int) or isinstance(k, bool):
        raise ValueError("window length k must be an integer, got %r" % (k,))
    if k < 1:
        raise ValueError("window length k must be >= 1, got %d" % k)
    n, x = query.n, query.x
    m = _right_index(query)
    nx = n * x
    if m + 1 <= nx - _SNAP_REL * max(1.0, nx):
        note = "requires ceil(nb) + 1 > nx, got ceil(nb)=%d, nx=%g" % (m, nx)
        return (_invalid(BoundFamily.KLAR_LOWER, note), _invalid(BoundFamily.KLAR_UPPER, note))
    win, log_win = exact.window_mass(nx, m, m + k - 1)
    lower = BoundResult(BoundFamily.KLAR_LOWER, win, True, "", log_win)
    if literal_product:
        log_rho = k * (math.log(nx) - math.log(m + 1.0))
    else:
        log_rho = k * math.log(nx) - math.fsum(math.log(m + i) for i in range(1, k + 1))
    if log_rho >= 0.0:
        return (lower, _invalid(BoundFamily.KLAR_UPPER, "rho >= 1, got log rho = %g" % log_rho))
    rho = math.exp(log_rho)
    upper = BoundResult(
        BoundFamily.KLAR_UPPER, win / (1.0 - rho), True, "", log_win - math.log1p(-rho)
    )
    return (lower, upper)


def envelope_constants(n: int, x: float, a: float, b: float) -> EnvelopeConstants:
    """R_n(x, beta) and L_n(x, alpha) for the window (a, b) around x,
    sharing the exact arithmetic of thm1_bounds/thm2_bounds."""
    right = TailQuery(n=n, x=x, threshold=b, side=Side.RIGHT)
    left = TailQuery(n=n, x=x, threshold=a, side=Side.LEFT)
    for q in (right, left):
        note = q.hypothesis_failure()
        if note is not None:
            raise ValueError(note)
    return EnvelopeConstants(
        R=_envelope_r(n, x, _right_index(right)),
        L=_envelope_l(n, x, discretize(left).grid_index),
    )
