"""Exact Poisson tail machinery: pmf, cdf, survival, the Poisson-Gamma
relation, the Stirling enclosure of P(N_k = k), the gamma-distribution
median, and the central-mass check.

Everything here is the ground truth the closed-form bounds are tested
against, so accuracy targets are tighter than the bounds need: pmf good
to ~1 ulp of its log, tail sums to ~1e-15 relative on the directly
summed side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sc

from .divergence import kl_divergence

__all__ = [
    "InternalConsistencyError",
    "StirlingInterval",
    "GammaMedian",
    "poisson_log_pmf",
    "poisson_pmf",
    "poisson_sf",
    "poisson_cdf",
    "poisson_log_sf",
    "poisson_log_cdf",
    "poisson_pmf_row",
    "window_mass",
    "upper_incomplete_gamma_reg",
    "stirling_interval",
    "gamma_median",
    "lemma3_check",
]

_TWO_PI = 2.0 * math.pi


class InternalConsistencyError(RuntimeError):
    """A mathematically guaranteed condition failed at runtime."""


# Stirling correction theta(k) = log k! - (0.5*log(2*pi*k) + k*log k - k),
# exact to the last bit for k <= 18; the asymptotic series below takes over
# at k = 19 where its truncation error drops under 1e-18.
_THETA_TABLE = (
    0.08106146679532725821967,
    0.04134069595540929409382,
    0.02767792568499833914879,
    0.02079067210376509311152,
    0.01664469118982119216319,
    0.01387612882307074799875,
    0.01189670994589177009506,
    0.01041126526197209649748,
    0.009255462182712732917729,
    0.008330563433362871256469,
    0.007573675487951840794972,
    0.006942840107209529865664,
    0.00640899418800420706844,
    0.005951370112758847735624,
    0.005554733551962801371039,
    0.005207655919609640440718,
    0.004901395948434737860717,
    0.004629153749334028592427,
)


def _stirling_theta(k: int) -> float:
    if k <= 18:
        return _THETA_TABLE[k - 1]
    ik = 1.0 / k
    ik2 = ik * ik
    # 1/(12k) - 1/(360k^3) + 1/(1260k^5) - 1/(1680k^7) + 1/(1188k^9) - 691/(360360k^11)
    return ik * (
        1.0 / 12.0
        + ik2
        * (
            -1.0 / 360.0
            + ik2
            * (
                1.0 / 1260.0
                + ik2 * (-1.0 / 1680.0 + ik2 * (1.0 / 1188.0 + ik2 * (-691.0 / 360360.0)))
            )
        )
    )


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError("lambda must be positive and finite, got %r" % (lam,))
    return lam


def _check_k(k: int) -> int:
    if isinstance(k, float):
        if not k.is_integer():
            raise ValueError("k must be an integer, got %r" % (k,))
        k = int(k)
    elif isinstance(k, (int, np.integer)):
        k = int(k)
    else:
        raise ValueError("k must be an integer, got %r" % (k,))
    if k < 0:
        raise ValueError("k must be >= 0, got %d" % k)
    return k


def poisson_log_pmf(lam: float, k: int) -> float:
    """log P(N_lam = k), via the saddle-point form

        -0.5*log(2 pi k) - theta(k) - H(k, lam)       (k >= 1)

    rather than k*log(lam) - lam - lgamma(k+1), whose two huge terms cancel
    and cost ~1e-9 absolute at k ~ 1e6.  Here every term is O(H) or O(log k),
    so exponentiating recovers the pmf to 13+ significant digits wherever it
    is representable.
    """
    lam = _check_lam(lam)
    k = _check_k(k)
    if k == 0:
        return -lam
    return -0.5 * math.log(_TWO_PI * k) - _stirling_theta(k) - kl_divergence(float(k), lam)


def poisson_pmf(lam: float, k: int) -> float:
    """P(N_lam = k)."""
    return math.exp(poisson_log_pmf(lam, k))


def _upper_rel_terms(lam: float, k0: int) -> np.ndarray:
    """pmf(lam, k)/pmf(lam, k0) for k = k0..K with K per the truncation rule:
    stop once r = lam/(K+1) < 1 and the geometric majorant term(K)*r/(1-r)
    drops below 1e-17 of the accumulated sum.  Called only with k0 > lam,
    so the ratios are strictly below 1 from the start."""
    parts = [np.ones(1)]
    total = 1.0
    k_last = k0
    t_last = 1.0
    width = int(12.0 * math.sqrt(lam)) + 100
    while True:
        ks = np.arange(k_last + 1, k_last + width + 1, dtype=np.float64)
        block = t_last * np.cumprod(lam / ks)
        parts.append(block)
        total += float(block.sum())
        k_last += width
        t_last = float(block[-1])
        r = lam / (k_last + 1)
        if r < 1.0 and t_last * r <= (1.0 - r) * 1e-17 * total:
            break
        width = 512
    return np.concatenate(parts)


def _lower_rel_terms(lam: float, k0: int) -> np.ndarray:
    """pmf(lam, j)/pmf(lam, k0) for j = k0 down to 0; finite, no truncation."""
    if k0 == 0:
        return np.ones(1)
    js = np.arange(k0, 0.0, -1.0)
    return np.concatenate(([1.0], np.cumprod(js / lam)))


def _upper_log_mass(lam: float, k0: int) -> float:
    """log P(N_lam >= k0) for k0 > lam (the directly summed side)."""
    rel = _upper_rel_terms(lam, k0)
    # far-end-first summation; fsum is exactly rounded either way
    return poisson_log_pmf(lam, k0) + math.log(math.fsum(rel[::-1]))


def _lower_log_mass(lam: float, k0: int) -> float:
    """log P(N_lam <= k0) for k0 <= lam (the directly summed side)."""
    if k0 < 0:
        return -math.inf
    rel = _lower_rel_terms(lam, k0)
    return poisson_log_pmf(lam, k0) + math.log(math.fsum(rel[::-1]))


def poisson_sf(lam: float, k: int) -> float:
    """P(N_lam >= k).  The side at or beyond the mode is summed directly;
    k <= lam falls back to 1 - P(N <= k-1), whose subtrahend is provably
    below 1/2 there (k - 1 < lam - log 2), so the complement cannot cancel."""
    lam = _check_lam(lam)
    k = _check_k(k)
    if k == 0:
        return 1.0
    if k > lam:
        return min(1.0, math.exp(_upper_log_mass(lam, k)))
    return min(1.0, max(0.0, -math.expm1(_lower_log_mass(lam, k - 1))))


def poisson_cdf(lam: float, k: int) -> float:
    """P(N_lam <= k); same smaller-side-direct routing as poisson_sf."""
    lam = _check_lam(lam)
    k = _check_k(k)
    if k < lam:
        return min(1.0, math.exp(_lower_log_mass(lam, k)))
    return min(1.0, max(0.0, -math.expm1(_upper_log_mass(lam, k + 1))))


def poisson_log_sf(lam: float, k: int) -> float:
    """log P(N_lam >= k); stays finite far past double underflow."""
    lam = _check_lam(lam)
    k = _check_k(k)
    if k == 0:
        return 0.0
    if k > lam:
        return min(0.0, _upper_log_mass(lam, k))
    return math.log1p(-math.exp(_lower_log_mass(lam, k - 1)))


def poisson_log_cdf(lam: float, k: int) -> float:
    """log P(N_lam <= k); stays finite far past double underflow."""
    lam = _check_lam(lam)
    k = _check_k(k)
    if k < lam:
        return min(0.0, _lower_log_mass(lam, k))
    return math.log1p(-math.exp(_upper_log_mass(lam, k + 1)))


def poisson_pmf_row(lam: float, k_lo: int, k_hi: int) -> np.ndarray:
    """pmf(lam, k) for k = k_lo..k_hi as an array, seeded at the in-range
    point nearest the mode and filled by ratio recursion in both directions
    (one rounding per step, no factorials)."""
    lam = _check_lam(lam)
    k_lo = _check_k(k_lo)
    k_hi = _check_k(k_hi)
    if k_hi < k_lo:
        raise ValueError("need k_lo <= k_hi, got %d > %d" % (k_lo, k_hi))
    rel, seed = _rel_row(lam, k_lo, k_hi)
    return rel * math.exp(seed)


def _rel_row(lam: float, k_lo: int, k_hi: int) -> tuple[np.ndarray, float]:
    k_seed = int(min(max(k_lo, math.floor(lam)), k_hi))
    rel = np.empty(k_hi - k_lo + 1)
    pos = k_seed - k_lo
    if pos > 0:
        js = np.arange(k_seed, k_lo, -1.0)
        rel[:pos] = np.cumprod(js / lam)[::-1]
    rel[pos] = 1.0
    if k_hi > k_seed:
        ks = np.arange(k_seed + 1, k_hi + 1, dtype=np.float64)
        rel[pos + 1 :] = np.cumprod(lam / ks)
    return rel, poisson_log_pmf(lam, k_seed)


def window_mass(lam: float, k_lo: int, k_hi: int) -> tuple[float, float]:
    """(P(k_lo <= N_lam <= k_hi), log of the same); the log stays usable
    when the window sits deep enough in a tail to underflow linearly."""
    lam = _check_lam(lam)
    k_lo = _check_k(k_lo)
    k_hi = _check_k(k_hi)
    if k_hi < k_lo:
        raise ValueError("need k_lo <= k_hi, got %d > %d" % (k_lo, k_hi))
    rel, seed = _rel_row(lam, k_lo, k_hi)
    log_mass = seed + math.log(math.fsum(np.sort(rel)))
    return math.exp(log_mass), log_mass


def upper_incomplete_gamma_reg(k: int, lam: float) -> float:
    """Integral of the Gamma(k+1, 1) density from lam to infinity, i.e. the
    regularized upper incomplete gamma Q(k+1, lam).

    Equals P(N_lam <= k); that identity is a mandatory cross-check, so this
    route deliberately goes through scipy's continued-fraction gammaincc and
    never touches the summation code above.
    """
    k = _check_k(k)
    lam = _check_lam(lam)
    return float(sc.gammaincc(k + 1, lam))


@dataclass(frozen=True)
class StirlingInterval:
    """Two-sided enclosure of P(N_k = k): e^{-1/(12k)}/sqrt(2 pi k) below,
    e^{-1/(12k+1)}/sqrt(2 pi k) above."""

    k: int
    lower: float
    upper: float


def stirling_interval(k: int) -> StirlingInterval:
    k = _check_k(k)
    if k < 1:
        raise ValueError("k must be >= 1, got %d" % k)
    s = 1.0 / math.sqrt(_TWO_PI * k)
    return StirlingInterval(
        k=k,
        lower=math.exp(-1.0 / (12.0 * k)) * s,
        upper=math.exp(-1.0 / (12.0 * k + 1.0)) * s,
    )


@dataclass(frozen=True)
class GammaMedian:
    """Median lambda_k of Gamma(k+1, 1); always inside (k, k+1)."""

    k: int
    lambda_k: float
    bracket: tuple[float, float]


def gamma_median(k: int) -> GammaMedian:
    """Bisection on the strictly decreasing residual Q(k+1, lam) - 1/2 over
    the bracket (k, k+1); stops at |residual| <= 5e-14, comfortably inside
    the 1e-13 contract."""
    k = _check_k(k)
    if k < 1:
        raise ValueError("k must be >= 1, got %d" % k)
    lo, hi = float(k), float(k + 1)
    if not (
        upper_incomplete_gamma_reg(k, lo) - 0.5 > 0.0
        and upper_incomplete_gamma_reg(k, hi) - 0.5 < 0.0
    ):
        raise InternalConsistencyError(
            "median bracket (k, k+1) lost its sign change at k=%d" % k
        )
    bracket = (lo, hi)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        residual = upper_incomplete_gamma_reg(k, mid) - 0.5
        if abs(residual) <= 5e-14:
            return GammaMedian(k=k, lambda_k=mid, bracket=bracket)
        if residual > 0.0:
            lo = mid
        else:
            hi = mid
    residual = upper_incomplete_gamma_reg(k, mid) - 0.5
    if abs(residual) > 1e-13:
        raise InternalConsistencyError(
            "median bisection stalled at k=%d with residual %g" % (k, residual)
        )
    return GammaMedian(k=k, lambda_k=mid, bracket=bracket)


def lemma3_check(k: int) -> tuple[float, float, float]:
    """(P(N_k >= k), P(N_k <= k), 1/2 + 1/sqrt(2 pi k)); verifies that both
    probabilities land in [1/2, bound] before returning."""
    k = _check_k(k)
    if k < 1:
        raise ValueError("k must be >= 1, got %d" % k)
    lam = float(k)
    below = math.exp(_lower_log_mass(lam, k - 1))
    p_geq = 1.0 - below
    p_leq = below + poisson_pmf(lam, k)
    bound = 0.5 + 1.0 / math.sqrt(_TWO_PI * k)
    if not (0.5 <= min(p_geq, p_leq) and max(p_geq, p_leq) <= bound):
        raise InternalConsistencyError(
            "central-mass enclosure failed at k=%d: P>=%.17g P<=%.17g bound=%.17g"
            % (k, p_geq, p_leq, bound)
        )
    return p_geq, p_leq, bound
