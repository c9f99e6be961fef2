"""Comparison machinery for the two explicit right-tail upper bounds:
piecewise rewrites of both, the crossover landmarks x_hat / y_hat / z_hat,
the quotient curve Q(x) between them on (0, beta - 1/n], and deterministic
CSV emission of the sampled curve.

Landmarks:
  x_hat    where the min inside the R_n envelope switches branch;
  y_hat    where pi n H(beta - 1/n, y) = 1, i.e. the explicit bound's
           max(2, sqrt(4 pi n H)) switches branch;
  z_hat    where the quotient equals 1 (closed form, cross-checked);
  beta_hat beta - 1/n, the right edge of the comparison domain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from . import exact
from .divergence import _snap, kl_divergence

__all__ = [
    "Region",
    "CrossoverSet",
    "CurveSample",
    "piecewise_thm1_upper",
    "piecewise_short_upper",
    "crossovers",
    "quotient",
    "sample_curve",
    "curve_csv_text",
    "write_curve_csv",
]

_TWO_PI = 2.0 * math.pi


class Region(enum.Enum):
    BELOW_Y = "below_y"
    Y_TO_X = "y_to_x"
    ABOVE_X = "above_x"


@dataclass(frozen=True)
class CrossoverSet:
    n: int
    b: float
    beta: float
    x_hat: float
    y_hat: float
    z_hat: float
    beta_hat: float

    def ordering_ok(self) -> bool:
        """The y < z < x < beta_hat chain; guaranteed only for nbeta >= 9."""
        return self.y_hat < self.z_hat < self.x_hat < self.beta_hat


@dataclass(frozen=True)
class CurveSample:
    x: float
    q: float
    thm1_upper: float
    short_upper: float
    exact_tail: float
    region: Region


def _m_index(n: int, b: float) -> int:
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError("n must be an integer, got %r" % (n,))
    if n < 1:
        raise ValueError("n must be >= 1, got %d" % n)
    b = float(b)
    if not (math.isfinite(b) and b > 0.0):
        raise ValueError("b must be positive and finite, got %r" % (b,))
    scaled, snapped = _snap(n * b)
    m = int(scaled) if snapped else math.ceil(scaled)
    return max(m, 1)


def _x_hat(n: int, m: int) -> float:
    s = math.sqrt(_TWO_PI * m)
    return (m + 1) / n * s / (2.0 + s)


@lru_cache(maxsize=4096)
def _y_hat(n: int, m: int) -> float:
    """Root of g(y) = pi n H((m-1)/n, y) = 1, bisected on (0, (m-1)/n);
    g strictly decreases from infinity to 0, so the root is unique."""
    beta_hat = (m - 1) / n
    pin = math.pi * n

    def g(y: float) -> float:
        return pin * kl_divergence(beta_hat, y)

    hi = beta_hat * (1.0 - 1e-9)
    lo = 0.5 * beta_hat
    while g(lo) <= 1.0:
        lo *= 0.5
        if lo < 5e-324:
            raise exact.InternalConsistencyError(
                "no bracket for the unit root of g at n=%d, m=%d" % (n, m)
            )
    if g(hi) >= 1.0:
        raise exact.InternalConsistencyError(
            "g stayed above 1 at the domain edge for n=%d, m=%d" % (n, m)
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


def _z_hat(n: int, m: int) -> float:
    # (beta + 1/n) / (1 + e sqrt(2/pi) (m+1) m^{-m-1/2} (m-1)^{m-1}), the
    # power block in log space; direct powers overflow double near m ~ 700
    log_f = 1.0 + 0.5 * math.log(2.0 / math.pi) + math.log(m + 1.0) - (m + 0.5) * math.log(m)
    if m > 1:
        log_f += (m - 1.0) * math.log(m - 1.0)
    return (m + 1) / n / (1.0 + math.exp(log_f))


def _log_thm1_upper(n: int, x: float, m: int) -> float:
    s = math.sqrt(_TWO_PI * m)
    g = n * kl_divergence(m / n, x)
    if x <= _x_hat(n, m):
        return math.log(x / ((m / n - x + 1.0 / n) * s) + 1.0 / s) - g
    return math.log(0.5 + 1.0 / s) - g


def _log_short_upper(n: int, x: float, m: int) -> float:
    g = n * kl_divergence((m - 1) / n, x)
    if x < _y_hat(n, m):
        return -g - 0.5 * math.log(4.0 * math.pi * g)
    return -g - math.log(2.0)


def piecewise_thm1_upper(n: int, b: float, x: float) -> float:
    """The R_n e^{-nH} upper bound written as two branches split at x_hat;
    must agree with the min-form to the last few ulp."""
    m = _m_index(n, b)
    x = float(x)
    if not (0.0 < x <= b):
        raise ValueError("x must lie in (0, b], got x=%r, b=%r" % (x, b))
    return math.exp(_log_thm1_upper(n, x, m))


def piecewise_short_upper(n: int, b: float, x: float) -> float:
    """The explicit bound written as two branches split at y_hat:
    e^{-nH}/sqrt(4 pi n H) below it, e^{-nH}/2 above it."""
    m = _m_index(n, b)
    beta_hat = (m - 1) / n
    x = float(x)
    if not (0.0 < x <= beta_hat):
        raise ValueError(
            "x must lie in (0, beta - 1/n], got x=%r, beta - 1/n=%r" % (x, beta_hat)
        )
    return math.exp(_log_short_upper(n, x, m))


def quotient(n: int, b: float, x: float) -> float:
    """Q(x) = piecewise_thm1_upper / piecewise_short_upper on (0, beta - 1/n];
    formed from the log values so deep-tail underflow cannot produce 0/0."""
    m = _m_index(n, b)
    beta_hat = (m - 1) / n
    x = float(x)
    if not (0.0 < x <= beta_hat):
        raise ValueError(
            "x must lie in (0, beta - 1/n], got x=%r, beta - 1/n=%r" % (x, beta_hat)
        )
    return math.exp(_log_thm1_upper(n, x, m) - _log_short_upper(n, x, m))


def crossovers(n: int, b: float) -> CrossoverSet:
    """All four landmarks for (n, b).  When the nbeta >= 9 ordering holds,
    the closed-form z_hat is cross-checked against Q(z_hat) = 1."""
    m = _m_index(n, b)
    beta_hat = (m - 1) / n
    y_hat = _y_hat(n, m) if m > 1 else math.nan
    if m > 1:
        g_at_root = math.pi * n * kl_divergence(beta_hat, y_hat)
        if abs(g_at_root - 1.0) > 1e-12:
            raise exact.InternalConsistencyError(
                "unit root of g off by %g at n=%d, m=%d" % (g_at_root - 1.0, n, m)
            )
    cs = CrossoverSet(
        n=n,
        b=float(b),
        beta=m / n,
        x_hat=_x_hat(n, m),
        y_hat=y_hat,
        z_hat=_z_hat(n, m),
        beta_hat=beta_hat,
    )
    if cs.ordering_ok():
        q_at_z = quotient(n, b, cs.z_hat)
        if abs(q_at_z - 1.0) > 1e-9:
            raise exact.InternalConsistencyError(
                "closed-form z_hat is not the unit crossing: Q(z_hat)=%.17g at n=%d, m=%d"
                % (q_at_z, n, m)
            )
    return cs


def sample_curve(n: int, b: float, num_samples: int) -> list[CurveSample]:
    """num_samples rows at x = beta_hat * i/num_samples, i = 1..num_samples;
    pure arithmetic, so identical inputs give identical rows."""
    if not isinstance(num_samples, int) or isinstance(num_samples, bool) or num_samples < 2:
        raise ValueError("num_samples must be an integer >= 2, got %r" % (num_samples,))
    m = _m_index(n, b)
    if m < 2:
        raise ValueError("comparison domain (0, beta - 1/n] is empty for ceil(nb) = 1")
    beta_hat = (m - 1) / n
    x_hat = _x_hat(n, m)
    y_hat = _y_hat(n, m)
    rows = []
    for i in range(1, num_samples + 1):
        x = beta_hat * (i / num_samples)
        log_a = _log_thm1_upper(n, x, m)
        log_b = _log_short_upper(n, x, m)
        if x < y_hat:
            region = Region.BELOW_Y
        elif x <= x_hat:
            region = Region.Y_TO_X
        else:
            region = Region.ABOVE_X
        rows.append(
            CurveSample(
                x=x,
                q=math.exp(log_a - log_b),
                thm1_upper=math.exp(log_a),
                short_upper=math.exp(log_b),
                exact_tail=exact.poisson_sf(n * x, m),
                region=region,
            )
        )
    return rows


def _g17(v: float) -> str:
    return "%.17g" % v


def curve_csv_text(n: int, b: float, num_samples: int) -> tuple[CrossoverSet, list[CurveSample], str]:
    """The curve serialized per the CSV contract: one `#` landmark line,
    a column header, then 17-significant-digit rows (exact float round-trip)."""
    cs = crossovers(n, b)
    rows = sample_curve(n, b, num_samples)
    lines = [
        "# n=%d b=%s beta=%s x_hat=%s y_hat=%s z_hat=%s beta_hat=%s"
        % (n, _g17(cs.b), _g17(cs.beta), _g17(cs.x_hat), _g17(cs.y_hat), _g17(cs.z_hat), _g17(cs.beta_hat)),
        "x,q,thm1_upper,short_upper,exact_tail,region",
    ]
    for r in rows:
        lines.append(
            "%s,%s,%s,%s,%s,%s"
            % (_g17(r.x), _g17(r.q), _g17(r.thm1_upper), _g17(r.short_upper), _g17(r.exact_tail), r.region.value)
        )
    return cs, rows, "\n".join(lines) + "\n"


def write_curve_csv(path: str, n: int, b: float, num_samples: int) -> tuple[CrossoverSet, list[CurveSample]]:
    cs, rows, text = curve_csv_text(n, b, num_samples)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return cs, rows
