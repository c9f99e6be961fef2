"""Positive-operator application S_nf(x) = E f(N_{nx}/n) with rigorous,
self-bounded truncation, the locally-affine exponential error bounds
(moment route and sup-norm route), and the boundary counterexample
f_s(t) = (t - a)_-^s with its half-normal central-limit constant.

Target functions enter through a closed descriptor registry rather than
raw callables: the truncation logic needs a growth envelope it can trust,
and the CLI needs a serializable format.  Registry kinds:

    affine:<slope>,<intercept>
    poly:<c0>,<c1>,...              (ascending coefficients, degree <= 6)
    fs:a=<a>,s=<s>                  ((a - t)_+^s, vanishes for t >= a)
    patch:affine:<s>,<c>;outside=<delta>;window=<a>,<b>   (b may be inf)

Truncation cutoffs are chosen with the tail bounds themselves: the right
cutoff K is the smallest index whose upper tail bound times the envelope's
window maximum, plus a geometric-envelope remainder, undercuts tolerance/2,
and the symmetric left cutoff uses the left-tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds, exact
from .divergence import Side, TailQuery, _snap, kl_divergence

__all__ = [
    "DescriptorParseError",
    "MomentDivergenceError",
    "TruncationDivergenceError",
    "Descriptor",
    "Affine",
    "Polynomial",
    "PowerDeficit",
    "PatchedAffine",
    "parse_descriptor",
    "SzaszProblem",
    "OperatorValue",
    "szasz_apply",
    "theorem3_bound",
    "remark5_bound",
    "boundary_rate",
    "half_normal_negative_moment",
]

_SNAP_REL = 1e-9


class DescriptorParseError(ValueError):
    """Malformed function-descriptor text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__("descriptor parse error at position %d: %s" % (position, message))
        self.position = position


class MomentDivergenceError(RuntimeError):
    """The truncated p-th moment failed to stabilize."""


class TruncationDivergenceError(RuntimeError):
    """No truncation index met the requested tolerance."""


class Descriptor:
    """A target function with a known polynomial growth envelope."""

    text: str

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def envelope(self, tau: float) -> float:
        """Nondecreasing majorant: sup_{0 <= t <= tau} |f(t)| <= envelope(tau)."""
        raise NotImplementedError

    def growth_degree(self) -> int:
        """d with envelope(tau) = O(tau^d); drives the geometric remainder."""
        raise NotImplementedError

    def deviation_power(self, affine_ref: tuple[float, float], p: float) -> "Descriptor":
        """A registry descriptor for |f - l|^p, l the affine reference."""
        raise NotImplementedError


@dataclass(frozen=True)
class Affine(Descriptor):
    slope: float
    intercept: float
    text: str = field(default="", compare=False)

    def __call__(self, t: float) -> float:
        return self.slope * t + self.intercept

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        return self.slope * ts + self.intercept

    def envelope(self, tau: float) -> float:
        return abs(self.slope) * tau + abs(self.intercept)

    def growth_degree(self) -> int:
        return 1 if self.slope != 0.0 else 0

    def deviation_power(self, affine_ref: tuple[float, float], p: float) -> Descriptor:
        ds = self.slope - affine_ref[0]
        dc = self.intercept - affine_ref[1]
        if ds != 0.0:
            raise ValueError("|f - l|^p of a non-constant affine deviation is outside the registry")
        return Polynomial(coeffs=(abs(dc) ** p,), text="poly:%r" % (abs(dc) ** p,))


@dataclass(frozen=True)
class Polynomial(Descriptor):
    coeffs: tuple[float, ...]
    text: str = field(default="", compare=False)

    def __call__(self, t: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(ts, np.asarray(self.coeffs))

    def envelope(self, tau: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * tau + abs(c)
        return acc

    def growth_degree(self) -> int:
        d = 0
        for i, c in enumerate(self.coeffs):
            if c != 0.0:
                d = i
        return d

    def deviation_power(self, affine_ref: tuple[float, float], p: float) -> Descriptor:
        diff = list(self.coeffs)
        while len(diff) < 2:
            diff.append(0.0)
        diff[0] -= affine_ref[1]
        diff[1] -= affine_ref[0]
        if any(c != 0.0 for c in diff):
            raise ValueError(
                "polynomial equal to an affine on an open interval must BE that affine; "
                "a nonzero deviation has no registry form for |f - l|^p"
            )
        return Polynomial(coeffs=(0.0,), text="poly:0")


@dataclass(frozen=True)
class PowerDeficit(Descriptor):
    """f_s(t) = (max(a - t, 0))^s; bounded by a^s, vanishes on [a, inf)."""

    a: float
    s: float
    text: str = field(default="", compare=False)

    def __call__(self, t: float) -> float:
        return max(self.a - t, 0.0) ** self.s

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        return np.maximum(self.a - ts, 0.0) ** self.s

    def envelope(self, tau: float) -> float:
        return self.a**self.s

    def growth_degree(self) -> int:
        return 0

    def deviation_power(self, affine_ref: tuple[float, float], p: float) -> Descriptor:
        if affine_ref != (0.0, 0.0):
            raise ValueError("power-deficit targets pair with the zero affine reference")
        return PowerDeficit(a=self.a, s=self.s * p, text="fs:a=%r,s=%r" % (self.a, self.s * p))


@dataclass(frozen=True)
class PatchedAffine(Descriptor):
    """l(t) on the open window (a, b), l(t) + delta outside it."""

    slope: float
    intercept: float
    delta: float
    a: float
    b: float
    text: str = field(default="", compare=False)

    def _inside(self, t: float) -> bool:
        return self.a < t < self.b

    def __call__(self, t: float) -> float:
        base = self.slope * t + self.intercept
        return base if self._inside(t) else base + self.delta

    def eval_array(self, ts: np.ndarray) -> np.ndarray:
        base = self.slope * ts + self.intercept
        outside = (ts <= self.a) | (ts >= self.b)
        return base + self.delta * outside

    def envelope(self, tau: float) -> float:
        return abs(self.slope) * tau + abs(self.intercept) + abs(self.delta)

    def growth_degree(self) -> int:
        return 1 if self.slope != 0.0 else 0

    def deviation_power(self, affine_ref: tuple[float, float], p: float) -> Descriptor:
        if (self.slope, self.intercept) != affine_ref:
            raise ValueError("patched-affine deviation needs the window's own affine reference")
        mag = abs(self.delta) ** p
        return PatchedAffine(
            slope=0.0,
            intercept=0.0,
            delta=mag,
            a=self.a,
            b=self.b,
            text="patch:affine:0,0;outside=%r;window=%r,%r" % (mag, self.a, self.b),
        )


def _parse_float(text: str, token: str, offset: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise DescriptorParseError("cannot read number %r" % token, offset) from None


def parse_descriptor(text: str) -> Descriptor:
    """Parse the registry text format; errors carry the failing position."""
    if not isinstance(text, str) or not text:
        raise DescriptorParseError("empty descriptor", 0)
    kind, sep, rest = text.partition(":")
    body_at = len(kind) + 1
    if not sep:
        raise DescriptorParseError("missing ':' after the kind", len(text))
    if kind == "affine":
        parts = rest.split(",")
        if len(parts) != 2:
            raise DescriptorParseError("affine needs slope,intercept", body_at)
        slope = _parse_float(text, parts[0], body_at)
        intercept = _parse_float(text, parts[1], body_at + len(parts[0]) + 1)
        return Affine(slope=slope, intercept=intercept, text=text)
    if kind == "poly":
        parts = rest.split(",")
        if not parts or parts == [""]:
            raise DescriptorParseError("poly needs at least one coefficient", body_at)
        if len(parts) > 7:
            raise DescriptorParseError("poly degree is capped at 6", body_at)
        coeffs = []
        offset = body_at
        for tok in parts:
            coeffs.append(_parse_float(text, tok, offset))
            offset += len(tok) + 1
        return Polynomial(coeffs=tuple(coeffs), text=text)
    if kind == "fs":
        fields: dict[str, float] = {}
        offset = body_at
        for tok in rest.split(","):
            key, eq, val = tok.partition("=")
            if not eq or key not in ("a", "s"):
                raise DescriptorParseError("fs needs a=<a>,s=<s>", offset)
            fields[key] = _parse_float(text, val, offset + len(key) + 1)
            offset += len(tok) + 1
        if set(fields) != {"a", "s"}:
            raise DescriptorParseError("fs needs both a= and s=", body_at)
        if fields["a"] <= 0 or fields["s"] <= 0:
            raise DescriptorParseError("fs needs a > 0 and s > 0", body_at)
        return PowerDeficit(a=fields["a"], s=fields["s"], text=text)
    if kind == "patch":
        segments = rest.split(";")
        if len(segments) != 3 or not segments[0].startswith("affine:"):
            raise DescriptorParseError(
                "patch needs affine:<s>,<c>;outside=<delta>;window=<a>,<b>", body_at
            )
        inner = parse_descriptor(segments[0])
        offset = body_at + len(segments[0]) + 1
        delta = None
        window = None
        for seg in segments[1:]:
            key, eq, val = seg.partition("=")
            if key == "outside" and eq:
                delta = _parse_float(text, val, offset + len("outside="))
            elif key == "window" and eq:
                lohi = val.split(",")
                if len(lohi) != 2:
                    raise DescriptorParseError("window needs two endpoints", offset)
                lo = _parse_float(text, lohi[0], offset + len("window="))
                hi = math.inf if lohi[1] == "inf" else _parse_float(
                    text, lohi[1], offset + len("window=") + len(lohi[0]) + 1
                )
                window = (lo, hi)
            else:
                raise DescriptorParseError("unknown patch field %r" % key, offset)
            offset += len(seg) + 1
        if delta is None or window is None:
            raise DescriptorParseError("patch needs both outside= and window=", body_at)
        if not window[0] < window[1]:
            raise DescriptorParseError("window endpoints must increase", body_at)
        return PatchedAffine(
            slope=inner.slope,
            intercept=inner.intercept,
            delta=delta,
            a=window[0],
            b=window[1],
            text=text,
        )
    raise DescriptorParseError("unknown kind %r" % kind, 0)


@dataclass(frozen=True)
class SzaszProblem:
    """A locally affine approximation problem: target f agreeing with the
    affine l on the open window (a, b), evaluation point x inside it, and
    either a norm exponent p > 1 (moment route) or sup_mode (sup route)."""

    target: Descriptor
    affine_ref: tuple[float, float]
    window: tuple[float, float]
    x: float
    p: float | None = None
    sup_mode: bool = False

    def __post_init__(self) -> None:
        a, b = self.window
        if not (a < b):
            raise ValueError("window must satisfy a < b, got %r" % (self.window,))
        if not (a < self.x < b):
            raise ValueError("x=%g must lie inside the open window (%g, %g)" % (self.x, a, b))
        if self.sup_mode:
            if self.p is not None:
                raise ValueError("sup_mode and a norm exponent are mutually exclusive")
        else:
            if self.p is None or not self.p > 1.0:
                raise ValueError("the moment route needs p > 1, got %r" % (self.p,))
        slope, intercept = self.affine_ref
        span = min(b, a + 8.0 * max(1.0, abs(a))) - a
        for i in range(1, 33):
            t = a + span * i / 33.0
            ref = slope * t + intercept
            if abs(self.target(t) - ref) > 1e-12 * (1.0 + abs(ref)):
                raise ValueError(
                    "target disagrees with the affine reference inside the window at t=%g" % t
                )


@dataclass(frozen=True)
class OperatorValue:
    value: float
    truncation_index: int
    truncation_remainder_bound: float


def _right_tail_bound(n: int, x: float, k: int) -> float:
    # Theorem-1 upper bound on P(N_{nx} >= k); k/n > x by construction here
    q = TailQuery(n=n, x=x, threshold=k / n, side=Side.RIGHT)
    return _thm_upper_value(bounds.thm1_bounds(q))


def _left_tail_bound(n: int, x: float, k: int) -> float:
    # Theorem-2 upper bound on P(N_{nx} <= k); needs k >= 1
    q = TailQuery(n=n, x=x, threshold=k / n, side=Side.LEFT)
    return _thm_upper_value(bounds.thm2_bounds(q))


def _thm_upper_value(triple: tuple) -> float:
    upper = triple[2]
    if not upper.valid:
        raise exact.InternalConsistencyError("tail bound invalid inside truncation: %s" % upper.precondition_note)
    return upper.value


def _right_remainder(desc: Descriptor, n: int, x: float, k: int, w: int) -> float:
    """Rigorous bound on sum_{j >= k} |f(j/n)| pmf(nx, j): tail bound times
    the envelope's maximum over the next w indices, plus a geometric
    remainder once the pmf-times-envelope ratio drops below 1."""
    nx = n * x
    d = desc.growth_degree()
    window_part = _right_tail_bound(n, x, k) * desc.envelope((k + w) / n)
    k2 = k + w
    ratio = (nx / (k2 + 1.0)) * ((k2 + 1.0) / k2) ** d
    if ratio >= 1.0:
        return math.inf
    geo_part = _right_tail_bound(n, x, k2) * desc.envelope((k2 + 1.0) / n) * ratio / (1.0 - ratio)
    return window_part + geo_part


def szasz_apply(f: Descriptor | str, n: int, x: float, tolerance: float = 1e-12) -> OperatorValue:
    """S_nf(x) = sum_k f(k/n) pmf(nx, k), truncated so the reported
    remainder bound (computed from the tail bounds and the growth envelope,
    never from sampled terms) is below the tolerance."""
    return _apply_truncated(f, n, x, tolerance, 0)


def _apply_truncated(
    f: Descriptor | str, n: int, x: float, tolerance: float, min_index: int
) -> OperatorValue:
    desc = parse_descriptor(f) if isinstance(f, str) else f
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError("n must be an integer >= 1, got %r" % (n,))
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError("x must be positive and finite, got %r" % (x,))
    if not tolerance > 0.0:
        raise ValueError("tolerance must be positive, got %r" % (tolerance,))
    nx = n * x
    w = int(math.ceil(40.0 * math.sqrt(nx))) + 8
    k_hi = max(int(math.ceil(nx + 12.0 * math.sqrt(nx))) + 25, min_index)
    remainder = _right_remainder(desc, n, x, k_hi, w)
    for _ in range(200):
        if remainder < 0.5 * tolerance:
            break
        k_hi = int(math.ceil(k_hi * 1.25)) + 20
        remainder = _right_remainder(desc, n, x, k_hi, w)
    else:
        raise TruncationDivergenceError(
            "no truncation index reached tolerance %g (envelope grows too fast)" % tolerance
        )
    k_lo = 0
    left_remainder = 0.0
    if nx > 2e5:
        # only worth cutting on the left when the bulk sits very far right
        offset = 12.0 * math.sqrt(nx) + 50.0
        while True:
            cand = int(math.floor(nx - offset))
            if cand < 1:
                break
            rem = _left_tail_bound(n, x, cand) * desc.envelope(cand / n)
            if rem < 0.25 * tolerance:
                k_lo = cand
                left_remainder = rem
                break
            offset *= 1.6
    ks = np.arange(k_lo, k_hi + 1, dtype=np.float64)
    row = exact.poisson_pmf_row(nx, k_lo, k_hi)
    value = math.fsum(desc.eval_array(ks / n) * row)
    return OperatorValue(
        value=value,
        truncation_index=k_hi,
        truncation_remainder_bound=remainder + left_remainder,
    )


def theorem3_bound(problem: SzaszProblem, n: int) -> float:
    """M (L^{1/q} e^{-nH(alpha,x)/q} + R^{1/q} e^{-nH(beta,x)/q}) with
    M the p-th deviation moment computed by the operator itself; valid
    for finite windows (the sup route below covers b = inf)."""
    if problem.sup_mode:
        raise ValueError("sup-mode problems take remark5_bound, not the moment route")
    a, b = problem.window
    if not math.isfinite(b):
        raise ValueError("the moment route is implemented for b < inf only")
    if a * n < 1.0 - _SNAP_REL:
        raise ValueError("needs a >= 1/n, got a=%g with n=%d" % (a, n))
    p = float(problem.p)
    q = p / (p - 1.0)
    dev = problem.target.deviation_power(problem.affine_ref, p)
    first = _apply_truncated(dev, n, problem.x, 1e-12, 0)
    # condition check: the truncated p-th moment must stabilize under a
    # 25% larger cutoff (a true divergence is undetectable numerically,
    # but the registry's polynomial envelopes cannot produce one)
    second = _apply_truncated(
        dev, n, problem.x, 1e-12, int(math.ceil(1.25 * first.truncation_index))
    )
    if abs(second.value - first.value) > 1e-10 * max(abs(first.value), 1e-300):
        raise MomentDivergenceError(
            "p-th deviation moment did not stabilize: %r vs %r" % (first.value, second.value)
        )
    moment = max(second.value, 0.0)
    if moment == 0.0:
        return 0.0
    big_m = moment ** (1.0 / p)
    env = bounds.envelope_constants(n, problem.x, a, b)
    l_idx, m_idx = _window_indices(n, a, b)
    h_alpha = kl_divergence(l_idx / n, problem.x)
    h_beta = kl_divergence(m_idx / n, problem.x)
    return big_m * (
        env.L ** (1.0 / q) * math.exp(-n * h_alpha / q)
        + env.R ** (1.0 / q) * math.exp(-n * h_beta / q)
    )


def _window_indices(n: int, a: float, b: float) -> tuple[int, int]:
    scaled_a, snapped_a = _snap(n * a)
    l_idx = int(scaled_a) if snapped_a else math.floor(scaled_a)
    scaled_b, snapped_b = _snap(n * b)
    m_idx = int(scaled_b) if snapped_b else math.ceil(scaled_b)
    return l_idx, m_idx


def remark5_bound(problem: SzaszProblem, sup_norm: float, n: int) -> float:
    """sup_norm (L e^{-nH(alpha,x)} + R e^{-nH(beta,x)}), dropping the right
    term when b = inf; the two factors are exactly the Theorem 1/2 uppers."""
    if not problem.sup_mode:
        raise ValueError("remark5_bound takes a sup-mode problem")
    sup_norm = float(sup_norm)
    if not (math.isfinite(sup_norm) and sup_norm >= 0.0):
        raise ValueError("sup_norm must be finite and >= 0, got %r" % (sup_norm,))
    a, b = problem.window
    if a * n < 1.0 - _SNAP_REL:
        raise ValueError("needs a >= 1/n, got a=%g with n=%d" % (a, n))
    left = _thm_upper_value(
        bounds.thm2_bounds(TailQuery(n=n, x=problem.x, threshold=a, side=Side.LEFT))
    )
    if math.isfinite(b):
        right = _thm_upper_value(
            bounds.thm1_bounds(TailQuery(n=n, x=problem.x, threshold=b, side=Side.RIGHT))
        )
        return sup_norm * (left + right)
    return sup_norm * left


def boundary_rate(a: float, s: float, n: int) -> tuple[float, float]:
    """(S_nf_s(a) - f_s(a), (a/n)^{s/2} E[Z_-^s]): the exact finite sum over
    k < na against its central-limit prediction; the ratio tends to 1."""
    a = float(a)
    s = float(s)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError("n must be an integer >= 1, got %r" % (n,))
    if not s > 0.0:
        raise ValueError("s must be positive, got %r" % (s,))
    na = n * a
    if na < 1.0 - _SNAP_REL:
        raise ValueError("needs a >= 1/n, got a=%g with n=%d" % (a, n))
    scaled, snapped = _snap(na)
    top = int(scaled) - 1 if snapped else math.floor(scaled)
    lhs = 0.0
    if top >= 0:
        ks = np.arange(0, top + 1, dtype=np.float64)
        row = exact.poisson_pmf_row(na, 0, top)
        lhs = math.fsum(np.maximum(a - ks / n, 0.0) ** s * row)
    rhs = (a / n) ** (s / 2.0) * half_normal_negative_moment(s)
    return lhs, rhs


def half_normal_negative_moment(s: float) -> float:
    """E[Z_-^s] = 2^{(s-2)/2} Gamma((s+1)/2) / sqrt(pi) for standard normal Z."""
    s = float(s)
    if not s > 0.0:
        raise ValueError("s must be positive, got %r" % (s,))
    return 2.0 ** ((s - 2.0) / 2.0) * math.gamma((s + 1.0) / 2.0) / math.sqrt(math.pi)
