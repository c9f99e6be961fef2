"""Batch invariant sweeps over the exact oracle, the bound families, the
comparison machinery, and the operator application.

Each suite returns a SuiteResult whose `worst` is the smallest slack seen
across all of its checks: a margin that must stay nonnegative (sandwich
orderings, strict brackets) or `tolerance - deviation` for identity-style
checks.  Any negative slack is a violation.  All suites are deterministic;
the identity sweep draws from a seeded generator.

Log-space comparisons are used wherever tail probabilities can underflow:
a sandwich that holds trivially as 0.0 <= 0.0 <= 0.0 checks nothing, while
the log values stay finite and keep their ordering testable thousands of
e-foldings down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds, compare, exact, szasz
from .divergence import Side, TailQuery, discretize, kl_divergence

__all__ = ["SuiteResult", "SUITES", "run_suite"]

_MAX_NOTES = 12


@dataclass
class SuiteResult:
    suite: str
    points: int = 0
    violations: int = 0
    worst: float = math.inf
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def check(self, slack: float, description: str) -> None:
        """Record one margin; negative means the invariant failed."""
        self.points += 1
        if slack < self.worst:
            self.worst = slack
        if not slack >= 0.0:
            self.violations += 1
            if len(self.notes) < _MAX_NOTES:
                self.notes.append("%s (slack %.6g)" % (description, slack))

    def note(self, text: str) -> None:
        if len(self.notes) < _MAX_NOTES:
            self.notes.append(text)


def _tails_right(res: SuiteResult, n: int, x: float, b: float) -> None:
    q = TailQuery(n=n, x=x, threshold=b, side=Side.RIGHT)
    lo, sharp, up = bounds.thm1_bounds(q)
    m = discretize(q).grid_index
    log_exact = exact.poisson_log_sf(n * x, m)
    where = "right n=%d x=%g b=%g" % (n, x, b)
    res.check(sharp.log_value - lo.log_value, "lower > lower_sharp at " + where)
    res.check(log_exact - sharp.log_value, "lower_sharp > exact at " + where)
    res.check(up.log_value - log_exact, "exact > upper at " + where)
    # the literal envelope claim: R_n <= 1/2 + 1/sqrt(2 pi nbeta)
    cap = math.log(0.5 + 1.0 / math.sqrt(2.0 * math.pi * m)) - n * kl_divergence(m / n, x)
    res.check(cap - up.log_value + 1e-12, "upper above its 1/2-cap at " + where)
    blm = bounds.blm_bounds(q)
    res.check(blm.log_value - log_exact, "exponential-moment bound < exact at " + where)
    se = bounds.short_explicit(q)
    if se.valid:
        res.check(se.log_value - log_exact, "explicit bound < exact at " + where)
    kwin = 1 + (n % 4)
    klo, kup = bounds.klar_sandwich(n, x, b, kwin)
    res.check(log_exact - klo.log_value, "window lower > exact at " + where)
    if kup.valid:
        res.check(kup.log_value - log_exact, "window upper < exact at " + where)


def _tails_left(res: SuiteResult, n: int, x: float, a: float) -> None:
    q = TailQuery(n=n, x=x, threshold=a, side=Side.LEFT)
    lo, sharp, up = bounds.thm2_bounds(q)
    l = discretize(q).grid_index
    log_exact = exact.poisson_log_cdf(n * x, l)
    where = "left n=%d x=%g a=%g" % (n, x, a)
    res.check(sharp.log_value - lo.log_value, "lower > lower_sharp at " + where)
    res.check(log_exact - sharp.log_value, "lower_sharp > exact at " + where)
    res.check(up.log_value - log_exact, "exact > upper at " + where)
    cap = math.log(0.5 + 1.0 / math.sqrt(2.0 * math.pi * l)) - n * kl_divergence(l / n, x)
    res.check(cap - up.log_value + 1e-12, "upper above its 1/2-cap at " + where)
    blm = bounds.blm_bounds(q)
    res.check(blm.log_value - log_exact, "exponential-moment bound < exact at " + where)
    sp_lo, sp_up = bounds.short_phi_sandwich(n, x, a)
    # the normal-cdf sandwich is strict, so zero slack is already a failure
    res.check(_strict(log_exact - sp_lo.log_value), "phi lower >= exact at " + where)
    res.check(_strict(sp_up.log_value - log_exact), "phi upper <= exact at " + where)


def _strict(margin: float) -> float:
    return margin if margin > 0.0 else -math.inf if margin == 0.0 else margin


def run_tails(n_max: int = 200, x_points: int = 50) -> SuiteResult:
    """Sandwich and comparator soundness on a deterministic grid:
    n in 1..n_max, x_points values of x in (0, 20], one right threshold in
    (x, x+10] and one left threshold in [1/n, x] per pair, all margins in
    log space."""
    res = SuiteResult("tails")
    for n in range(1, n_max + 1):
        for j in range(x_points):
            x = 20.0 * (j + 0.5) / x_points
            frac = ((7 * n + 3 * j) % 97 + 1) / 97.0
            _tails_right(res, n, x, x + 10.0 * frac)
            if n * x >= 1.0:
                frac2 = ((5 * n + 11 * j) % 89) / 88.0
                a = min(x, 1.0 / n + frac2 * (x - 1.0 / n))
                _tails_left(res, n, x, a)
    return res


def run_lemma3(kmax: int = 10000) -> SuiteResult:
    """Central-mass enclosure 1/2 <= P(N_k >= k), P(N_k <= k) <= 1/2 + 1/sqrt(2 pi k)."""
    res = SuiteResult("lemma3")
    for k in range(1, kmax + 1):
        try:
            p_geq, p_leq, bound = exact.lemma3_check(k)
        except exact.InternalConsistencyError as err:
            res.check(-math.inf, str(err))
            continue
        res.check(min(p_geq, p_leq) - 0.5, "central mass below 1/2 at k=%d" % k)
        res.check(bound - max(p_geq, p_leq), "central mass above cap at k=%d" % k)
    return res


def run_stirling(kmax: int = 10**6, dense_limit: int = 1000, log_points: int = 200) -> SuiteResult:
    """exp(poisson_log_pmf(k,k)) inside the factorial enclosure: every k up
    to dense_limit with zero slack, log-spaced k above it with 8e-15 relative
    slack (the true lower margin 1/(360k^3) drops below one ulp near k ~ 3e4,
    so exact containment stops being float-decidable there)."""
    res = SuiteResult("stirling")
    ks = list(range(1, min(dense_limit, kmax) + 1))
    if kmax > dense_limit:
        sampled = np.unique(
            np.geomspace(dense_limit + 1, kmax, num=log_points).round().astype(np.int64)
        )
        ks.extend(int(k) for k in sampled)
    for k in ks:
        iv = exact.stirling_interval(k)
        p = math.exp(exact.poisson_log_pmf(float(k), k))
        slack = 8e-15 * p if k > dense_limit else 0.0
        res.check(p - iv.lower + slack, "pmf below enclosure at k=%d" % k)
        res.check(iv.upper - p + slack, "pmf above enclosure at k=%d" % k)
    iv = exact.stirling_interval(kmax)
    res.check(
        1e-7 * iv.lower - (iv.upper - iv.lower),
        "enclosure wider than 1e-7 relative at k=%d" % kmax,
    )
    return res


def run_identity8(points: int = 1000, seed: int = 88218821) -> SuiteResult:
    """The pmf shift identities, right and left:

        P(N_{nx} = m+k) = P(N_m = m+k) (x/beta)^k e^{-nH(beta,x)},  m = nbeta
        P(N_{nx} = l-k) = P(N_l = l-k) (alpha/x)^k e^{-nH(alpha,x)}, l = nalpha

    checked as |expm1(log lhs - log rhs)| <= 1e-11 on `points` seeded draws
    each.  They exercise the pmf, the divergence, and the exponent plumbing
    jointly, which is why the tolerance is so tight."""
    res = SuiteResult("identity8")
    rng = np.random.default_rng(seed)
    tol = 1e-11
    for _ in range(points):
        n = int(rng.integers(1, 201))
        x = float(rng.uniform(0.05, 12.0))
        ratio = float(rng.uniform(1.0, 2.2))
        m = max(math.ceil(n * x - 1e-9), int(round(n * x * ratio)), 1)
        beta = m / n
        k = int(rng.integers(0, int(2.0 * math.sqrt(m)) + 2))
        lhs = exact.poisson_log_pmf(n * x, m + k)
        rhs = (
            exact.poisson_log_pmf(float(m), m + k)
            + k * (math.log(x) - math.log(beta))
            - n * kl_divergence(beta, x)
        )
        dev = abs(math.expm1(lhs - rhs))
        res.check(tol - dev, "right shift identity off at n=%d x=%g m=%d k=%d" % (n, x, m, k))
    for _ in range(points):
        n = int(rng.integers(1, 201))
        x = float(rng.uniform(0.05, 12.0))
        if n * x < 1.0:
            x = 1.5 / n
        l = int(rng.integers(1, max(math.floor(n * x + 1e-9), 1) + 1))
        alpha = l / n
        k = int(rng.integers(0, min(l, int(2.0 * math.sqrt(l)) + 2) + 1))
        lhs = exact.poisson_log_pmf(n * x, l - k)
        rhs = (
            exact.poisson_log_pmf(float(l), l - k)
            + k * (math.log(alpha) - math.log(x))
            - n * kl_divergence(alpha, x)
        )
        dev = abs(math.expm1(lhs - rhs))
        res.check(tol - dev, "left shift identity off at n=%d x=%g l=%d k=%d" % (n, x, l, k))
    return res


def run_median(kmax: int = 10000) -> SuiteResult:
    """Gamma-median bracket k < lambda_k < k+1 and the defining residual
    |cdf(lambda_k, k) - 1/2| <= 1e-13 for every k up to kmax."""
    res = SuiteResult("median")
    for k in range(1, kmax + 1):
        gm = exact.gamma_median(k)
        res.check(
            min(gm.lambda_k - k, k + 1 - gm.lambda_k),
            "median outside (k, k+1) at k=%d" % k,
        )
        residual = abs(exact.poisson_cdf(gm.lambda_k, k) - 0.5)
        res.check(1e-13 - residual, "median cdf residual %.3g at k=%d" % (residual, k))
    return res


def run_crossovers(m_min: int = 9, m_max: int = 200, grid: int = 500) -> SuiteResult:
    """Landmark ordering y < z < x < beta_hat for every nbeta in
    [m_min, m_max], Q < 1 below y_hat, exactly one sign change of Q - 1 on
    a `grid`-point curve, monotone growth right of y_hat, and byte-identical
    CSV re-emission for the default (n=3, b=3) dataset."""
    res = SuiteResult("crossovers")
    for m in range(m_min, m_max + 1):
        n = 1 + (m % 3)
        b = m / n
        cs = compare.crossovers(n, b)
        where = "n=%d b=%g (nbeta=%d)" % (n, b, m)
        res.check(cs.z_hat - cs.y_hat, "z_hat <= y_hat at " + where)
        res.check(cs.x_hat - cs.z_hat, "x_hat <= z_hat at " + where)
        res.check(cs.beta_hat - cs.x_hat, "beta_hat <= x_hat at " + where)
        for i in range(50):
            xq = cs.y_hat * (i + 1) / 51.0
            res.check(
                _strict(1.0 - compare.quotient(n, b, xq)),
                "Q >= 1 below y_hat at %s x=%g" % (where, xq),
            )
        rows = compare.sample_curve(n, b, grid)
        signs = [r.q - 1.0 for r in rows if r.q != 1.0]
        flips = sum(
            1 for s0, s1 in zip(signs, signs[1:]) if (s0 > 0.0) != (s1 > 0.0)
        )
        res.check(0.0 if flips == 1 else -float(abs(flips - 1)), "%d unit crossings at %s" % (flips, where))
        for r0, r1 in zip(rows, rows[1:]):
            if r0.x > cs.y_hat:
                res.check(_strict(r1.q - r0.q), "Q not increasing past y_hat at %s x=%g" % (where, r1.x))
    _, _, text1 = compare.curve_csv_text(3, 3.0, grid)
    _, _, text2 = compare.curve_csv_text(3, 3.0, grid)
    res.check(0.0 if text1 == text2 else -1.0, "default curve emission not deterministic")
    return res


def _szasz_soundness(res: SuiteResult) -> None:
    norm_ps = (1.5, 2.0, 4.0)
    idx = 0
    for a in (0.3, 0.5, 0.8, 1.2):
        for width in (0.6, 1.0, 1.6):
            bw = a + width
            for pos in (0.3, 0.55, 0.8):
                x = a + pos * width
                for n in (8, 20, 45):
                    for delta in (1.0, 0.5):
                        target = szasz.PatchedAffine(
                            slope=2.0, intercept=1.0, delta=delta, a=a, b=bw,
                            text="patch:affine:2,1;outside=%r;window=%r,%r" % (delta, a, bw),
                        )
                        actual = abs(szasz.szasz_apply(target, n, x).value - target(x))
                        where = "a=%g b=%g x=%g n=%d delta=%g" % (a, bw, x, n, delta)
                        p = norm_ps[idx % 3]
                        idx += 1
                        problem = szasz.SzaszProblem(
                            target=target, affine_ref=(2.0, 1.0), window=(a, bw), x=x, p=p
                        )
                        bound = szasz.theorem3_bound(problem, n)
                        res.check(
                            bound - actual + 2e-11 * (1.0 + actual),
                            "moment-route bound below actual at %s p=%g" % (where, p),
                        )
                        if idx % 3 == 0:
                            sup_problem = szasz.SzaszProblem(
                                target=target, affine_ref=(2.0, 1.0), window=(a, bw), x=x,
                                sup_mode=True,
                            )
                            r5 = szasz.remark5_bound(sup_problem, delta, n)
                            res.check(
                                r5 - actual + 2e-11 * (1.0 + actual),
                                "sup-route bound below actual at " + where,
                            )
    # one-sided problems: power-deficit targets vanish above their knee
    for a0 in (0.5, 1.0):
        for s in (1.0, 2.0):
            target = szasz.PowerDeficit(a=a0, s=s, text="fs:a=%r,s=%r" % (a0, s))
            for n in (10, 30):
                for pos in (0.4, 1.1, 2.5):
                    x = a0 + pos
                    actual = abs(szasz.szasz_apply(target, n, x).value)
                    problem = szasz.SzaszProblem(
                        target=target, affine_ref=(0.0, 0.0), window=(a0, math.inf), x=x,
                        sup_mode=True,
                    )
                    r5 = szasz.remark5_bound(problem, a0**s, n)
                    res.check(
                        r5 - actual + 2e-11 * (1.0 + actual),
                        "one-sided bound below actual at a=%g s=%g n=%d x=%g" % (a0, s, n, x),
                    )


def run_szasz() -> SuiteResult:
    """Operator invariants: affine reproduction, the second-moment identity,
    truncation self-consistency, bound soundness over a 200+ problem grid,
    the interior exponential rate, and the boundary square-root rate."""
    res = SuiteResult("szasz")
    for slope, intercept in ((0.0, 1.0), (1.0, 0.0), (2.0, 1.0), (-3.0, 7.5)):
        for n in (1, 7, 40):
            for x in (0.3, 1.0, 6.0):
                f = szasz.Affine(slope=slope, intercept=intercept,
                                 text="affine:%r,%r" % (slope, intercept))
                ov = szasz.szasz_apply(f, n, x)
                want = slope * x + intercept
                res.check(
                    2e-12 * (1.0 + abs(want)) - abs(ov.value - want),
                    "affine reproduction off at slope=%g intercept=%g n=%d x=%g"
                    % (slope, intercept, n, x),
                )
    for n in (3, 10, 25):
        for x in (0.4, 1.0, 3.0):
            f = szasz.Polynomial(coeffs=(0.0, 0.0, 1.0), text="poly:0,0,1")
            ov = szasz.szasz_apply(f, n, x)
            want = x * x + x / n
            res.check(
                1e-12 * (1.0 + want) - abs(ov.value - want),
                "second-moment identity off at n=%d x=%g" % (n, x),
            )
    for text, n, x in (
        ("poly:0,1,2,0,0,0,0.5", 12, 1.3),
        ("fs:a=1,s=2", 9, 0.7),
        ("patch:affine:2,1;outside=+1;window=0.5,1.5", 10, 1.0),
    ):
        ov = szasz.szasz_apply(text, n, x)
        again = szasz._apply_truncated(text, n, x, 1e-12, ov.truncation_index + 50)
        res.check(
            ov.truncation_remainder_bound + 1e-15 * (1.0 + abs(ov.value)) - abs(again.value - ov.value),
            "extending the cutoff moved the value past the reported remainder at %s" % text,
        )
    _szasz_soundness(res)
    # interior point of the worked window: exponential decay at the full KL rate
    target = szasz.PatchedAffine(slope=2.0, intercept=1.0, delta=1.0, a=0.5, b=1.5,
                                 text="patch:affine:2,1;outside=+1;window=0.5,1.5")
    min_h = min(kl_divergence(0.5, 1.0), kl_divergence(1.5, 1.0))
    ns = (10, 20, 40, 80)
    rates = []
    log_errs = []
    for n in ns:
        err = abs(szasz.szasz_apply(target, n, 1.0).value - 3.0)
        rates.append(-math.log(err) / n)
        log_errs.append(math.log(err))
    res.check(min(rates) - 0.75 * min_h, "per-n interior rate below 0.75 min H")
    slope = -float(np.polyfit(np.asarray(ns, dtype=float), np.asarray(log_errs), 1)[0])
    res.check(slope - 0.75 * min_h, "fitted interior rate below 0.75 min H")
    # boundary: ratio to the half-normal prediction walks into [0.9, 1.1]
    devs = []
    for n in (100, 1000, 10000):
        lhs, rhs = szasz.boundary_rate(1.0, 1.0, n)
        devs.append(abs(lhs / rhs - 1.0))
    res.check(0.1 - devs[-1], "boundary ratio off by more than 10%% at n=10000")
    res.check(min(devs[0] - devs[1], devs[1] - devs[2]), "boundary ratio not improving with n")
    # polynomial decay at the boundary: far above any interior exponential fit
    lhs, _ = szasz.boundary_rate(1.0, 1.0, 10000)
    res.check(
        math.log(lhs) - (-slope * 10000.0),
        "boundary error not above the interior exponential fit at n=10000",
    )
    return res


SUITES = {
    "tails": run_tails,
    "lemma3": run_lemma3,
    "stirling": run_stirling,
    "identity8": run_identity8,
    "median": run_median,
    "crossovers": run_crossovers,
    "szasz": run_szasz,
}


def run_suite(name: str, **params) -> SuiteResult:
    """Dispatch by suite name; unknown size parameters are rejected so CLI
    flags cannot silently misroute (e.g. --points on the median suite)."""
    if name not in SUITES:
        raise ValueError("unknown suite %r; choose from %s" % (name, sorted(SUITES)))
    return SUITES[name](**params)
