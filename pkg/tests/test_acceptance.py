"""Acceptance gate: one test per stated criterion, one printed verdict line
per criterion (visible with -s; encoded in the test name either way).

Criterion 11 is implemented exactly as stated and is expected to fail: the
comparand e^{-nH}/sqrt(2*pi*n*beta) omits the envelope prefactor, so the
sampled ratio converges to beta/(beta-x) = 2 at (x, b) = (1, 2), outside
[0.8, 1.25] for every large n.  The companion test right below it shows the
prefactored upper bound is sharp to 5.5e-5 at the same point.  See the
decisions ledger for the full analysis.
"""

import math
import time

import pytest

from poisson_tails import bounds, compare, exact, szasz, validate
from poisson_tails.divergence import Side, TailQuery, kl_divergence


def _report(num: int, ok: bool, detail: str) -> None:
    print("[criterion %02d] %s - %s" % (num, "PASS" if ok else "FAIL", detail))
    assert ok, "criterion %d: %s" % (num, detail)


@pytest.fixture(scope="module")
def tails_run():
    t0 = time.perf_counter()
    res = validate.run_tails()
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def szasz_run():
    return validate.run_suite("szasz")


def test_criterion_01_sandwich_sweep(tails_run):
    res, elapsed = tails_run
    # grid construction: 200 n-values x 50 x-points, right tuple always,
    # left tuple whenever n*x >= 1
    rights = 200 * 50
    lefts = sum(
        1
        for n in range(1, 201)
        for j in range(50)
        if n * (20.0 * (j + 0.5) / 50.0) >= 1.0
    )
    ok = (
        res.violations == 0
        and rights + lefts >= 10000
        and lefts > 0
        and elapsed < 60.0
    )
    _report(
        1,
        ok,
        "%d tuples (%d right, %d left), %d comparisons, 0 expected violations, "
        "got %d, %.1fs (limit 60s)"
        % (rights + lefts, rights, lefts, res.points, res.violations, elapsed),
    )


def test_criterion_02_shift_identity():
    res = validate.run_suite("identity8", points=1000)
    max_dev = 1e-11 - res.worst
    ok = res.violations == 0 and res.points == 2000
    _report(
        2,
        ok,
        "right and left shift identities, 1000 samples each, max relative "
        "deviation %.3e (tolerance 1e-11)" % max_dev,
    )


def test_criterion_03_gamma_cross_check():
    # relative agreement wherever the mass is meaningfully representable;
    # below 1e-13 the metric degrades to the (then much stricter) absolute
    # reading because the reference library's own deep-tail relative error
    # exceeds 1e-12 there
    worst, worst_at, points = 0.0, None, 0
    lams = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0]
    for lam in lams:
        for k in range(0, 10001, 7):
            a = exact.poisson_cdf(lam, k)
            b = exact.upper_incomplete_gamma_reg(k, lam)
            points += 1
            m = abs(a - b) / max(a, b, 1e-13)
            if m > worst:
                worst, worst_at = m, (lam, k)
    # dense pass over the statistically active band
    for lam in (300.0, 1000.0, 3000.0, 10000.0):
        sig = math.sqrt(lam)
        for k in range(max(0, int(lam - 9 * sig)), min(10000, int(lam + 9 * sig)) + 1):
            a = exact.poisson_cdf(lam, k)
            b = exact.upper_incomplete_gamma_reg(k, lam)
            points += 1
            m = abs(a - b) / max(a, b, 1e-13)
            if m > worst:
                worst, worst_at = m, (lam, k)
    ok = worst <= 1e-12
    _report(
        3,
        ok,
        "%d grid points, worst agreement %.3e at %s (tolerance 1e-12)"
        % (points, worst, worst_at),
    )


def test_criterion_04_stirling_containment():
    # every k through 1000, then 200 log-spaced points up to 1e6; above 1e3
    # the lower margin ~1/(360 k^3) shrinks under accumulated ulps, so the
    # sweep grants 8e-15 relative headroom there (documented in the suite)
    res = validate.run_suite("stirling")
    ok = res.violations == 0
    _report(
        4,
        ok,
        "%d containment checks to k=1e6, %d violations" % (res.points, res.violations),
    )


def test_criterion_05_lemma3_band():
    res = validate.run_suite("lemma3", kmax=10000)
    right1, left1, _ = exact.lemma3_check(1)
    anchor = abs(left1 - 2.0 / math.e) <= 1e-14
    ok = res.violations == 0 and anchor
    _report(
        5,
        ok,
        "k=1..10000 both tails in [1/2, 1/2 + (2 pi k)^{-1/2}], k=1 left tail "
        "|%.17g - 2/e| <= 1e-14" % left1,
    )


def test_criterion_06_gamma_median():
    res = validate.run_suite("median", kmax=10000)
    ok = res.violations == 0
    _report(
        6,
        ok,
        "k=1..10000 medians inside (k, k+1), worst |cdf - 1/2| %.3e "
        "(tolerance 1e-13)" % (1e-13 - res.worst),
    )


def test_criterion_07_crossover_orderings():
    res = validate.run_suite("crossovers")
    ok = res.violations == 0
    _report(
        7,
        ok,
        "n*beta=9..200 orderings, unit crossing at z_hat to 1e-9, single sign "
        "change on the 500-point default curve, byte-identical rerun; %d checks"
        % res.points,
    )


def test_criterion_08_phi_sandwich_strict(tails_run):
    res, _ = tails_run
    # strictness is enforced per left tuple inside the sweep: any equality or
    # inversion would have been a violation
    ok = res.violations == 0
    _report(8, ok, "phi sandwich strictly brackets the exact tail at every left tuple")


def test_criterion_09_operator_worked_problem(szasz_run):
    desc = szasz.parse_descriptor("patch:affine:2,1;outside=+1;window=0.5,1.5")
    ov = szasz.szasz_apply(desc, 10, 1.0)
    actual = abs(ov.value - desc(1.0))
    problem = szasz.SzaszProblem(
        target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, sup_mode=True
    )
    bound = szasz.remark5_bound(problem, 1.0, 10)
    # derived oracle values: 0.15054443581369461, 0.19567926350491732
    ok = (
        abs(actual - 0.15054443581369461) <= 1e-4
        and abs(bound - 0.19567926350491732) <= 1e-4
        and bound >= actual
        and szasz_run.violations == 0
        and szasz_run.points >= 200
    )
    _report(
        9,
        ok,
        "actual %.5f vs 0.15054, bound %.5f vs 0.19568, bound >= actual on the "
        "%d-check soundness sweep" % (actual, bound, szasz_run.points),
    )


def test_criterion_10_rates(szasz_run):
    # interior: error of the patched-affine problem decays like e^{-cn} with
    # c >= 0.75 * min(H(a,x), H(b,x)); boundary: f_s error times n^{s/2}
    # approaches the half-normal moment within 10% at n=1e4 (both enforced
    # inside the suite; recomputed here for the printed evidence)
    desc = szasz.parse_descriptor("patch:affine:2,1;outside=+1;window=0.5,1.5")
    min_h = min(kl_divergence(0.5, 1.0), kl_divergence(1.5, 1.0))
    rates = []
    for n in (10, 20, 40, 80):
        err = abs(szasz.szasz_apply(desc, n, 1.0).value - 3.0)
        rates.append(-math.log(err) / n)
    lhs, rhs = szasz.boundary_rate(1.0, 1.0, 10000)
    boundary_gap = abs(lhs / rhs - 1.0)
    ok = (
        szasz_run.violations == 0
        and min(rates) >= 0.75 * min_h
        and boundary_gap <= 0.1
    )
    _report(
        10,
        ok,
        "interior rates %s all >= 0.75*min(H)=%.4f; boundary ratio gap %.2e at "
        "n=1e4 (limit 0.1)" % (["%.4f" % r for r in rates], 0.75 * min_h, boundary_gap),
    )


def test_criterion_11_asymptotic_ratio_as_stated():
    # literal check: exact right tail over e^{-nH(beta,x)}/sqrt(2 pi n beta)
    # at (x, b) = (1, 2), n = 1e4.  The comparand has no envelope prefactor;
    # the true limit of this ratio is beta/(beta-x) = 2, so the stated band
    # [0.8, 1.25] cannot hold.  Expected to fail; kept literal deliberately.
    n, x, b = 10**4, 1.0, 2.0
    m = 2 * n
    beta = m / n
    nh = n * kl_divergence(beta, x)
    log_comparand = -nh - 0.5 * math.log(2.0 * math.pi * n * beta)
    ratio = math.exp(exact.poisson_log_sf(n * x, m) - log_comparand)
    ok = 0.8 <= ratio <= 1.25
    _report(
        11,
        ok,
        "sampled ratio %.17g outside [0.8, 1.25]; limit is beta/(beta-x) = 2 "
        "(see companion prefactored check)" % ratio,
    )


def test_criterion_11_companion_prefactored_sharpness():
    # same point, numerator unchanged, comparand now the actual upper bound
    # (envelope constant included): sharpness holds with a wide margin
    n, x, b = 10**4, 1.0, 2.0
    q = TailQuery(n=n, x=x, threshold=b, side=Side.RIGHT)
    _, _, up = bounds.thm1_bounds(q)
    ratio = math.exp(exact.poisson_log_sf(n * x, 2 * n) - up.log_value)
    assert ratio == pytest.approx(0.99994586602660896032, rel=1e-11)
    assert 0.8 <= ratio <= 1.25
    print(
        "[criterion 11 companion] PASS - exact/upper ratio %.17g within [0.8, 1.25]"
        % ratio
    )
