import math

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from poisson_tails import szasz
from poisson_tails.szasz import (
    Affine,
    DescriptorParseError,
    PatchedAffine,
    Polynomial,
    PowerDeficit,
    SzaszProblem,
    parse_descriptor,
)


def test_parse_affine():
    d = parse_descriptor("affine:2,1")
    assert isinstance(d, Affine)
    assert (d.slope, d.intercept) == (2.0, 1.0)
    assert d(0.5) == 2.0
    neg = parse_descriptor("affine:-0.5,3")
    assert neg(2.0) == 2.0


def test_parse_poly():
    d = parse_descriptor("poly:0,0,1")
    assert isinstance(d, Polynomial)
    assert d.coeffs == (0.0, 0.0, 1.0)
    assert d(3.0) == 9.0
    assert parse_descriptor("poly:1,2,3,4,5,6,7").growth_degree() == 6
    with pytest.raises(DescriptorParseError):
        parse_descriptor("poly:1,2,3,4,5,6,7,8")  # degree cap


def test_parse_fs():
    d = parse_descriptor("fs:a=1,s=1")
    assert isinstance(d, PowerDeficit)
    assert (d.a, d.s) == (1.0, 1.0)
    assert d(0.25) == 0.75
    assert d(2.0) == 0.0
    assert parse_descriptor("fs:a=0.5,s=2.5")(0.25) == 0.25**2.5


def test_parse_patch():
    d = parse_descriptor("patch:affine:2,1;outside=+1;window=0.5,1.5")
    assert isinstance(d, PatchedAffine)
    assert (d.slope, d.intercept, d.delta) == (2.0, 1.0, 1.0)
    assert (d.a, d.b) == (0.5, 1.5)
    assert d(1.0) == 3.0  # inside: affine only
    assert d(0.5) == 3.0  # boundary counts as outside
    assert d(2.0) == 6.0
    inf_win = parse_descriptor("patch:affine:0,0;outside=-2;window=1,inf")
    assert inf_win(0.5) == -2.0
    assert inf_win(5.0) == 0.0


def test_parse_error_positions():
    with pytest.raises(DescriptorParseError) as e:
        parse_descriptor("poly:1,,2")
    assert "position 7" in str(e.value)
    assert e.value.position == 7
    with pytest.raises(DescriptorParseError) as e:
        parse_descriptor("spline:1,2")
    assert e.value.position == 0
    with pytest.raises(DescriptorParseError):
        parse_descriptor("fs:a=-1,s=1")  # a must be positive
    with pytest.raises(DescriptorParseError):
        parse_descriptor("fs:a=1")
    with pytest.raises(DescriptorParseError):
        parse_descriptor("patch:affine:2,1;window=0.5,1.5")  # missing outside
    with pytest.raises(DescriptorParseError):
        parse_descriptor("affine:2")


def test_envelopes_majorize():
    cases = [
        (parse_descriptor("affine:-2,1"), 1),
        (parse_descriptor("poly:1,-2,3,0,1"), 4),
        (parse_descriptor("fs:a=2,s=1.5"), 0),
        (parse_descriptor("patch:affine:2,-1;outside=-3;window=0.5,1.5"), 1),
    ]
    for d, degree in cases:
        assert d.growth_degree() == degree
        for tau in (0.1, 0.7, 1.3, 4.0, 25.0):
            env = d.envelope(tau)
            for t in (0.0, tau * 0.3, tau * 0.77, tau):
                assert abs(d(t)) <= env * (1 + 1e-15)
        # envelope growth is no faster than tau^degree
        for tau, tau2 in ((0.5, 1.5), (2.0, 10.0)):
            ratio = d.envelope(tau2) / max(d.envelope(tau), 1e-300)
            assert ratio <= (tau2 / tau) ** degree * (1 + 1e-12) + 1e-12


@given(
    st.floats(min_value=-5.0, max_value=5.0),
    st.floats(min_value=-5.0, max_value=5.0),
    st.integers(min_value=1, max_value=60),
    st.floats(min_value=0.05, max_value=8.0),
)
@settings(deadline=None, max_examples=60)
def test_affine_reproduction(slope, intercept, n, x):
    # the operator reproduces affine functions exactly
    f = Affine(slope, intercept)
    got = szasz.szasz_apply(f, n, x).value
    want = slope * x + intercept
    assert got == pytest.approx(want, rel=2e-12, abs=2e-12)


@given(
    st.integers(min_value=1, max_value=40),
    st.floats(min_value=0.05, max_value=6.0),
)
@settings(deadline=None, max_examples=40)
def test_second_moment_identity(n, x):
    got = szasz.szasz_apply(Polynomial((0.0, 0.0, 1.0)), n, x).value
    assert got == pytest.approx(x * x + x / n, rel=1e-12)


@given(
    st.integers(min_value=1, max_value=25),
    st.floats(min_value=0.1, max_value=4.0),
)
@settings(deadline=None, max_examples=30)
def test_third_moment_identity(n, x):
    got = szasz.szasz_apply(Polynomial((0.0, 0.0, 0.0, 1.0)), n, x).value
    want = x**3 + 3.0 * x**2 / n + x / n**2
    assert got == pytest.approx(want, rel=1e-11)


def test_truncation_remainder_is_sound():
    for text, n, x in [
        ("poly:0,1,2,0,0,0,0.5", 12, 1.3),
        ("fs:a=1,s=2", 9, 0.7),
        ("patch:affine:2,1;outside=+1;window=0.5,1.5", 10, 1.0),
    ]:
        ov = szasz.szasz_apply(text, n, x)
        deeper = szasz._apply_truncated(text, n, x, 1e-12, ov.truncation_index + 50)
        drift = abs(deeper.value - ov.value)
        assert drift <= ov.truncation_remainder_bound + 1e-15 * (1.0 + abs(ov.value))


def test_descriptor_string_accepted_directly():
    ov = szasz.szasz_apply("affine:2,1", 10, 1.0)
    assert ov.value == pytest.approx(3.0, rel=1e-13)
    with pytest.raises(DescriptorParseError):
        szasz.szasz_apply("nope:1", 10, 1.0)


WORKED = dict(
    target="patch:affine:2,1;outside=+1;window=0.5,1.5",
    affine_ref=(2.0, 1.0),
    window=(0.5, 1.5),
    x=1.0,
)


def test_worked_problem_frozen():
    # reference values computed with 50-digit arithmetic
    desc = parse_descriptor(WORKED["target"])
    ov = szasz.szasz_apply(desc, 10, 1.0)
    actual = abs(ov.value - desc(1.0))
    assert actual == pytest.approx(0.1505444358136946072, rel=1e-12)
    sup_problem = SzaszProblem(
        target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, sup_mode=True
    )
    assert szasz.remark5_bound(sup_problem, 1.0, 10) == pytest.approx(
        0.19567926350491731833, rel=2e-15
    )
    p2_problem = SzaszProblem(
        target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, p=2.0
    )
    assert szasz.theorem3_bound(p2_problem, 10) == pytest.approx(
        0.24265659371582052479, rel=1e-11
    )


def test_problem_validation():
    desc = parse_descriptor(WORKED["target"])
    with pytest.raises(ValueError):
        SzaszProblem(target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=2.0)  # x outside
    with pytest.raises(ValueError):
        SzaszProblem(target=desc, affine_ref=(2.0, 1.0), window=(1.5, 0.5), x=1.0)
    with pytest.raises(ValueError):
        # reference disagrees with the target inside the window
        SzaszProblem(
            target=desc, affine_ref=(1.0, 1.0), window=(0.5, 1.5), x=1.0, p=2.0
        )
    with pytest.raises(ValueError):
        # exactly one of p and sup_mode
        SzaszProblem(target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0)
    with pytest.raises(ValueError):
        SzaszProblem(
            target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, p=1.0
        )  # p > 1 needed for the conjugate exponent


def test_moment_route_requires_finite_window():
    fs = parse_descriptor("fs:a=1,s=1")
    prob = SzaszProblem(
        target=fs, affine_ref=(0.0, 0.0), window=(1.0, math.inf), x=2.0, p=2.0
    )
    with pytest.raises(ValueError):
        szasz.theorem3_bound(prob, 10)
    sup_prob = SzaszProblem(
        target=fs, affine_ref=(0.0, 0.0), window=(1.0, math.inf), x=2.0, sup_mode=True
    )
    with pytest.raises(ValueError):
        szasz.theorem3_bound(sup_prob, 10)  # sup problems take the sup route
    one_sided = szasz.remark5_bound(sup_prob, 1.0, 10)
    from poisson_tails import bounds
    from poisson_tails.divergence import Side, TailQuery

    _, _, up = bounds.thm2_bounds(TailQuery(n=10, x=2.0, threshold=1.0, side=Side.LEFT))
    assert one_sided == pytest.approx(up.value, rel=1e-15)


def test_half_normal_negative_moments():
    # reference values computed with 50-digit arithmetic
    assert szasz.half_normal_negative_moment(1.0) == pytest.approx(
        0.39894228040143267794, rel=2e-15
    )
    assert szasz.half_normal_negative_moment(2.0) == pytest.approx(0.5, rel=2e-15)
    assert szasz.half_normal_negative_moment(4.0) == pytest.approx(1.5, rel=2e-15)
    assert szasz.half_normal_negative_moment(0.7) == pytest.approx(
        0.39999009534807295247, rel=2e-15
    )


def test_boundary_rate_frozen():
    lhs, rhs = szasz.boundary_rate(1.0, 1.0, 100)
    assert lhs == pytest.approx(0.0398609968091471, rel=5e-12)
    assert lhs / rhs == pytest.approx(0.999167016568, rel=5e-12)
    lhs4, rhs4 = szasz.boundary_rate(1.0, 1.0, 10000)
    assert lhs4 / rhs4 == pytest.approx(0.999991666701, rel=5e-12)
    assert rhs4 == pytest.approx(
        math.sqrt(1.0 / 10000) * szasz.half_normal_negative_moment(1.0), rel=1e-15
    )


def test_boundary_rate_validation():
    with pytest.raises(ValueError):
        szasz.boundary_rate(-1.0, 1.0, 10)
    with pytest.raises(ValueError):
        szasz.boundary_rate(1.0, 0.0, 10)
    with pytest.raises(ValueError):
        szasz.boundary_rate(1.0, 1.0, 0)


def test_remark5_validation():
    desc = parse_descriptor(WORKED["target"])
    prob = SzaszProblem(
        target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, sup_mode=True
    )
    with pytest.raises(ValueError):
        szasz.remark5_bound(prob, -1.0, 10)
    p_prob = SzaszProblem(
        target=desc, affine_ref=(2.0, 1.0), window=(0.5, 1.5), x=1.0, p=2.0
    )
    with pytest.raises(ValueError):
        szasz.remark5_bound(p_prob, 1.0, 10)  # moment problems take theorem3_bound
    with pytest.raises(ValueError):
        # left grid point would sit below 1: hypothesis of the left-tail theorem fails
        szasz.remark5_bound(prob, 1.0, 1)


def test_deviation_power_descriptors():
    patch = parse_descriptor("patch:affine:2,1;outside=+3;window=0.5,1.5")
    dev = patch.deviation_power((2.0, 1.0), 2.0)
    assert dev(1.0) == 0.0  # inside the window
    assert dev(2.0) == 9.0  # |delta|^p outside
    fs = parse_descriptor("fs:a=1,s=1.5")
    dev_fs = fs.deviation_power((0.0, 0.0), 2.0)
    assert dev_fs(0.5) == pytest.approx(0.5**3.0, rel=1e-15)
    with pytest.raises(ValueError):
        patch.deviation_power((1.0, 0.0), 2.0)  # mismatched reference
