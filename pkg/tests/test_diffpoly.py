"""Ring, calculus and printer tests for the differential-polynomial core."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from solitonlab.diffpoly import (
    DiffPoly,
    NotTotalDerivative,
    antiderivative,
    jet,
    one,
    parse,
    sym,
    to_latex,
    to_text,
    total_derivative,
    try_antiderivative,
    variational_derivative,
    zero,
)

u = jet(0, 0)
ux = jet(0, 1)
uxx = jet(0, 2)
uxxx = jet(0, 3)


def test_product_rule():
    assert total_derivative(u * u) == 2 * u * ux


def test_constant_derivative():
    assert total_derivative(DiffPoly.const(Fraction(7, 3))) == zero()


def test_gd3_derivative():
    # d/dx (3u^2 + u_xx) = 6 u u_x + u_xxx
    assert total_derivative(3 * u * u + uxx) == 6 * u * ux + uxxx


def test_variational_cubic():
    assert variational_derivative(u ** 3) == 3 * u * u


def test_variational_gd3():
    assert variational_derivative(3 * u * u + uxx) == 6 * u


def test_variational_kills_total_derivative():
    q = u * uxx
    assert variational_derivative(total_derivative(q)) == zero()


def test_antiderivative_simple():
    assert antiderivative(2 * u * ux) == u * u


def test_antiderivative_failure():
    with pytest.raises(NotTotalDerivative) as exc:
        antiderivative(u * u)
    r = exc.value.remainder
    assert variational_derivative(r) != zero()


def test_antiderivative_r1_r3():
    # (u/2) * d/dx((3u^2+u_xx)/8) must integrate (product of conserved
    # densities with a derivative is always a full derivative)
    r1 = u / 2
    r3 = (3 * u * u + uxx) / 8
    q = antiderivative(r1 * total_derivative(r3))
    assert total_derivative(q) == r1 * total_derivative(r3)


def test_antiderivative_nonlinear_top():
    # u_xx * u_x^2 = d/dx(u_x^3/3)
    q = antiderivative(uxx * ux * ux)
    assert q == ux ** 3 / 3


def test_two_function_antiderivative():
    w = jet(1, 0)
    wx = jet(1, 1)
    p = total_derivative(u * wx + u * u * w)
    q, r = try_antiderivative(p)
    assert r == zero()
    assert total_derivative(q) == p


small_polys = st.lists(
    st.tuples(
        st.integers(min_value=-3, max_value=3),
        st.integers(min_value=0, max_value=2),  # function
        st.integers(min_value=0, max_value=3),  # order
        st.integers(min_value=1, max_value=2),  # exponent
    ),
    min_size=0,
    max_size=4,
).map(
    lambda items: sum(
        (c * DiffPoly.var(("j", f, k), e) for c, f, k, e in items), zero()
    )
)


@settings(max_examples=60, deadline=None)
@given(small_polys, small_polys, small_polys)
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=60, deadline=None)
@given(small_polys)
def test_euler_annihilates_derivatives(p):
    dp = total_derivative(p)
    for f in dp.jet_functions() | {0}:
        assert variational_derivative(dp, f) == zero()


@settings(max_examples=40, deadline=None)
@given(small_polys)
def test_antiderivative_iff_variational_zero(p):
    p = p - DiffPoly.const(p.constant_term())
    q, r = try_antiderivative(p)
    assert total_derivative(q) + r == p
    funcs = p.jet_functions() | {0}
    vanish = all(variational_derivative(p, f) == zero() for f in funcs)
    assert (r == zero()) == vanish


def test_text_round_trip():
    p = Fraction(3, 8) * u * u + uxx / 8 + 2 * sym("lam") * ux
    assert parse(to_text(p)) == p


def test_parse_high_order():
    p = parse("u_x5 + 2*u_xx^2")
    assert p == jet(0, 5) + 2 * uxx * uxx


def test_latex_printer():
    s = to_latex(3 * u * u / 8 + uxx / 8)
    assert "u_{xx}" in s and r"\frac{3}{8}" in s


def test_text_stable_order():
    p = u * ux + uxxx + 5 * one()
    assert to_text(p) == to_text(parse(to_text(p)))


def test_substitute_and_evaluate():
    lam = sym("lam")
    v = jet(1, 0)
    vx = jet(1, 1)
    miura_u = lam - v * v - vx
    p = u.substitute({("j", 0, 0): miura_u})
    assert p == miura_u
    val = p.evaluate({("s", "lam"): 2.0, ("j", 1, 0): 0.5, ("j", 1, 1): 0.25})
    assert abs(val - (2.0 - 0.25 - 0.25)) < 1e-15
