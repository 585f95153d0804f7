import random
from fractions import Fraction as Q

import pytest

from painleve.algebra import MultiPoly
from painleve.series import (
    EXACT,
    NotReversible,
    TruncatedSeries,
    TruncationUnderflow,
    VariableMismatch,
    compose,
    rational_power_of_unit,
    revert_series,
    substitute_poly,
)

X = "x"


def S(coeffs, trunc=EXACT):
    return TruncatedSeries(X, coeffs, trunc)


def test_laurent_times_monomial():
    assert (S({-1: 1, 0: 1}, 5) * S({1: 1})).agrees_with(S({0: 1, 1: 1}))


def test_truncate():
    assert S({0: 1, 1: 1, 2: 1}, 5).truncate(2) == S({0: 1, 1: 1}, 2)


def test_shift():
    assert S({0: 1, 1: 1}, 5).shift(-2) == S({-2: 1, -1: 1}, 3)


def test_add_respects_truncation():
    out = S({0: 1}, 3) + S({1: 2}, 7)
    assert out.trunc == 3
    assert out.coeff(1) == MultiPoly.const(2)


def test_variable_mismatch():
    with pytest.raises(VariableMismatch):
        S({0: 1}) + TruncatedSeries("y", {0: 1}, EXACT)


def test_substitute_square_of_pole():
    out = substitute_poly(MultiPoly.var("u") ** 2, {"u": S({-1: -1})})
    assert out.agrees_with(S({-2: 1}))


def test_substitute_identity_binding():
    r = MultiPoly.var("r")
    series = TruncatedSeries(X, {-3: -2, 3: 4 * r}, EXACT)
    out = substitute_poly(MultiPoly.var("u2"), {"u2": series})
    assert out.agrees_with(series)
    assert out.coeffs == series.coeffs


def test_substitute_frozen_example():
    # 6 u^2 at u = x^-2 + r x^4 (trunc 8): hand expansion
    # 6 x^-4 + 12 r x^2 + 6 r^2 x^8, truncated to orders < 6
    r = MultiPoly.var("r")
    u_series = TruncatedSeries(X, {-2: 1, 4: r}, 8)
    out = substitute_poly(6 * MultiPoly.var("u") ** 2, {"u": u_series})
    assert out.trunc == 6
    assert out.coeff(-4) == MultiPoly.const(6)
    assert out.coeff(2) == 12 * r
    assert out.coeff(0) == MultiPoly.zero()


def test_substitute_shallow_bindings():
    # one known coefficient still determines the lowest product order
    shallow = TruncatedSeries(X, {-1: 1}, -1 + 1)
    out = substitute_poly(MultiPoly.var("u") ** 3, {"u": shallow})
    assert out.trunc == -2
    assert out.coeff(-3) == MultiPoly.const(1)


def test_substitute_low_order_cap_is_valid_zero_knowledge():
    # asking only for orders below every possible contribution yields an
    # honestly-empty series, not an error (the coefficient recursion relies
    # on this when later variables have zero leading data)
    s = TruncatedSeries(X, {1: 1}, 5)
    out = substitute_poly(MultiPoly.var("u") ** 2, {"u": s}, order=1)
    assert out.is_zero and out.trunc == 1


def test_revert_identity_and_linear():
    assert revert_series(S({1: 1}, 6)).agrees_with(S({1: 1}))
    assert revert_series(S({1: 2}, 6)).agrees_with(S({1: Q(1, 2)}))


def test_revert_frozen_example():
    # w with s(w(x)) = x mod x^5 for s = x + x^2: x - x^2 + 2x^3 - 5x^4
    w = revert_series(S({1: 1, 2: 1}, 5))
    assert w.coeff(1) == MultiPoly.const(1)
    assert w.coeff(2) == MultiPoly.const(-1)
    assert w.coeff(3) == MultiPoly.const(2)
    assert w.coeff(4) == MultiPoly.const(-5)
    assert compose(S({1: 1, 2: 1}, 5), w).agrees_with(S({1: 1}))


def test_revert_requires_unit_leading():
    with pytest.raises(NotReversible):
        revert_series(S({2: 1}, 5))
    with pytest.raises(NotReversible):
        revert_series(TruncatedSeries(X, {1: MultiPoly.var("r")}, 5))


def test_compose_scaling():
    out = compose(S({-1: 1}, 4), S({1: 2}))
    assert out.coeff(-1) == MultiPoly.const(Q(1, 2))


def test_compose_negative_binomial():
    # x^-2 at x + x^2: binomial oracle (1+x)^-2 = 1 - 2x + 3x^2 - 4x^3 ...
    out = compose(S({-2: 1}, 6), S({1: 1, 2: 1}))
    for order, expected in [(-2, 1), (-1, -2), (0, 3), (1, -4), (2, 5)]:
        assert out.coeff(order) == MultiPoly.const(expected)


def test_compose_requires_positive_inner_order():
    with pytest.raises(ValueError):
        compose(S({0: 1}, 3), S({0: 1, 1: 1}))


def _random_series(rng, with_params=False):
    coeffs = {1: Q(rng.choice((1, -1, 2, 3)), rng.choice((1, 2)))}
    for order in range(2, 6):
        pick = rng.randrange(4)
        if pick == 0:
            continue
        if with_params and pick == 1:
            coeffs[order] = MultiPoly.var("r") * Q(rng.randint(-2, 2))
        else:
            coeffs[order] = Q(rng.randint(-3, 3))
    return TruncatedSeries(X, coeffs, 7)


def test_reversion_round_trip_random():
    rng = random.Random(23)
    ident = S({1: 1})
    for _ in range(12):
        s = _random_series(rng, with_params=rng.random() < 0.5)
        w = revert_series(s)
        assert compose(s, w).agrees_with(ident)
        assert compose(w, s).agrees_with(ident)


def test_substitute_multiplicative_random():
    rng = random.Random(5)
    names = ("a", "b")
    for _ in range(12):
        f = MultiPoly.zero()
        g = MultiPoly.zero()
        for _ in range(3):
            ea, eb = rng.randrange(3), rng.randrange(2)
            f = f + MultiPoly(("a", "b"), {(ea, eb): rng.randint(-2, 2)})
            g = g + MultiPoly(("a", "b"), {(rng.randrange(2), rng.randrange(2)): rng.randint(-2, 2)})
        bindings = {nm: _random_series(rng).shift(rng.choice((-1, 0))) for nm in names}
        lhs = substitute_poly(f * g, bindings)
        rhs = substitute_poly(f, bindings) * substitute_poly(g, bindings)
        assert lhs.agrees_with(rhs)


def test_ring_axioms_random():
    rng = random.Random(17)
    for _ in range(10):
        a = _random_series(rng).shift(rng.choice((-2, 0)))
        b = _random_series(rng).shift(rng.choice((-1, 0)))
        c = _random_series(rng)
        assert (a + b).agrees_with(b + a)
        assert ((a + b) + c).agrees_with(a + (b + c))
        assert (a * b).agrees_with(b * a)
        assert ((a * b) * c).agrees_with(a * (b * c))
        assert (a * (b + c)).agrees_with(a * b + a * c)
        assert (a - a).is_zero


def test_inverse_is_reciprocal():
    rng = random.Random(29)
    one = S({0: 1})
    for _ in range(8):
        s = _random_series(rng, with_params=True).shift(rng.choice((-2, -1, 0)))
        inv = s.inverse()
        assert (s * inv).agrees_with(one)


def test_rational_power_of_unit():
    unit = S({0: 1, 1: 1}, 9)
    half = rational_power_of_unit(unit, -1, 2)
    assert (half * half * unit).agrees_with(S({0: 1}))


def test_var_derivative():
    s = S({-1: 1, 0: 5, 2: 3}, 5)
    d = s.var_derivative()
    assert d.coeff(-2) == MultiPoly.const(-1)
    assert d.coeff(1) == MultiPoly.const(6)
    assert d.trunc == 4
