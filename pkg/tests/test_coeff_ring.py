import random
from fractions import Fraction

import pytest
import sympy as sp

from tractorquant.coeff_ring import (
    D, N, W, MalformedCoefficient, PoleError, coeff, coeff_normalize, coeff_substitute,
    parse_coeff, render_coeff,
)

n, w, d = sp.symbols("n w d")


def to_sympy(c):
    return sp.sympify(render_coeff(c).replace("^", "**"), locals={"n": n, "w": w, "d": d})


def random_poly(rng, terms=3):
    out = 0
    for _ in range(terms):
        out += rng.randint(-4, 4) * n ** rng.randint(0, 2) * w ** rng.randint(0, 1) * d ** rng.randint(0, 2)
    return out or 1


def from_sympy(e):
    return parse_coeff(str(sp.factor(e)).replace("**", "^"))


def test_normalize_cancels_common_factor():
    assert coeff_normalize("n^2-4", "n-2") == N + 2


def test_zero_numerator_normalizes_to_zero():
    z = coeff_normalize(0, "n+w")
    assert not z and z.denom == 1


def test_expanded_and_factored_forms_agree():
    a = parse_coeff("(d+n)*(n+2*d)")
    b = parse_coeff("n^2+3*n*d+2*d^2")
    assert a == b
    assert render_coeff(a) == render_coeff(b)


def test_zero_denominator_is_rejected():
    with pytest.raises(MalformedCoefficient):
        coeff_normalize(1, 0)


def test_substitute_shifted_weight():
    wp = W + D - 1
    expr = -wp * (N + 2 * wp - 2)
    expected = -(w + d - 1) * (n + 2 * w + 2 * d - 4)
    assert sp.expand(to_sympy(expr) - expected) == 0


def test_substitute_concrete_n():
    assert coeff_substitute(N + D + 2, {"n": 4}) == D + 6


def test_substitute_vanishing_factor():
    assert coeff_substitute(D - 2, {"d": 2}) == 0


def test_substitute_rational_function_value():
    c = (W - 2) / (N + W)
    got = coeff_substitute(c, {"w": N / 2})
    assert sp.simplify(to_sympy(got) - (n / 2 - 2) / (n + n / 2)) == 0


def test_pole_names_offending_factor():
    with pytest.raises(PoleError, match="n"):
        coeff_substitute(1 / (N - 4), {"n": 4})


def test_render_parse_round_trip():
    rng = random.Random(3)
    for _ in range(40):
        c = from_sympy(random_poly(rng) / random_poly(rng))
        assert parse_coeff(render_coeff(c)) == c


def test_ring_axioms_on_random_samples():
    rng = random.Random(7)
    for _ in range(25):
        a, b, c = (from_sympy(random_poly(rng)) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a


def test_substitution_is_a_ring_map():
    rng = random.Random(11)
    for _ in range(25):
        a, b = from_sympy(random_poly(rng)), from_sympy(random_poly(rng))
        val = {"n": Fraction(rng.randint(3, 9)), "w": Fraction(rng.randint(-5, 5), 3)}
        assert coeff_substitute(a * b, val) == coeff_substitute(a, val) * coeff_substitute(b, val)


def test_substitution_matches_sympy():
    rng = random.Random(5)
    for _ in range(50):
        num, den = random_poly(rng), random_poly(rng)
        c = from_sympy(num / den)
        val = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        reduced = sp.cancel(num / den)
        v = sp.Rational(val.numerator, val.denominator)
        try:
            got = coeff_substitute(c, {"w": val})
        except PoleError:
            assert sp.expand(sp.denom(reduced).subs(w, v)) == 0
            continue
        exact = sp.cancel(reduced.subs(w, v))
        assert sp.simplify(to_sympy(got) - exact) == 0


def test_coerce_types():
    assert coeff(Fraction(1, 2)) * 2 == 1
    assert coeff("d") == D
    with pytest.raises(TypeError):
        coeff(1.5)
