import random

import pytest

from tractorquant.calculus import FLAT, sym_gradient
from tractorquant.coeff_ring import D, N, W, coeff
from tractorquant.index_algebra import (
    Expr, MalformedExpression, WeightMismatch, canonicalize, conformal_weight_of,
    decompose_symbol_space, symmetrize, trace_free_coefficients, trace_free_project,
)
from tractorquant.textio import dumps, expr_from_json, expr_to_json, loads, parse_text, render_text
from tractorquant.tractor_core import proj


def u(a):
    return Expr.field("u", (a,))


def v(a):
    return Expr.field("v", (a,))


def g(a, b):
    return Expr.field("g", (a, b))


def T(a, b):
    return Expr.field("T", (a, b))


def test_symmetrize_kills_skew():
    skew = T("a", "b") - T("b", "a")
    assert symmetrize(skew, ["a", "b"]).is_zero()


def test_symmetrize_product():
    got = symmetrize(u("a") * v("b"), ["a", "b"])
    assert got == (u("a") * v("b") + u("b") * v("a")).scale(coeff("1/2"))


def test_symmetrize_flat_hessian_is_unchanged():
    hess = Expr.field("f", (), ["a", "b"])
    assert symmetrize(hess, ["a", "b"]) == hess
    assert sym_gradient(Expr.field("f"), ["a", "b"], FLAT) == hess


def test_symmetrize_is_idempotent():
    e = symmetrize(u("a") * T("b", "c"), ["a", "b", "c"])
    assert symmetrize(e, ["a", "b", "c"]) == e


def test_symmetrize_mixed_kinds_is_rejected():
    with pytest.raises(MalformedExpression):
        symmetrize(proj("Z", "A", "a"), ["A", "a"])


def test_rank_two_projector():
    got = trace_free_project(T("a", "b"), ["a", "b"])
    expected = symmetrize(T("a", "b"), ["a", "b"]) - (g("a", "b") * T("c", "c")).scale(1 / N)
    assert got == expected


def test_metric_is_pure_trace():
    assert trace_free_project(g("a", "b"), ["a", "b"]).is_zero()


@pytest.mark.parametrize("rank", [2, 3, 4])
def test_projection_is_trace_free(rank):
    labs = [f"a{i}" for i in range(rank)]
    e = Expr.field("sigma", ()) * Expr.field("f", (), labs)
    tf = trace_free_project(e, labs)
    for i in range(rank):
        for j in range(i + 1, rank):
            assert (tf * g(labs[i], labs[j])).is_zero()


def test_rank_three_coefficients_from_trace_condition():
    # T_(abc)0 = T_(abc) - 3/(n+2) g_(ab T_c)pp solves the single trace condition
    cs = trace_free_coefficients(3)
    assert cs[1] == -3 / (N + 2)


def test_metric_elimination():
    assert g("a", "b") * g("b", "c") * u("c") == u("a")


def test_schouten_symmetry_cancels():
    e = Expr.field("P", ("a", "b")) * v("a") * v("b") - Expr.field("P", ("b", "a")) * v("b") * v("a")
    assert e.is_zero()


def test_projector_trace_gives_dimension():
    assert proj("Z", "A", "b") * proj("Z", "A", "c") * g("b", "c") == Expr.scalar(N)


def test_tangent_tractor_pairing_is_malformed():
    with pytest.raises(MalformedExpression):
        Expr.field("u", ("A",)) * proj("X", "A")


def test_repeated_label_is_renamed_apart():
    e = u("a") * u("a") * v("a")
    assert e == u("b") * u("b") * v("a")


def test_weights():
    assert conformal_weight_of(g("a", "b")) == 2
    sig = Expr.field("sigma", ("a", "b")) * Expr.field("f")
    assert conformal_weight_of(sig, upper=["a", "b"]) == W + D
    assert conformal_weight_of(proj("X", "A") * proj("Y", "A")) == 0


def test_mixed_weights_are_rejected():
    with pytest.raises(WeightMismatch):
        conformal_weight_of(Expr.field("f") + Expr.field("J"))


def test_decompose_symbol_space():
    assert decompose_symbol_space(3, D) == [(3, 0, D), (1, 1, D + 2)]
    assert decompose_symbol_space(0, D) == [(0, 0, D)]
    assert decompose_symbol_space(4, D) == [(4, 0, D), (2, 1, D + 2), (0, 2, D + 4)]


def _random_expr(rng):
    pieces = [
        lambda: Expr.field("P", ("a", "p")) * u("p"),
        lambda: g("a", "q") * Expr.field("J") * v("q"),
        lambda: Expr.field("f", (), ["a", "r", "r"]),
        lambda: T("a", "s") * u("s") * Expr.field("f"),
        lambda: Expr.field("C", ("a", "b", "c", "e")) * u("b") * v("c") * u("e"),
    ]
    e = Expr()
    for _ in range(rng.randint(1, 4)):
        e = e + rng.choice(pieces)().scale(rng.randint(-3, 3))
    return e


def test_canonicalize_idempotent_and_weight_stable():
    rng = random.Random(2)
    for _ in range(30):
        e = _random_expr(rng)
        once = canonicalize(e)
        assert canonicalize(once) == once
        for _, mono in once:
            term = Expr.product_of(mono)
            assert canonicalize(term) == term


def test_text_round_trip():
    rng = random.Random(4)
    for _ in range(20):
        e = _random_expr(rng)
        assert parse_text(render_text(e)) == e


def test_json_round_trip():
    rng = random.Random(9)
    for _ in range(20):
        e = _random_expr(rng)
        assert expr_from_json(expr_to_json(e)) == e
        assert loads(dumps(e)) == e


def test_parse_grammar_example():
    e = parse_text("P[a,b]*nabla[a](f)*nabla[b](f)")
    assert e == Expr.field("P", ("a", "b")) * Expr.field("f", (), ["a"]) * Expr.field("f", (), ["b"])
