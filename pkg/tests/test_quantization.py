from math import factorial

import pytest

from tractorquant.calculus import CURVED, FLAT, substitute_jets
from tractorquant.coeff_ring import D, FIELD, N, W, coeff, coeff_substitute, free_params
from tractorquant.conformal_transform import linearized_invariance_residual
from tractorquant.index_algebra import Expr, WeightMismatch, conformal_weight_of, trace_free_project
from tractorquant.quantization import (
    CriticalWeightError, NotCritical, QuantizationOp, build_critical_Q, build_Q, build_Q_k0,
    build_splitting_f, build_splitting_sigma, casimir_ptilde, flat_L, flat_S, leading_step_factor,
    leading_symbol, ledger_expected, nine_term_ledger, p_tilde, principal_block,
)
from tractorquant.tractor_core import apply_tractor_D

f = Expr.field("f")


def product(factors):
    out = coeff(1)
    for x in factors:
        out = out * x
    return out


def test_p_tilde_values():
    assert p_tilde(0) == 1
    assert p_tilde(1) == D + N
    assert p_tilde(2) == (D + N + 1) * (D + N + 2)
    assert p_tilde(3) == (N + D + 2) * (N + D + 3) * (N + D + 4)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_splitting_sigma_top(k):
    assert build_splitting_sigma(k).top_coefficient() == p_tilde(k)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_splitting_f_has_degree_k_polynomial(k):
    sp = build_splitting_f(k)
    (mono,) = f.terms
    pbar = sp.components[0].coefficient(mono)
    assert pbar == product(W - i for i in range(k))
    assert free_params(pbar) == {"w"}


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("side", ["f", "sigma"])
def test_splitting_component_shapes(k, side):
    sp = build_splitting_f(k) if side == "f" else build_splitting_sigma(k)
    assert len(sp.components) == k + 1
    for i, comp in enumerate(sp.components):
        assert comp.free == {f"c{j + 1}" for j in range(i)}


def test_Q00_is_multiplication():
    q = build_Q(0, 0)
    assert q.expr == Expr.field("sigma") * f
    assert leading_symbol(q)[1] == 1


@pytest.mark.parametrize("k", [1, 2, 3])
def test_Q_k0_leading(k):
    assert leading_symbol(build_Q_k0(k))[1] == p_tilde(k)


@pytest.mark.parametrize("k,ell", [(0, 1), (1, 1), (2, 1), (3, 1), (0, 2), (1, 2)])
def test_leading_recursion(k, ell):
    lower = leading_symbol(build_Q(k, ell - 1))[1]
    upper = leading_symbol(build_Q(k, ell))[1]
    step = ell - 1
    assert upper == -(D - step) * (N + 2 * D + 2 * (k - step) - 2) * lower
    assert leading_step_factor(k, step) * lower == upper


def test_example_two_coefficient():
    assert leading_symbol(build_Q(1, 1))[1] == -D * (N + D) * (N + 2 * D)
    assert leading_symbol(build_Q(0, 1))[1] == -D * (N + 2 * D - 2)


def test_step_factor_vanishes_at_step():
    for k in range(4):
        for step in range(3):
            assert coeff_substitute(leading_step_factor(k, step), {"d": step}) == 0


@pytest.mark.parametrize("k,ell", [(0, 1), (1, 1), (2, 1), (3, 1), (1, 2), (0, 2), (3, 0), (4, 0), (5, 0)])
def test_flat_invariance(k, ell):
    assert build_Q(k, ell).residual().is_zero()


@pytest.mark.parametrize("k,ell", [(1, 0), (2, 0), (3, 0), (0, 1), (1, 1)])
def test_curved_invariance(k, ell):
    assert build_Q(k, ell, mode=CURVED).residual().is_zero()


def test_weight_bookkeeping():
    q = build_Q(2, 1)
    assert q.target_weight() == W + D - 2
    assert conformal_weight_of(q.expr) == W + D - 2


@pytest.mark.parametrize("k", [1, 2])
def test_strong_invariance(k):
    q = build_Q_k0(k)
    tractor_input = apply_tractor_D(f, "C", mode=FLAT)
    e = substitute_jets(q.expr, "f", tractor_input, FLAT,
                        reshape=lambda c: coeff_substitute(c, {"w": W - 1}))
    assert e.free == {"C"}
    assert linearized_invariance_residual(e, FLAT).is_zero()


@pytest.mark.parametrize("k,ell", [(0, 0), (1, 0), (2, 1), (3, 2), (4, 3)])
def test_nine_term_ledger(k, ell):
    got = dict(nine_term_ledger(k, ell))
    assert list(got) == ["YY", "YZ", "YX", "ZY", "ZZ", "ZX", "XY", "XZ", "XX"]
    assert got == ledger_expected(k, ell)
    assert got["YY"] == got["YZ"] == got["ZY"] == 0
    wp = W + D - 2 * ell - 1
    assert got["ZZ"] == (N + 2 * wp - 2) * (N + 2 * W - 2)
    assert got["XX"] == -(ell + 1) * (N + 2 * ell + 2 * k)
    total = sum(got.values(), FIELD(0))
    assert "w" not in free_params(total)
    assert total == -(D - ell) * (N + 2 * D + 2 * (k - ell) - 2)


def test_critical_weight_rejected():
    with pytest.raises(CriticalWeightError) as err:
        build_Q(3, 0, delta=-N - 2)
    assert err.value.family == "Sigma0"
    with pytest.raises(CriticalWeightError) as err:
        build_Q(1, 1, delta=0)
    assert err.value.family == "Sigma'"
    with pytest.raises(CriticalWeightError):
        build_Q(1, 1, delta=-2, n=4)


def test_non_critical_rejected_by_critical_builder():
    with pytest.raises(NotCritical):
        build_critical_Q(1, 1, 5)


def test_flat_natural_operators():
    assert flat_L(1, w=1 - N / 2) == Expr.field("f", (), ["p", "p"])
    assert flat_S(1, ["a"], w=0) == Expr.field("f", (), ["a"])
    assert flat_S(2, ["a", "b"], w=1) == trace_free_project(Expr.field("f", (), ["a", "b"]), ["a", "b"])
    with pytest.raises(WeightMismatch):
        flat_S(2, w=0)
    with pytest.raises(WeightMismatch):
        flat_L(1, w=0)


def test_flat_natural_operators_are_invariant():
    yam = linearized_invariance_residual(flat_L(1), FLAT)
    assert coeff_substitute_expr(yam, {"w": 1 - N / 2}).is_zero()
    s2 = linearized_invariance_residual(flat_S(2), FLAT)
    assert coeff_substitute_expr(s2, {"w": 1}).is_zero()
    assert not coeff_substitute_expr(s2, {"w": 0}).is_zero()


def coeff_substitute_expr(e, values):
    return e.map_coefficients(lambda c: coeff_substitute(c, values))


@pytest.mark.parametrize("k,ell,delta", [(1, 1, 0), (1, 1, -N), (1, 1, -N / 2), (2, 1, -N - 1),
                                         (0, 1, 0), (0, 2, 1), (2, 1, 0)])
def test_critical_flat(k, ell, delta):
    q = build_critical_Q(k, ell, delta)
    assert leading_symbol(q)[1] == 1
    assert q.provenance in ("critical-Sigma0", "critical-Sigma'Sigma''")


def test_critical_example_families():
    q = build_critical_Q(1, 1, 0)
    assert q.provenance == "critical-Sigma'Sigma''"
    assert q.w == 1 - N / 2
    q = build_critical_Q(1, 1, -N)
    assert q.provenance == "critical-Sigma0"
    assert q.w == 1


def test_critical_curved_yamabe():
    q = build_critical_Q(1, 1, 0, mode=CURVED)
    assert q.residual().is_zero()
    q = build_critical_Q(1, 1, -N, mode=CURVED)
    assert q.residual().is_zero()


def test_json_round_trip():
    for q in (build_Q(2, 1), build_Q(1, 1, delta=3, n=5), build_critical_Q(1, 1, 0)):
        assert QuantizationOp.loads(q.dumps()) == q


@pytest.mark.parametrize("k", [1, 2])
def test_casimir_cross_check(k):
    # the eigen-difference product is p~ up to the normalization (-1)^k k!
    assert casimir_ptilde(k) == p_tilde(k) * (-1) ** k * factorial(k)


def test_principal_block_generic():
    lead = principal_block(2)
    mono_part = Expr.field("sigma", ("a", "b")) * Expr.field("f", (), ["a", "b"])
    (mono,) = mono_part.terms
    assert lead.coefficient(mono) == p_tilde(2)
