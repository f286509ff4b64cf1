from fractions import Fraction

import pytest

from tractorquant.calculus import CURVED, FLAT, laplacian, nabla
from tractorquant.coeff_ring import N, W, coeff_substitute
from tractorquant.conformal_transform import (
    FULL, LINEARIZED, UnknownTransformation, linearized_invariance_residual, rescale_expr,
    split_upsilon,
)
from tractorquant.index_algebra import Expr
from tractorquant.symbols import FieldSymbol, register
from tractorquant.tractor_core import apply_tractor_D, proj

f = Expr.field("f")
J = Expr.field("J")
P = Expr.field("P", ("a", "b"))
g = Expr.field("g", ("a", "b"))


def ups(*labels, name="Upsilon"):
    return Expr.field(name, (), list(labels))


def df(*labels):
    return Expr.field("f", (), list(labels))


def at(e, **values):
    return e.map_coefficients(lambda c: coeff_substitute(c, values))


def test_gradient_of_density():
    assert rescale_expr(df("a")) == df("a") + (ups("a") * f).scale(W)


def test_schouten_linearized():
    assert rescale_expr(P, transform=LINEARIZED) == P - ups("a", "b")


def test_schouten_full():
    want = P - ups("a", "b") + ups("a") * ups("b") - (g * ups("c") * ups("c")).scale(Fraction(1, 2))
    assert rescale_expr(P, transform=FULL) == want


def test_projectors():
    assert rescale_expr(proj("X", "A")) == proj("X", "A")
    assert rescale_expr(proj("Z", "A", "a")) == proj("Z", "A", "a") + proj("X", "A") * ups("a")
    assert rescale_expr(proj("Y", "A")) == proj("Y", "A") - proj("Z", "A", "p") * ups("p")


def test_weyl_is_invariant():
    C = Expr.field("C", ("a", "b", "c", "e"))
    assert rescale_expr(C, transform=FULL) == C


def test_unregistered_rule():
    register(FieldSymbol("Bach", ("t", "t"), "none", 0, "curvature"))
    with pytest.raises(UnknownTransformation):
        rescale_expr(Expr.field("Bach", ("a", "b")))


@pytest.mark.parametrize("mode", [FLAT, CURVED])
def test_tractor_D_is_invariant(mode):
    assert linearized_invariance_residual(apply_tractor_D(f, mode=mode), mode).is_zero()


def test_laplacian_residual():
    # hand computation: (n+2w-2) Y^a nabla_a f + w (Delta Y) f
    got = linearized_invariance_residual(laplacian(f))
    want = (ups("p") * df("p")).scale(N + 2 * W - 2) + (ups("p", "p") * f).scale(W)
    assert got == want
    assert not at(got, w=0).is_zero()


def test_yamabe_is_invariant():
    op = laplacian(f) + (J * f).scale(W)
    assert at(linearized_invariance_residual(op), w=1 - N / 2).is_zero()
    assert not at(linearized_invariance_residual(op), w=0).is_zero()


SAMPLES = [
    df("a", "b"),
    nabla(nabla(df("a"), "b"), "c"),
    P * f,
    J * df("a"),
    proj("Y", "A") * df("a"),
    Expr.field("sigma", ("a", "b")) * df("a", "b"),
]


@pytest.mark.parametrize("transform", [LINEARIZED, FULL])
@pytest.mark.parametrize("e", SAMPLES)
def test_zero_upsilon_is_identity(e, transform):
    out = rescale_expr(e, transform=transform)
    kept = Expr.from_raw((c, list(m)) for c, m in out if not any(x[0] == "Upsilon" for x in m))
    assert kept == e


@pytest.mark.parametrize("e", SAMPLES[:5])
def test_group_consistency(e):
    twice = rescale_expr(rescale_expr(e, transform=FULL), transform=FULL, upsilon="Phi")
    once = split_upsilon(rescale_expr(e, transform=FULL), "Upsilon", ["Upsilon", "Phi"])
    assert twice == once
