import pytest

from tractorquant.calculus import CURVED, FLAT, ModeError, laplacian, nabla
from tractorquant.coeff_ring import N, W, coeff_substitute
from tractorquant.index_algebra import Expr, conformal_weight_of
from tractorquant.tractor_core import (
    apply_tractor_D, commute_laplacian_flat, commute_sym_gradient_flat, contract_tractor_pairs,
    curved_casimir_apply, direct_laplacian, direct_sym_gradient, expand_h, fundamental_derivative,
    hash_action, proj, tractor_curvature_expand,
)

f = Expr.field("f")
rho = Expr.field("rho")
J = Expr.field("J")


def h(A, B):
    return Expr.field("h", (A, B))


def g(a, b):
    return Expr.field("g", (a, b))


def test_contraction_table():
    assert proj("Y", "A") * proj("X", "A") == Expr.scalar(1)
    assert (proj("X", "A") * proj("X", "A")).is_zero()
    assert (proj("Y", "A") * proj("Y", "A")).is_zero()
    assert (proj("X", "A") * proj("Z", "A", "a")).is_zero()
    assert proj("Z", "A", "b") * proj("Z", "A", "c") == g("b", "c")


def test_metric_on_projectors():
    assert contract_tractor_pairs(h("A", "B") * proj("X", "A") * proj("Y", "B")) == Expr.scalar(1)
    assert contract_tractor_pairs(h("A", "B") * proj("X", "A") * proj("X", "B")).is_zero()
    assert contract_tractor_pairs(h("A", "A")) == Expr.scalar(N + 2)


def test_connection_on_X():
    got = nabla(proj("X", "B") * rho, "a", CURVED)
    assert got == proj("Z", "B", "a") * rho + proj("X", "B") * Expr.field("rho", (), ["a"])


def test_connection_on_Y():
    got = nabla(proj("Y", "B") * rho, "a", CURVED)
    want = proj("Y", "B") * Expr.field("rho", (), ["a"]) + proj("Z", "B", "b") * Expr.field("P", ("a", "b")) * rho
    assert got == want


def test_connection_on_Z():
    mu = Expr.field("mu", ("b",))
    got = nabla(proj("Z", "B", "b") * mu, "a", CURVED)
    want = (proj("Z", "B", "b") * Expr.field("mu", ("b",), ["a"])
            - proj("Y", "B") * mu.relabel({"b": "a"})
            - proj("X", "B") * Expr.field("P", ("a", "b")) * mu)
    assert got == want


@pytest.mark.parametrize("mode", [FLAT, CURVED])
def test_metric_is_parallel(mode):
    assert expand_h(nabla(expand_h(h("B", "C")), "a", mode)).is_zero()


@pytest.mark.parametrize("which", ["X", "Y", "Z"])
@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_sym_gradient_closed_form(which, k):
    assert commute_sym_gradient_flat(k, which) == direct_sym_gradient(k, which)


@pytest.mark.parametrize("which", ["X", "Y", "Z"])
@pytest.mark.parametrize("ell", [0, 1, 2])
def test_laplacian_closed_form(which, ell):
    assert commute_laplacian_flat(ell, which) == direct_laplacian(ell, which)


def test_laplacian_X_at_one():
    want = (proj("X", "B") * laplacian(rho, FLAT) + (proj("Y", "B") * rho).scale(-N)
            + (proj("Z", "B", "b") * Expr.field("rho", (), ["b"])).scale(2))
    assert commute_laplacian_flat(1, "X") == want


def test_flat_identities_reject_curved_mode():
    with pytest.raises(ModeError):
        commute_sym_gradient_flat(2, "X", mode=CURVED)
    with pytest.raises(ModeError):
        commute_laplacian_flat(1, "Z", mode=CURVED)


def test_tractor_curvature():
    om = tractor_curvature_expand()
    assert (proj("X", "C") * om).is_zero()
    assert tractor_curvature_expand(mode=FLAT).is_zero()
    assert (om * g("a", "b")).is_zero()


@pytest.mark.parametrize("section", [
    proj("Z", "E", "e") * Expr.field("mu", ("e",)),
    proj("Y", "E") * Expr.field("rho"),
    proj("X", "E") * Expr.field("rho"),
])
def test_tractor_curvature_matches_commutator(section):
    comm = nabla(nabla(section, "b"), "a") - nabla(nabla(section, "a"), "b")
    omega = tractor_curvature_expand("a", "b", "E", "C") * section.relabel({"E": "C"})
    assert comm == omega


def test_tractor_D_generic():
    got = apply_tractor_D(f)
    lead = N + 2 * W - 2
    want = ((proj("Y", "A") * f).scale(lead * W)
            + (proj("Z", "A", "a") * Expr.field("f", (), ["a"])).scale(lead)
            - proj("X", "A") * (laplacian(f) + (J * f).scale(W)))
    assert got == want
    assert conformal_weight_of(got) == W - 1


def test_tractor_D_at_yamabe_weight():
    got = apply_tractor_D(f).map_coefficients(lambda c: coeff_substitute(c, {"w": 1 - N / 2}))
    want = -(proj("X", "A") * (laplacian(f) + (J * f).scale(1 - N / 2)))
    assert got == want


def test_tractor_D_at_weight_zero():
    got = apply_tractor_D(f).map_coefficients(lambda c: coeff_substitute(c, {"w": 0}))
    want = (proj("Z", "A", "a") * Expr.field("f", (), ["a"])).scale(N - 2) - proj("X", "A") * laplacian(f)
    assert got == want


def test_tractor_D_lowers_weight_on_tractors():
    e = proj("X", "B") * f
    assert conformal_weight_of(apply_tractor_D(e)) == conformal_weight_of(e) - 1


def test_fundamental_derivative_on_density():
    assert hash_action(f, "A1", "A2").is_zero()
    got = fundamental_derivative(f, weight=0, mode=FLAT)
    for _, mono in got:
        assert any(fac[0] == "f" and fac[1] == 1 for fac in mono)


def test_fundamental_derivative_on_X_has_hash_part():
    e = proj("X", "C")
    assert not hash_action(e, "A1", "A2").is_zero()


def test_casimir_on_density_is_scalar():
    # proportional to w(n+w): the eigenvalue is shared by E[w] and its dual E[-n-w]
    got = curved_casimir_apply(f, mode=FLAT)
    (mono,) = f.terms
    c = got.coefficient(mono)
    assert got == f.scale(c)
    ratio = c / (W * (N + W))
    assert ratio.numer.is_ground and ratio.denom.is_ground and ratio
