import random
from fractions import Fraction

import pytest

from tractorquant.calculus import CURVED, FLAT, laplacian
from tractorquant.coordinate_oracle import (
    Chart, NotExpanded, PolynomialField, PreconditionError, Scale, check_invariance,
    instantiate, mobius_upsilon, poly_ring, random_field, random_instances, random_poly, report,
)
from tractorquant.index_algebra import Expr, trace_free_project
from tractorquant.quantization import build_Q
from tractorquant.tractor_core import apply_tractor_D, proj

f = Expr.field("f")


def scalar_field(name, p, weight=0):
    return PolynomialField(name, 0, {(): p}, Fraction(weight))


def test_chart_validation():
    assert Chart(4, (3, 1)).eta == (1, 1, 1, -1)
    with pytest.raises(ValueError):
        Chart(2)
    with pytest.raises(ValueError):
        Chart(3, (1, 1))


def test_laplacian_of_square():
    R, x0, x1, x2 = poly_ring(3)
    ev = instantiate(laplacian(f, FLAT), Chart(3))
    assert ev.evaluate({"f": scalar_field("f", x0 ** 2)}) == 2


def test_tracefree_hessian():
    R, x0, x1, x2 = poly_ring(3)
    op = trace_free_project(Expr.field("f", (), ["a", "b"]), ["a", "b"])
    got = instantiate(op, Chart(3)).evaluate({"f": scalar_field("f", x0 * x1)})
    assert got[(0, 1)] == got[(1, 0)] == 1
    assert all(got[(i, i)] == 0 for i in range(3))


def test_rescaled_schouten():
    R, *x = poly_ring(4)
    P = Scale(Chart(4), x[0], 2)
    at0 = [[P.schouten(a, b).get((0,) * 4, 0) for b in range(4)] for a in range(4)]
    half = Fraction(1, 2)
    want = [[(1 if a == b == 0 else 0) - (half if a == b else 0) for b in range(4)] for a in range(4)]
    assert at0 == want


def test_unexpanded_tractor_formula():
    with pytest.raises(NotExpanded):
        instantiate(proj("X", "A") * proj("Y", "B") * f, Chart(3))


def test_precondition():
    R, x0, x1, x2 = poly_ring(3)
    with pytest.raises(PreconditionError):
        check_invariance(laplacian(f, FLAT), 0, None, Chart(3), x0 + 1, {"f": scalar_field("f", x0)})


def test_tractor_D_residual_vanishes():
    chart = Chart(3)
    rng = random.Random(3)
    op = apply_tractor_D(f, mode=CURVED)
    for _ in range(5):
        ups = random_poly(3, 2, rng, constant=False)
        fld = {"f": scalar_field("f", random_poly(3, 3, rng))}
        assert check_invariance(op, Fraction(1, 3), None, chart, ups, fld) == 0


def test_laplacian_is_not_invariant():
    R, x0, x1, x2 = poly_ring(3)
    ups = x0 * (x0 - 1)
    fld = {"f": scalar_field("f", x0 ** 2)}
    # at the origin grad f vanishes, so the (n-2) Y^a d_a f residual is invisible there
    assert check_invariance(laplacian(f), 0, None, Chart(3), ups, fld) == 0
    assert check_invariance(laplacian(f), 0, None, Chart(3), ups, fld, x0=(1, 0, 0)) == 2


def test_Q11_at_delta_one():
    q = build_Q(1, 1, mode=CURVED)
    inst = random_instances(q.expr, Fraction(2, 5), 1, [Chart(4)], 3, seed=11)
    assert [i.residual for i in inst] == [0, 0, 0]


def test_linearity():
    chart = Chart(3, (2, 1))
    q = build_Q(2, 0, mode=CURVED)
    ev = instantiate(q.expr, chart, Fraction(1, 2), Fraction(-1, 3))
    rng = random.Random(5)
    ups = random_poly(3, 3, rng, constant=False)
    s1, s2 = (random_field(chart, "sigma", 2, 3, rng) for _ in range(2))
    f1, f2 = (random_field(chart, "f", 0, 3, rng) for _ in range(2))

    def add(a, b, ca=1, cb=1):
        return PolynomialField(a.name, a.rank, {k: ca * a.components[k] + cb * b.components[k] for k in a.components})

    def val(s, fld):
        return ev.evaluate({"sigma": s, "f": fld}, ups)

    assert val(s1, add(f1, f2, 2, -3)) == 2 * val(s1, f1) - 3 * val(s1, f2)
    assert val(add(s1, s2, -1, 4), f1) == -val(s1, f1) + 4 * val(s2, f1)


def test_mobius_keeps_flat():
    chart = Chart(4, (3, 1))
    ups = mobius_upsilon(chart, [1, 0, -2, 1], 4)
    sc = Scale(chart, ups, 2)
    for a in range(4):
        for b in range(4):
            assert sc.schouten(a, b).get((0,) * 4, 0) == 0


def test_flat_only_formula_needs_flat_model():
    # Delta on E[1-n/2] is invariant only while the metric stays flat
    yam = laplacian(f, FLAT)
    chart = Chart(4)
    w = Fraction(-1)
    flat = random_instances(yam, w, None, [chart], 5, seed=1, flat_model=True)
    assert all(i.residual == 0 for i in flat)
    generic = random_instances(yam, w, None, [chart], 5, seed=1)
    assert any(i.residual != 0 for i in generic)


def test_report_format():
    inst = random_instances(apply_tractor_D(f), 1, None, [Chart(3), Chart(3, (2, 1))], 2, seed=7)
    lines = report(inst).splitlines()
    assert lines[0].startswith("(7, 3, (3,0), ")
    assert lines[-1].startswith("(10, 3, (2,1), ")
    assert report(random_instances(apply_tractor_D(f), 1, None, [Chart(3), Chart(3, (2, 1))], 2, seed=7)) == report(inst)
