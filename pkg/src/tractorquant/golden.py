"""Hand-transcribed third-order examples, built from engine primitives.

Each operator is typed in term by term as tractor-valued expressions in
sigma' and f, using iterated (unsymmetrized) derivatives where the formula
composes operators.  Contracting the sigma'-side and f-side tractors gives the
quantization to compare against the solver output.
"""

from __future__ import annotations

from fractions import Fraction

from .calculus import CURVED, laplacian, nabla
from .coeff_ring import D, N, W
from .index_algebra import Expr, symmetrize, trace_free_project
from .tractor_core import proj

f = Expr.field("f")
J = Expr.field("J")


def P(a: str, b: str) -> Expr:
    return Expr.field("P", (a, b))


def g(a: str, b: str) -> Expr:
    return Expr.field("g", (a, b))


def sigma(*labels: str) -> Expr:
    return Expr.field("sigma", labels)


def _nab(e: Expr, *labels: str) -> Expr:
    """nabla_{l1} nabla_{l2} ... e, innermost derivative last."""
    for lab in reversed(labels):
        e = nabla(e, lab, CURVED)
    return e


def _sym(e: Expr, tractors) -> Expr:
    return symmetrize(e, list(tractors))


# ------------------------------------------------------------------ sigma' nabla^3

AS_PRINTED = "printed"
CORRECTED = "corrected"


def example1_M(A="A", B="B", C="C", variant: str = CORRECTED) -> Expr:
    """M^{ABC}_{abc} sigma'^{abc}.

    The printed XXZ prefactor 3(n+d+3) leaves a first-order residual; the
    invariant operator has 3(n+d+2).  ``variant`` selects either.
    """
    s = sigma("p", "q", "r")
    t1 = proj("Z", A, "a") * proj("Z", B, "b") * proj("Z", C, "c") * sigma("a", "b", "c")
    t1 = t1.scale((N + D + 2) * (N + D + 3) * (N + D + 4))
    t2 = proj("X", A) * proj("Z", B, "b") * proj("Z", C, "c") * _nab(sigma("p", "b", "c"), "p")
    t2 = t2.scale(-3 * (N + D + 2) * (N + D + 3))
    inner3 = _nab(sigma("p", "q", "c"), "p", "q") + (P("p", "q") * sigma("p", "q", "c")).scale(N + D + 4)
    if variant not in (AS_PRINTED, CORRECTED):
        raise ValueError(f"unknown variant {variant!r}")
    pref = N + D + 3 if variant == AS_PRINTED else N + D + 2
    t3 = (proj("X", A) * proj("X", B) * proj("Z", C, "c") * inner3).scale(3 * pref)
    inner4 = (_nab(_nab(s, "q", "r") + (P("q", "r") * s).scale(N + D + 4), "p")
              + (P("p", "q") * _nab(s, "r")).scale(2 * (N + D + 3)))
    t4 = -(proj("X", A) * proj("X", B) * proj("X", C) * inner4)
    return _sym(t1, (A, B, C)) + _sym(t2, (A, B, C)) + _sym(t3, (A, B, C)) + t4


def example1_D(A="A", B="B", C="C") -> Expr:
    """D~_{ABC} f on E[w]."""
    t1 = (proj("Y", A) * proj("Y", B) * proj("Y", C) * f).scale(W * (W - 1) * (W - 2))
    t2 = (proj("Y", A) * proj("Y", B) * proj("Z", C, "c") * _nab(f, "c")).scale(3 * (W - 1) * (W - 2))
    inner3 = trace_free_project(_nab(f, "b", "c") + (P("b", "c") * f).scale(W), ["b", "c"])
    t3 = (proj("Y", A) * proj("Z", B, "b") * proj("Z", C, "c") * inner3).scale(3 * (W - 2))
    inner4 = trace_free_project(
        _nab(_nab(f, "b", "c") + (P("b", "c") * f).scale(W), "a")
        + (P("b", "c") * _nab(f, "a")).scale(2 * (W - 1)), ["a", "b", "c"])
    t4 = proj("Z", A, "a") * proj("Z", B, "b") * proj("Z", C, "c") * inner4
    return _sym(t1, (A, B, C)) + _sym(t2, (A, B, C)) + _sym(t3, (A, B, C)) + _sym(t4, (A, B, C))


def example1_pairing(variant: str = CORRECTED) -> Expr:
    return example1_M(variant=variant) * example1_D()


def example1_top_channel() -> Expr:
    """Z Z Z slot of M paired with D~: sigma' meets the bottom slot of D~."""
    t1 = proj("Z", "A", "a") * proj("Z", "B", "b") * proj("Z", "C", "c") * sigma("a", "b", "c")
    t1 = _sym(t1.scale((N + D + 2) * (N + D + 3) * (N + D + 4)), ("A", "B", "C"))
    return t1 * example1_D()


def example1_leading() -> Expr:
    """(n+d+2)(n+d+3)(n+d+4) sigma'^{abc}[nabla_a(nabla_b nabla_c + wP_bc) + 2(w-1)P_bc nabla_a] f."""
    op = (_nab(_nab(f, "b", "c") + (P("b", "c") * f).scale(W), "a")
          + (P("b", "c") * _nab(f, "a")).scale(2 * (W - 1)))
    return (sigma("a", "b", "c") * op).scale((N + D + 2) * (N + D + 3) * (N + D + 4))


# ------------------------------------------------------------------ sigma' nabla Delta

def example2_DM(A="A", B="B") -> Expr:
    """D^(A M^B)_b sigma'^b."""
    div = _nab(sigma("p"), "p")
    t1 = (proj("Y", A) * proj("Z", B, "b") * sigma("b")).scale(D * (N + D) * (N + 2 * D))
    grad = trace_free_project(_nab(sigma("b"), "a"), ["a", "b"]).scale(N + D)
    grad = grad + (g("a", "b") * div).scale(D / N)
    t2 = (proj("Z", A, "a") * proj("Z", B, "b") * grad).scale(N + 2 * D)
    t3 = (proj("X", A) * proj("Y", B) * div).scale(-D * (N + 2 * D))
    inner4 = ((_nab(div, "b") + (P("b", "p") * sigma("p")).scale(N + D)).scale(N + 2 * D - 2)
              + (laplacian(sigma("b"), CURVED) + (J * sigma("b")).scale(D + 1)).scale(N + D))
    t4 = -(proj("X", A) * proj("Z", B, "b") * inner4)
    inner5 = (laplacian(div, CURVED) + (J * div).scale(D)
              + (_nab(J, "p") * sigma("p") + (P("p", "q") * _nab(sigma("p"), "q")).scale(2)).scale(N + D))
    t5 = proj("X", A) * proj("X", B) * inner5
    return sum((_sym(t, (A, B)) for t in (t1, t2, t3, t4, t5)), Expr())


def _yamabe_like(e: Expr) -> Expr:
    return laplacian(e, CURVED) + (J * e).scale(W)


def example2_T(A="A", B="B") -> Expr:
    """T~_{AB} f on E[w]."""
    lead = N + 2 * W - 2
    t1 = (proj("Y", A) * proj("Y", B) * f).scale(W * (W - 1) * lead)
    t2 = (proj("Y", A) * proj("Z", B, "b") * _nab(f, "b")).scale(2 * (W - 1) * lead)
    hess = trace_free_project(_nab(f, "a", "b") + (P("a", "b") * f).scale(W), ["a", "b"]).scale(lead)
    hess = hess + (g("a", "b") * _yamabe_like(f)).scale(Fraction(2) * (W - 1) / N)
    t3 = proj("Z", A, "a") * proj("Z", B, "b") * hess
    t4 = (proj("X", A) * proj("Y", B) * _yamabe_like(f)).scale(-2 * (W - 1))
    inner5 = _nab(_yamabe_like(f), "b") + (P("b", "p") * _nab(f, "p")).scale(lead)
    t5 = (proj("X", A) * proj("Z", B, "b") * inner5).scale(-2)
    return sum((_sym(t, (A, B)) for t in (t1, t2, t3, t4, t5)), Expr())


def example2_pairing() -> Expr:
    return example2_DM() * example2_T()


def example2_top_channel() -> Expr:
    """Y Z slot of D M paired with T~."""
    t1 = (proj("Y", "A") * proj("Z", "B", "b") * sigma("b")).scale(D * (N + D) * (N + 2 * D))
    return _sym(t1, ("A", "B")) * example2_T()


def example2_leading() -> Expr:
    """-d(n+d)(n+2d) sigma'^b [nabla_b(Delta + wJ) + (n+2w-2) P_b^p nabla_p] f."""
    op = _nab(_yamabe_like(f), "b") + (P("b", "p") * _nab(f, "p")).scale(N + 2 * W - 2)
    return (sigma("b") * op).scale(-D * (N + D) * (N + 2 * D))
