"""Tractor calculus on top of the index engine.

Standard tractor labels are plain labels on the projectors X_A, Y_A, Z_Aa and
the metric h_AB.  Adjoint tractor indices are skew pairs of standard labels.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .calculus import CURVED, FLAT, ModeError, check_mode, laplacian, nabla, sym_gradient
from .coeff_ring import N, ONE, Coefficient, coeff
from .index_algebra import Expr, WeightMismatch, conformal_weight_of, slot_kinds, trace_free_project


def proj(name: str, tractor: str, tangent: str | None = None) -> Expr:
    idx = (tractor,) if tangent is None else (tractor, tangent)
    return Expr.field(name, idx)


def g(a: str, b: str) -> Expr:
    return Expr.field("g", (a, b))


# ------------------------------------------------------------------ contraction table

def expand_h(e: Expr) -> Expr:
    """Replace every h_AB by Y_A X_B + Z_Aa Z_Ba + X_A Y_B."""
    raw = []
    for c, mono in e:
        parts = [[(ONE, [])]]
        counter = 0
        for f in mono:
            if f[0] != "h":
                parts.append([(ONE, [f])])
                continue
            A, B = f[2]
            counter += 1
            t = f"_h{counter}"
            parts.append([
                (ONE, [("Y", 0, (A,)), ("X", 0, (B,))]),
                (ONE, [("Z", 0, (A, t)), ("Z", 0, (B, t))]),
                (ONE, [("X", 0, (A,)), ("Y", 0, (B,))]),
            ])
        combos = [(c, [])]
        for options in parts:
            combos = [(c1 * c2, fs1 + fs2) for c1, fs1 in combos for c2, fs2 in options]
        raw.extend(combos)
    return Expr.from_raw(raw)


def contract_tractor_pairs(e: Expr) -> Expr:
    """Resolve contracted projector pairs with Y.X = 1, Z.Z = g and all others 0."""
    return expand_h(e)


# ------------------------------------------------------------------ connection

def apply_tractor_connection(e: Expr, direction: str, mode: str = CURVED) -> Expr:
    return nabla(e, direction, mode)


def _require_flat(mode: str) -> None:
    if mode != FLAT:
        raise ModeError("flat commutation identities hold only in the flat model")


def _test_field(which: str, B: str) -> tuple[Expr, str]:
    if which == "Y":
        return proj("Y", B) * Expr.field("rho"), "rho"
    if which == "X":
        return proj("X", B) * Expr.field("rho"), "rho"
    if which == "Z":
        return proj("Z", B, "_zb") * Expr.field("mu", ("_zb",)), "mu"
    raise ValueError(f"unknown projector {which!r}")


def commute_sym_gradient_flat(k: int, which: str, B: str = "B",
                              labels: Sequence[str] | None = None, mode: str = FLAT) -> Expr:
    """Closed form of nabla_(a1...ak)0 applied to Y_B rho, Z_Bb mu_b or X_B rho."""
    _require_flat(mode)
    labels = list(labels or [f"a{i + 1}" for i in range(k)])
    grad = Expr.field
    if which == "Y":
        e = proj("Y", B) * grad("rho", (), labels)
    elif which == "X":
        e = proj("X", B) * grad("rho", (), labels)
        if k:
            e = e + (proj("Z", B, labels[0]) * grad("rho", (), labels[1:])).scale(k)
    elif which == "Z":
        e = proj("Z", B, "_zb") * grad("mu", ("_zb",), labels)
        if k:
            e = e + (proj("Y", B) * grad("mu", (labels[0],), labels[1:])).scale(-k)
    else:
        raise ValueError(f"unknown projector {which!r}")
    return trace_free_project(e, labels)


def direct_sym_gradient(k: int, which: str, B: str = "B",
                        labels: Sequence[str] | None = None, mode: str = FLAT) -> Expr:
    """nabla_(a1...ak)0 of the test section computed by iterating the connection."""
    labels = list(labels or [f"a{i + 1}" for i in range(k)])
    e, _ = _test_field(which, B)
    return trace_free_project(sym_gradient(e, labels, mode), labels)


def _lap_power(e: Expr, ell: int, mode: str) -> Expr:
    for _ in range(ell):
        e = laplacian(e, mode)
    return e


def _scalar_lap_jet(name: str, idx: Sequence[str], ell: int, extra: Sequence[str] = ()) -> Expr:
    """nabla_extra Delta^ell of a field as a (flat) jet factor."""
    deriv = list(extra)
    for j in range(ell):
        deriv += [f"_l{j}", f"_l{j}"]
    return Expr.field(name, idx, deriv)


def commute_laplacian_flat(ell: int, which: str, B: str = "B", mode: str = FLAT) -> Expr:
    """Closed form of Delta^ell applied to Y_B rho, Z_Bb mu_b or X_B rho."""
    _require_flat(mode)
    if which == "Y":
        return proj("Y", B) * _scalar_lap_jet("rho", (), ell)
    if which == "Z":
        e = proj("Z", B, "_zb") * _scalar_lap_jet("mu", ("_zb",), ell)
        if ell:
            e = e + (proj("Y", B) * _scalar_lap_jet("mu", ("_zd",), ell - 1, ["_zd"])).scale(-2 * ell)
        return e
    if which == "X":
        e = proj("X", B) * _scalar_lap_jet("rho", (), ell)
        if ell:
            e = e + (proj("Y", B) * _scalar_lap_jet("rho", (), ell - 1)).scale(
                -ell * (N + 2 * ell - 2))
            e = e + (proj("Z", B, "_zd") * _scalar_lap_jet("rho", (), ell - 1, ["_zd"])).scale(2 * ell)
        return e
    raise ValueError(f"unknown projector {which!r}")


def direct_laplacian(ell: int, which: str, B: str = "B", mode: str = FLAT) -> Expr:
    e, _ = _test_field(which, B)
    return _lap_power(e, ell, mode)


# ------------------------------------------------------------------ curvature

def tractor_curvature_expand(a: str = "a", b: str = "b", C: str = "C", E: str = "E",
                             mode: str = CURVED) -> Expr:
    """Omega_abCE = Z_Cc Z_Ee C_abce - 2 X_[C Z_E]e A_eab, with A_eab = 2 nabla_[a P_b]e."""
    check_mode(mode)
    if mode == FLAT:
        return Expr()
    raw = [
        (ONE, [("Z", 0, (C, "_c")), ("Z", 0, (E, "_e")), ("C", 0, (a, b, "_c", "_e"))]),
        (-ONE, [("X", 0, (C,)), ("Z", 0, (E, "_e")), ("A", 0, ("_e", a, b))]),
        (ONE, [("X", 0, (E,)), ("Z", 0, (C, "_e")), ("A", 0, ("_e", a, b))]),
    ]
    return Expr.from_raw(raw)


def tractor_commutator(e: Expr, a: str, b: str, mode: str = CURVED) -> Expr:
    """[nabla_a, nabla_b] e computed directly from the connection."""
    t = nabla(nabla(e, b, mode), a, mode)
    return t - t.relabel({a: b, b: a})


# ------------------------------------------------------------------ tractor-D

def _tangent_free(e: Expr) -> list[str]:
    out = []
    for lab in e.free:
        for _, mono in e:
            for f in mono:
                if lab in f[2]:
                    if slot_kinds(f)[f[2].index(lab)] == "t":
                        out.append(lab)
                    break
            else:
                continue
            break
    return out


def apply_tractor_D(e: Expr, A: str = "A", weight: Coefficient | None = None,
                    mode: str = CURVED) -> Expr:
    """D_A e = (n+2w-2) w Y_A e + (n+2w-2) Z_Aa nabla_a e - X_A (Delta + w J) e."""
    check_mode(mode)
    if e.is_zero():
        return e
    if _tangent_free(e):
        raise ValueError("tractor-D acts on tractor-valued densities without free tangent indices")
    w = conformal_weight_of(e) if weight is None else coeff(weight)
    if weight is not None and conformal_weight_of(e) != w:
        raise WeightMismatch("declared weight differs from the expression weight")
    lead = N + 2 * w - 2
    out = (proj("Y", A) * e).scale(lead * w)
    out = out + (proj("Z", A, "_Da") * nabla(e, "_Da", mode)).scale(lead)
    box = laplacian(e, mode)
    if mode == CURVED:
        box = box + (Expr.field("J") * e).scale(w)
    return out - proj("X", A) * box


# ------------------------------------------------------------------ adjoint tractors

def _skew(a: Expr, b: Expr, A1: str, A2: str) -> Expr:
    """u_[A1 v_A2] for one-index factors built on A1 and A2 respectively."""
    first = a * b
    swapped = first.relabel({A1: A2, A2: A1})
    return (first - swapped).scale(Fraction(1, 2))


def adj_W(A1: str, A2: str) -> Expr:
    """W_A = X_[A1 Y_A2]."""
    return _skew(proj("X", A1), proj("Y", A2), A1, A2)


def adj_X(A1: str, A2: str, a: str) -> Expr:
    """X_A^a = X_[A1 Z_A2]^a."""
    return _skew(proj("X", A1), proj("Z", A2, a), A1, A2)


def adj_Y(A1: str, A2: str, a: str) -> Expr:
    """Y_A^a = Y_[A1 Z_A2]^a."""
    return _skew(proj("Y", A1), proj("Z", A2, a), A1, A2)


def _tractor_free(e: Expr) -> list[str]:
    tangent = set(_tangent_free(e))
    return sorted(l for l in e.free if l not in tangent)


def hash_action(e: Expr, A1: str, A2: str) -> Expr:
    """H_A # e: Leibniz action of the adjoint element on every free tractor slot.

    On a slot C it sends F_..C.. to h_C[A1 F_..A2].. (skew in A1 A2); trivial on densities.
    """
    out = Expr()
    for C in _tractor_free(e):
        moved1 = e.relabel({C: "_hP"}).relabel({"_hP": A2}) * Expr.field("h", (C, A1))
        moved2 = e.relabel({C: "_hP"}).relabel({"_hP": A1}) * Expr.field("h", (C, A2))
        out = out + (moved1 - moved2).scale(Fraction(1, 2))
    return out


def fundamental_derivative(e: Expr, A1: str = "A1", A2: str = "A2", mode: str = CURVED,
                           weight: Coefficient | None = None) -> Expr:
    """D_A e = w W_A e + X_A^a nabla_a e + H_A # e for the skew pair A = [A1 A2]."""
    check_mode(mode)
    if e.is_zero():
        return e
    w = conformal_weight_of(e, _tangent_free(e)) if weight is None else coeff(weight)
    out = (adj_W(A1, A2) * e).scale(w)
    out = out + adj_X(A1, A2, "_fa") * nabla(e, "_fa", mode)
    return out + hash_action(e, A1, A2)


def curved_casimir_apply(e: Expr, mode: str = CURVED, weight: Coefficient | None = None) -> Expr:
    """C e = D^A D_A e with the adjoint index fully contracted."""
    w = conformal_weight_of(e, _tangent_free(e)) if weight is None else coeff(weight)
    inner = fundamental_derivative(e, "_K1", "_K2", mode, w)
    outer = fundamental_derivative(inner, "_M1", "_M2", mode, w)
    return expand_h(outer.relabel({"_M1": "_K1", "_M2": "_K2"}))
