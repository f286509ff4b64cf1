"""Covariant derivatives of expressions.

A jet factor ``(F, k, idx)`` is the symmetrized k-th derivative of F.  Its
derivative is the next symmetrized jet plus, on curved backgrounds, a
curvature correction ``E_k`` obtained from the commutator recursion

    K(a, b; R) = [nabla_a, nabla_b] S_{k-1}(R) - nabla_a E_{k-1}(b; R) + nabla_b E_{k-1}(a; R)
    E_k(a; b)  = 1/(k+1) sum_i K(a, b_i; b - b_i)

with ``[nabla_a, nabla_b] T_c = R_abcd T_d`` on every tangent slot.
Projectors follow the standard tractor connection.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .coeff_ring import ONE, Coefficient
from .index_algebra import Expr, Factor, Monomial, factor_rank
from .symbols import CURVATURE, lookup

FLAT = "flat"
CURVED = "curved"

_CURV_NAMES = CURVATURE | {"A"}


class ModeError(RuntimeError):
    """An operation was called in a geometry mode that does not support it."""


def check_mode(mode: str) -> None:
    if mode not in (FLAT, CURVED):
        raise ValueError(f"unknown mode {mode!r}")


def has_curvature(mono: Monomial) -> bool:
    return any(f[0] in _CURV_NAMES for f in mono)


def flatten(e: Expr) -> Expr:
    """Drop every term carrying curvature (the conformally flat model in a flat scale)."""
    return e.filter(lambda m: not has_curvature(m))


# ------------------------------------------------------------------ raw helpers

class _Labels:
    """Deterministic private labels for one derivative step."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.i = 0

    def __call__(self) -> str:
        self.i += 1
        return f"_{self.prefix}{self.i}"


def _instantiate(template: Expr, mapping: dict[str, str], fresh: _Labels):
    """Raw terms of a template with its free labels mapped and dummies made private."""
    out = []
    for c, mono in template:
        local = dict(mapping)
        factors = []
        for name, k, idx in mono:
            new = []
            for l in idx:
                if l not in local:
                    local[l] = fresh()
                new.append(local[l])
            factors.append((name, k, tuple(new)))
        out.append((c, factors))
    return out


def riemann_raw(a: str, b: str, c: str, d: str) -> list[tuple[Coefficient, list[Factor]]]:
    """R_abcd = C_abcd + g_ca P_bd - g_cb P_ad + g_db P_ac - g_da P_bc."""
    return [
        (ONE, [("C", 0, (a, b, c, d))]),
        (ONE, [("g", 0, (c, a)), ("P", 0, (b, d))]),
        (-ONE, [("g", 0, (c, b)), ("P", 0, (a, d))]),
        (ONE, [("g", 0, (d, b)), ("P", 0, (a, c))]),
        (-ONE, [("g", 0, (d, a)), ("P", 0, (b, c))]),
    ]


def commutator_raw(factor: Factor, a: str, b: str, fresh: _Labels):
    """[nabla_a, nabla_b] applied to one tangent-valued factor."""
    name, k, idx = factor
    out = []
    kinds = _kinds(factor)
    for s, lab in enumerate(idx):
        if kinds[s] != "t":
            continue
        d = fresh()
        moved = (name, k, idx[:s] + (d,) + idx[s + 1:])
        for c, fs in riemann_raw(a, b, lab, d):
            out.append((c, fs + [moved]))
    return out


def _kinds(factor: Factor) -> tuple[str, ...]:
    from .index_algebra import slot_kinds
    return slot_kinds(factor)


# ------------------------------------------------------------------ jet corrections

_corr_cache: dict[tuple[str, int, int], Expr] = {}


def _corr_labels(k: int, rank: int):
    return "_ca", tuple(f"_cd{i}" for i in range(k)), tuple(f"_cs{i}" for i in range(rank))


def jet_correction(name: str, k: int, rank: int) -> Expr:
    """E_k = nabla_a S_k - S_{k+1} for field ``name`` of base rank ``rank``.

    Free labels: ``_ca`` (new derivative), ``_cd0..`` (old derivatives) and
    ``_cs0..`` (base slots).
    """
    key = (name, k, rank)
    hit = _corr_cache.get(key)
    if hit is not None:
        return hit
    a, ds, ss = _corr_labels(k, rank)
    if k == 0:
        _corr_cache[key] = Expr()
        return _corr_cache[key]
    raw = []
    for i in range(k):
        b = ds[i]
        rest = ds[:i] + ds[i + 1:]
        raw.extend(_k_raw(name, rank, a, b, rest, ss))
    e = Expr.from_raw(raw).scale(Fraction(1, k + 1))
    _corr_cache[key] = e
    return e


def _k_raw(name: str, rank: int, a: str, b: str, rest: tuple[str, ...], ss: tuple[str, ...]):
    """Raw terms of K(a, b; rest) for the jet S_{len(rest)+1}."""
    km1 = len(rest)
    fresh = _Labels("k")
    jet = (name, km1, rest + ss)
    out = list(commutator_raw(jet, a, b, fresh))
    if km1 == 0:
        return out
    for x, y, sign in ((a, b, -ONE), (b, a, ONE)):
        e_prev = _correction_instance(name, km1, rank, y, rest, ss)
        for c, mono in nabla(e_prev, x, CURVED):
            out.append((sign * c, list(mono)))
    return out


def _correction_instance(name, k, rank, a, ds, ss) -> Expr:
    """E_k(a; ds; ss) with concrete labels."""
    tmpl = jet_correction(name, k, rank)
    if tmpl.is_zero():
        return tmpl
    ta, tds, tss = _corr_labels(k, rank)
    mapping = {ta: a, **dict(zip(tds, ds)), **dict(zip(tss, ss))}
    return Expr.from_raw(_instantiate(tmpl, mapping, _Labels("i")))


# ------------------------------------------------------------------ derivative of one factor

def factor_derivative_raw(factor: Factor, a: str, mode: str, fresh: _Labels):
    """Raw terms of nabla_a applied to a single factor."""
    name, k, idx = factor
    if name in ("g", "h"):
        return []
    if name == "X":
        return [(ONE, [("Z", 0, (idx[0], a))])]
    if name == "Y":
        if mode == FLAT:
            return []
        b = fresh()
        return [(ONE, [("Z", 0, (idx[0], b)), ("P", 0, (a, b))])]
    if name == "Z":
        B, b = idx
        out = [(-ONE, [("Y", 0, (B,)), ("g", 0, (a, b))])]
        if mode == CURVED:
            out.append((-ONE, [("X", 0, (B,)), ("P", 0, (a, b))]))
        return out
    sym = lookup(name)
    if not sym.jets:
        raise ValueError(f"no derivative rule for {name}")
    if mode == FLAT and name in _CURV_NAMES:
        return []
    out = [(ONE, [(name, k + 1, (a,) + idx)])]
    if mode == CURVED and k:
        rank = factor_rank(factor)
        tmpl = jet_correction(name, k, rank)
        if not tmpl.is_zero():
            ta, tds, tss = _corr_labels(k, rank)
            mapping = {ta: a, **dict(zip(tds, idx[:k])), **dict(zip(tss, idx[k:]))}
            out.extend(_instantiate(tmpl, mapping, fresh))
    return out


def nabla_raw(e: Expr, a: str, mode: str):
    raw = []
    for c, mono in e:
        if mode == FLAT and has_curvature(mono):
            continue
        for i, f in enumerate(mono):
            fresh = _Labels("n")
            rest = list(mono[:i]) + list(mono[i + 1:])
            for c2, fs in factor_derivative_raw(f, a, mode, fresh):
                raw.append((c * c2, rest + fs))
    return raw


def nabla(e: Expr, a: str, mode: str = CURVED) -> Expr:
    """Coupled Levi-Civita-tractor derivative nabla_a e.

    ``a`` is either new or an existing free tangent label (giving a divergence).
    """
    check_mode(mode)
    return Expr.from_raw(nabla_raw(e, a, mode))


def laplacian(e: Expr, mode: str = CURVED) -> Expr:
    return nabla(nabla(e, "_lap", mode), "_lap", mode)


def sym_gradient(e: Expr, labels: Sequence[str], mode: str = CURVED) -> Expr:
    """nabla_(a1 ... ak) e, the symmetrized iterated derivative."""
    labels = list(labels)
    out = e
    for m, new in enumerate(labels):
        step = nabla(out, new, mode)
        if m == 0:
            out = step
            continue
        acc = step
        for old in labels[:m]:
            acc = acc + step.relabel({new: old, old: new})
        out = acc.scale(Fraction(1, m + 1))
    return out


# ------------------------------------------------------------------ substitution

def substitute_jets(e: Expr, name: str, replacement: Expr, mode: str,
                    reshape=None) -> Expr:
    """Replace every jet of the scalar field ``name`` by the jet of ``replacement``.

    ``replacement`` may carry free tractor labels; they stay free.  ``reshape``
    maps coefficients (e.g. shifting w) before the substitution.
    """
    jets: dict[int, Expr] = {}
    ext = sorted(replacement.free)

    def jet(k: int) -> Expr:
        if k not in jets:
            jets[k] = sym_gradient(replacement, [f"_j{i}" for i in range(k)], mode)
        return jets[k]

    raw = []
    for c, mono in e:
        if reshape is not None:
            c = reshape(c)
            if not c:
                continue
        targets = [f for f in mono if f[0] == name]
        if not targets:
            raw.append((c, list(mono)))
            continue
        if len(targets) > 1:
            raise ValueError(f"{name} occurs more than once in a term")
        f = targets[0]
        rest = [g for g in mono if g is not f]
        k = f[1]
        mapping = {f"_j{i}": f[2][i] for i in range(k)}
        for l in ext:
            mapping[l] = l
        for c2, fs in _instantiate(jet(k), mapping, _Labels("s")):
            raw.append((c * c2, rest + fs))
    return Expr.from_raw(raw)


def field_order(mono: Monomial, name: str) -> int:
    for f in mono:
        if f[0] == name:
            return f[1]
    return -1


def total_order(mono: Monomial) -> int:
    """Differential order counting curvature as order 2."""
    n = 0
    for name, k, _ in mono:
        n += k + (2 if name in _CURV_NAMES else 0)
    return n


def monomials_with(e: Expr, names: Iterable[str]) -> Expr:
    names = set(names)
    return e.filter(lambda m: any(f[0] in names for f in m))
