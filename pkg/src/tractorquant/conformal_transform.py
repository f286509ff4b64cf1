"""Conformal rescaling g -> e^{2 Upsilon} g acting on expanded formulas.

Sections stay fixed and the formula changes: every factor is replaced by its
value in the new scale, written in old quantities and jets of Upsilon.  Jets
transform by iterating

    nabla^_a T = nabla_a T + w Upsilon_a T
                 - sum_b (Upsilon_a T_..b.. + Upsilon_b T_..a.. - g_ab Upsilon_p T_..p..)

on every lowered slot b, where w is the lowered weight of T.

In the flat model Upsilon is taken affine (its second and higher jets are
dropped) so the new scale is again flat to first order.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .calculus import CURVED, FLAT, _instantiate, _Labels, check_mode, flatten, nabla
from .coeff_ring import N, ONE, Coefficient, coeff_substitute
from .index_algebra import Expr, Monomial, factor_rank, symmetrize
from .symbols import lookup

LINEARIZED = "linearized"
FULL = "full"

UPSILON = "Upsilon"


class UnknownTransformation(KeyError):
    """A factor has no registered rescaling rule."""


def _upsilon_count(mono: Monomial, upsilon: str) -> int:
    return sum(1 for f in mono if f[0] == upsilon)


def _truncate(e: Expr, ctx: "_Ctx") -> Expr:
    def keep(m):
        if ctx.linearized and _upsilon_count(m, ctx.upsilon) > 1:
            return False
        if ctx.mode == FLAT and any(f[0] == ctx.upsilon and f[1] >= 2 for f in m):
            return False
        return True
    e = e.filter(keep)
    return flatten(e) if ctx.mode == FLAT else e


class _Ctx:
    def __init__(self, mode: str, linearized: bool, upsilon: str):
        self.mode = mode
        self.linearized = linearized
        self.upsilon = upsilon

    @property
    def key(self):
        return (self.mode, self.linearized, self.upsilon)


def _u(a: str, upsilon: str) -> Expr:
    return Expr.field(upsilon, (), (a,))


def _upsilon_terms(e: Expr, a: str, labels: Sequence[str], weight: Coefficient, ctx: _Ctx) -> Expr:
    """nabla^_a e - nabla_a e for e with lowered free tangent slots ``labels``."""
    up = ctx.upsilon
    out = (_u(a, up) * e).scale(weight - len(labels))
    for b in labels:
        out = out - _u(b, up) * e.relabel({b: a})
        out = out + Expr.field("g", (a, b)) * _u("_up", up) * e.relabel({b: "_up"})
    return out


_templates: dict[tuple, Expr] = {}


def _template_labels(k: int, rank: int) -> list[str]:
    return [f"_t{i}" for i in range(k + rank)]


def _base_delta(name: str, rank: int, ctx: _Ctx) -> Expr:
    """Change of the underived factor, on template labels."""
    up = ctx.upsilon
    labs = _template_labels(0, rank)
    sym = lookup(name)
    if name in ("X", "g", "h", "C") or name == up:
        return Expr()
    if name == "Y":
        B = labs[0]
        out = -(_u("_p", up) * Expr.field("Z", (B, "_p")))
        if not ctx.linearized:
            out = out - (_u("_p", up) * _u("_p", up) * Expr.field("X", (B,))).scale(Fraction(1, 2))
        return out
    if name == "Z":
        B, b = labs
        return _u(b, up) * Expr.field("X", (B,))
    if name == "P":
        a, b = labs
        out = -Expr.field(up, (), (a, b))
        if not ctx.linearized:
            out = out + _u(a, up) * _u(b, up)
            out = out - (Expr.field("g", (a, b)) * _u("_p", up) * _u("_p", up)).scale(Fraction(1, 2))
        return out
    if name == "J":
        out = -Expr.field(up, (), ("_p", "_p"))
        if not ctx.linearized:
            out = out - (_u("_p", up) * _u("_p", up)).scale((N - 2) / 2)
        return out
    if sym.role in ("field", "test", "upsilon") and sym.jets:
        return Expr()
    raise UnknownTransformation(name)


def factor_delta(name: str, k: int, rank: int, ctx: _Ctx) -> Expr:
    """hat(F) - F for the jet (name, k) on template labels ``_t0, _t1, ...``."""
    key = (name, k, rank) + ctx.key
    hit = _templates.get(key)
    if hit is not None:
        return hit
    if k == 0:
        out = _truncate(_base_delta(name, rank, ctx), ctx)
        _templates[key] = out
        return out
    sym = lookup(name)
    if name == ctx.upsilon:
        _templates[key] = Expr()
        return _templates[key]
    if not sym.jets:
        raise UnknownTransformation(name)
    labs = _template_labels(k, rank)
    new, old_deriv, base = labs[0], labs[1:k], labs[k:]
    prev = factor_delta(name, k - 1, rank, ctx).relabel(
        dict(zip(_template_labels(k - 1, rank), old_deriv + base)))
    plain = Expr.field(name, base, old_deriv)
    weight = sym.lowered_weight(rank)
    full_prev = plain if ctx.linearized else plain + prev
    step = nabla(prev, new, ctx.mode) + _upsilon_terms(full_prev, new, old_deriv + base, weight, ctx)
    step = _truncate(step, ctx)
    out = _truncate(symmetrize(step, labs[:k]) if k > 1 else step, ctx)
    _templates[key] = out
    return out


def rescale_expr(e: Expr, mode: str = CURVED, transform: str = LINEARIZED,
                 upsilon: str = UPSILON, bindings: Mapping[str, object] | None = None) -> Expr:
    """Value of the formula ``e`` in the rescaled metric, in old quantities and Upsilon-jets.

    Field weights are read from the symbol table (w for f, d for sigma').  When
    the formula was specialized to concrete weights, pass the same ``bindings``
    so they are applied to the new terms too.
    """
    check_mode(mode)
    if transform not in (LINEARIZED, FULL):
        raise ValueError(f"unknown transformation mode {transform!r}")
    ctx = _Ctx(mode, transform == LINEARIZED, upsilon)
    if mode == FLAT:
        e = flatten(e)
    raw = []
    for c, mono in e:
        options = []
        for i, f in enumerate(mono):
            name, k, idx = f
            delta = factor_delta(name, k, factor_rank(f), ctx)
            inst = _instantiate(delta, dict(zip(_template_labels(k, factor_rank(f)), idx)),
                                _Labels(f"r{i}_")) if not delta.is_zero() else []
            options.append([(ONE, [f])] + [(c2, fs) for c2, fs in inst])
        if ctx.linearized:
            raw.append((c, list(mono)))
            for i, opts in enumerate(options):
                for c2, fs in opts[1:]:
                    rest = [g for j, g in enumerate(mono) if j != i]
                    raw.append((c * c2, rest + fs))
        else:
            for combo in product(*options):
                cc = c
                fs = []
                for c2, part in combo:
                    cc = cc * c2
                    fs.extend(part)
                raw.append((cc, fs))
    out = _truncate(Expr.from_raw(raw), ctx)
    if bindings:
        out = out.map_coefficients(lambda c: coeff_substitute(c, bindings))
    return out


def linearized_invariance_residual(e: Expr, mode: str = CURVED, upsilon: str = UPSILON,
                                   bindings: Mapping[str, object] | None = None) -> Expr:
    """First variation of ``e`` under rescaling; zero exactly when ``e`` is invariant."""
    if mode == FLAT:
        e = flatten(e)
    return rescale_expr(e, mode, LINEARIZED, upsilon, bindings) - e


def split_upsilon(e: Expr, old: str, parts: Sequence[str]) -> Expr:
    """Replace each jet of ``old`` by the sum of the same jets of ``parts``."""
    raw = []
    for c, mono in e:
        options = [[f] if f[0] != old else [(p, f[1], f[2]) for p in parts] for f in mono]
        for combo in product(*options):
            raw.append((c, list(combo)))
    return Expr.from_raw(raw)
