"""Invariant quantizations Q_{k',l}.

Q_{k',0} pairs two invariant splittings written in components:

    F_bar   = sum_i  XX^i WW^(k'-i) fbar^i          (fbar^i rank i, order i)
    F_tilde = sum_j  YY^j WW^(k'-j) stilde^j        (stilde^j rank j, order k'-j)

Invariance of the adjoint-tractor sums is equivalent to the component laws

    delta fbar^i   = (k'-i+1) (Upsilon fbar^(i-1))_0
    delta stilde^j = (j+1) Upsilon_p stilde^(j+1)_p...

which are solved over an ansatz of all weight- and order-consistent
monomials.  The pairings YY.XX = 1/2 and WW.WW = -1/2 give
Q_{k',0} = sum_i (-1)^(k'-i) / C(k',i) <stilde^i, fbar^i>.
Higher l follows by sandwiching with tractor-D.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import comb
from typing import Any, Sequence

from .calculus import CURVED, FLAT, check_mode, laplacian, nabla, substitute_jets
from .coeff_ring import (
    D, FIELD, N, ONE, W, Coefficient, coeff, coeff_substitute,
    parse_coeff, render_coeff,
)
from .conformal_transform import linearized_invariance_residual
from .critical_weights import sigma as critical_sigma
from .index_algebra import (
    Expr, WeightMismatch, _rref, conformal_weight_of, pairings, trace_free_project,
)
from .textio import expr_from_json, expr_to_json
from .tractor_core import adj_W, adj_X, adj_Y, apply_tractor_D, curved_casimir_apply, proj

UPS = "Upsilon"


class DegenerateWeight(ArithmeticError):
    """The invariance conditions do not have a unique normalized solution."""


class CriticalWeightError(ValueError):
    """The requested weight is critical; carries the family and vanishing factor."""

    def __init__(self, kprime: int, ell: int, delta, family: str, factor: str):
        super().__init__(f"delta'={delta} is critical for (k'={kprime}, l={ell}): "
                         f"lies in {family}, factor {factor} vanishes; use the critical construction")
        self.kprime, self.ell, self.delta, self.family, self.factor = kprime, ell, delta, family, factor


class NotCritical(ValueError):
    """A critical construction was requested for a non-critical weight."""


def free_labels(prefix: str, count: int) -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(count)]


# ------------------------------------------------------------------ ansatz

def _curvature_pieces(order: int):
    """Curvature jets of differential order <= ``order``: (name, k, base rank, order)."""
    out = []
    for k in range(max(order - 1, 0)):
        out += [("P", k, 2, 2 + k), ("J", k, 0, 2 + k), ("C", k, 4, 2 + k)]
    return out


def _multisets(pieces, budget: int, start: int = 0):
    yield []
    for i in range(start, len(pieces)):
        p = pieces[i]
        if p[3] <= budget:
            for rest in _multisets(pieces, budget - p[3], i):
                yield [p] + rest


def ansatz(field_name: str, field_rank: int, order: int, free: Sequence[str],
           mode: str, weight: Coefficient | None = None) -> list[Expr]:
    """Independent symmetric trace-free monomials of the given order and rank.

    Each contains one jet of ``field_name`` and, in curved mode, curvature jets.
    """
    check_mode(mode)
    free = list(free)
    found: list[Expr] = []
    pieces = _curvature_pieces(order) if mode == CURVED else []
    for curv in _multisets(pieces, order):
        m = order - sum(p[3] for p in curv)
        if m < 0:
            continue
        shapes = [(field_name, m, m + field_rank)] + [(p[0], p[1], p[1] + p[2]) for p in curv]
        slots = [(i, s) for i, (_, _, size) in enumerate(shapes) for s in range(size)]
        if (len(slots) - len(free)) % 2 or len(slots) < len(free):
            continue
        for chosen in combinations(range(len(slots)), len(free)):
            rest = [s for j, s in enumerate(slots) if j not in chosen]
            for pairs, left in pairings(rest, len(rest) // 2):
                if left:
                    continue
                labels: dict[tuple[int, int], str] = {}
                for lab, j in zip(free, chosen):
                    labels[slots[j]] = lab
                for t, (a, b) in enumerate(pairs):
                    labels[a] = labels[b] = f"_z{t}"
                raw = [(name, k, tuple(labels[(i, s)] for s in range(size)))
                       for i, (name, k, size) in enumerate(shapes)]
                e = Expr.from_raw([(ONE, raw)])
                if e.is_zero():
                    continue
                e = trace_free_project(e, free)
                if e.is_zero():
                    continue
                if weight is not None and conformal_weight_of(e) != weight:
                    continue
                found.append(e)
    return _independent(found)


def _independent(exprs: list[Expr]) -> list[Expr]:
    basis: list[Expr] = []
    for e in exprs:
        trial = basis + [e]
        cols = sorted({m for x in trial for _, m in x}, key=repr)
        rows = [[x.coefficient(m) for m in cols] for x in trial]
        if len(_rref(rows, len(cols))) == len(trial):
            basis.append(e)
    return basis


# ------------------------------------------------------------------ linear solving

def _solve(equations: list[dict[int, Expr]], nunknowns: int,
           normalization: tuple[int, Coefficient]) -> list[Coefficient]:
    """Solve sum_u x_u E_u = 0 for every equation, with x_norm fixed."""
    rows = []
    for eq in equations:
        monos = sorted({m for e in eq.values() for _, m in e}, key=repr)
        for m in monos:
            row = [FIELD(0)] * (nunknowns + 1)
            for u, e in eq.items():
                row[u] += e.coefficient(m)
            if any(row):
                rows.append(row)
    norm_row = [FIELD(0)] * (nunknowns + 1)
    norm_row[normalization[0]] = ONE
    norm_row[-1] = normalization[1]
    rows.append(norm_row)
    piv = _rref(rows, nunknowns + 1)
    if nunknowns in piv:
        raise DegenerateWeight("invariance conditions are inconsistent")
    if len(piv) != nunknowns:
        raise DegenerateWeight(f"solution space has dimension {nunknowns - len(piv) + 1}")
    out = [FIELD(0)] * nunknowns
    for col, row in piv.items():
        out[col] = row[-1]
    return out


# ------------------------------------------------------------------ splittings

@dataclass
class Splitting:
    """Components of an invariant splitting; ``components[i]`` has free labels c1..ci."""

    side: str
    kprime: int
    mode: str
    components: list[Expr]

    def top_coefficient(self) -> Coefficient:
        """fbar^0 / f for the density side, stilde^k' / sigma for the symbol side."""
        if self.side == "f":
            i, target = 0, Expr.field("f")
        else:
            i, target = self.kprime, Expr.field("sigma", free_labels("c", self.kprime))
        (mono,) = target.terms
        return self.components[i].coefficient(mono)

    def to_json(self) -> dict[str, Any]:
        return {"side": self.side, "kprime": self.kprime, "mode": self.mode,
                "components": [expr_to_json(c) for c in self.components]}


def _residuals(basis: list[Expr], mode: str) -> list[Expr]:
    return [linearized_invariance_residual(b, mode) for b in basis]


_split_cache: dict = {}


def build_splitting_f(kprime: int, mode: str = FLAT, w=None) -> Splitting:
    """Invariant splitting of f in E[w]; the top component is nabla_(c1..ck)0 f + curvature."""
    check_mode(mode)
    if kprime < 1:
        raise ValueError("splittings need k' >= 1")
    key = ("f", kprime, mode)
    if key not in _split_cache:
        bases = [ansatz("f", 0, i, free_labels("c", i), mode, W) for i in range(kprime + 1)]
        offsets = [sum(len(b) for b in bases[:i]) for i in range(kprime + 1)]
        total = offsets[-1] + len(bases[-1])
        res = [_residuals(b, mode) for b in bases]
        equations = []
        for i in range(kprime + 1):
            eq: dict[int, Expr] = {}
            labs = free_labels("c", i)
            for u, r in enumerate(res[i]):
                eq[offsets[i] + u] = r
            if i:
                for u, b in enumerate(bases[i - 1]):
                    moved = b.relabel(dict(zip(free_labels("c", i - 1), labs[1:])))
                    rhs = trace_free_project(Expr.field(UPS, (), (labs[0],)) * moved, labs)
                    eq[offsets[i - 1] + u] = eq.get(offsets[i - 1] + u, Expr()) - rhs.scale(kprime - i + 1)
            equations.append(eq)
        top = Expr.field("f", (), free_labels("c", kprime))
        top_mono = next(iter(trace_free_project(top, free_labels("c", kprime)).terms))
        norm_u = next(offsets[kprime] + u for u, b in enumerate(bases[kprime])
                      if b.coefficient(top_mono))
        scale = bases[kprime][norm_u - offsets[kprime]].coefficient(top_mono)
        x = _solve(equations, total, (norm_u, 1 / scale))
        comps = []
        for i in range(kprime + 1):
            acc = Expr()
            for u, b in enumerate(bases[i]):
                acc = acc + b.scale(x[offsets[i] + u])
            comps.append(acc)
        _split_cache[key] = Splitting("f", kprime, mode, comps)
    sp = _split_cache[key]
    if w is not None:
        sp = Splitting("f", kprime, mode, [_subst_expr(c, {"w": w}) for c in sp.components])
    return sp


def build_splitting_sigma(kprime: int, mode: str = FLAT, delta=None) -> Splitting:
    """Invariant splitting of sigma' of weight delta'; the bottom is the full divergence."""
    check_mode(mode)
    if kprime < 1:
        raise ValueError("splittings need k' >= 1")
    key = ("sigma", kprime, mode)
    if key not in _split_cache:
        bases = [ansatz("sigma", kprime, kprime - j, free_labels("c", j), mode, D + 2 * j)
                 for j in range(kprime + 1)]
        offsets = [sum(len(b) for b in bases[:j]) for j in range(kprime + 1)]
        total = offsets[-1] + len(bases[-1])
        res = [_residuals(b, mode) for b in bases]
        equations = []
        for j in range(kprime + 1):
            eq: dict[int, Expr] = {}
            labs = free_labels("c", j)
            for u, r in enumerate(res[j]):
                eq[offsets[j] + u] = r
            if j < kprime:
                nxt = free_labels("c", j + 1)
                for u, b in enumerate(bases[j + 1]):
                    moved = b.relabel({nxt[0]: "_p", **dict(zip(nxt[1:], labs))})
                    rhs = Expr.field(UPS, (), ("_p",)) * moved
                    eq[offsets[j + 1] + u] = eq.get(offsets[j + 1] + u, Expr()) - rhs.scale(j + 1)
            equations.append(eq)
        div_labels = free_labels("_v", kprime)
        bottom = Expr.field("sigma", div_labels, div_labels)
        bottom_mono = next(iter(bottom.terms))
        norm_u = next(u for u, b in enumerate(bases[0]) if b.coefficient(bottom_mono))
        scale = bases[0][norm_u].coefficient(bottom_mono)
        x = _solve(equations, total, (norm_u, 1 / scale))
        comps = []
        for j in range(kprime + 1):
            acc = Expr()
            for u, b in enumerate(bases[j]):
                acc = acc + b.scale(x[offsets[j] + u])
            comps.append(acc)
        _split_cache[key] = Splitting("sigma", kprime, mode, comps)
    sp = _split_cache[key]
    if delta is not None:
        sp = Splitting("sigma", kprime, mode, [_subst_expr(c, {"d": delta}) for c in sp.components])
    return sp


def p_tilde(kprime: int) -> Coefficient:
    out = ONE
    for i in range(1, kprime + 1):
        out *= D + N + kprime + i - 2
    return out


def leading_step_factor(kprime: int, step: int) -> Coefficient:
    """Scalar gained by the sandwich D^B Q_{k',step} D_B."""
    return -(D - step) * (N + 2 * D + 2 * (kprime - step) - 2)


# ------------------------------------------------------------------ operators

PROVENANCE = ("generic", "critical-Sigma'Sigma''", "critical-Sigma0", "flat-natural")


@dataclass
class QuantizationOp:
    """A bilinear operator (sigma', f) -> Q(f) with bookkeeping."""

    expr: Expr
    kprime: int
    ell: int
    delta: Coefficient
    w: Coefficient
    mode: str
    provenance: str = "generic"
    normalization: Coefficient = field(default_factory=lambda: ONE)
    bindings: dict[str, Coefficient] = field(default_factory=dict)

    def target_weight(self) -> Coefficient:
        return self.w + self.delta - 2 * self.ell

    def to_json(self) -> dict[str, Any]:
        return {
            "kprime": self.kprime, "ell": self.ell, "delta": render_coeff(self.delta),
            "w": render_coeff(self.w), "mode": self.mode, "provenance": self.provenance,
            "normalization": render_coeff(self.normalization), "expr": expr_to_json(self.expr),
            "bindings": {k: render_coeff(coeff(v)) for k, v in sorted(self.bindings.items())},
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "QuantizationOp":
        return cls(expr_from_json(data["expr"]), int(data["kprime"]), int(data["ell"]),
                   parse_coeff(data["delta"]), parse_coeff(data["w"]), data["mode"],
                   data["provenance"], parse_coeff(data["normalization"]),
                   {k: parse_coeff(v) for k, v in data.get("bindings", {}).items()})

    def residual(self) -> Expr:
        """Linearized invariance residual; zero exactly when the operator is invariant."""
        return linearized_invariance_residual(self.expr, self.mode, bindings=self.bindings)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "QuantizationOp":
        return cls.from_json(json.loads(text))

    def __eq__(self, other) -> bool:
        return isinstance(other, QuantizationOp) and self.to_json() == other.to_json()


def _subst_expr(e: Expr, bindings) -> Expr:
    if not bindings:
        return e
    return e.map_coefficients(lambda c: coeff_substitute(c, bindings))


def _pair(a: Expr, b: Expr, rank: int) -> Expr:
    labs = free_labels("c", rank)
    ren = {l: f"_q{i}" for i, l in enumerate(labs)}
    return a.relabel(ren) * b.relabel(ren)


_q_cache: dict = {}


def _generic_Q_k0(kprime: int, mode: str) -> Expr:
    key = ("Q0", kprime, mode)
    if key not in _q_cache:
        if kprime == 0:
            _q_cache[key] = Expr.field("sigma") * Expr.field("f")
        else:
            fs = build_splitting_f(kprime, mode)
            ss = build_splitting_sigma(kprime, mode)
            acc = Expr()
            for i in range(kprime + 1):
                c = Fraction((-1) ** (kprime - i), comb(kprime, i))
                acc = acc + _pair(ss.components[i], fs.components[i], i).scale(c)
            _q_cache[key] = acc
    return _q_cache[key]


def sandwich(e: Expr, mode: str) -> Expr:
    """D^B e(sigma, D_B f): the inner operator runs at weight w-1 on a tractor-valued input."""
    inner_f = apply_tractor_D(Expr.field("f"), "_B", mode=mode)
    inner = substitute_jets(e, "f", inner_f, mode,
                            reshape=lambda c: coeff_substitute(c, {"w": W - 1}))
    return apply_tractor_D(inner, "_B", mode=mode)


def principal_block(kprime: int, mode: str = FLAT) -> Expr:
    """Top channel of Q_{k',0}: the pairing of the two top splitting components.

    Equals p~(delta') sigma'^(a..) times the bottom slot of the f-side
    splitting, i.e. nabla^(k') f plus its curvature corrections.
    """
    check_mode(mode)
    if kprime == 0:
        return Expr.field("sigma") * Expr.field("f")
    return _pair(build_splitting_sigma(kprime, mode).components[kprime],
                 build_splitting_f(kprime, mode).components[kprime], kprime)


def _generic_Q(kprime: int, ell: int, mode: str) -> Expr:
    key = ("Q", kprime, ell, mode)
    if key not in _q_cache:
        if ell == 0:
            _q_cache[key] = _generic_Q_k0(kprime, mode)
        else:
            _q_cache[key] = sandwich(_generic_Q(kprime, ell - 1, mode), mode)
    return _q_cache[key]


def _delta_value(delta) -> Coefficient:
    return D if delta is None else coeff(delta)


def check_not_critical(kprime: int, ell: int, delta, n=None) -> None:
    """Raise CriticalWeightError when delta' lies in Sigma_{k',l}."""
    if delta is None:
        return
    hit = critical_sigma(kprime, ell).classify(delta, n)
    if hit is not None:
        family, form = hit
        raise CriticalWeightError(kprime, ell, delta, family, f"delta' - ({form})")


def build_Q_k0(kprime: int, delta=None, w=None, mode: str = FLAT, n=None) -> QuantizationOp:
    return build_Q(kprime, 0, delta, w, mode, n)


def build_Q(kprime: int, ell: int, delta=None, w=None, mode: str = FLAT, n=None) -> QuantizationOp:
    """Generic quantization with leading term lambda * sigma' nabla^(k') Delta^l.

    ``delta``, ``w`` and ``n`` may be left symbolic (None) or fixed.
    """
    check_mode(mode)
    if kprime < 0 or ell < 0:
        raise ValueError("k' and l must be non-negative")
    check_not_critical(kprime, ell, delta, n)
    e = _generic_Q(kprime, ell, mode)
    lead = p_tilde(kprime)
    for step in range(ell):
        lead = lead * leading_step_factor(kprime, step)
    bindings = {}
    if delta is not None:
        bindings["d"] = delta
    if w is not None:
        bindings["w"] = w
    if n is not None:
        bindings["n"] = n
    e = _subst_expr(e, bindings)
    lead = coeff_substitute(lead, bindings)
    return QuantizationOp(e, kprime, ell, _delta_value(delta),
                          W if w is None else coeff(w), mode, "generic", lead,
                          {k: coeff(v) for k, v in bindings.items()})


# ------------------------------------------------------------------ leading symbol

def leading_monomial(kprime: int, ell: int) -> Expr:
    labs = free_labels("_s", kprime)
    deriv = list(labs)
    for j in range(ell):
        deriv += [f"_t{j}", f"_t{j}"]
    return Expr.field("sigma", labs) * Expr.field("f", (), deriv)


def leading_symbol(q: QuantizationOp) -> tuple[Expr, Coefficient]:
    """Principal monomial sigma' nabla^(k') Delta^l f and its coefficient in q."""
    mono_expr = leading_monomial(q.kprime, q.ell)
    (mono, _), = mono_expr.terms.items()
    c = q.expr.coefficient(mono)
    return mono_expr, c


def sigma_free_part(e: Expr) -> Expr:
    """Terms in which sigma' carries no derivative."""
    return e.filter(lambda m: all(f[0] != "sigma" or f[1] == 0 for f in m))


# ------------------------------------------------------------------ the nine-term ledger

NINE = ("YY", "YZ", "YX", "ZY", "ZZ", "ZX", "XY", "XZ", "XX")


def _model_operator(kprime: int, ell: int, F: Expr) -> Expr:
    """sigma'^{a..} nabla_a.. Delta^l F on the flat model, F possibly tractor-valued."""
    e = F
    for _ in range(ell):
        e = laplacian(e, FLAT)
    labs = free_labels("_m", kprime)
    for a in labs:
        e = nabla(e, a, FLAT)
    return Expr.field("sigma", labs) * e


def nine_term_ledger(kprime: int, ell: int) -> list[tuple[str, Coefficient]]:
    """The nine contributions to the leading coefficient of D^B Q D_B, computed on the flat model.

    Q is represented by its leading part sigma' nabla^(k') Delta^l, acting on
    tractor-valued inputs; w' = w + delta' - 2l - 1 is the weight D^B sees.
    """
    w = W
    wp = W + D - 2 * ell - 1
    f = Expr.field("f")
    inner = {
        "Y": (proj("Y", "_B") * f).scale(w * (N + 2 * w - 2)),
        "Z": (proj("Z", "_B", "_b") * Expr.field("f", (), ("_b",))).scale(N + 2 * w - 2),
        "X": -(proj("X", "_B") * laplacian(f, FLAT)),
    }
    target = leading_monomial(kprime, ell + 1)
    (mono, _), = target.terms.items()
    out = []
    for outer in "YZX":
        for inn in "YZX":
            M = _model_operator(kprime, ell, inner[inn])
            if outer == "Y":
                val = (proj("Y", "_B") * M).scale(wp * (N + 2 * wp - 2))
            elif outer == "Z":
                val = (proj("Z", "_B", "_o") * nabla(M, "_o", FLAT)).scale(N + 2 * wp - 2)
            else:
                val = -(proj("X", "_B") * laplacian(M, FLAT))
            out.append((outer + inn, val.coefficient(mono)))
    return out


def ledger_expected(kprime: int, ell: int) -> dict[str, Coefficient]:
    """Closed forms of the nine entries (w' = w + delta' - 2l - 1)."""
    w = W
    wp = W + D - 2 * ell - 1
    zero = FIELD(0)
    return {
        "YY": zero, "YZ": zero, "ZY": zero,
        "YX": -wp * (N + 2 * wp - 2),
        "ZZ": (N + 2 * wp - 2) * (N + 2 * w - 2),
        "ZX": -(N + 2 * wp - 2) * (2 * ell + kprime + N),
        "XY": -w * (N + 2 * w - 2),
        "XZ": (N + 2 * w - 2) * (2 * ell + kprime + 2),
        "XX": -(ell + 1) * (N + 2 * ell + 2 * kprime),
    }


# ------------------------------------------------------------------ flat natural operators

def _weight_check(w, expected: Coefficient, what: str) -> None:
    if w is not None and coeff(w) != expected:
        raise WeightMismatch(f"{what} acts on E[{render_coeff(expected)}], not E[{render_coeff(coeff(w))}]")


def flat_L(p: int, w=None) -> Expr:
    """Delta^p f on E[-n/2+p] (flat model)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    _weight_check(w, -N / 2 + p, f"L_{p}")
    deriv = []
    for j in range(p):
        deriv += [f"_l{j}", f"_l{j}"]
    return Expr.field("f", (), deriv)


def flat_S(p: int, labels: Sequence[str] | None = None, w=None) -> Expr:
    """nabla_(a1..ap)0 f on E[p-1] (flat model)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    _weight_check(w, FIELD(p - 1), f"S_{p}")
    labels = list(labels or free_labels("a", p))
    return trace_free_project(Expr.field("f", (), labels), labels)


def yamabe(f: Expr | None = None) -> Expr:
    """Delta + (1 - n/2) J on E[1 - n/2]; the curved L_1."""
    f = Expr.field("f") if f is None else f
    return laplacian(f, CURVED) + (Expr.field("J") * f).scale(1 - N / 2)


# ------------------------------------------------------------------ critical weights

def build_critical_Q(kprime: int, ell: int, delta, mode: str = FLAT, n=None) -> QuantizationOp:
    """Quantization at a critical delta', normalized to leading coefficient 1.

    delta' in Sigma' or Sigma'': Q_{k',0} composed with L_l on E[-n/2+l].
    delta' in Sigma_{k',0}: l-fold tractor-D sandwich of sigma' S_{k'} on E[k'+l-1].
    The curved branch is available for l <= 1 and k' <= 1 (Sigma_0) or k' <= 3 (Sigma', Sigma'').
    """
    check_mode(mode)
    delta = coeff(delta)
    hit = critical_sigma(kprime, ell).classify(delta, n)
    if hit is None:
        raise NotCritical(f"delta'={render_coeff(delta)} is not in Sigma_{{{kprime},{ell}}}; use build_Q")
    family, _ = hit
    if family == "Sigma0":
        if mode == CURVED and (ell > 1 or kprime > 1):
            raise NotImplementedError("curved Sigma0 construction is limited to k' = l = 1")
        labs = free_labels("_s", kprime)
        base = Expr.field("sigma", labs) * Expr.field("f", (), labs)
        e = base
        for _ in range(ell):
            e = sandwich(e, mode)
        w = FIELD(kprime + ell - 1)
        provenance = "critical-Sigma0"
    else:
        if mode == CURVED and ell > 1:
            raise NotImplementedError("curved GJMS operators beyond the Yamabe operator are not built")
        q0 = _generic_Q_k0(kprime, mode)
        if mode == CURVED:
            inner = yamabe()
        else:
            inner = flat_L(ell)
        e = substitute_jets(q0, "f", inner, mode,
                            reshape=lambda c: coeff_substitute(c, {"w": W - 2 * ell}))
        w = -N / 2 + ell
        provenance = "critical-Sigma'Sigma''"
    bindings = {"d": delta, "w": w}
    if n is not None:
        bindings["n"] = n
    e = _subst_expr(e, bindings)
    q = QuantizationOp(e, kprime, ell, delta, coeff_substitute(w, {"n": n} if n is not None else {}),
                       mode, provenance, ONE, {k: coeff(v) for k, v in bindings.items()})
    _, lead = leading_symbol(q)
    if not lead:
        raise ArithmeticError("critical construction lost its leading term")
    q.expr = e.scale(1 / lead)
    return q



# ------------------------------------------------------------------ Casimir cross-check

def _adjoint_product(kinds: Sequence[str], tangent: Sequence[str]) -> Expr:
    """Symmetrized product over k adjoint pairs of WW, YY^a or XX^a factors."""
    k = len(kinds)
    pairs = [(f"_T{m}a", f"_T{m}b") for m in range(k)]
    it = iter(tangent)
    base = Expr.scalar(1)
    for (A1, A2), kind in zip(pairs, kinds):
        if kind == "W":
            base = base * adj_W(A1, A2)
        elif kind == "Y":
            base = base * adj_Y(A1, A2, next(it))
        else:
            base = base * adj_X(A1, A2, next(it))
    acc = Expr()
    perms = list(permutations(range(k)))
    for perm in perms:
        ren = {}
        for m, p in enumerate(perm):
            ren[pairs[m][0]], ren[pairs[m][1]] = pairs[p]
        acc = acc + base.relabel(ren)
    return acc.scale(Fraction(1, len(perms)))


def casimir_graded_eigenvalues(kprime: int, weight=None) -> list[Coefficient]:
    """Eigenvalue of the Casimir on the slot YY^i WW^(k'-i) tau, i = 0..k'.

    Read off on the flat model from the undifferentiated tau coefficient after
    pairing with the dual slot XX^i WW^(k'-i).  ``weight`` is the weight of the
    whole section (delta' by default).
    """
    w = D if weight is None else coeff(weight)
    out = []
    for i in range(kprime + 1):
        labs = free_labels("_u", i)
        duals = free_labels("_v", i)
        kinds = ["Y"] * i + ["W"] * (kprime - i)
        section = _adjoint_product(kinds, labs) * Expr.field("tau", labs)
        dual = _adjoint_product(["X"] * i + ["W"] * (kprime - i), duals)
        cas = curved_casimir_apply(section, FLAT, w)
        target = Expr.field("tau", duals)
        (mono, _), = target.terms.items()
        num = (cas * dual).coefficient(mono)
        den = (section * dual).coefficient(mono)
        if not den:
            raise ArithmeticError("dual slot does not detect the section")
        out.append(num / den)
    return out


def casimir_ptilde(kprime: int) -> Coefficient:
    """prod_{i<k'} (c_k' - c_i): the Casimir form of the eigen-product."""
    cs = casimir_graded_eigenvalues(kprime)
    out = ONE
    for c in cs[:-1]:
        out *= cs[-1] - c
    return out


__all__ = [
    "Splitting", "QuantizationOp", "DegenerateWeight", "CriticalWeightError", "NotCritical",
    "ansatz", "build_splitting_f", "build_splitting_sigma", "build_Q_k0", "build_Q",
    "leading_symbol", "leading_monomial", "nine_term_ledger", "ledger_expected", "build_critical_Q",
    "flat_L", "flat_S", "yamabe", "p_tilde", "leading_step_factor", "sandwich", "sigma_free_part",
    "casimir_graded_eigenvalues", "casimir_ptilde", "principal_block",
]
