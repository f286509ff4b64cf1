"""Abstract-index tensor expressions and their normal form.

A factor is a tuple ``(name, k, idx)``: the symmetrized k-th covariant
derivative of the field ``name``, with ``idx[:k]`` the derivative slots and
``idx[k:]`` the base slots.  A term is a coefficient times a tuple of factors;
a label occurring twice in a term is contracted.

Canonical terms name their dummies ``~0, ~1, ...``.  Temporary labels created
by operations start with ``_``; user labels start with a letter.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import count, permutations, product
from math import factorial
from typing import Iterable, Iterator, Mapping, Sequence

from sympy.polys.matrices import DomainMatrix

from .coeff_ring import _DOMAIN, FIELD, N, ONE, Coefficient, coeff, render_coeff
from .symbols import (
    SYM, SYMTF, TANGENT, FieldSymbol, base_groups, lookup, register, symmetry_elements,
)

Factor = tuple  # (name, k, idx)
Monomial = tuple  # tuple of factors


class MalformedExpression(ValueError):
    pass


class WeightMismatch(ValueError):
    pass


_fresh = count()


def fresh(prefix: str = "_") -> str:
    """A new temporary label."""
    return f"{prefix}{next(_fresh)}"


def is_dummy(label: str) -> bool:
    return label.startswith("~")


# ------------------------------------------------------------------ factors

def make_factor(name: str, idx: Sequence[str] = (), deriv: Sequence[str] = ()) -> Factor:
    return (name, len(deriv), tuple(deriv) + tuple(idx))


def factor_rank(f: Factor) -> int:
    return len(f[2]) - f[1]


def slot_kinds(f: Factor) -> tuple[str, ...]:
    name, k, idx = f
    return (TANGENT,) * k + lookup(name).base_kinds(len(idx) - k)


def factor_weight(f: Factor) -> Coefficient:
    return lookup(f[0]).lowered_weight(factor_rank(f))


def _label_slots(factors: Sequence[Factor]) -> dict[str, list[tuple[int, int]]]:
    occ: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for i, (_, _, idx) in enumerate(factors):
        for s, lab in enumerate(idx):
            occ[lab].append((i, s))
    return occ


def free_labels(factors: Sequence[Factor]) -> frozenset[str]:
    return frozenset(l for l, o in _label_slots(factors).items() if len(o) == 1)


def _check(factors: Sequence[Factor]) -> None:
    occ = _label_slots(factors)
    for lab, slots in occ.items():
        if len(slots) > 2:
            raise MalformedExpression(f"label {lab} occurs {len(slots)} times")
        if len(slots) == 2:
            (i, s), (j, t) = slots
            if slot_kinds(factors[i])[s] != slot_kinds(factors[j])[t]:
                raise MalformedExpression(f"label {lab} pairs a tangent and a tractor slot")


# ------------------------------------------------------------------ rewrites

def _replace_label(factors: list[Factor], old: str, new: str) -> None:
    for i, (name, k, idx) in enumerate(factors):
        if old in idx:
            factors[i] = (name, k, tuple(new if l == old else l for l in idx))


def _weyl_to_front(pos: int) -> tuple[tuple[int, ...], int]:
    """Slot order bringing Weyl slot ``pos`` to the front, and its sign."""
    return {
        0: ((0, 1, 2, 3), 1),
        1: ((1, 0, 2, 3), -1),
        2: ((2, 3, 0, 1), 1),
        3: ((3, 2, 0, 1), -1),
    }[pos]


def _rewrite(c: Coefficient, factors: list[Factor]) -> list[tuple[Coefficient, list[Factor]]]:
    """Apply the metric, tractor-table and curvature rules until none fires."""
    out = []
    stack = [(c, list(factors))]
    while stack:
        c, fs = stack.pop()
        res = _rewrite_once(c, fs)
        if res is None:
            out.append((c, fs))
        else:
            stack.extend(res)
    return out


def _rewrite_once(c, fs):
    occ = _label_slots(fs)
    for i, (name, k, idx) in enumerate(fs):
        if name in ("g", "h"):
            a, b = idx
            if a == b:
                rest = fs[:i] + fs[i + 1:]
                return [(c * (N if name == "g" else N + 2), rest)]
            for x, y in ((a, b), (b, a)):
                if len(occ[x]) == 2:
                    rest = fs[:i] + fs[i + 1:]
                    _replace_label(rest, x, y)
                    return [(c, rest)]
        elif name in ("X", "Y", "Z"):
            lab = idx[0]
            if len(occ[lab]) == 2:
                j = next(j for j, _ in occ[lab] if j != i) if occ[lab][0][0] != occ[lab][1][0] else None
                if j is None:
                    raise MalformedExpression("projector contracted with itself")
                other = fs[j][0]
                if other not in ("X", "Y", "Z"):
                    continue
                pair = {name, other}
                rest = [f for t, f in enumerate(fs) if t not in (i, j)]
                if pair == {"X", "Y"}:
                    return [(c, rest)]
                if name == "Z" and other == "Z":
                    rest.append(("g", 0, (idx[1], fs[j][2][1])))
                    return [(c, rest)]
                return []
        elif name == "P":
            base = idx[k:]
            if base[0] == base[1]:
                rest = fs[:i] + fs[i + 1:] + [("J", k, idx[:k])]
                return [(c, rest)]
            if k == 1 and idx[0] in base:
                other = base[1] if base[0] == idx[0] else base[0]
                rest = fs[:i] + fs[i + 1:] + [("J", 1, (other,))]
                return [(c, rest)]
        elif name == "C":
            base = idx[k:]
            if len(set(base)) < 4:
                return []
            if k == 1 and idx[0] in base:
                order, sign = _weyl_to_front(base.index(idx[0]))
                _, a, b, cc = (base[t] for t in order)
                rest = fs[:i] + fs[i + 1:]
                # div C = (n-3) A_abc with A_abc = nabla_b P_ca - nabla_c P_ba
                coef = c * sign * (N - 3)
                return [(coef, rest + [("P", 1, (b, cc, a))]),
                        (-coef, rest + [("P", 1, (cc, b, a))])]
        elif name == "A":
            if k:
                raise MalformedExpression("derivatives of A must be expanded first")
            a, b, cc = idx
            rest = fs[:i] + fs[i + 1:]
            return [(c, rest + [("P", 1, (b, cc, a))]), (-c, rest + [("P", 1, (cc, b, a))])]
        else:
            sym = lookup(name)
            if sym.symmetry == SYMTF:
                base = idx[k:]
                if len(set(base)) < len(base):
                    return []
    return None


# ------------------------------------------------------------------ canonical form

_layout_cache: dict = {}


def _layout(name: str, k: int, rank: int):
    key = (name, k, rank)
    hit = _layout_cache.get(key)
    if hit is not None:
        return hit
    sym = lookup(name)
    groups = []
    if k:
        groups.append(tuple(range(k)))
    base = [tuple(k + p for p in g) for g in base_groups(sym, rank)]
    offset = len(groups)
    groups.extend(base)
    elems = []
    for perm, sign in symmetry_elements(sym, rank):
        elems.append((tuple(range(offset)) + tuple(offset + p for p in perm), sign))
    slot_group = {}
    for g, slots in enumerate(groups):
        for s in slots:
            slot_group[s] = g
    hit = (groups, elems, slot_group)
    _layout_cache[key] = hit
    return hit


def _canonical(factors: Sequence[Factor]) -> tuple[int, Monomial]:
    """Canonical monomial and the sign relating it to the input (0 if it vanishes)."""
    nf = len(factors)
    if nf == 0:
        return 1, ()
    layouts = [_layout(f[0], f[1], factor_rank(f)) for f in factors]
    sigs = [(f[0], f[1], factor_rank(f)) for f in factors]
    occ = _label_slots(factors)
    # labeling-independent invariants to split identical factors
    inv = []
    for i, f in enumerate(factors):
        items = []
        groups, _, slot_group = layouts[i]
        for s, lab in enumerate(f[2]):
            o = occ[lab]
            deriv = s < f[1]
            if len(o) == 1:
                items.append((deriv, 0, lab, ()))
            else:
                (j, t), = [x for x in o if x != (i, s)]
                items.append((deriv, 1, "", sigs[j] if j != i else ("",)))
        inv.append(tuple(sorted(items)))
    order0 = sorted(range(nf), key=lambda i: (sigs[i], inv[i]))
    blocks: list[list[int]] = []
    for i in order0:
        if blocks and (sigs[blocks[-1][0]], inv[blocks[-1][0]]) == (sigs[i], inv[i]):
            blocks[-1].append(i)
        else:
            blocks.append([i])
    # edges as (factor, group) endpoints
    edges = []
    for lab, o in occ.items():
        ends = [(i, layouts[i][2][s]) for i, s in o]
        edges.append((lab, ends))
    best = None
    best_signs = set()
    best_choice = None
    block_perms = [list(permutations(b)) for b in blocks]
    elem_lists = [layouts[i][1] for i in range(nf)]
    for bp in product(*block_perms):
        pos = [0] * nf
        p = 0
        for blk in bp:
            for i in blk:
                pos[i] = p
                p += 1
        for elems in product(*elem_lists):
            sign = 1
            for e in elems:
                sign *= e[1]
            enc = []
            for lab, ends in edges:
                mapped = [(pos[i], elems[i][0][g]) for i, g in ends]
                if len(mapped) == 2:
                    a, b = sorted(mapped)
                    enc.append((a, b, ""))
                else:
                    enc.append((mapped[0], (nf, 0), lab))
            enc.sort()
            enc_t = tuple(enc)
            if best is None or enc_t < best:
                best, best_signs, best_choice = enc_t, {sign}, (pos, elems, sign)
            elif enc_t == best:
                best_signs.add(sign)
    if len(best_signs) > 1:
        return 0, ()
    pos, elems, sign = best_choice
    # assign labels
    node_labels: dict[tuple[int, int], list[str]] = defaultdict(list)
    d = 0
    for a, b, lab in best:
        if lab:
            node_labels[a].append(lab)
        else:
            name = f"~{d}"
            d += 1
            node_labels[a].append(name)
            node_labels[b].append(name)
    inv_pos = [0] * nf
    for i in range(nf):
        inv_pos[pos[i]] = i
    out = []
    for p in range(nf):
        i = inv_pos[p]
        name, k, idx = factors[i]
        groups = layouts[i][0]
        new_idx = [None] * len(idx)
        for g, slots in enumerate(groups):
            labs = node_labels[(p, g)]
            for s, lab in zip(slots, labs):
                new_idx[s] = lab
        out.append((name, k, tuple(new_idx)))
    return sign, tuple(out)


_canon_cache: dict = {}


def canonical_terms(c: Coefficient, factors: Sequence[Factor]) -> list[tuple[Coefficient, Monomial]]:
    """Rewrite and canonicalize one raw term."""
    key = tuple(factors)
    hit = _canon_cache.get(key)
    if hit is None:
        _check(factors)
        hit = []
        for c1, fs in _rewrite(ONE, list(factors)):
            if not c1:
                continue
            sign, mono = _canonical(fs)
            if not sign:
                continue
            if any(f[0] == "C" for f in mono):
                for c2, m2 in bianchi_normal(mono):
                    hit.append((c1 * sign * c2, m2))
            else:
                hit.append((c1 * sign, mono))
        if len(_canon_cache) > 400_000:
            _canon_cache.clear()
        _canon_cache[key] = hit
    return [(c * c1, m) for c1, m in hit]


_bianchi_cache: dict[Monomial, list[tuple[Coefficient, Monomial]]] = {}


def _bianchi_moves(mono: Monomial):
    """Relations C_p[qrs] = 0 on each Weyl factor, as lists of (sign, monomial)."""
    out = []
    for i, (name, k, idx) in enumerate(mono):
        if name != "C":
            continue
        d, (p, q, r, s_) = idx[:k], idx[k:]
        rel = []
        for base in ((p, q, r, s_), (p, r, s_, q), (p, s_, q, r)):
            fs = list(mono)
            fs[i] = (name, k, d + base)
            for c1, f2 in _rewrite(ONE, fs):
                sign, m2 = _canonical(f2)
                if sign:
                    rel.append((c1 * sign, m2))
        out.append(rel)
    return out


def bianchi_normal(mono: Monomial) -> list[tuple[Coefficient, Monomial]]:
    """Normal form modulo the algebraic Bianchi identity of the Weyl tensor.

    The orbit of monomials linked by Bianchi relations is row-reduced with the
    largest monomials as pivots; pivots are replaced by the remaining basis.
    """
    hit = _bianchi_cache.get(mono)
    if hit is not None:
        return hit
    orbit = {mono}
    queue = [mono]
    relations = []
    while queue:
        m = queue.pop()
        for rel in _bianchi_moves(m):
            relations.append(rel)
            for _, m2 in rel:
                if m2 not in orbit:
                    orbit.add(m2)
                    queue.append(m2)
    cols = sorted(orbit, key=repr, reverse=True)
    pos = {m: j for j, m in enumerate(cols)}
    rows = []
    for rel in relations:
        row = [FIELD(0)] * len(cols)
        for c, m in rel:
            row[pos[m]] += c
        if any(row):
            rows.append(row)
    pivots = _rref(rows, len(cols))
    for j, m in enumerate(cols):
        if j in pivots:
            row = pivots[j]
            _bianchi_cache[m] = [(-row[t], cols[t]) for t in range(len(cols))
                                 if t != j and row[t]]
        else:
            _bianchi_cache[m] = [(ONE, m)]
    return _bianchi_cache[mono]


def _rref(rows: list[list[Coefficient]], ncols: int) -> dict[int, list[Coefficient]]:
    """Reduced row echelon form; returns {pivot column: normalized row}."""
    rows = [list(r) for r in rows]
    pivots: dict[int, list[Coefficient]] = {}
    r0 = 0
    for col in range(ncols):
        sel = next((i for i in range(r0, len(rows)) if rows[i][col]), None)
        if sel is None:
            continue
        rows[r0], rows[sel] = rows[sel], rows[r0]
        piv = rows[r0][col]
        rows[r0] = [x / piv for x in rows[r0]]
        for i in range(len(rows)):
            if i != r0 and rows[i][col]:
                fac = rows[i][col]
                rows[i] = [x - fac * y for x, y in zip(rows[i], rows[r0])]
        r0 += 1
    for r in rows[:r0]:
        col = next(j for j, x in enumerate(r) if x)
        pivots[col] = r
    return pivots


def _shift_dummies(mono: Monomial, offset: int) -> Monomial:
    if not offset:
        return mono
    def sh(l):
        return f"~{int(l[1:]) + offset}" if l[0] == "~" else l
    return tuple((n, k, tuple(sh(l) for l in idx)) for n, k, idx in mono)


def _max_dummy(mono: Monomial) -> int:
    m = -1
    for _, _, idx in mono:
        for l in idx:
            if l[0] == "~":
                m = max(m, int(l[1:]))
    return m


# ------------------------------------------------------------------ expressions

class Expr:
    """Immutable sum of canonical terms, stored as {monomial: coefficient}."""

    __slots__ = ("terms", "_free")

    def __init__(self, terms: Mapping[Monomial, Coefficient] | None = None, free=None):
        self.terms = dict(terms or {})
        self._free = free

    # construction
    @classmethod
    def from_raw(cls, raw: Iterable[tuple[Coefficient, Sequence[Factor]]]) -> "Expr":
        acc: dict[Monomial, Coefficient] = {}
        for c, fs in raw:
            if not c:
                continue
            for c2, mono in canonical_terms(c, fs):
                v = acc.get(mono)
                v = c2 if v is None else v + c2
                if v:
                    acc[mono] = v
                else:
                    acc.pop(mono, None)
        return cls(acc)

    @classmethod
    def scalar(cls, c) -> "Expr":
        c = coeff(c)
        return cls({(): c}) if c else cls()

    @classmethod
    def field(cls, name: str, idx: Sequence[str] = (), deriv: Sequence[str] = ()) -> "Expr":
        return cls.from_raw([(ONE, [make_factor(name, idx, deriv)])])

    @classmethod
    def product_of(cls, factors: Sequence[Factor], c=1) -> "Expr":
        return cls.from_raw([(coeff(c), list(factors))])

    # views
    def __iter__(self) -> Iterator[tuple[Coefficient, Monomial]]:
        for mono, c in self.terms.items():
            yield c, mono

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def free(self) -> frozenset[str]:
        if self._free is None:
            self._free = free_labels(next(iter(self.terms))) if self.terms else frozenset()
        return self._free

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) or (hasattr(other, "numer") and not isinstance(other, Expr)):
            other = Expr.scalar(other)
        return isinstance(other, Expr) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def coefficient(self, mono: Monomial) -> Coefficient:
        return self.terms.get(mono, FIELD(0))

    # arithmetic
    def __add__(self, other: "Expr") -> "Expr":
        if not isinstance(other, Expr):
            other = Expr.scalar(other)
        acc = dict(self.terms)
        for mono, c in other.terms.items():
            v = acc.get(mono)
            v = c if v is None else v + c
            if v:
                acc[mono] = v
            else:
                acc.pop(mono, None)
        return Expr(acc)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self.terms.items()}, self._free)

    def __sub__(self, other: "Expr") -> "Expr":
        if not isinstance(other, Expr):
            other = Expr.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Expr":
        c = coeff(c)
        if not c:
            return Expr()
        return Expr({m: v * c for m, v in self.terms.items()}, self._free)

    def __mul__(self, other) -> "Expr":
        if not isinstance(other, Expr):
            return self.scale(other)
        raw = []
        for m1, c1 in self.terms.items():
            off = _max_dummy(m1) + 1
            for m2, c2 in other.terms.items():
                raw.append((c1 * c2, m1 + _shift_dummies(m2, off)))
        return Expr.from_raw(raw)

    def __rmul__(self, other) -> "Expr":
        return self.scale(other)

    def map_coefficients(self, fn) -> "Expr":
        acc = {}
        for m, c in self.terms.items():
            v = fn(c)
            if v:
                acc[m] = v
        return Expr(acc, self._free)

    def relabel(self, mapping: Mapping[str, str]) -> "Expr":
        """Rename free labels (a label mapped onto another free label contracts them)."""
        if not mapping:
            return self
        raw = []
        for m, c in self.terms.items():
            raw.append((c, [(n, k, tuple(mapping.get(l, l) for l in idx)) for n, k, idx in m]))
        return Expr.from_raw(raw)

    def filter(self, pred) -> "Expr":
        return Expr({m: c for m, c in self.terms.items() if pred(m)})

    def __repr__(self) -> str:
        from .textio import render_text
        return f"Expr({render_text(self)})"


ZERO_EXPR = Expr()


def raw_terms(e: Expr) -> list[tuple[Coefficient, list[Factor]]]:
    return [(c, list(m)) for c, m in e]


def canonicalize(e: Expr | Iterable[tuple[Coefficient, Sequence[Factor]]]) -> Expr:
    """Normal form; canonical expressions are fixed points."""
    if isinstance(e, Expr):
        return Expr.from_raw(raw_terms(e))
    return Expr.from_raw(e)


# ------------------------------------------------------------------ index operations

def _slot_kind_of(e: Expr, label: str) -> str:
    for _, mono in e:
        for f in mono:
            if label in f[2]:
                return slot_kinds(f)[f[2].index(label)]
    raise MalformedExpression(f"label {label} not present")


def _is_symmetric(e: Expr, slots: Sequence[str]) -> bool:
    for a, b in zip(slots, slots[1:]):
        if e.relabel({a: b, b: a}) != e:
            return False
    return True


def symmetrize(e: Expr, slots: Sequence[str]) -> Expr:
    """Average over all permutations of the given free labels."""
    slots = list(slots)
    if len(slots) < 2 or e.is_zero():
        return e
    kinds = {_slot_kind_of(e, s) for s in slots}
    if len(kinds) > 1:
        raise MalformedExpression("cannot symmetrize slots of mixed kind")
    if _is_symmetric(e, slots):
        return e
    acc = Expr()
    for perm in permutations(slots):
        acc = acc + e.relabel(dict(zip(slots, perm)))
    return acc.scale(Fraction(1, factorial(len(slots))))


def pairings(items: Sequence, npairs: int) -> Iterator[tuple[list[tuple], list]]:
    """All ways to pick ``npairs`` disjoint unordered pairs; yields (pairs, rest)."""
    items = list(items)
    if npairs == 0:
        yield [], items
        return
    if len(items) < 2 * npairs:
        return
    first, rest = items[0], items[1:]
    for pairs, left in pairings(rest, npairs):
        yield pairs, [first] + left
    for j in range(len(rest)):
        partner = rest[j]
        remaining = rest[:j] + rest[j + 1:]
        for pairs, left in pairings(remaining, npairs - 1):
            yield [(first, partner)] + pairs, left


_tf_cache: dict[int, list[Coefficient]] = {}


def trace_free_coefficients(rank: int) -> list[Coefficient]:
    """c_j with T_(a...)0 = sum_j c_j Sym(g^j tr^j T) for symmetric T of this rank.

    Solved from the condition that one trace of the right side vanishes.
    """
    hit = _tf_cache.get(rank)
    if hit is not None:
        return hit
    if rank < 2:
        _tf_cache[rank] = [ONE]
        return _tf_cache[rank]
    register(FieldSymbol("Tsym", None, SYM, FIELD(0), "test"))
    labels = [f"a{i}" for i in range(rank)]
    generic = Expr.field("Tsym", labels)
    m = rank // 2
    traced = [_sym_trace_piece(generic, labels, j).relabel({labels[1]: labels[0]})
              for j in range(m + 1)]
    monos = sorted({mono for t in traced for _, mono in t}, key=repr)
    rows = [[t.coefficient(mono) for t in traced[1:]] + [-traced[0].coefficient(mono)]
            for mono in monos]
    aug = DomainMatrix(rows, (len(rows), m + 1), _DOMAIN)
    rref, pivots = aug.rref()
    if m in pivots or len(pivots) != m:
        raise ArithmeticError(f"trace conditions for rank {rank} have no unique solution")
    table = rref.to_list()
    out = [ONE] + [table[r][m] for r in range(m)]
    _tf_cache[rank] = out
    return out


def _sym_trace_piece(e: Expr, labels: Sequence[str], j: int) -> Expr:
    """Sym over labels of g^j times the j-fold trace of a symmetric e."""
    if j == 0:
        return e
    count_ = 0
    acc = Expr()
    for pairs, rest in pairings(labels, j):
        if len(rest) != len(labels) - 2 * j:
            continue
        # contract the last 2j slots of e pairwise, put the free labels on the rest
        dummies = [fresh() for _ in range(j)]
        target = list(rest) + [x for d in dummies for x in (d, d)]
        term = e.relabel(dict(zip(labels, target)))
        for a, b in pairs:
            term = term * Expr.field("g", (a, b))
        acc = acc + term
        count_ += 1
    return acc.scale(Fraction(1, count_))


def trace_free_project(e: Expr, slots: Sequence[str]) -> Expr:
    """Symmetric trace-free part in the given tangent slots."""
    slots = list(slots)
    if not slots or e.is_zero():
        return e
    for s in slots:
        if _slot_kind_of(e, s) != TANGENT:
            raise MalformedExpression("trace-free projection needs tangent slots")
    s_e = symmetrize(e, slots)
    if len(slots) < 2:
        return s_e
    cs = trace_free_coefficients(len(slots))
    acc = s_e
    for j in range(1, len(cs)):
        acc = acc + _sym_trace_piece(s_e, slots, j).scale(cs[j])
    return acc


def conformal_weight_of(e: Expr, upper: Iterable[str] = ()) -> Coefficient:
    """Common total weight of all terms.

    Each contracted tangent pair lowers the weight by 2, as does every free
    label listed in ``upper`` (read as a raised index).
    """
    upper = frozenset(upper)
    weights = set()
    for _, mono in e:
        w = FIELD(0)
        for f in mono:
            w += factor_weight(f)
        occ = _label_slots(mono)
        for lab, o in occ.items():
            i, s = o[0]
            if slot_kinds(mono[i])[s] != TANGENT:
                continue
            if len(o) == 2 or lab in upper:
                w -= 2
        weights.add(w)
    if not weights:
        return FIELD(0)
    if len(weights) > 1:
        raise WeightMismatch("terms of different conformal weight: "
                             + ", ".join(sorted(render_coeff(x) for x in weights)))
    return weights.pop()


def decompose_symbol_space(k: int, delta) -> list[tuple[int, int, Coefficient]]:
    """Irreducible pieces (k', l, delta') of rank-k symbols of weight delta."""
    if k < 0:
        raise ValueError("k must be non-negative")
    delta = coeff(delta)
    return [(k - 2 * i, i, delta + 2 * i) for i in range(k // 2 + 1)]


def monomial_names(mono: Monomial) -> list[str]:
    return [f[0] for f in mono]


def contains(mono: Monomial, name: str) -> bool:
    return any(f[0] == name for f in mono)
