"""Exact coordinate referee for conformal invariance.

Formulas are evaluated on R^{p,q} with flat metric eta, and in the rescaled
metric g^ = e^{2 Upsilon} eta, on polynomial data with rational coefficients.
Coordinates are centred at the evaluation point x0 and Upsilon(x0) = 0, so
every e^{c Upsilon} may be replaced by its Taylor polynomial and every
polynomial truncated at the total degree the formula can differentiate.
Christoffel symbols and the Schouten tensor of g^ are computed from the
metric itself; the Weyl and Cotton tensors vanish.

Density convention: a section of E[w] has representative f in the flat scale
and e^{w Upsilon} f in the scale g^.  Tensors carry their lowered weight.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Mapping, Sequence

from sympy import QQ
from sympy.polys.rings import PolyElement, ring

from .calculus import total_order
from .coeff_ring import as_fraction, coeff, coeff_substitute
from .index_algebra import Expr, factor_rank, slot_kinds, trace_free_coefficients
from .symbols import TANGENT, lookup

FIELDS = ("f", "sigma", "rho", "mu", "tau")


class NotExpanded(ValueError):
    """The formula still carries tractor structure the oracle cannot evaluate."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    n: int
    signature: tuple[int, int] | None = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("the chart needs n >= 3")
        sig = self.signature or (self.n, 0)
        if sum(sig) != self.n or min(sig) < 0:
            raise ValueError(f"signature {sig} does not match n={self.n}")
        object.__setattr__(self, "signature", sig)

    @property
    def eta(self) -> tuple[int, ...]:
        p, q = self.signature
        return (1,) * p + (-1,) * q

    @property
    def label(self) -> str:
        return f"({self.signature[0]},{self.signature[1]})"


@lru_cache(maxsize=None)
def poly_ring(n: int):
    return ring(",".join(f"x{i}" for i in range(n)), QQ)


@dataclass
class PolynomialField:
    """Components of a field in the flat scale; tensors are given with lowered indices."""

    name: str
    rank: int
    components: dict[tuple[int, ...], PolyElement]
    weight: Fraction = Fraction(0)

    def component(self, idx: tuple[int, ...]):
        return self.components.get(idx)


def _truncate(p: PolyElement, deg: int) -> PolyElement:
    R = p.ring
    return R({m: c for m, c in p.items() if sum(m) <= deg})


def mul(p: PolyElement, q: PolyElement, deg: int) -> PolyElement:
    """Product of p and q with every monomial of total degree above deg dropped."""
    R = p.ring
    if not p or not q:
        return R.zero
    qs = [(m, c, sum(m)) for m, c in q.items()]
    out: dict = {}
    for m1, c1 in p.items():
        d1 = sum(m1)
        if d1 > deg:
            continue
        for m2, c2, d2 in qs:
            if d1 + d2 <= deg:
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
    return R({m: c for m, c in out.items() if c})


def _exp_poly(c: Fraction, u: PolyElement, deg: int) -> PolyElement:
    """Taylor polynomial of e^{c u} with u(0) = 0, truncated at total degree deg."""
    R = u.ring
    out, term = R.one, R.one
    for j in range(1, deg + 1):
        term = mul(term, u, deg) * QQ(c.numerator, c.denominator) / j
        if not term:
            break
        out += term
    return out


def shift(p: PolyElement, x0: Sequence[Fraction]) -> PolyElement:
    """p(x + x0): recentre a polynomial at x0."""
    R = p.ring
    subs = [(g, g + QQ(Fraction(v).numerator, Fraction(v).denominator)) for g, v in zip(R.gens, x0)]
    return p.compose(subs) if subs else p


def _recentre(fields: Mapping[str, PolynomialField], x0: Sequence) -> dict[str, PolynomialField]:
    return {k: PolynomialField(v.name, v.rank, {i: shift(p, x0) for i, p in v.components.items()},
                               v.weight) for k, v in fields.items()}


# ------------------------------------------------------------------ geometry of a scale

class Scale:
    """Flat metric (upsilon None) or e^{2 upsilon} eta.

    ``deg`` is the highest derivative order any evaluation needs; the metric is
    kept to degree deg + 2, Christoffel symbols to deg + 1 and curvature to deg.
    """

    def __init__(self, chart: Chart, upsilon: PolyElement | None, deg: int):
        self.chart = chart
        self.n = chart.n
        self.R, *self.x = poly_ring(chart.n)
        self.deg = deg
        self.eta = chart.eta
        self.upsilon = upsilon
        self.flat = upsilon is None or not upsilon
        if self.flat:
            self.conf = self.R.one
            self.conf_inv = self.R.one
        else:
            if upsilon.get((0,) * self.n, 0):
                raise PreconditionError("Upsilon must vanish at the evaluation point")
            self.conf = _exp_poly(Fraction(2), upsilon, deg + 2)
            self.conf_inv = _exp_poly(Fraction(-2), upsilon, deg + 2)
        self._gamma: dict = {}
        self._P: dict = {}

    def metric(self, a: int, b: int):
        return self.conf * self.eta[a] if a == b else self.R.zero

    def inverse(self, a: int, b: int):
        return self.conf_inv * self.eta[a] if a == b else self.R.zero

    def gamma(self, c: int, a: int, b: int):
        """Gamma^c_ab from the metric."""
        if self.flat:
            return self.R.zero
        key = (c, a, b)
        hit = self._gamma.get(key)
        if hit is None:
            x = self.x
            d = c  # diagonal inverse
            val = (self.metric(d, b).diff(x[a]) + self.metric(d, a).diff(x[b])
                   - self.metric(a, b).diff(x[d]))
            hit = mul(self.inverse(c, d), val, self.deg + 1) * QQ(1, 2)
            self._gamma[key] = hit
        return hit

    def _ricci(self, b: int, d: int):
        x, n = self.x, self.n
        out = self.R.zero
        for c in range(n):
            out += self.gamma(c, b, d).diff(x[c]) - self.gamma(c, b, c).diff(x[d])
            for e in range(n):
                out += (mul(self.gamma(c, c, e), self.gamma(e, b, d), self.deg)
                        - mul(self.gamma(c, d, e), self.gamma(e, b, c), self.deg))
        return _truncate(out, self.deg)

    def schouten(self, a: int, b: int):
        if self.flat:
            return self.R.zero
        if not self._P:
            n = self.n
            ric = {(i, j): self._ricci(i, j) for i in range(n) for j in range(i, n)}
            scal = sum((mul(self.inverse(i, i), ric[(i, i)], self.deg) for i in range(n)), self.R.zero)
            for i in range(n):
                for j in range(i, n):
                    v = ric[(i, j)]
                    if i == j:
                        v -= mul(scal, self.metric(i, j), self.deg) * QQ(1, 2 * (n - 1))
                    self._P[(i, j)] = self._P[(j, i)] = v * QQ(1, n - 2)
        return self._P[(a, b)]

    def J(self):
        return sum((mul(self.inverse(i, i), self.schouten(i, i), self.deg) for i in range(self.n)),
                   self.R.zero)


# ------------------------------------------------------------------ evaluator

class Evaluator:
    """Evaluates one formula at the origin of a chart for given weights."""

    def __init__(self, op: Expr, chart: Chart, bindings: Mapping[str, object]):
        self.op = op
        self.chart = chart
        self.bindings = {k: coeff(v) for k, v in bindings.items()}
        self.bindings.setdefault("n", coeff(chart.n))
        self.order = max((total_order(m) for _, m in op), default=0)
        self.tractor_labels = self._tractor_labels()
        self.terms = [(as_fraction(coeff_substitute(c, self.bindings)), m) for c, m in op]

    def _tractor_labels(self) -> list[str]:
        labels = []
        for _, mono in self.op:
            for f in mono:
                if f[0] in ("h", "Upsilon", "Phi") or (f[0] == "A"):
                    raise NotExpanded(f"factor {f[0]} cannot be evaluated")
                for lab, kind in zip(f[2], slot_kinds(f)):
                    if kind != TANGENT and lab not in labels:
                        labels.append(lab)
        if len(labels) > 1:
            raise NotExpanded("only one free tractor index is supported")
        for _, mono in self.op:
            hits = [f for f in mono for lab, kind in zip(f[2], slot_kinds(f)) if kind != TANGENT]
            if labels and len(hits) != 1:
                raise NotExpanded("unresolved tractor contraction")
        return labels

    def weight_of(self, name: str, rank: int) -> Fraction:
        sym = lookup(name)
        return as_fraction(coeff_substitute(sym.lowered_weight(rank), self.bindings))

    # -------------------------------------------------- components
    def _context(self, scale: Scale, fields: Mapping[str, PolynomialField]):
        memo: dict = {}
        n = self.chart.n

        def base(name: str, idx: tuple[int, ...]):
            if name == "P":
                return scale.schouten(*idx)
            if name == "J":
                return scale.J()
            if name == "C":
                return scale.R.zero
            fld = fields.get(name)
            if fld is None:
                raise KeyError(f"no input for field {name}")
            comp = fld.component(idx)
            if comp is None:
                return scale.R.zero
            if scale.flat:
                return comp
            key = ("w", name, len(idx))
            fac = memo.get(key)
            if fac is None:
                fac = _exp_poly(self.weight_of(name, len(idx)), scale.upsilon, scale.deg)
                memo[key] = fac
            return mul(fac, comp, scale.deg)

        def iterated(name: str, derivs: tuple[int, ...], idx: tuple[int, ...]):
            key = (name, derivs, idx)
            hit = memo.get(key)
            if hit is not None:
                return hit
            if not derivs:
                out = base(name, idx)
            else:
                a, rest = derivs[0], derivs[1:]
                slots = rest + idx
                budget = scale.deg - len(derivs)
                out = _truncate(iterated(name, rest, idx).diff(scale.x[a]), budget)
                if not scale.flat:
                    for s in range(len(slots)):
                        for c in range(n):
                            gam = scale.gamma(c, a, slots[s])
                            if not gam:
                                continue
                            moved = slots[:s] + (c,) + slots[s + 1:]
                            out -= mul(gam, iterated(name, moved[:len(rest)], moved[len(rest):]), budget)
            memo[key] = out
            return out

        def jet(name: str, k: int, idx: tuple[int, ...]):
            derivs, rest = idx[:k], idx[k:]
            key = ("sym", name, tuple(sorted(derivs)), rest)
            hit = memo.get(key)
            if hit is not None:
                return hit
            perms = set(permutations(derivs))
            acc = scale.R.zero
            for p in perms:
                acc += iterated(name, p, rest)
            val = acc * QQ(1, len(perms)) if perms else acc
            memo[key] = val
            return val

        return jet

    def _value_at_origin(self, p) -> Fraction:
        c = p.get((0,) * self.chart.n, 0) if p else 0
        return Fraction(int(c.numerator), int(c.denominator)) if c else Fraction(0)

    def _evaluate_terms(self, scale: Scale, fields, fixed: Mapping[str, int]) -> Fraction:
        jet = self._context(scale, fields)
        eta = self.chart.eta
        n = self.chart.n
        total = Fraction(0)
        for c, mono in self.terms:
            labels: dict[str, int] = {}
            for f in mono:
                for lab in f[2]:
                    labels[lab] = labels.get(lab, 0) + 1
            dummies = [l for l, k in labels.items() if k == 2 and l not in fixed]
            for assign in product(range(n), repeat=len(dummies)):
                env = dict(fixed)
                env.update(zip(dummies, assign))
                sign = 1
                for d_ in dummies:
                    sign *= eta[env[d_]]
                val = Fraction(sign)
                for f in mono:
                    name, k, idx = f
                    ids = tuple(env[l] for l in idx)
                    if name == "g":
                        val *= eta[ids[0]] if ids[0] == ids[1] else 0
                    elif name in ("X", "Y", "Z"):
                        continue
                    else:
                        val *= self._value_at_origin(jet(name, k, ids))
                    if not val:
                        break
                total += c * val
        return total

    def evaluate(self, fields: Mapping[str, PolynomialField], upsilon: PolyElement | None = None,
                 x0: Sequence | None = None):
        """Value at x0 (default the origin).

        A scalar for a scalar formula, a dict over index tuples when tangent
        labels are free, and {'top', 'mid', 'bot'} for one free tractor label.
        """
        if x0 is not None and any(x0):
            fields = _recentre(fields, x0)
            upsilon = shift(upsilon, x0) if upsilon is not None else None
        scale = Scale(self.chart, upsilon, self.order)
        if not self.tractor_labels:
            free = sorted(self.op.free)
            if not free:
                return self._evaluate_terms(scale, fields, {})
            return {ids: self._evaluate_terms(scale, fields, dict(zip(free, ids)))
                    for ids in product(range(self.chart.n), repeat=len(free))}
        A = self.tractor_labels[0]
        parts = {"Y": [], "Z": [], "X": []}
        for c, mono in self.terms:
            proj = next(f for f in mono if A in f[2])
            parts[proj[0]].append((c, mono, proj))
        out = {}
        saved = self.terms
        try:
            for key, name in (("top", "Y"), ("bot", "X")):
                self.terms = [(c, m) for c, m, _ in parts[name]]
                out[key] = self._evaluate_terms(scale, fields, {A: 0})
            mid = []
            for a in range(self.chart.n):
                acc = Fraction(0)
                # the tangent slot of Z is the free middle index
                for c, m, proj in parts["Z"]:
                    self.terms = [(c, m)]
                    acc += self._evaluate_terms(scale, fields, {A: 0, proj[2][1]: a})
                mid.append(acc)
            out["mid"] = tuple(mid)
        finally:
            self.terms = saved
        return out


def instantiate(op: Expr, chart: Chart, w=None, delta=None) -> Evaluator:
    bindings = {}
    if w is not None:
        bindings["w"] = w
    if delta is not None:
        bindings["d"] = delta
    return Evaluator(op, chart, bindings)


# ------------------------------------------------------------------ invariance

def _upsilon_gradient(upsilon: PolyElement, n: int) -> list[Fraction]:
    R, *x = poly_ring(n)
    out = []
    for i in range(n):
        c = upsilon.diff(x[i]).get((0,) * n, 0)
        out.append(Fraction(int(c.numerator), int(c.denominator)) if c else Fraction(0))
    return out


def check_invariance(op: Expr, w, delta, chart: Chart, upsilon: PolyElement,
                     fields: Mapping[str, PolynomialField], x0: Sequence = None):
    """Value in the scale e^{2 Upsilon} eta minus value in eta, at x0.

    Inputs are polynomials in the chart coordinates; they are recentred at x0.
    For a tractor-valued formula the old components are first transformed by
    the tractor rule, and the residual is the list of component differences.
    """
    n = chart.n
    x0 = [Fraction(v) for v in (x0 or [0] * n)]
    if any(x0):
        upsilon = shift(upsilon, x0)
        fields = _recentre(fields, x0)
    if upsilon.get((0,) * n, 0):
        raise PreconditionError("Upsilon(x0) must vanish")
    ev = instantiate(op, chart, w, delta)
    new = ev.evaluate(fields, upsilon)
    old = ev.evaluate(fields, None)
    if not isinstance(old, dict):
        return new - old
    u = _upsilon_gradient(upsilon, n)
    eta = chart.eta
    top = old["top"]
    mid = tuple(m + u[a] * top for a, m in enumerate(old["mid"]))
    norm = sum(eta[a] * u[a] * u[a] for a in range(n))
    bot = old["bot"] - sum(eta[a] * u[a] * old["mid"][a] for a in range(n)) - norm * top / 2
    diffs = [new["top"] - top] + [x - y for x, y in zip(new["mid"], mid)] + [new["bot"] - bot]
    return next((d for d in diffs if d), Fraction(0))


# ------------------------------------------------------------------ random instances

def random_poly(n: int, degree: int, rng: random.Random, constant: bool = True) -> PolyElement:
    R, *x = poly_ring(n)
    out = R.zero
    coeffs = [c for c in range(-3, 4) if c]
    for monom in product(range(degree + 1), repeat=n):
        s = sum(monom)
        if s > degree or (s == 0 and not constant):
            continue
        if rng.random() < 0.5:
            continue
        out += R({monom: QQ(rng.choice(coeffs))})
    if not out:
        out = R({tuple(1 if i == 0 else 0 for i in range(n)): QQ(rng.choice(coeffs))})
    return out


def mobius_upsilon(chart: Chart, b: Sequence[int], deg: int) -> PolyElement:
    """-log(1 + 2 b.x + |b|^2 |x|^2) to degree deg.

    e^{2 Upsilon} eta is the pullback of eta by a special conformal map, so the
    rescaled metric is again flat; this exercises formulas valid on the flat model.
    """
    R, *x = poly_ring(chart.n)
    eta = chart.eta
    bb = sum(e * v * v for e, v in zip(eta, b))
    u = sum((2 * e * v * xi for e, v, xi in zip(eta, b, x)), R.zero)
    u += bb * sum((e * xi ** 2 for e, xi in zip(eta, x)), R.zero)
    out, term = R.zero, R.one
    for j in range(1, deg + 1):
        term = mul(term, u, deg)
        out += term * QQ((-1) ** j, j)
    return out


def _sym_tf(chart: Chart, comps: dict[tuple[int, ...], PolyElement], rank: int):
    """Symmetric trace-free part (w.r.t. eta) of a tensor given on all index tuples."""
    n, eta = chart.n, chart.eta
    R = poly_ring(n)[0]
    idxs = list(product(range(n), repeat=rank))

    def sym(t):
        out = {}
        for i in idxs:
            perms = list(permutations(i))
            out[i] = sum((t[p] for p in perms), R.zero) * QQ(1, len(perms))
        return out

    s = sym(comps)
    if rank < 2:
        return s
    cs = trace_free_coefficients(rank)

    def trace(t, r):
        return {i: sum((eta[c] * t[(c, c) + i] for c in range(n)), R.zero)
                for i in product(range(n), repeat=r - 2)}

    out = dict(s)
    traced = s
    for j in range(1, len(cs)):
        traced = trace(traced, rank - 2 * (j - 1))
        cj = as_fraction(coeff_substitute(cs[j], {"n": n}))
        # Sym(eta^j tr^j s)
        piece = {}
        for i in idxs:
            acc = R.zero
            count = 0
            for p in set(permutations(i)):
                pairs = p[:2 * j]
                if all(pairs[2 * m] == pairs[2 * m + 1] for m in range(j)):
                    sign = 1
                    for m in range(j):
                        sign *= eta[pairs[2 * m]]
                    acc += traced[p[2 * j:]] * sign
                count += 1
            piece[i] = acc * QQ(1, count)
        for i in idxs:
            out[i] = out[i] + piece[i] * QQ(cj.numerator, cj.denominator)
    return out


def random_field(chart: Chart, name: str, rank: int, degree: int, rng: random.Random,
                 tracefree: bool = True) -> PolynomialField:
    n = chart.n
    comps = {i: random_poly(n, degree, rng) for i in product(range(n), repeat=rank)}
    if rank and tracefree:
        comps = _sym_tf(chart, comps, rank)
    return PolynomialField(name, rank, comps)


def fields_of(op: Expr) -> dict[str, int]:
    """Input fields of a formula with their tensor rank."""
    out = {}
    for _, mono in op:
        for f in mono:
            if f[0] in FIELDS:
                out[f[0]] = factor_rank(f)
    return out


@dataclass
class Instance:
    seed: int
    n: int
    signature: tuple[int, int]
    residual: Fraction

    def line(self) -> str:
        p, q = self.signature
        return f"({self.seed}, {self.n}, ({p},{q}), {self.residual})"


def random_instances(op: Expr, w, delta, charts: Sequence[Chart], count: int, seed: int = 0,
                     flat_model: bool = False) -> list[Instance]:
    """Run ``count`` random instances per chart; seeds are seed, seed+1, ...

    With ``flat_model`` the rescalings are special conformal, so formulas that
    assume a flat metric can be tested.
    """
    order = max((total_order(m) for _, m in op), default=0)
    deg = order + 1
    out = []
    ranks = fields_of(op)
    s = seed
    for chart in charts:
        for _ in range(count):
            rng = random.Random(s)
            if flat_model:
                b = [rng.choice((-1, 1)) * rng.randint(1, 3) if rng.random() < 0.7 else 0
                     for _ in range(chart.n)]
                ups = mobius_upsilon(chart, b, order + 2)
            else:
                ups = random_poly(chart.n, max(deg, 2), rng, constant=False)
            fields = {name: random_field(chart, name, r, deg, rng, tracefree=(name in ("sigma", "tau")))
                      for name, r in sorted(ranks.items())}
            res = check_invariance(op, w, delta, chart, ups, fields)
            out.append(Instance(s, chart.n, chart.signature, res))
            s += 1
    return out


def report(instances: Sequence[Instance]) -> str:
    return "\n".join(i.line() for i in instances)
