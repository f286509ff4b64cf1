"""Exact rational functions in the formal parameters n, w and d (d stands for delta').

Coefficients are elements of the sympy fraction field QQ(n, w, d).  sympy keeps
them fully reduced with a sign-normalized denominator, so structural equality
decides mathematical equality.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping, Union

from sympy import QQ, Symbol
from sympy.polys.fields import FracElement

PARAMS = ("n", "w", "d")

_DOMAIN = QQ.frac_field(*(Symbol(p) for p in PARAMS))
FIELD = _DOMAIN.field
RING = FIELD.ring
N, W, D = FIELD.gens

Coefficient = FracElement
Scalar = Union[int, Fraction, FracElement]

ZERO = FIELD(0)
ONE = FIELD(1)


class MalformedCoefficient(ValueError):
    """Raised for zero denominators and unparsable coefficient text."""


class PoleError(ZeroDivisionError):
    """A substitution made a denominator vanish identically."""


def coeff(x: Scalar | str) -> Coefficient:
    """Coerce ints, Fractions, strings and field elements to a Coefficient."""
    if isinstance(x, FracElement) and x.field is FIELD:
        return x
    if isinstance(x, str):
        return parse_coeff(x)
    if isinstance(x, Fraction):
        return FIELD(QQ(x.numerator, x.denominator))
    if isinstance(x, int):
        return FIELD(x)
    raise TypeError(f"cannot coerce {x!r} to a coefficient")


def coeff_normalize(num: Scalar | str, den: Scalar | str = 1) -> Coefficient:
    """Canonical reduced representative of num/den."""
    a, b = coeff(num), coeff(den)
    if not b:
        raise MalformedCoefficient("zero denominator")
    return a / b


def coeff_substitute(c: Coefficient, bindings: Mapping[str, Scalar | str]) -> Coefficient:
    """Substitute parameters by rationals or coefficients.

    Rational-function values are handled by clearing their denominators.
    """
    c = coeff(c)
    if not bindings:
        return c
    gens = dict(zip(PARAMS, RING.gens))
    num, den = c.numer, c.denom
    # substitute one parameter at a time as a fraction p/q
    for name, value in bindings.items():
        if name not in gens:
            raise KeyError(f"unknown parameter {name!r}")
        v = coeff(value)
        vp, vq = v.numer, v.denom
        g = gens[name]
        dn = num.degree(g) if num else 0
        dd = den.degree(g) if den else 0
        num = _homogenize(num, g, vp, vq)
        den = _homogenize(den, g, vp, vq)
        # both sides were scaled by vq^degree; restore the balance
        if dn > dd:
            den = den * vq ** (dn - dd)
        elif dd > dn:
            num = num * vq ** (dd - dn)
    if not den:
        raise PoleError(f"denominator factor vanishes: {_offending_factor(c, bindings)}")
    return FIELD(num) / FIELD(den)


def _homogenize(p, gen, vp, vq):
    """p(gen := vp/vq) * vq^deg, returned as a polynomial."""
    i = RING.gens.index(gen)
    deg = p.degree(gen) if p else 0
    if deg <= 0:
        return p
    out = RING.zero
    for monom, c in p.terms():
        e = monom[i]
        rest = list(monom)
        rest[i] = 0
        term = RING({tuple(rest): c}) * vq ** (deg - e)
        out += term * vp ** e if e else term
    return out


def _offending_factor(c: Coefficient, bindings) -> str:
    _, factors = c.denom.factor_list()
    gens = dict(zip(PARAMS, RING.gens))
    for f, _e in factors:
        g = f
        for name, value in bindings.items():
            v = coeff(value)
            g = _homogenize(g, gens[name], v.numer, v.denom)
        if not g:
            return render_coeff(FIELD(f))
    return render_coeff(FIELD(c.denom))


def is_constant(c: Coefficient) -> bool:
    return c.numer.is_ground and c.denom.is_ground


def as_fraction(c: Coefficient) -> Fraction:
    """Exact rational value of a constant coefficient."""
    if not is_constant(c):
        raise ValueError(f"coefficient {render_coeff(c)} is not a constant")
    p = _ground(c.numer)
    q = _ground(c.denom)
    return p / q


def _ground(p) -> Fraction:
    if not p:
        return Fraction(0)
    v = p.LC
    return Fraction(int(v.numerator), int(v.denominator))


def evaluate(c: Coefficient, **values: Scalar) -> Coefficient:
    return coeff_substitute(c, values)


def free_params(c: Coefficient) -> set[str]:
    out = set()
    for p in (c.numer, c.denom):
        for monom in p.monoms():
            for name, e in zip(PARAMS, monom):
                if e:
                    out.add(name)
    return out


# ---------------------------------------------------------------- rendering

def _render_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _render_poly(p) -> str:
    """Expanded polynomial in ring order, e.g. n+2*d+2."""
    if not p:
        return "0"
    parts = []
    for monom, c in p.terms():
        c = Fraction(int(c.numerator), int(c.denominator))
        vars_ = [name if e == 1 else f"{name}^{e}" for name, e in zip(PARAMS, monom) if e]
        mag = abs(c)
        if vars_:
            body = "*".join(vars_)
            if mag != 1:
                body = f"{_render_rational(mag)}*{body}"
        else:
            body = _render_rational(mag)
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    s = "".join(f"{sg}{b}" for sg, b in parts)
    return s[1:] if s.startswith("+") else s


def _render_factored(p) -> tuple[Fraction, str]:
    """Split p into (rational content, product of irreducible factors text)."""
    content, factors = p.factor_list()
    content = Fraction(int(content.numerator), int(content.denominator))
    rendered = []
    for f, e in factors:
        body = _render_poly(f)
        if len(f.terms()) > 1:
            body = f"({body})"
        if e > 1:
            body = f"{body}^{e}"
        rendered.append(body)
    rendered.sort(key=lambda s: (s.count("("), len(s), s))
    return content, "*".join(rendered)


def render_coeff(c: Coefficient) -> str:
    """Factored text form, e.g. -(d-1)*(n+2*d+2)."""
    c = coeff(c)
    if not c:
        return "0"
    num_c, num_f = _render_factored(c.numer)
    den_c, den_f = _render_factored(c.denom)
    q = num_c / den_c
    sign = "-" if q < 0 else ""
    q = abs(q)
    num = num_f
    if q.numerator != 1 or not num:
        num = f"{q.numerator}*{num}" if num else str(q.numerator)
    den = den_f
    if q.denominator != 1:
        den = f"{q.denominator}*{den}" if den else str(q.denominator)
    if not sign and not den and num.startswith("(") and num.endswith(")") and num.count("(") == 1:
        num = num[1:-1]
    out = sign + num
    if den:
        out += "/" + (f"({den})" if "*" in den or "^" in den else den)
    return out


def latex_coeff(c: Coefficient) -> str:
    text = render_coeff(c).replace("d", r"\delta'")
    text = re.sub(r"\^(\d+)", r"^{\1}", text)
    text = text.replace("*", " ")
    if "/" in text:
        num, den = text.split("/", 1)
        if den.startswith("(") and den.endswith(")"):
            den = den[1:-1]
        sign = ""
        if num.startswith("-"):
            sign, num = "-", num[1:]
        return rf"{sign}\frac{{{num}}}{{{den}}}"
    return text


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([nwd])|(.))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group(1):
            out.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            out.append(("param", m.group(2), m.start(2)))
        elif m.group(3):
            if m.group(3) not in "+-*/^()":
                raise MalformedCoefficient(f"unexpected {m.group(3)!r} at column {m.start(3)}")
            out.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    return out


class _CoeffParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", -1)

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise MalformedCoefficient(f"expected {value!r} at token {self.i}")
        self.i += 1
        return tok

    def parse(self) -> Coefficient:
        if not self.tokens:
            raise MalformedCoefficient("empty coefficient")
        v = self.sum()
        if self.i != len(self.tokens):
            raise MalformedCoefficient(f"trailing input at column {self.peek()[2]}")
        return v

    def sum(self):
        v = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.product()
            v = v + rhs if op == "+" else v - rhs
        return v

    def product(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                v = v * rhs
            else:
                if not rhs:
                    raise MalformedCoefficient("zero denominator")
                v = v / rhs
        return v

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val, _ = self.take()
            if kind != "num":
                raise MalformedCoefficient("exponent must be a non-negative integer")
            return base ** int(val)
        return base

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return FIELD(int(val))
        if kind == "param":
            return FIELD.gens[PARAMS.index(val)]
        if val == "(":
            v = self.sum()
            self.take(")")
            return v
        raise MalformedCoefficient(f"unexpected {val!r} at column {col}")


def parse_coeff(text: str) -> Coefficient:
    """Inverse of render_coeff; accepts any arithmetic over n, w, d."""
    return _CoeffParser(text).parse()
