"""Text, LaTeX and JSON forms of tensor expressions.

Text grammar::

    expr    := term (('+' | '-') term)*
    term    := ['-'] [coeff '*'] factor ('*' factor)* | coeff
    factor  := name ['[' labels ']'] | 'nabla[' labels '](' name ['[' labels ']'] ')'
    coeff   := integer ['/' integer] | '(' coefficient text ')'

``nabla[a,b](F[c])`` is the symmetrized second covariant derivative of F.
Canonical dummies ``~k`` print as ``_k``.
"""

from __future__ import annotations

import json
import re
from typing import Any

from .coeff_ring import (
    FIELD, MalformedCoefficient, latex_coeff, parse_coeff,
    render_coeff,
)
from .index_algebra import Expr, MalformedExpression, Monomial, free_labels, make_factor


class ParseError(ValueError):
    """Unparsable expression text; carries the column of the failure."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} at column {column}")
        self.column = column


def _label_text(label: str) -> str:
    return "_" + label[1:] if label.startswith("~") else label


def _factor_text(f) -> str:
    name, k, idx = f
    labs = [_label_text(l) for l in idx]
    base = name + (f"[{','.join(labs[k:])}]" if len(idx) > k else "")
    if k:
        return f"nabla[{','.join(labs[:k])}]({base})"
    return base


def _order(mono: Monomial) -> int:
    from .symbols import lookup
    total = 0
    for name, k, _ in mono:
        total += k + (2 if lookup(name).role == "curvature" else 0)
    return total


def sorted_terms(e: Expr):
    return sorted(e, key=lambda t: (-_order(t[1]), [_factor_text(f) for f in t[1]]))


def _top_level_sum(text: str) -> bool:
    depth = 0
    for i, ch in enumerate(text):
        depth += {"(": 1, ")": -1}.get(ch, 0)
        if depth == 0 and i > 0 and ch in "+-" and text[i - 1] not in "*/^(":
            return True
    return False


def _coeff_prefix(c) -> tuple[str, str]:
    """Sign and multiplier text for a coefficient in front of factors."""
    text = render_coeff(c)
    sign = "-" if text.startswith("-") else ""
    body = text[1:] if sign else text
    if body == "1":
        return sign, ""
    if _top_level_sum(body):
        body = f"({body})"
    return sign, body


_DISPLAY_ORDER = {"sigma": 0, "tau": 1, "Y": 2, "Z": 3, "X": 4, "h": 5, "Upsilon": 6,
                  "C": 7, "P": 8, "J": 9, "g": 10}


def _display(mono: Monomial) -> list:
    return sorted(mono, key=lambda f: (_DISPLAY_ORDER.get(f[0], 11), f[0], f[1]))


def render_text(e: Expr) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for c, mono in sorted_terms(e):
        sign, mult = _coeff_prefix(c)
        body = "*".join(_factor_text(f) for f in _display(mono))
        if not body:
            body = mult or "1"
        elif mult:
            body = f"{mult}*{body}"
        parts.append((sign, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {'-' if sign else '+'} {body}"
    return out


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:([A-Za-z_~][A-Za-z0-9_~]*)|(\d+)|(.))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if m.group(1):
                self.tokens.append(("id", m.group(1), m.start(1)))
            elif m.group(2):
                self.tokens.append(("num", m.group(2), m.start(2)))
            else:
                self.tokens.append(("op", m.group(3), m.start(3)))
            pos = m.end()
        self.i = 0

    def peek(self, off=0):
        j = self.i + off
        return self.tokens[j] if j < len(self.tokens) else ("end", "", len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        if not self.tokens:
            raise ParseError("empty expression", 0)
        raw = []
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        raw.append(self.term(sign))
        while self.peek()[1] in ("+", "-"):
            sign = 1 if self.take()[1] == "+" else -1
            if self.peek()[1] == "-":
                self.take()
                sign = -sign
            raw.append(self.term(sign))
        if self.peek()[0] != "end":
            tok = self.peek()
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        try:
            return Expr.from_raw(raw)
        except MalformedExpression as exc:
            raise ParseError(str(exc), 0) from None

    def term(self, sign):
        c = FIELD(sign)
        factors = []
        while True:
            c, f = self.item(c)
            if f is not None:
                factors.append(f)
            if self.peek()[1] != "*":
                break
            self.take()
        return c, factors

    def item(self, c):
        kind, val, col = self.peek()
        if kind == "num" or val == "(" or (val in ("n", "w", "d") and self.peek(1)[1] != "["):
            return c * self.coeff_chunk(), None
        if kind != "id":
            raise ParseError(f"unexpected {val!r}", col)
        if val == "nabla":
            self.take()
            deriv = self.labels()
            self.take("(")
            name, idx = self.plain_factor()
            self.take(")")
            return c, make_factor(name, idx, deriv)
        name, idx = self.plain_factor()
        return c, make_factor(name, idx)

    def plain_factor(self):
        kind, name, col = self.take()
        if kind != "id":
            raise ParseError(f"expected a field name, found {name!r}", col)
        from .symbols import is_registered
        if not is_registered(name):
            raise ParseError(f"unknown field {name!r}", col)
        idx = self.labels() if self.peek()[1] == "[" else []
        return name, idx

    def labels(self):
        self.take("[")
        out = []
        if self.peek()[1] == "]":
            self.take()
            return out
        while True:
            kind, val, col = self.take()
            if kind != "id":
                raise ParseError(f"expected an index label, found {val!r}", col)
            out.append(val)
            if self.peek()[1] == "]":
                self.take()
                return out
            self.take(",")

    def coeff_chunk(self):
        """Consume tokens up to the next top-level '*' before a field, '+', '-' or end."""
        start = self.peek()[2]
        depth = 0
        first = True
        while True:
            kind, val, col = self.peek()
            if kind == "end":
                break
            if depth == 0 and not first:
                if val in ("+", "-") and self.peek(-1)[1] not in "*/^(":
                    break
                if val == "*" and self._field_ahead():
                    break
            if depth == 0 and val == ")":
                break
            depth += {"(": 1, ")": -1}.get(val, 0)
            self.take()
            first = False
        end = self.peek()[2] if self.peek()[0] != "end" else len(self.text)
        try:
            return parse_coeff(self.text[start:end])
        except MalformedCoefficient as exc:
            raise ParseError(f"bad coefficient {self.text[start:end]!r} ({exc})", start) from None

    def _field_ahead(self) -> bool:
        kind, val, _ = self.peek(1)
        return kind == "id" and (val not in ("n", "w", "d") or self.peek(2)[1] == "[")


def parse_text(text: str) -> Expr:
    return _Parser(text).parse()


# ------------------------------------------------------------------ LaTeX

_LATEX_NAMES = {
    "sigma": r"\sigma'", "Upsilon": r"\Upsilon", "g": r"\mathbf{g}", "P": "P",
    "J": "J", "C": "C", "rho": r"\rho", "mu": r"\mu", "tau": r"\tau",
}
_DUMMY_LETTERS = "pqrstuvxyz"


def _latex_label(label: str) -> str:
    if label.startswith("~"):
        i = int(label[1:])
        base = _DUMMY_LETTERS[i % len(_DUMMY_LETTERS)]
        return base + ("'" * (i // len(_DUMMY_LETTERS)))
    return label


def _latex_factor(f) -> str:
    name, k, idx = f
    labs = [_latex_label(l) for l in idx]
    base = _LATEX_NAMES.get(name, name)
    if len(idx) > k:
        base += "_{" + "".join(labs[k:]) + "}"
    if not k:
        return base
    nablas = "".join(rf"\nabla_{{{l}}}" for l in labs[:k])
    return f"{nablas} {base}" if len(idx) == k else f"{nablas}{base}"


def render_latex(e: Expr) -> str:
    if e.is_zero():
        return "0"
    out = []
    for c, mono in sorted_terms(e):
        ctext = latex_coeff(c)
        neg = ctext.startswith("-")
        if neg:
            ctext = ctext[1:]
        if ctext == "1" and mono:
            ctext = ""
        elif mono and _top_level_sum(ctext) and not ctext.startswith(r"\frac"):
            ctext = f"\\left({ctext}\\right)"
        body = " ".join(_latex_factor(f) for f in _display(mono))
        piece = (ctext + " " + body).strip() if body else ctext
        out.append(("-" if neg else "+", piece))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, piece in out[1:]:
        text += f" {sign} {piece}"
    return text


# ------------------------------------------------------------------ JSON

def expr_to_json(e: Expr) -> dict[str, Any]:
    terms = []
    for c, mono in sorted_terms(e):
        occ: dict[str, list] = {}
        for i, (_, _, idx) in enumerate(mono):
            for s, lab in enumerate(idx):
                occ.setdefault(lab, []).append([i, s])
        terms.append({
            "coeff": render_coeff(c),
            "factors": [{"name": n, "deriv": list(idx[:k]), "indices": list(idx[k:])}
                        for n, k, idx in mono],
            "pairs": [[lab, *slots] for lab, slots in sorted(occ.items()) if len(slots) == 2],
        })
    return {"free": sorted(e.free), "terms": terms}


def expr_from_json(data: dict[str, Any]) -> Expr:
    raw = []
    try:
        for t in data["terms"]:
            factors = [make_factor(f["name"], f["indices"], f["deriv"]) for f in t["factors"]]
            raw.append((parse_coeff(t["coeff"]), factors))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed expression JSON: {exc}") from None
    e = Expr.from_raw(raw)
    if "free" in data and sorted(e.free) != sorted(data["free"]):
        raise ValueError("free indices in JSON do not match the terms")
    return e


def dumps(e: Expr) -> str:
    return json.dumps(expr_to_json(e), sort_keys=True)


def loads(text: str) -> Expr:
    return expr_from_json(json.loads(text))


__all__ = [
    "ParseError", "render_text", "parse_text", "render_latex", "expr_to_json",
    "expr_from_json", "dumps", "loads", "free_labels",
]
