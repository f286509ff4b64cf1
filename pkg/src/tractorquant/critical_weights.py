"""Critical weights Sigma_{k',l} and witnesses for them.

Weights are affine forms a*n + b with rational a, b.  Two weights coincide
iff the forms are identical; numeric membership at a concrete n is offered
separately and flags accidental coincidences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .coeff_ring import FIELD, N, Coefficient, coeff, coeff_substitute, free_params

SIGMA0 = "Sigma0"
SIGMA_PRIME = "Sigma'"
SIGMA_DOUBLE_PRIME = "Sigma''"
FAMILIES = (SIGMA0, SIGMA_PRIME, SIGMA_DOUBLE_PRIME)


class NoWitness(ValueError):
    """The weight is not critical, so no natural operator is attached to it."""


@dataclass(frozen=True, order=True)
class Affine:
    """a*n + b."""

    a: Fraction
    b: Fraction

    @classmethod
    def of(cls, a, b) -> "Affine":
        return cls(Fraction(a), Fraction(b))

    @classmethod
    def from_coeff(cls, c) -> "Affine | None":
        """The affine form of a coefficient in n alone, or None if it is not one."""
        c = coeff(c)
        if free_params(c) - {"n"} or c.denom.degree() > 0:
            return None
        num = c.numer
        if num.degree() > 1:
            return None
        den = Fraction(int(c.denom.LC.numerator), int(c.denom.LC.denominator))
        a = b = Fraction(0)
        for monom, v in num.terms():
            val = Fraction(int(v.numerator), int(v.denominator)) / den
            if monom[0]:
                a = val
            else:
                b = val
        return cls(a, b)

    def to_coeff(self) -> Coefficient:
        return N * FIELD(self.a) + FIELD(self.b)

    def at(self, n) -> Fraction:
        return self.a * n + self.b

    def __str__(self) -> str:
        return text_form(self)


def text_form(x: Affine) -> str:
    """Human form such as -(n+2), -n/2, 0, -(n+1)/2."""
    if x.a == 0:
        return str(x.b) if x.b.denominator != 1 else str(x.b.numerator)
    sign = "-" if x.a < 0 else ""
    a, b = abs(x.a), x.b if x.a > 0 else -x.b
    den = a.denominator
    # write as sign (p n + q)/den with integer p, q
    p, q = a * den, b * den
    inner = ("n" if p == 1 else f"{p.numerator}n")
    if q:
        inner += f"+{q}" if q > 0 else f"-{-q}"
    if den == 1:
        return f"{sign}({inner})" if q or sign and p != 1 else f"{sign}{inner}"
    if q:
        inner = f"({inner})"
    return f"{sign}{inner}/{den}"


def latex_form(x: Affine) -> str:
    s = text_form(x)
    if "/" in s:
        head, den = s.rsplit("/", 1)
        sign = "-" if head.startswith("-") else ""
        body = head.lstrip("-")
        if body.startswith("(") and body.endswith(")"):
            body = body[1:-1]
        return f"{sign}\\frac{{{body}}}{{{den}}}"
    return s


@dataclass
class CriticalSet:
    kprime: int
    ell: int
    sigma0: list[Affine] = field(default_factory=list)
    sigmaPrime: list[Affine] = field(default_factory=list)
    sigmaDoublePrime: list[Affine] = field(default_factory=list)

    def parts(self) -> list[tuple[str, list[Affine]]]:
        return [(SIGMA0, self.sigma0), (SIGMA_PRIME, self.sigmaPrime),
                (SIGMA_DOUBLE_PRIME, self.sigmaDoublePrime)]

    def members(self) -> set[Affine]:
        return set(self.sigma0) | set(self.sigmaPrime) | set(self.sigmaDoublePrime)

    def is_empty(self) -> bool:
        return not self.members()

    def overlap(self) -> set[Affine]:
        """Sigma' and Sigma'' may share members; they are reported, not merged."""
        return set(self.sigmaPrime) & set(self.sigmaDoublePrime)

    def contains(self, x: Affine) -> bool:
        return x in self.members()

    def family_of(self, x: Affine) -> str | None:
        for name, part in self.parts():
            if x in part:
                return name
        return None

    def numeric(self, n: int) -> list[tuple[str, Affine, Fraction]]:
        return [(name, x, x.at(n)) for name, part in self.parts() for x in part]

    def numeric_coincidences(self, n: int) -> list[tuple[Affine, Affine, Fraction]]:
        """Distinct forms that agree at this n."""
        flat = [(x, x.at(n)) for x in sorted(self.members())]
        return [(x, y, vx) for i, (x, vx) in enumerate(flat) for y, vy in flat[i + 1:] if vx == vy]

    def classify(self, delta, n=None) -> tuple[str, Affine] | None:
        """Family and form that ``delta`` hits, or None.

        A delta containing d is symbolic and never critical.  With concrete n,
        membership is numeric.
        """
        c = coeff(delta)
        if "d" in free_params(c) or "w" in free_params(c):
            return None
        if n is not None:
            c = coeff_substitute(c, {"n": n})
            x = Affine.from_coeff(c)
            if x is None:
                return None
            for name, part in self.parts():
                for y in part:
                    if y.at(Fraction(n)) == x.b:
                        return name, y
            return None
        x = Affine.from_coeff(c)
        if x is None:
            return None
        name = self.family_of(x)
        return (name, x) if name else None


def sigma0(kprime: int) -> list[Affine]:
    return [Affine.of(-1, -(kprime + i - 2)) for i in range(1, kprime + 1)]


def sigma(kprime: int, ell: int) -> CriticalSet:
    if kprime < 0 or ell < 0:
        raise ValueError("k' and l must be non-negative")
    return CriticalSet(
        kprime, ell, sigma0(kprime),
        [Affine.of(0, j - 1) for j in range(1, ell + 1)],
        [Affine.of(Fraction(-1, 2), -(kprime - j)) for j in range(1, ell + 1)],
    )


def sigma_step(s: CriticalSet) -> CriticalSet:
    """Sigma_{k',l+1} from Sigma_{k',l}: adds l and -(n+2k'-2l-2)/2."""
    l = s.ell
    return CriticalSet(s.kprime, l + 1, list(s.sigma0),
                       s.sigmaPrime + [Affine.of(0, l)],
                       s.sigmaDoublePrime + [Affine.of(Fraction(-1, 2), -(s.kprime - l - 1))])


@dataclass(frozen=True)
class Witness:
    family: str
    operator: str
    order: int
    source: str
    target: str
    index: int

    def describe(self) -> str:
        return f"{self.operator} of order {self.order}: {self.source} -> {self.target}"


def _sym_bundle(rank: int, weight: str) -> str:
    if rank == 0:
        return f"E[{weight}]"
    labels = "".join(f"a{i}" for i in range(1, rank + 1)) if rank <= 3 else f"a1...a{rank}"
    return f"E^({labels})0[{weight}]"


def natural_operator_witness(kprime: int, ell: int, delta) -> Witness:
    """The natural operator on E^(a1..ak')0[delta'] that makes delta' critical."""
    s = sigma(kprime, ell)
    x = delta if isinstance(delta, Affine) else Affine.from_coeff(delta)
    if x is None or not s.contains(x):
        raise NoWitness(f"{delta} is not in Sigma_{{{kprime},{ell}}}")
    src = _sym_bundle(kprime, "d'")
    if x in s.sigma0:
        i = s.sigma0.index(x) + 1
        return Witness(SIGMA0, "divergence type operator", kprime - i + 1, src,
                       _sym_bundle(i - 1, "d'"), i)
    if x in s.sigmaPrime:
        j = s.sigmaPrime.index(x) + 1
        return Witness(SIGMA_PRIME, "conformal Killing operator", j, src,
                       _sym_bundle(kprime + j, f"d'-{2 * j}"), j)
    j = s.sigmaDoublePrime.index(x) + 1
    return Witness(SIGMA_DOUBLE_PRIME, "Laplacian type operator", 2 * j, src,
                   _sym_bundle(kprime, f"d'-{2 * j}"), j)


def zero_shift_check(kprime: int, ell: int) -> bool:
    """2l avoids Sigma_{k',l} as affine forms in n."""
    return not sigma(kprime, ell).contains(Affine.of(0, 2 * ell))


def disjoint_check(kprime: int, ell: int) -> bool:
    """Sigma_{k',0} meets neither Sigma' nor Sigma''."""
    s = sigma(kprime, ell)
    return not set(s.sigma0) & (set(s.sigmaPrime) | set(s.sigmaDoublePrime))


def grid(kmax: int, lmax: int) -> Iterable[CriticalSet]:
    for k in range(kmax + 1):
        for l in range(lmax + 1):
            yield sigma(k, l)
