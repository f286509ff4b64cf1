"""Field symbols: slot kinds, symmetry type and conformal weight.

Indices are variance-free.  Every tangent slot is stored lowered, the implicit
conformal metric (weight 2) contracts them, and a symbol's weight is the weight
of its all-lowered form.  Tractor indices carry no weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from .coeff_ring import D, FIELD, W, Coefficient, coeff

TANGENT = "t"
TRACTOR = "T"

# symmetry types
NONE = "none"
SYM = "sym"
SYMTF = "symtf"
WEYL = "weyl"


@dataclass(frozen=True)
class FieldSymbol:
    """A family of abstract fields.

    ``rank`` is None for families whose tangent rank varies (sigma', tau); the
    rank is then read off each occurrence.  ``upper`` marks fields whose weight
    is quoted for the all-upper form, so the lowered weight gains 2 per index.
    """

    name: str
    kinds: tuple[str, ...] | None
    symmetry: str
    weight: Coefficient
    role: str = "field"
    upper: bool = False
    jets: bool = True

    def base_kinds(self, rank: int) -> tuple[str, ...]:
        if self.kinds is None:
            return (TANGENT,) * rank
        if len(self.kinds) != rank:
            raise ValueError(f"{self.name} has rank {len(self.kinds)}, got {rank} indices")
        return self.kinds

    def lowered_weight(self, rank: int) -> Coefficient:
        return self.weight + 2 * rank if self.upper else self.weight


_REGISTRY: dict[str, FieldSymbol] = {}


class UnknownSymbol(KeyError):
    pass


def register(sym: FieldSymbol) -> FieldSymbol:
    old = _REGISTRY.get(sym.name)
    if old is not None and old != sym:
        raise ValueError(f"symbol {sym.name!r} already registered differently")
    _REGISTRY[sym.name] = sym
    return sym


def register_field(name: str, rank: int | None = 0, symmetry: str = SYM,
                   weight=0, upper: bool = False) -> FieldSymbol:
    kinds = None if rank is None else (TANGENT,) * rank
    if rank is not None and rank <= 1:
        symmetry = NONE
    return register(FieldSymbol(name, kinds, symmetry, coeff(weight), "field", upper))


def lookup(name: str) -> FieldSymbol:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownSymbol(name) from None


def is_registered(name: str) -> bool:
    return name in _REGISTRY


# built-in symbols
register(FieldSymbol("g", (TANGENT, TANGENT), SYM, FIELD(2), "metric", jets=False))
register(FieldSymbol("h", (TRACTOR, TRACTOR), SYM, FIELD(0), "metric", jets=False))
register(FieldSymbol("X", (TRACTOR,), NONE, FIELD(1), "projector", jets=False))
register(FieldSymbol("Y", (TRACTOR,), NONE, FIELD(-1), "projector", jets=False))
register(FieldSymbol("Z", (TRACTOR, TANGENT), NONE, FIELD(1), "projector", jets=False))
register(FieldSymbol("P", (TANGENT, TANGENT), SYM, FIELD(0), "curvature"))
register(FieldSymbol("J", (), NONE, FIELD(-2), "curvature"))
register(FieldSymbol("C", (TANGENT,) * 4, WEYL, FIELD(2), "curvature"))
register(FieldSymbol("A", (TANGENT,) * 3, NONE, FIELD(0), "curvature", jets=False))
register(FieldSymbol("f", (), NONE, W, "field"))
register(FieldSymbol("sigma", None, SYMTF, D, "field", upper=True))
register(FieldSymbol("tau", None, SYMTF, FIELD(0), "test"))
register(FieldSymbol("Upsilon", (), NONE, FIELD(0), "upsilon"))
register(FieldSymbol("Phi", (), NONE, FIELD(0), "upsilon"))
register(FieldSymbol("rho", (), NONE, W, "field"))
register(FieldSymbol("mu", (TANGENT,), NONE, W, "field"))

CURVATURE = frozenset({"P", "J", "C"})
PROJECTORS = frozenset({"X", "Y", "Z"})


def symmetry_elements(sym: FieldSymbol, rank: int) -> list[tuple[tuple[int, ...], int]]:
    """Signed permutations of the base slot groups that leave the field invariant."""
    if sym.symmetry == WEYL:
        out = []
        # generated by (01) sign -1, (23) sign -1, (02)(13) sign +1
        gens = [((1, 0, 2, 3), -1), ((0, 1, 3, 2), -1), ((2, 3, 0, 1), 1)]
        seen = {(0, 1, 2, 3): 1}
        frontier = [(0, 1, 2, 3)]
        while frontier:
            p = frontier.pop()
            for g, s in gens:
                q = tuple(p[i] for i in g)
                if q not in seen:
                    seen[q] = seen[p] * s
                    frontier.append(q)
        for p, s in sorted(seen.items()):
            out.append((p, s))
        return out
    ngroups = len(base_groups(sym, rank))
    return [(tuple(range(ngroups)), 1)]


def base_groups(sym: FieldSymbol, rank: int) -> list[tuple[int, ...]]:
    """Base slot positions (relative to the base) grouped into symmetric sets."""
    if rank == 0:
        return []
    if sym.symmetry in (SYM, SYMTF):
        return [tuple(range(rank))]
    return [(i,) for i in range(rank)]
