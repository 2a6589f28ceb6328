"""Wang-style tiling rules, validity checks, and the reduction to energy minimisation.

A tiling is a :class:`~timarginal.lattice.Pattern` whose values are tile
indices.  With the picture convention of the lattice module, the horizontal
constraint is on ``(f(x, y), f(x+1, y))`` and the vertical one on
``(f(x, y), f(x, y+1))``, i.e. (upper tile, lower tile).
"""
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional

from ..errors import DomainError, StructuralError
from ..hierarchy import Hamiltonian
from ..lattice import H, V, Pattern

WRAP_NONE = "none"
WRAP_HORIZONTAL = "horizontal"
WRAP_VERTICAL = "vertical"
WRAP_TORUS = "torus"
WRAPS = (WRAP_NONE, WRAP_HORIZONTAL, WRAP_VERTICAL, WRAP_TORUS)


class TilingRule:
    """Allowed horizontal and vertical neighbour pairs over tiles ``0..size-1``."""

    def __init__(self, size: int, horizontal, vertical):
        self.size = int(size)
        self.horizontal = frozenset(tuple(p) for p in horizontal)
        self.vertical = frozenset(tuple(p) for p in vertical)
        for a, b in self.horizontal | self.vertical:
            if not (0 <= a < self.size and 0 <= b < self.size):
                raise StructuralError(f"pair ({a}, {b}) references a tile outside 0..{self.size - 1}")

    @classmethod
    def all_pairs(cls, size: int) -> "TilingRule":
        pairs = set(product(range(size), repeat=2))
        return cls(size, pairs, pairs)

    @classmethod
    def unequal_neighbours(cls, size: int) -> "TilingRule":
        pairs = {(a, b) for a, b in product(range(size), repeat=2) if a != b}
        return cls(size, pairs, pairs)

    @classmethod
    def from_predicates(cls, size: int, h: Callable, v: Callable) -> "TilingRule":
        tiles = range(size)
        return cls(size, {(a, b) for a in tiles for b in tiles if h(a, b)},
                   {(a, b) for a in tiles for b in tiles if v(a, b)})

    def allows_h(self, a: int, b: int) -> bool:
        return (a, b) in self.horizontal

    def allows_v(self, upper: int, lower: int) -> bool:
        return (upper, lower) in self.vertical

    def __eq__(self, other):
        return (isinstance(other, TilingRule) and self.size == other.size
                and self.horizontal == other.horizontal and self.vertical == other.vertical)

    def __repr__(self):
        return f"TilingRule(size={self.size}, |T_h|={len(self.horizontal)}, |T_v|={len(self.vertical)})"

    def to_json(self) -> dict:
        return {"size": self.size, "horizontal": [list(p) for p in sorted(self.horizontal)],
                "vertical": [list(p) for p in sorted(self.vertical)]}

    @classmethod
    def from_json(cls, data: dict) -> "TilingRule":
        for key in ("size", "horizontal", "vertical"):
            if key not in data:
                raise StructuralError(f"tiling rule is missing field {key!r}")
        return cls(int(data["size"]), [tuple(p) for p in data["horizontal"]],
                   [tuple(p) for p in data["vertical"]])


@dataclass(frozen=True)
class TilingCheck:
    valid: bool
    violation: Optional[tuple] = None  # ("h" | "v", (x, y), (a, b))

    def __bool__(self):
        return self.valid


def is_valid_tiling(rule, grid: Pattern, wrap: str = WRAP_NONE) -> TilingCheck:
    """Whether every adjacent pair of ``grid`` obeys ``rule``.

    ``wrap`` chooses which edges are glued: none, the left/right edges, the
    top/bottom edges, or both (a torus).  ``rule`` may be any object with
    ``allows_h`` and ``allows_v`` methods and a ``size``.
    """
    if wrap not in WRAPS:
        raise DomainError(f"unknown wrap convention {wrap!r}; use one of {WRAPS}")
    rows = grid.rows
    m, n = grid.width, grid.height
    for row in rows:
        for a in row:
            if not 0 <= a < rule.size:
                raise DomainError(f"tile index {a} outside 0..{rule.size - 1}")
    wrap_x = wrap in (WRAP_HORIZONTAL, WRAP_TORUS)
    wrap_y = wrap in (WRAP_VERTICAL, WRAP_TORUS)
    for y in range(n):
        for x in range(m if wrap_x else m - 1):
            a, b = rows[y][x], rows[y][(x + 1) % m]
            if not rule.allows_h(a, b):
                return TilingCheck(False, ("h", (x, y), (a, b)))
    for y in range(n if wrap_y else n - 1):
        for x in range(m):
            a, b = rows[y][x], rows[(y + 1) % n][x]
            if not rule.allows_v(a, b):
                return TilingCheck(False, ("v", (x, y), (a, b)))
    return TilingCheck(True)


@dataclass(frozen=True)
class ReducedHamiltonian:
    """Indicator tables of a rule: ``maximize`` reaches 2 per site exactly when
    the rule tiles the plane; ``minimize`` is its negation (min -2)."""

    maximize: Hamiltonian
    minimize: Hamiltonian


def rule_to_hamiltonian(rule: TilingRule) -> ReducedHamiltonian:
    """F_h(a, b) = 1 on allowed horizontal pairs, F_v(a, b) = 1 on allowed
    vertical pairs (a above b), and 0 elsewhere."""
    size = rule.size
    fh = {(a, b): 1 for a, b in rule.horizontal}
    # region v lists the upper site first
    fv = {(a, b): 1 for a, b in rule.vertical}
    hmax = Hamiltonian(size, [(H, fh), (V, fv)])
    return ReducedHamiltonian(hmax, hmax.negated())


@dataclass(frozen=True)
class SearchResult:
    pattern: Optional[Pattern]
    partial: bool = False
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.pattern is not None


def _cyclic_rows(rule: TilingRule, m: int, budget: list):
    """All rows of width m that are valid with horizontal wrap-around."""
    out = []
    row = []

    def extend():
        if budget[0] <= 0:
            return
        budget[0] -= 1
        if len(row) == m:
            if rule.allows_h(row[-1], row[0]):
                out.append(tuple(row))
            return
        for a in range(rule.size):
            if not row or rule.allows_h(row[-1], a):
                row.append(a)
                extend()
                row.pop()

    extend()
    return out


def periodic_tiling_search(rule: TilingRule, max_period: int, *, budget: int = 10 ** 6) -> SearchResult:
    """Look for a torus-valid m x n pattern with m, n <= max_period.

    Shapes are tried by increasing area.  Finding nothing is not a proof
    that the rule admits no tiling at all; it only rules out small periods.
    ``budget`` caps the number of search nodes; hitting it sets ``partial``.
    """
    left = [budget]
    shapes = sorted(((m, n) for m in range(1, max_period + 1) for n in range(1, max_period + 1)),
                    key=lambda s: (s[0] * s[1], s[1], s[0]))
    row_cache = {}
    for m, n in shapes:
        if m not in row_cache:
            row_cache[m] = _cyclic_rows(rule, m, left)
        rows = row_cache[m]
        below = {r: [s for s in rows if all(rule.allows_v(a, b) for a, b in zip(r, s))] for r in rows}
        stack = []

        def grow():
            if left[0] <= 0:
                return None
            left[0] -= 1
            if len(stack) == n:
                if stack[0] in below[stack[-1]]:
                    return list(stack)
                return None
            options = rows if not stack else below[stack[-1]]
            for r in options:
                stack.append(r)
                hit = grow()
                if hit:
                    return hit
                stack.pop()
            return None

        hit = grow()
        if hit:
            return SearchResult(Pattern(rule.size, tuple(hit)), False, budget - left[0])
        if left[0] <= 0:
            return SearchResult(None, True, budget)
    return SearchResult(None, False, budget - left[0])
