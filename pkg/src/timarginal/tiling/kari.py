"""Tiles that simulate an affine map z -> M z + c on a union of unit squares.

A tile carries a region index (1-based), integer top and bottom vectors and
rational left and right vectors with ``f(t) + l = b + r``.  Horizontal
neighbours share the region and glue ``r`` to ``l``; vertical neighbours
glue ``b`` of the upper tile to ``t`` of the lower one.  A row of tiles built
from a point ``v`` encodes ``v`` through the Beatty differences of ``k v``,
and the row below encodes ``f(v)``.

Everything here is exact except :func:`curve_point`, which evaluates the
analytic limit curve in floating point.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Iterable, Iterator, Optional, Sequence

from ..errors import DomainError, StructuralError
from ..rational import fmt, to_rational
from .wang import TilingRule

Vec = tuple


def _vec(v) -> Vec:
    v = tuple(to_rational(x) for x in v)
    if len(v) != 2:
        raise StructuralError(f"expected a 2-vector, got {v}")
    return v


def _lcm(*nums) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), nums, 1)


@dataclass(frozen=True)
class KariSystem:
    """Affine map ``f(z) = M z + c`` and unit squares given by lower-left corners."""

    M: tuple
    c: tuple
    regions: tuple

    def __post_init__(self):
        M = tuple(_vec(row) for row in self.M)
        if len(M) != 2:
            raise StructuralError("M must be 2 x 2")
        c = _vec(self.c)
        regions = tuple(tuple(int(a) for a in r) for r in self.regions)
        if not regions:
            raise StructuralError("at least one region is required")
        if len(set(regions)) != len(regions) or any(len(r) != 2 for r in regions):
            raise StructuralError("regions must be distinct integer corners (m, n)")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "regions", regions)

    @classmethod
    def rotation(cls) -> "KariSystem":
        """Rotation by arccos(4/5) about (-1/5, 2/5) on [-1, 0] x [0, 1] and [0, 1]^2."""
        F = Fraction
        return cls(((F(4, 5), F(-3, 5)), (F(3, 5), F(4, 5))), (F(1, 5), F(1, 5)),
                   ((-1, 0), (0, 0)))

    def f(self, z) -> Vec:
        (a, b), (c, d) = self.M
        x, y = z
        return (a * x + b * y + self.c[0], c * x + d * y + self.c[1])

    def f_inverse(self, z) -> Vec:
        (a, b), (c, d) = self.M
        det = a * d - b * c
        if det == 0:
            raise DomainError("M is singular; f has no inverse")
        x, y = z[0] - self.c[0], z[1] - self.c[1]
        return ((d * x - b * y) / det, (-c * x + a * y) / det)

    def corners(self, i: int) -> tuple:
        """U^i for the 1-based region index ``i``."""
        m, n = self.regions[i - 1]
        return ((m, n), (m + 1, n), (m, n + 1), (m + 1, n + 1))

    def all_corners(self) -> tuple:
        return tuple(sorted({p for i in range(1, len(self.regions) + 1) for p in self.corners(i)}))

    def region_of(self, z) -> Optional[int]:
        """Smallest 1-based index of a closed square containing ``z``, else None."""
        for i, (m, n) in enumerate(self.regions, start=1):
            if m <= z[0] <= m + 1 and n <= z[1] <= n + 1:
                return i
        return None

    def to_json(self) -> dict:
        return {"M": [[fmt(v) for v in row] for row in self.M], "c": [fmt(v) for v in self.c],
                "regions": [list(r) for r in self.regions]}

    @classmethod
    def from_json(cls, data: dict) -> "KariSystem":
        for key in ("M", "c", "regions"):
            if key not in data:
                raise StructuralError(f"system is missing field {key!r}")
        return cls(tuple(tuple(row) for row in data["M"]), tuple(data["c"]),
                   tuple(tuple(r) for r in data["regions"]))


@dataclass(frozen=True, order=True)
class Tile:
    region: int
    t: Vec
    b: Vec
    l: Vec
    r: Vec

    @property
    def key(self) -> tuple:
        return (self.t, self.b, self.l, self.r)

    def is_consistent(self, sys: KariSystem) -> bool:
        ft = sys.f(self.t)
        return all(ft[s] + self.l[s] == self.b[s] + self.r[s] for s in range(2))

    def to_json(self) -> dict:
        return {"region": self.region, "t": list(self.t), "b": list(self.b),
                "l": [fmt(v) for v in self.l], "r": [fmt(v) for v in self.r]}

    @classmethod
    def from_json(cls, data: dict) -> "Tile":
        return cls(int(data["region"]), tuple(int(v) for v in data["t"]),
                   tuple(int(v) for v in data["b"]), _vec(data["l"]), _vec(data["r"]))


def left_vector_bounds(sys: KariSystem) -> list:
    """Per coordinate s: (m_s, mu_minus_s, mu_plus_s)."""
    out = []
    for s in range(2):
        row = sys.M[s]
        m_s = _lcm(*(v.denominator for v in row), sys.c[s].denominator)
        lo = -sum((v for v in row if v > 0), Fraction(0)) + sys.c[s]
        hi = 1 - sum((v for v in row if v < 0), Fraction(0)) + sys.c[s]
        out.append((m_s, lo, hi))
    return out


def _grid(m_s: int, lo: Fraction, hi: Fraction) -> list:
    start = math.ceil(lo * m_s)
    stop = math.floor(hi * m_s)
    return [Fraction(k, m_s) for k in range(start, stop + 1)]


def kari_left_vector_set(sys: KariSystem) -> frozenset:
    """The finite grid L of admissible left (and right) vectors."""
    (m1, lo1, hi1), (m2, lo2, hi2) = left_vector_bounds(sys)
    return frozenset(product(_grid(m1, lo1, hi1), _grid(m2, lo2, hi2)))


def kari_alphabet(sys: KariSystem, *, labeled: bool = False) -> list:
    """All tiles with t in some U^i, b in the union of the U^j and l, r in L.

    By default a tile is identified by its four vectors; a top vector on a
    corner shared by several squares is labelled with the smallest region
    index.  ``labeled=True`` instead keeps one tile per (region, t) pair, so
    shared corners appear once for each square that contains them.  The
    output is sorted.
    """
    L = kari_left_vector_set(sys)
    bottoms = sys.all_corners()
    lefts = sorted(L)
    if labeled:
        tops = [(i, t) for i in range(1, len(sys.regions) + 1) for t in sys.corners(i)]
    else:
        tops = [(sys.region_of(t), t) for t in bottoms]
    tiles = []
    for i, t in tops:
        ft = sys.f(t)
        for b in bottoms:
            shift = (ft[0] - b[0], ft[1] - b[1])
            for l in lefts:
                r = (shift[0] + l[0], shift[1] + l[1])
                if r in L:
                    tiles.append(Tile(i, t, b, l, r))
    return sorted(tiles)


def alphabet_contains(alphabet: Iterable[Tile], tile: Tile, sys: KariSystem) -> bool:
    """Membership up to the region label of tiles whose top lies on a shared corner."""
    keys = alphabet if isinstance(alphabet, (set, frozenset)) else {a.key for a in alphabet}
    return tile.key in keys and tile.t in sys.corners(tile.region)


def kari_rule(alphabet: Sequence[Tile]) -> TilingRule:
    """The two Kari adjacency rules over the indices of ``alphabet``."""
    by_left = {}
    by_top = {}
    for j, tile in enumerate(alphabet):
        by_left.setdefault((tile.region, tile.l), []).append(j)
        by_top.setdefault(tile.t, []).append(j)
    h, v = set(), set()
    for j, tile in enumerate(alphabet):
        for k in by_left.get((tile.region, tile.r), ()):
            h.add((j, k))
        for k in by_top.get(tile.b, ()):
            v.add((j, k))
    return TilingRule(len(alphabet), h, v)


def is_valid_kari_grid(grid: Sequence[Sequence[Tile]]) -> bool:
    for y, row in enumerate(grid):
        for x, tile in enumerate(row):
            if x + 1 < len(row):
                right = row[x + 1]
                if right.region != tile.region or right.l != tile.r:
                    return False
            if y + 1 < len(grid) and grid[y + 1][x].t != tile.b:
                return False
    return True


# ---------------------------------------------------------------- Beatty encodings

def beatty_A(v, k: int) -> tuple:
    v = _vec(v)
    return (math.floor(k * v[0]), math.floor(k * v[1]))


def beatty_row(v, k_range) -> list:
    """B_k(v) = floor(k v) - floor((k-1) v) for each k in ``k_range``."""
    v = _vec(v)
    out = []
    for k in k_range:
        a, b = beatty_A(v, k), beatty_A(v, k - 1)
        out.append((a[0] - b[0], a[1] - b[1]))
    return out


class _Point:
    """A rational point stored as integer numerators over one shared denominator.

    Iterating f multiplies the denominator by the common denominator of M and
    c without any gcd reduction; floors stay cheap because quotients are small.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den

    @classmethod
    def of(cls, z) -> "_Point":
        z = _vec(z)
        den = _lcm(z[0].denominator, z[1].denominator)
        return cls((int(z[0] * den), int(z[1] * den)), den)

    def fraction(self) -> Vec:
        return (Fraction(self.num[0], self.den), Fraction(self.num[1], self.den))


def _stepper(sys: KariSystem):
    D = _lcm(*(v.denominator for row in sys.M for v in row), *(v.denominator for v in sys.c))
    (a, b), (c, d) = [[int(v * D) for v in row] for row in sys.M]
    c0, c1 = int(sys.c[0] * D), int(sys.c[1] * D)

    def step(p: _Point) -> _Point:
        x, y = p.num
        return _Point((a * x + b * y + c0 * p.den, c * x + d * y + c1 * p.den), p.den * D)

    return step


def _in_region(sys: KariSystem, p: _Point) -> Optional[int]:
    x, y = p.num
    q = p.den
    for i, (m, n) in enumerate(sys.regions, start=1):
        if m * q <= x <= (m + 1) * q and n * q <= y <= (n + 1) * q:
            return i
    return None


def orbit(z, j_range, sys: KariSystem = None) -> list:
    """Exact points f^j(z) for j in ``j_range`` (negative j uses the inverse map)."""
    sys = sys or KariSystem.rotation()
    z = _vec(z)
    js = list(j_range)
    if not js:
        return []
    cache = {0: z}
    lo, hi = min(js + [0]), max(js + [0])
    cur = z
    for j in range(1, hi + 1):
        cur = sys.f(cur)
        cache[j] = cur
    cur = z
    for j in range(-1, lo - 1, -1):
        cur = sys.f_inverse(cur)
        cache[j] = cur
    return [cache[j] for j in js]


C_HAT = (Fraction(-1, 5), Fraction(2, 5))
IMMORTAL_RADIUS_SQ = Fraction(4, 25)


def immortal(z, sys: KariSystem = None) -> bool:
    """Whether the orbit of ``z`` stays in the squares forever (rotation system only).

    The map is a rotation about (-1/5, 2/5) by an irrational angle, so the
    orbit is dense on its circle and survives iff the circle fits: distance
    at most 2/5.
    """
    if sys is not None and sys != KariSystem.rotation():
        raise DomainError("the disk criterion only holds for the rotation system; use orbit()")
    z = _vec(z)
    dx, dy = z[0] - C_HAT[0], z[1] - C_HAT[1]
    return dx * dx + dy * dy <= IMMORTAL_RADIUS_SQ


def _floors(p: _Point, k0: int, count: int) -> list:
    """floor(k p) for k = k0 .. k0 + count - 1, using only additions after the first."""
    q = p.den
    out_x, out_y = [], []
    for num, out in ((p.num[0], out_x), (p.num[1], out_y)):
        whole, frac = divmod(num, q)
        quot, rem = divmod(k0 * num, q)
        for _ in range(count):
            out.append(quot)
            quot += whole
            rem += frac
            if rem >= q:
                rem -= q
                quot += 1
    return list(zip(out_x, out_y))


class _RowBuilder:
    """Builds tile rows with integer arithmetic and interned l/r vectors."""

    def __init__(self, sys: KariSystem):
        self.sys = sys
        D = _lcm(*(v.denominator for row in sys.M for v in row), *(v.denominator for v in sys.c))
        self.D = D
        self.M = [[int(v * D) for v in row] for row in sys.M]
        self.c = [int(v * D) for v in sys.c]
        self._vectors = {}
        self._tiles = {}

    def _vector(self, nx: int, ny: int) -> Vec:
        key = (nx, ny)
        vec = self._vectors.get(key)
        if vec is None:
            vec = (Fraction(nx, self.D), Fraction(ny, self.D))
            self._vectors[key] = vec
        return vec

    def _side(self, A, F, k) -> Vec:
        # f(A_k(v)) - A_k(f(v)) + k c, scaled by D
        (a, b), (c, d) = self.M
        D = self.D
        return self._vector(a * A[0] + b * A[1] - D * F[0] + (k + 1) * self.c[0],
                            c * A[0] + d * A[1] - D * F[1] + (k + 1) * self.c[1])

    def row(self, region: int, floors_v: list, floors_fv: list, k0: int) -> list:
        row = []
        A_prev, F_prev = floors_v[0], floors_fv[0]
        l = self._side(A_prev, F_prev, k0 - 1)
        for j in range(1, len(floors_v)):
            A_k, F_k = floors_v[j], floors_fv[j]
            t = (A_k[0] - A_prev[0], A_k[1] - A_prev[1])
            bot = (F_k[0] - F_prev[0], F_k[1] - F_prev[1])
            r = self._side(A_k, F_k, k0 + j - 1)
            key = (region, t, bot, l, r)
            tile = self._tiles.get(key)
            if tile is None:
                tile = Tile(region, t, bot, l, r)
                self._tiles[key] = tile
            row.append(tile)
            A_prev, F_prev, l = A_k, F_k, r
        return row


def kari_rows(sys: KariSystem, v, n: int, m: int, k_offset: int = 1) -> Iterator[list]:
    """Lazily yield the n rows of :func:`kari_strip_tiling`."""
    step = _stepper(sys)
    builder = _RowBuilder(sys)
    cur = _Point.of(v)
    nxt = step(cur)
    region = _in_region(sys, cur)
    floors_cur = _floors(cur, k_offset - 1, m + 1)
    for j in range(n):
        if region is None:
            raise DomainError(f"row {j}: f^{j}(v) = {tuple(map(fmt, cur.fraction()))} leaves the regions")
        if _in_region(sys, nxt) is None:
            raise DomainError(f"row {j}: f^{j + 1}(v) = {tuple(map(fmt, nxt.fraction()))} "
                              f"leaves the regions, so the bottom labels are undefined")
        floors_nxt = _floors(nxt, k_offset - 1, m + 1)
        yield builder.row(region, floors_cur, floors_nxt, k_offset)
        cur, nxt = nxt, step(nxt)
        floors_cur = floors_nxt
        region = _in_region(sys, cur)


def kari_strip_tiling(sys: KariSystem, v, n: int, m: int, k_offset: int = 1) -> list:
    """An n x m grid of tiles whose row j encodes f^j(v), columns k_offset..k_offset+m-1.

    Row j carries the smallest region index containing f^j(v).
    """
    return list(kari_rows(sys, v, n, m, k_offset))


# ---------------------------------------------------------------- witnesses

@dataclass(frozen=True)
class WitnessPoint:
    omega: object
    eta: object

    def as_floats(self) -> tuple:
        return (float(self.omega), float(self.eta))


def witnesses(grid: Iterable[Sequence[Tile]], *, coordinate: int = 0, region: int = 2,
              shift=Fraction(1, 5)) -> WitnessPoint:
    """Exact averages of (t_coord + shift) * [region] and of [region] over the grid.

    The defaults give the witnesses used for the rotation system: first
    coordinate of the top vector, the right-hand square, shift 1/5.  The
    average is uncentred, over every tile of ``grid`` (which may be a lazy
    iterable of rows).
    """
    shift = to_rational(shift)
    count = 0
    hits = 0
    total = 0  # t entries are integers
    for row in grid:
        count += len(row)
        for tile in row:
            if tile.region == region:
                hits += 1
                total += tile.t[coordinate]
    if count == 0:
        raise DomainError("empty grid")
    return WitnessPoint((total + hits * shift) / count, Fraction(hits, count))


def curve_point(mu) -> tuple:
    """The limit (omega, eta) for orbits at distance mu from the centre (float)."""
    mu = float(mu)
    if not 0.2 - 1e-12 <= mu <= 0.4 + 1e-12:
        raise DomainError(f"mu = {mu} outside [1/5, 2/5]")
    ratio = min(1.0, 1.0 / (5.0 * mu))
    return (mu / math.pi * math.sqrt(max(0.0, 1.0 - ratio * ratio)), math.acos(ratio) / math.pi)


def circle_point(mu, cos_sin=(Fraction(3, 5), Fraction(4, 5))) -> Vec:
    """A rational point at exact distance ``mu`` from the rotation centre."""
    mu = to_rational(mu)
    cs, sn = (to_rational(v) for v in cos_sin)
    if cs * cs + sn * sn != 1:
        raise DomainError("cos_sin must lie on the unit circle")
    return (C_HAT[0] + mu * cs, C_HAT[1] + mu * sn)


def sampled_witness(mu, rows: int, cols: int = 201, *, cos_sin=(Fraction(3, 5), Fraction(4, 5)),
                    sys: KariSystem = None) -> WitnessPoint:
    """Witnesses of the strip built from :func:`circle_point`, streamed row by row.

    Columns are centred on k = 0, which cancels the 1/(2 cols) bias that
    one-sided column ranges put on the row averages of t.
    """
    sys = sys or KariSystem.rotation()
    return witnesses(kari_rows(sys, circle_point(mu, cos_sin), rows, cols, -(cols // 2)))


def orbit_region_average(z, N: int, region: int = 2, sys: KariSystem = None) -> Fraction:
    """Fraction of f^1(z) .. f^N(z) lying in ``region`` (closed square, smallest index)."""
    sys = sys or KariSystem.rotation()
    step = _stepper(sys)
    cur = _Point.of(z)
    hits = 0
    for _ in range(N):
        cur = step(cur)
        if _in_region(sys, cur) == region:
            hits += 1
    return Fraction(hits, N)
