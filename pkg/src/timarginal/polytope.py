"""Exact polytopes: double description, LP-probe projection, symmetry classes.

Inequalities are stored as ``(normal, offset)`` meaning ``normal . x <= offset``;
equations as ``(normal, offset)`` meaning equality.  All arithmetic is exact.
"""
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Optional, Sequence

from . import exactlp
from .errors import DomainError, ResourceError, StructuralError
from .exactlp import EQ, FREE, GE, LinearProgram
from .hierarchy import DEFAULT_BUDGET, _check_budget, _lti_rows, _projection
from .lattice import Region, index_config, config_index, rect
from .rational import fmt, to_rational


# ---------------------------------------------------------------- linear algebra

def rref(rows: Sequence[Sequence]) -> tuple:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    mat = [[Fraction(v) for v in r] for r in rows]
    pivots = []
    if not mat:
        return [], []
    ncols = len(mat[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def null_space(rows: Sequence[Sequence], ncols: int) -> list:
    """A basis of {e : rows . e = 0}."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    reduced, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def _primitive(vec) -> tuple:
    """Scale a rational vector to a primitive integer vector (same direction)."""
    den = 1
    for v in vec:
        v = Fraction(v)
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(Fraction(v) * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    return tuple(v // g for v in ints) if g else tuple(ints)


def normalize_inequality(normal, offset) -> tuple:
    """Canonical form: integer primitive normal with rational offset scaled alike."""
    normal = [Fraction(v) for v in normal]
    offset = Fraction(offset)
    ints = _primitive(normal)
    nz = next((i for i, v in enumerate(normal) if v), None)
    if nz is None:
        return tuple(ints), offset
    scale = Fraction(ints[nz]) / normal[nz]
    return tuple(Fraction(v) for v in ints), offset * scale


def _dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


# ---------------------------------------------------------------- double description

def extreme_rays(rows: Sequence[Sequence[int]], dim: int, *, max_rays: int = 10 ** 6) -> list:
    """Extreme rays of the pointed cone {y : A y >= 0} by double description.

    Rows are integer vectors.  Adjacency of two rays is decided
    combinatorially: they are adjacent when no third ray is tight on every
    constraint they share.
    """
    rows = [tuple(int(v) for v in r) for r in rows]
    if any(len(r) != dim for r in rows):
        raise StructuralError("constraint rows must all have length dim")
    # initial simplicial cone from dim independent rows
    chosen = []
    basis = []
    for i, r in enumerate(rows):
        trial = basis + [list(r)]
        if rank(trial) == len(trial):
            basis = trial
            chosen.append(i)
            if len(chosen) == dim:
                break
    if len(chosen) < dim:
        raise DomainError("cone is not pointed (constraint rank below dimension)")
    inv = _inverse([[Fraction(v) for v in rows[i]] for i in chosen])
    rays = []
    for j in range(dim):
        vec = _primitive([inv[i][j] for i in range(dim)])
        mask = 0
        for k, i in enumerate(chosen):
            if k != j:
                mask |= 1 << i
        rays.append((vec, mask))
    done = set(chosen)
    for i, row in enumerate(rows):
        if i in done:
            continue
        bit = 1 << i
        pos, neg, zero = [], [], []
        for vec, mask in rays:
            val = sum(a * b for a, b in zip(row, vec))
            if val > 0:
                pos.append((vec, mask, val))
            elif val < 0:
                neg.append((vec, mask, val))
            else:
                zero.append((vec, mask | bit))
        if not neg:
            rays = [(v, m) for v, m, _ in pos] + zero
            continue
        masks = [m for _, m in rays]
        new = []
        need = dim - 2
        for vp, mp, ap in pos:
            for vn, mn, an in neg:
                common = mp & mn
                if bin(common).count("1") < need:
                    continue
                adjacent = True
                for m in masks:
                    if m & common == common and m != mp and m != mn:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vec = _primitive([ap * b - an * a for a, b in zip(vp, vn)])
                new.append((vec, common | bit))
        rays = [(v, m) for v, m, _ in pos] + zero + new
        if len(rays) > max_rays:
            raise ResourceError(f"double description exceeded {max_rays} rays",
                                needed=len(rays), budget=max_rays)
        done.add(i)
    return sorted(v for v, _ in rays)


def _inverse(mat):
    n = len(mat)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(mat)]
    reduced, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise DomainError("matrix is singular")
    return [r[n:] for r in reduced]


def _integer_row(vec) -> tuple:
    """Positive rescaling of a rational vector to integers."""
    den = 1
    for v in vec:
        v = Fraction(v)
        den = den * v.denominator // gcd(den, v.denominator)
    return tuple(int(Fraction(v) * den) for v in vec)


def affine_hull(points: Sequence[Sequence]) -> tuple:
    """Return (pivot coordinates, equations) of the affine hull of ``points``.

    The pivot coordinates form a coordinate chart of the hull: projecting
    onto them is injective on it.
    """
    points = [tuple(Fraction(v) for v in p) for p in points]
    base = points[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    dim = len(base)
    _, pivots = rref(diffs) if diffs else ([], [])
    eqs = []
    for e in null_space(diffs, dim) if diffs else null_space([], dim):
        normal, _ = normalize_inequality(e, 0)
        eqs.append((normal, _dot(normal, base)))
    return pivots, eqs


def hull(points: Sequence[Sequence]) -> tuple:
    """Facets, equations and vertices of conv(points)."""
    pts = sorted(set(tuple(Fraction(v) for v in p) for p in points))
    if not pts:
        raise DomainError("empty point set")
    pivots, eqs = affine_hull(pts)
    k = len(pivots)
    if k == 0:
        return [], eqs, pts
    cone_rows = [_integer_row([1] + [p[s] for s in pivots]) for p in pts]
    rays = extreme_rays(cone_rows, k + 1)
    facets = []
    dim = len(pts[0])
    for ray in rays:
        beta, alpha = ray[0], ray[1:]
        normal = [Fraction(0)] * dim
        for s, a in zip(pivots, alpha):
            normal[s] = Fraction(-a)
        facets.append(normalize_inequality(normal, beta))
    facets = sorted(set(facets))
    verts = []
    for p in pts:
        tight = [[n[s] for s in pivots] for n, b in facets if _dot(n, p) == b]
        if len(tight) >= k and rank(tight) == k:
            verts.append(p)
    return facets, eqs, verts


def vertices_from_inequalities(ineqs, eqs, dim: int) -> list:
    """Vertices of the bounded polyhedron {a.x <= b, e.x = f}."""
    rows = [_integer_row([Fraction(b)] + [-Fraction(a) for a in n]) for n, b in ineqs]
    for n, f in eqs:
        rows.append(_integer_row([Fraction(f)] + [-Fraction(a) for a in n]))
        rows.append(_integer_row([-Fraction(f)] + [Fraction(a) for a in n]))
    rows.append(tuple([1] + [0] * dim))
    try:
        rays = extreme_rays(rows, dim + 1)
    except DomainError:
        raise DomainError("polyhedron is unbounded or has a lineality space") from None
    verts = []
    for ray in rays:
        if ray[0] == 0:
            raise DomainError("polyhedron is unbounded")
        verts.append(tuple(Fraction(v, ray[0]) for v in ray[1:]))
    return sorted(set(verts))


# ---------------------------------------------------------------- polytope type

@dataclass
class Polytope:
    ambient_dim: int
    h_rep: Optional[list] = None
    v_rep: Optional[list] = None
    equations: list = field(default_factory=list)
    probes: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_points(cls, points) -> "Polytope":
        facets, eqs, verts = hull(points)
        return cls(len(verts[0]), facets, verts, eqs)

    @classmethod
    def from_inequalities(cls, ineqs, eqs=(), dim: int = None) -> "Polytope":
        ineqs = [normalize_inequality(n, b) for n, b in ineqs]
        if dim is None:
            dim = len(ineqs[0][0]) if ineqs else len(eqs[0][0])
        verts = vertices_from_inequalities(ineqs, list(eqs), dim)
        return cls(dim, None, verts, [normalize_inequality(n, f) for n, f in eqs]).completed()

    def completed(self) -> "Polytope":
        """Fill in a minimal H-representation from the vertices."""
        facets, eqs, verts = hull(self.v_rep)
        return Polytope(self.ambient_dim, facets, verts, eqs, dict(self.probes))

    @property
    def dimension(self) -> int:
        if not self.v_rep:
            raise DomainError("dimension needs a vertex list")
        return len(affine_hull(self.v_rep)[0])

    def contains(self, x) -> bool:
        x = [to_rational(v) for v in x]
        if self.h_rep is None:
            raise DomainError("membership needs an H-representation")
        return (all(_dot(n, x) == f for n, f in self.equations)
                and all(_dot(n, x) <= b for n, b in self.h_rep))

    def vertex_set(self) -> frozenset:
        return frozenset(tuple(v) for v in self.v_rep)

    def to_json(self) -> dict:
        out = {"dim": self.ambient_dim}
        if self.v_rep is not None:
            out["vertices"] = [[fmt(v) for v in p] for p in self.v_rep]
        if self.h_rep is not None:
            out["facets"] = [{"normal": [fmt(v) for v in n], "offset": fmt(b)} for n, b in self.h_rep]
        if self.equations:
            out["equations"] = [{"normal": [fmt(v) for v in n], "offset": fmt(b)}
                                for n, b in self.equations]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Polytope":
        if "dim" not in data:
            raise StructuralError("polytope is missing field 'dim'")
        dim = int(data["dim"])
        verts = None
        if "vertices" in data:
            verts = [tuple(to_rational(v) for v in p) for p in data["vertices"]]
            if any(len(p) != dim for p in verts):
                raise StructuralError("vertex length differs from 'dim'")
        facets = None
        if "facets" in data:
            facets = [(tuple(to_rational(v) for v in f["normal"]), to_rational(f["offset"]))
                      for f in data["facets"]]
        eqs = [(tuple(to_rational(v) for v in f["normal"]), to_rational(f["offset"]))
               for f in data.get("equations", [])]
        return cls(dim, facets, verts, eqs)


FACET = "facet"
VALID = "valid-but-not-facet"
VIOLATED = "violated"


def verify_facet(p: Polytope, normal, offset) -> tuple:
    """Classify ``normal . x <= offset`` against ``p``; returns (verdict, witness)."""
    if not p.v_rep:
        raise DomainError("verify_facet needs the vertex list")
    normal = [to_rational(v) for v in normal]
    offset = to_rational(offset)
    if len(normal) != p.ambient_dim:
        raise StructuralError(f"normal has length {len(normal)}, polytope lives in {p.ambient_dim}")
    values = [_dot(normal, v) for v in p.v_rep]
    top = max(values)
    if top > offset:
        return VIOLATED, p.v_rep[values.index(top)]
    tight = [v for v, val in zip(p.v_rep, values) if val == offset]
    if not tight or len(tight) == len(p.v_rep):
        return VALID, None
    face_dim = len(affine_hull(tight)[0])
    return (FACET, None) if face_dim == p.dimension - 1 else (VALID, None)


# ---------------------------------------------------------------- symmetry groups

class SymmetryGroup:
    """A permutation group on coordinate indices, closed eagerly from generators.

    A permutation ``g`` sends coordinate ``i`` of a point to position ``g[i]``.
    """

    def __init__(self, generators, size: int = None):
        gens = [tuple(g) for g in generators]
        if size is None:
            size = len(gens[0]) if gens else 0
        for g in gens:
            if len(g) != size or sorted(g) != list(range(size)):
                raise DomainError(f"generator {g} is not a permutation of range({size})")
        self.size = size
        self.generators = tuple(gens)
        identity = tuple(range(size))
        elements = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    comp = tuple(g[h[i]] for i in range(size))
                    if comp not in elements:
                        elements.add(comp)
                        nxt.append(comp)
            frontier = nxt
        self.elements = tuple(sorted(elements))

    def __len__(self):
        return len(self.elements)

    @staticmethod
    def apply(g, point) -> tuple:
        out = [None] * len(point)
        for i, v in enumerate(point):
            out[g[i]] = v
        return tuple(out)

    def orbit(self, point) -> set:
        return {self.apply(g, point) for g in self.elements}


D4 = {
    "identity": ((1, 0), (0, 1)),
    "rot90": ((0, -1), (1, 0)),
    "rot180": ((-1, 0), (0, -1)),
    "rot270": ((0, 1), (-1, 0)),
    "flip_x": ((-1, 0), (0, 1)),
    "flip_y": ((1, 0), (0, -1)),
    "transpose": ((0, 1), (1, 0)),
    "antitranspose": ((0, -1), (-1, 0)),
}


def coordinate_layout(d: int, targets: Sequence[Region]) -> list:
    """(region index, configuration) for every concatenated coordinate."""
    out = []
    for r, region in enumerate(targets):
        size = len(region)
        out.extend((r, index_config(k, d, size)) for k in range(d ** size))
    return out


def lattice_permutation(d: int, targets: Sequence[Region], matrix=None, relabel=None) -> tuple:
    """Coordinate permutation induced by a lattice map and an outcome relabelling.

    Raises DomainError if the image of some target is not a translate of a target.
    """
    matrix = matrix or D4["identity"]
    norm = [t.normalized() for t in targets]
    offsets = []
    start = 0
    for t in targets:
        offsets.append(start)
        start += d ** len(t)
    perm = [None] * start
    for r, region in enumerate(targets):
        image = region.transform(matrix)
        target = image.normalized()
        try:
            r2 = norm.index(target)
        except ValueError:
            raise DomainError(f"image of {region} is not a translate of any target") from None
        img_pos = {site: i for i, site in enumerate(image.sites)}
        # site j of region maps to image site matrix @ site
        (a, b), (c, e) = matrix
        where = [img_pos[(a * x + b * y, c * x + e * y)] for x, y in region.sites]
        for k in range(d ** len(region)):
            config = index_config(k, d, len(region))
            new = [None] * len(region)
            for j, v in enumerate(config):
                new[where[j]] = relabel[v] if relabel is not None else v
            perm[offsets[r] + k] = offsets[r2] + config_index(new, d)
    return tuple(perm)


def lattice_symmetry_group(d: int, targets: Sequence[Region], *, rotations: bool = True,
                           reflections: bool = True, relabelings: bool = True) -> SymmetryGroup:
    """Group generated by the requested lattice maps and all outcome permutations."""
    gens = []
    if rotations:
        gens.append(lattice_permutation(d, targets, D4["rot90"]))
    if reflections:
        gens.append(lattice_permutation(d, targets, D4["flip_x"]))
        gens.append(lattice_permutation(d, targets, D4["flip_y"]))
    if relabelings and d > 1:
        gens.append(lattice_permutation(d, targets, relabel=[1, 0] + list(range(2, d))))
        if d > 2:
            gens.append(lattice_permutation(d, targets, relabel=list(range(1, d)) + [0]))
    size = sum(d ** len(t) for t in targets)
    return SymmetryGroup(gens, size)


def quotient_classes(p: Polytope, g: SymmetryGroup) -> list:
    """Orbits of the vertices under ``g``, each as (representative, sorted members).

    The representative is the lexicographically least orbit element; classes
    are sorted by representative.
    """
    if p.v_rep is None:
        raise DomainError("quotient_classes needs the vertex list")
    if g.size != p.ambient_dim:
        raise DomainError(f"group acts on {g.size} coordinates, polytope has {p.ambient_dim}")
    remaining = set(tuple(v) for v in p.v_rep)
    classes = []
    while remaining:
        v = min(remaining)
        orbit = g.orbit(v)
        if not orbit <= set(tuple(w) for w in p.v_rep):
            raise DomainError("group does not preserve the vertex set")
        remaining -= orbit
        members = sorted(orbit)
        classes.append((members[0], members))
    return sorted(classes)


# ---------------------------------------------------------------- LTI projection

@dataclass(frozen=True)
class _StripLP:
    d: int
    n: int
    t: int
    lp: LinearProgram
    proj: tuple  # per target coordinate: the strip variables summing to it
    dim: int

    def objective_for(self, weights) -> list:
        obj = [Fraction(0)] * self.lp.num_vars
        for w, members in zip(weights, self.proj):
            if w:
                for v in members:
                    obj[v] += w
        return obj

    def project(self, x) -> tuple:
        return tuple(sum((x[v] for v in members), Fraction(0)) for members in self.proj)

    def maximize(self, weights):
        cert = exactlp.maximize(self.lp, self.objective_for(weights))
        if cert.kind != exactlp.OPTIMAL:
            raise RuntimeError(f"strip LP returned {cert.kind}")
        return cert.value, self.project(cert.primal_point)


def _strip_lp(d: int, strip, targets, budget: int) -> _StripLP:
    n, t = strip
    _check_budget(d, n * t, budget)
    box = rect(n, t)
    nvars = d ** (n * t)
    rows = [tuple((j, Fraction(1)) for j in range(nvars))] + _lti_rows(d, n, t)
    rhs = [Fraction(1)] + [Fraction(0)] * (len(rows) - 1)
    lp = LinearProgram(tuple([0] * nvars), tuple(rows), tuple(rhs), tuple([EQ] * len(rows)))
    proj = []
    for region in targets:
        region = region.normalized()
        if region.width > n or region.height > t:
            raise DomainError(f"target {list(region.sites)} does not fit in rect({n}, {t})")
        p = _projection(d, box, region)
        groups = [[] for _ in range(d ** len(region))]
        for var, j in enumerate(p):
            groups[j].append(var)
        proj.extend(tuple(g) for g in groups)
    return _StripLP(d, n, t, lp, tuple(proj), len(proj))


def project_lti(d: int, strip, targets: Sequence[Region], *, seed: int = 0,
                probes: int = None, budget: int = DEFAULT_BUDGET, log=None) -> Polytope:
    """Vertices of the projection of the LTI strip polytope onto the target marginals.

    Random probe objectives give an initial point set.  Then, repeatedly,
    every facet of the current hull is maximised over the strip polytope;
    maximisers that break a facet join the point set.  Equations of the
    current affine hull are checked the same way in both directions.  The
    loop stops when a full pass finds no violation, at which point the hull
    is the projection exactly.
    """
    slp = _strip_lp(d, strip, targets, budget)
    rng = random.Random(seed)
    if probes is None:
        probes = 2 * slp.dim + 4
    points = set()
    for _ in range(probes):
        w = [Fraction(rng.randint(-9, 9)) for _ in range(slp.dim)]
        points.add(slp.maximize(w)[1])
    confirmed = set()
    while True:
        facets, eqs, verts = hull(points)
        grew = False
        for normal, f in eqs:
            for sign in (1, -1):
                w = [sign * v for v in normal]
                key = ("eq", tuple(w), sign * f)
                if key in confirmed:
                    continue
                value, x = slp.maximize(w)
                if value > sign * f:
                    points.add(x)
                    grew = True
                else:
                    confirmed.add(key)
        if grew:
            continue
        for normal, b in facets:
            key = ("le", normal, b)
            if key in confirmed:
                continue
            value, x = slp.maximize(normal)
            if value > b:
                points.add(x)
                grew = True
            else:
                confirmed.add(key)
        if log is not None:
            log(f"{len(points)} points, {len(verts)} hull vertices, {len(facets)} facets")
        if not grew:
            break
    poly = Polytope(slp.dim, facets, verts, eqs)
    pivots = affine_hull(verts)[0]
    for v in verts:
        obj = [Fraction(0)] * slp.dim
        for normal, b in facets:
            if _dot(normal, v) == b:
                obj = [a + c for a, c in zip(obj, normal)]
        poly.probes[v] = tuple(obj)
    return poly


# ---------------------------------------------------------------- Fourier-Motzkin

def _redundant(ineqs, eqs, i, nvars) -> bool:
    """Whether inequality ``i`` is implied by the others and the equations."""
    normal, b = ineqs[i]
    rows, rhs, kinds = [], [], []
    for j, (n2, b2) in enumerate(ineqs):
        if j == i:
            continue
        rows.append(tuple((k, -v) for k, v in enumerate(n2) if v))
        rhs.append(-b2)
        kinds.append(GE)
    for n2, f in eqs:
        rows.append(tuple((k, v) for k, v in enumerate(n2) if v))
        rhs.append(f)
        kinds.append(EQ)
    lp = LinearProgram(tuple(normal), tuple(rows), tuple(rhs), tuple(kinds), FREE)
    cert = exactlp.solve(lp)
    if cert.kind == exactlp.INFEASIBLE:
        return True
    return cert.kind == exactlp.OPTIMAL and cert.value <= b


def prune_redundant(ineqs, eqs=(), nvars: int = None) -> list:
    """Drop inequalities implied by the rest, one at a time."""
    ineqs = sorted(set(normalize_inequality(n, b) for n, b in ineqs if any(n) or b < 0))
    if nvars is None and ineqs:
        nvars = len(ineqs[0][0])
    i = 0
    while i < len(ineqs):
        if _redundant(ineqs, list(eqs), i, nvars):
            ineqs.pop(i)
        else:
            i += 1
    return ineqs


def fourier_motzkin(h_rep, eliminate: int, *, prune: bool = True, equations=(),
                    drop: bool = False, budget: int = 10 ** 5) -> list:
    """Eliminate one variable from ``{normal . x <= offset}``.

    The result keeps the ambient indexing (coefficient 0 at ``eliminate``)
    unless ``drop`` is set, in which case that coordinate is removed.
    """
    ineqs = [(tuple(to_rational(v) for v in n), to_rational(b)) for n, b in h_rep]
    pos, neg, rest = [], [], []
    for n, b in ineqs:
        c = n[eliminate]
        (pos if c > 0 else neg if c < 0 else rest).append((n, b))
    if len(pos) * len(neg) > budget:
        raise ResourceError(f"elimination would create {len(pos) * len(neg)} inequalities",
                            needed=len(pos) * len(neg), budget=budget)
    out = list(rest)
    for np_, bp in pos:
        for nn, bn in neg:
            cp, cn = np_[eliminate], -nn[eliminate]
            normal = tuple(cn * a + cp * b for a, b in zip(np_, nn))
            out.append((normal, cn * bp + cp * bn))
    out = [normalize_inequality(n, b) for n, b in out]
    cleaned = []
    for n, b in out:
        if not any(n):
            if b < 0:
                # 0 <= negative: the system is empty
                cleaned = [(n, b)]
                break
            continue
        cleaned.append((n, b))
    tightest = {}
    for n, b in cleaned:
        if n not in tightest or b < tightest[n]:
            tightest[n] = b
    out = sorted(tightest.items())
    # LP pruning only pays off when the system grew
    if prune and out and any(out[0][0]) and len(out) > len(ineqs):
        out = prune_redundant(out, equations)
    if drop:
        out = [(n[:eliminate] + n[eliminate + 1:], b) for n, b in out]
    return out


def _chernikov_eliminate(ineqs, order) -> list:
    """Fourier-Motzkin over ``order``, dropping combinations whose history
    (set of input rows used) exceeds the number of eliminated variables + 1,
    which are always redundant."""
    rows = {}
    for i, (n, b) in enumerate(ineqs):
        key = normalize_inequality(n, b)
        if any(key[0]) or key[1] < 0:
            rows[key] = min(rows.get(key, 1 << i), 1 << i)
    done = 0
    for j in order:
        done += 1
        pos, neg, out = [], [], {}
        for (n, b), hist in rows.items():
            if n[j] > 0:
                pos.append((n, b, hist))
            elif n[j] < 0:
                neg.append((n, b, hist))
            else:
                out[(n, b)] = hist
        for n1, b1, h1 in pos:
            for n2, b2, h2 in neg:
                hist = h1 | h2
                if bin(hist).count("1") > done + 1:
                    continue
                cp, cn = n1[j], -n2[j]
                key = normalize_inequality(tuple(cn * a + cp * c for a, c in zip(n1, n2)),
                                           cn * b1 + cp * b2)
                if not any(key[0]):
                    if key[1] < 0:
                        return [key]
                    continue
                if key not in out or bin(hist).count("1") < bin(out[key]).count("1"):
                    out[key] = hist
        # among rows with one normal only the tightest offset matters
        best = {}
        for (n, b), hist in out.items():
            if n not in best or b < best[n][0]:
                best[n] = (b, hist)
        rows = {(n, b): hist for n, (b, hist) in best.items()}
    return sorted(rows)


def eliminate_variables(ineqs, eqs, keep: Sequence[int], nvars: int, *, prune: bool = True):
    """Project {a.x <= b, e.x = f} onto the coordinates ``keep``.

    Equations are used first to substitute eliminated variables away; the
    remaining ones are removed by Fourier-Motzkin with LP pruning.  Returns
    (inequalities, equations) over the ``keep`` coordinates in order.
    """
    keep = list(keep)
    gone = [j for j in range(nvars) if j not in keep]
    ineqs = [([Fraction(v) for v in n], Fraction(b)) for n, b in ineqs]
    eqs = [([Fraction(v) for v in n], Fraction(f)) for n, f in eqs]
    # substitution: solve each equation for an eliminated variable when possible
    remaining_eqs = []
    while eqs:
        n, f = eqs.pop()
        j = next((j for j in gone if n[j]), None)
        if j is None:
            if any(n) or f:
                remaining_eqs.append((n, f))
            continue
        c = n[j]

        def sub(row, rhs):
            k = row[j]
            if not k:
                return row, rhs
            return [a - k / c * e for a, e in zip(row, n)], rhs - k / c * f

        ineqs = [sub(r, b) for r, b in ineqs]
        eqs = [sub(r, b) for r, b in eqs]
        remaining_eqs = [sub(r, b) for r, b in remaining_eqs]
    eqs = remaining_eqs
    ineqs = _chernikov_eliminate(ineqs, [j for j in gone if any(n[j] for n, _ in ineqs)])
    if prune and ineqs:
        ineqs = prune_redundant(ineqs, eqs)
    ineqs = [(tuple(n[k] for k in keep), b) for n, b in ineqs]
    eqs = [(tuple(n[k] for k in keep), f) for n, f in eqs]
    eqs = [normalize_inequality(n, f) for n, f in eqs if any(n)]
    return sorted(set(normalize_inequality(n, b) for n, b in ineqs)), sorted(set(eqs))


def lti_fourier_motzkin(d: int, strip, targets: Sequence[Region], *,
                        budget: int = DEFAULT_BUDGET) -> Polytope:
    """The same projection as :func:`project_lti`, via elimination and H-to-V."""
    slp = _strip_lp(d, strip, targets, budget)
    nx = slp.lp.num_vars
    ny = slp.dim
    total = nx + ny
    eqs = []
    for row, b in zip(slp.lp.rows, slp.lp.rhs):
        vec = [Fraction(0)] * total
        for k, v in row:
            vec[k] = v
        eqs.append((vec, b))
    for j, members in enumerate(slp.proj):
        vec = [Fraction(0)] * total
        vec[nx + j] = Fraction(1)
        for v in members:
            vec[v] -= 1
        eqs.append((vec, Fraction(0)))
    ineqs = []
    for k in range(nx):
        vec = [Fraction(0)] * total
        vec[k] = Fraction(-1)
        ineqs.append((vec, Fraction(0)))
    # the vertex enumeration tolerates redundant rows, so LP pruning is skipped
    h, e = eliminate_variables(ineqs, eqs, list(range(nx, total)), total, prune=False)
    verts = vertices_from_inequalities(h, e, ny)
    return Polytope(ny, None, verts, e).completed()
