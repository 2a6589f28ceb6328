"""Exactly solvable cases: reflection-symmetric strips, binary and ternary
nearest-neighbour tables, binary next-to-nearest tables.

The vertex libraries (``d2_nn``, ``d2_nnn``, ``d3_nn``) are shipped as JSON
in ``timarginal/data`` and can be regenerated with :func:`generate_library`.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import permutations
from typing import Optional, Sequence

from . import exactlp
from .errors import DomainError, StructuralError
from .exactlp import EQ, LinearProgram
from .hierarchy import Hamiltonian, strip_feasible
from .lattice import (H, MINUS, PLUS, V, Distribution, MarginalSpec, Pattern, Region,
                      all_configs, config_index, marginalize, rect, reflect_config,
                      symmetrize_pattern)
from .polytope import (D4, SymmetryGroup, lattice_permutation, lattice_symmetry_group,
                       project_lti, quotient_classes)
from .rational import fmt, to_rational

# ---------------------------------------------------------------- reflection case


@dataclass(frozen=True)
class ReflectionSpec:
    s: int
    Q: Distribution

    def __post_init__(self):
        if self.s < 2:
            raise StructuralError("s must be at least 2")
        if self.Q.region.normalized() != rect(self.s, 2):
            raise StructuralError(f"Q must live on rect({self.s}, 2)")


def _reflections(region: Region, d: int):
    """Index maps of a -> a^H (rows swapped) and a -> a^V (columns mirrored)."""
    size = len(region)
    flip_h, flip_v = [], []
    for k in range(d ** size):
        config = _config(k, d, size)
        flip_h.append(config_index(reflect_config(config, region, False, True), d))
        flip_v.append(config_index(reflect_config(config, region, True, False), d))
    return flip_h, flip_v


def _config(k, d, size):
    from .lattice import index_config
    return index_config(k, d, size)


def check_reflection_ti(spec: ReflectionSpec) -> bool:
    """Q(a) = Q(a^H) = Q(a^V) and the two (s-1)-wide windows agree."""
    Q = spec.Q.normalized()
    vec = Q.vector()
    flip_h, flip_v = _reflections(Q.region, Q.d)
    if any(vec[k] != vec[flip_h[k]] or vec[k] != vec[flip_v[k]] for k in range(len(vec))):
        return False
    left = marginalize(Q, rect(spec.s - 1, 2))
    right = marginalize(Q, rect(spec.s - 1, 2).translate(1, 0))
    return left.probs == right.probs


def _table(F, d: int, size: int) -> list:
    if isinstance(F, Hamiltonian):
        if len(F.terms) != 1:
            raise DomainError("expected a single-term Hamiltonian")
        return list(F.terms[0][1])
    if isinstance(F, dict):
        vec = [Fraction(0)] * (d ** size)
        for config, value in F.items():
            vec[config_index(tuple(config), d)] = to_rational(value)
        return vec
    vec = [to_rational(v) for v in F]
    if len(vec) != d ** size:
        raise StructuralError(f"table needs {d ** size} entries, got {len(vec)}")
    return vec


def reflection_program(s: int, d: int = 2, objective=None) -> LinearProgram:
    """Variables Q on rect(s, 2); rows: sum 1, both reflection symmetries, window equality."""
    region = rect(s, 2)
    size = 2 * s
    nvars = d ** size
    rows, rhs = [tuple((j, Fraction(1)) for j in range(nvars))], [Fraction(1)]
    flip_h, flip_v = _reflections(region, d)
    for flip in (flip_h, flip_v):
        for k in range(nvars):
            if flip[k] > k:
                rows.append(((k, Fraction(1)), (flip[k], Fraction(-1))))
                rhs.append(Fraction(0))
    from .hierarchy import _difference_rows, _projection
    a = _projection(d, region, rect(s - 1, 2))
    b = _projection(d, region, rect(s - 1, 2).translate(1, 0))
    diff = _difference_rows(a, b, d ** (size - 2))
    rows.extend(diff)
    rhs.extend([Fraction(0)] * len(diff))
    objective = objective if objective is not None else [0] * nvars
    return LinearProgram(tuple(objective), tuple(rows), tuple(rhs), tuple([EQ] * len(rows)))


def solve_reflection_energy(F, *, s: int = 2, d: int = 2) -> Fraction:
    """Exact minimum of sum F(a) Q(a) over reflection-symmetric, horizontally TI Q.

    ``F`` is a table on rect(s, 2) (vector, dict, or one-term Hamiltonian)
    and must itself be invariant under both reflections.
    """
    if isinstance(F, Hamiltonian):
        region = F.terms[0][0].normalized() if F.terms else None
        if region is None or region.height != 2 or not region.is_rectangle():
            raise DomainError("the term must live on an s x 2 rectangle")
        s, d = region.width, F.d
    if s < 2:
        raise DomainError(f"the rectangle must be at least 2 wide, got s={s}")
    vec = _table(F, d, 2 * s)
    flip_h, flip_v = _reflections(rect(s, 2), d)
    for name, flip in (("horizontal-axis reflection a -> a^H", flip_h),
                       ("vertical-axis reflection a -> a^V", flip_v)):
        for k, j in enumerate(flip):
            if vec[k] != vec[j]:
                raise DomainError(f"F is not invariant under the {name} (entry {k} vs {j})")
    lp = reflection_program(s, d, [-v for v in vec])
    cert = exactlp.solve(lp)
    if cert.kind != exactlp.OPTIMAL:
        raise RuntimeError(f"reflection LP returned {cert.kind}")
    return -cert.value


def reflection_hamiltonian(F, *, s: int = 2, d: int = 2) -> Hamiltonian:
    return Hamiltonian(d, [(rect(s, 2), _table(F, d, 2 * s))])


# ---------------------------------------------------------------- pairwise conditions


def _vector(table, d: int) -> list:
    if isinstance(table, Distribution):
        if table.d != d:
            raise DomainError(f"table has d={table.d}, expected {d}")
        if len(table.region) != 2:
            raise DomainError("expected a two-site table")
        return table.vector()
    vec = [to_rational(v) for v in table]
    if len(vec) != d * d:
        raise StructuralError(f"two-site table needs {d * d} entries, got {len(vec)}")
    return vec


def _two_site_marginals(vec, d):
    first = [sum(vec[a * d + b] for b in range(d)) for a in range(d)]
    second = [sum(vec[a * d + b] for a in range(d)) for b in range(d)]
    return first, second


def pairwise_condition(tables: Sequence, d: int) -> bool:
    """sum_b P_c(x, b) = sum_a P_c'(a, x) for every pair of tables and every x."""
    margs = [_two_site_marginals(_vector(t, d), d) for t in tables]
    first = [m[0] for m in margs]
    second = [m[1] for m in margs]
    return all(f == s for f in first for s in second)


def check_d2_nn(tables: Sequence, k: int = 2) -> bool:
    """Binary nearest-neighbour tables on the k-dimensional cubic lattice (k = 2, 3)."""
    if k not in (2, 3):
        raise DomainError(f"the characterisation is only established for k = 2, 3, not {k}")
    if len(tables) != k:
        raise StructuralError(f"expected one table per axis ({k}), got {len(tables)}")
    for t in tables:
        if isinstance(t, Distribution) and t.d != 2:
            raise DomainError("this check is for d = 2 only")
    return pairwise_condition(tables, 2)


# ---------------------------------------------------------------- vertex libraries

CASES = {
    "d2_nn": (2, (H, V), (2, 2)),
    "d2_nnn": (2, (H, V, PLUS, MINUS), (2, 2)),
    "d3_nn": (3, (H, V), (2, 2)),
}

# One generating pattern per symmetry class, in C1, C2, ... order.
_D2_NNN_GENERATORS = ["0", "0 0 / 1 1", "1 0 / 0 1", "1 0 / 0 0", "0 0 1 / 0 1 0 / 1 0 0",
                      "1 1 0 0 / 1 0 0 1 / 0 0 1 1 / 0 1 1 0"]
_D3_NN_GENERATORS = ["2", "1 2 / 2 1", "1 2", "0 2 / 2 2 / 1 1", "0 2 / 2 1 / 1 1",
                     "0 2 / 2 1 / 2 0 / 1 2", "0 2 / 1 2", "2 1 0 2 / 2 1 1 0",
                     "0 2 1 / 2 1 0 / 1 0 2", "0 2 1"]
CLASS_GENERATORS = {"d2_nnn": _D2_NNN_GENERATORS, "d3_nn": _D3_NN_GENERATORS}


@dataclass
class VertexLibrary:
    case: str
    d: int
    regions: tuple
    strip: tuple
    vertices: list
    labels: list
    generators: list
    probes: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return sum(self.d ** len(r) for r in self.regions)

    def split(self, point) -> list:
        """Cut a concatenated point into one Distribution per region."""
        out, start = [], 0
        for r in self.regions:
            size = self.d ** len(r)
            out.append(Distribution.from_vector(self.d, r, list(point[start:start + size])))
            start += size
        return out

    def spec(self, point) -> MarginalSpec:
        return MarginalSpec(self.d, tuple(self.split(point)))

    def classes(self) -> dict:
        out = {}
        for v, lab in zip(self.vertices, self.labels):
            out.setdefault(lab, []).append(v)
        return out

    def membership_program(self, point) -> LinearProgram:
        point = [to_rational(v) for v in point]
        if len(point) != self.dim:
            raise StructuralError(f"point has {len(point)} coordinates, library has {self.dim}")
        n = len(self.vertices)
        rows = [tuple((i, Fraction(1)) for i in range(n))]
        rhs = [Fraction(1)]
        for j in range(self.dim):
            rows.append(tuple((i, v[j]) for i, v in enumerate(self.vertices) if v[j]))
            rhs.append(point[j])
        return LinearProgram(tuple([0] * n), tuple(rows), tuple(rhs), tuple([EQ] * len(rows)))

    def contains(self, point) -> bool:
        return exactlp.feasibility(self.membership_program(point)).is_feasible

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "d": self.d,
            "regions": [r.to_json() for r in self.regions],
            "strip": list(self.strip),
            "vertices": [
                {"point": [fmt(x) for x in v], "class": lab, "generator": g.to_json(),
                 "probe": [fmt(x) for x in p]}
                for v, lab, g, p in zip(self.vertices, self.labels, self.generators, self.probes)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "VertexLibrary":
        verts = data["vertices"]
        return cls(data["case"], int(data["d"]), tuple(Region.from_json(r) for r in data["regions"]),
                   tuple(data["strip"]),
                   [tuple(to_rational(x) for x in v["point"]) for v in verts],
                   [v["class"] for v in verts],
                   [Pattern.from_json(v["generator"]) for v in verts],
                   [tuple(to_rational(x) for x in v.get("probe", [])) for v in verts])


_LOADED = {}


def _case_id(case: str) -> str:
    key = case.replace("-", "_")
    if key not in CASES:
        raise DomainError(f"no vertex library for case {case!r}; use the hierarchy bounds instead")
    return key


def load_library(case: str) -> VertexLibrary:
    key = _case_id(case)
    if key not in _LOADED:
        text = resources.files("timarginal").joinpath("data").joinpath(f"{key}.json").read_text()
        _LOADED[key] = VertexLibrary.from_json(json.loads(text))
    return _LOADED[key]


def symmetry_group(case: str) -> SymmetryGroup:
    """All lattice symmetries of the square (rotations and reflections) and outcome relabellings."""
    d, regions, _ = CASES[_case_id(case)]
    return lattice_symmetry_group(d, regions)


def _group_actions(d: int, regions):
    """Every (coordinate permutation, lattice matrix, relabelling) of the full group."""
    seen = {}
    for name in sorted(D4):
        matrix = D4[name]
        for relabel in permutations(range(d)):
            perm = lattice_permutation(d, regions, matrix, list(relabel))
            seen.setdefault(perm, (matrix, list(relabel)))
    return seen


def marginal_point(pattern: Pattern, regions) -> tuple:
    spec = symmetrize_pattern(pattern, regions)
    return tuple(x for dist in spec.entries for x in dist.vector())


def _search_generators(d: int, regions, targets, max_period: int = 4) -> dict:
    """Smallest periodic pattern whose symmetrisation hits each target point."""
    import numpy as np
    from .hierarchy import _pattern_from_index, period_shapes
    from .lattice import batch_window_counts, pattern_batch

    found = {}
    wanted = set(targets)
    for m, n in period_shapes(max_period):
        if not wanted - set(found):
            break
        pats = pattern_batch(d, m, n)
        counts = np.concatenate([batch_window_counts(pats, r, d) for r in regions], axis=1)
        area = m * n
        index = {}
        for k, row in enumerate(counts):
            index.setdefault(tuple(row.tolist()), k)
        for t in wanted - set(found):
            key = tuple(int(x * area) if (x * area).denominator == 1 else -1 for x in t)
            if key in index:
                found[t] = _pattern_from_index(d, m, n, index[key])
    return found


def generate_library(case: str, *, seed: int = 0, log=None) -> VertexLibrary:
    """Recompute a vertex library from scratch with :func:`project_lti`."""
    key = _case_id(case)
    d, regions, strip = CASES[key]
    poly = project_lti(d, strip, list(regions), seed=seed, log=log)
    group = lattice_symmetry_group(d, regions)
    classes = quotient_classes(poly, group)
    actions = _group_actions(d, regions)
    labels, generators = {}, {}
    if key in CLASS_GENERATORS:
        reps = [Pattern.parse(d, p) for p in CLASS_GENERATORS[key]]
        for number, pattern in enumerate(reps, start=1):
            base = marginal_point(pattern, regions)
            for perm, (matrix, relabel) in actions.items():
                image = SymmetryGroup.apply(perm, base)
                labels.setdefault(image, f"C{number}")
                generators.setdefault(image, pattern.transform(matrix, relabel))
    else:
        found = _search_generators(d, regions, [rep for rep, _ in classes])
        for number, (rep, members) in enumerate(classes, start=1):
            pattern = found.get(rep)
            for perm, (matrix, relabel) in actions.items():
                image = SymmetryGroup.apply(perm, rep)
                labels.setdefault(image, f"N{number}")
                if pattern is not None:
                    generators.setdefault(image, pattern.transform(matrix, relabel))
    verts = sorted(poly.v_rep)
    missing = [v for v in verts if v not in labels or v not in generators]
    if missing:
        raise RuntimeError(f"{len(missing)} vertices have no class label or generator")
    wrong = [v for v in verts if marginal_point(generators[v], regions) != v]
    if wrong:
        raise RuntimeError(f"{len(wrong)} generator patterns do not reproduce their vertex")
    return VertexLibrary(key, d, tuple(regions), tuple(strip), verts,
                         [labels[v] for v in verts], [generators[v] for v in verts],
                         [poly.probes[v] for v in verts])


def _point_from_tables(tables, d: int, regions) -> tuple:
    if len(tables) != len(regions):
        raise StructuralError(f"expected {len(regions)} tables, got {len(tables)}")
    out = []
    for t, r in zip(tables, regions):
        if isinstance(t, Distribution) and t.region.normalized() != r.normalized():
            raise DomainError(f"table on {list(t.region.sites)} where {list(r.sites)} was expected")
        out.extend(_vector(t, d))
    return tuple(out)


def _membership(case: str, tables, cross_check: Optional[bool]) -> bool:
    lib = load_library(case)
    point = _point_from_tables(tables, lib.d, lib.regions)
    verdict = lib.contains(point)
    if cross_check is None:
        cross_check = __debug__
    if cross_check:
        spec = lib.spec(point) if all(v >= 0 for v in point) and _normalized(point, lib) else None
        strip = spec is not None and strip_feasible(spec, lib.strip[0]).is_feasible
        assert strip == verdict, f"library hull and strip LP disagree on {case}"
    return verdict


def _normalized(point, lib) -> bool:
    start = 0
    for r in lib.regions:
        size = lib.d ** len(r)
        if sum(point[start:start + size]) != 1:
            return False
        start += size
    return True


def check_d2_nnn(P_h, P_v, P_plus, P_minus, *, cross_check: Optional[bool] = None) -> bool:
    """Binary h, v, +, - tables: membership in the hull of the 13-vertex library.

    With ``cross_check`` (default: on unless Python runs with -O) the level-2
    strip LP is solved too and must agree.
    """
    return _membership("d2_nnn", (P_h, P_v, P_plus, P_minus), cross_check)


def check_d3_nn(P_h, P_v, *, cross_check: Optional[bool] = None) -> bool:
    """Ternary h, v tables: membership in the hull of the 98-vertex library."""
    return _membership("d3_nn", (P_h, P_v), cross_check)


def exact_energy_by_vertices(case: str, F) -> tuple:
    """Minimum of a linear energy over a library's vertices, with the minimising vertex.

    ``F`` is a Hamiltonian whose term regions are translates of the library's
    regions; terms on the same region add up.
    """
    lib = load_library(case)
    if not isinstance(F, Hamiltonian):
        raise StructuralError("F must be a Hamiltonian")
    if F.d != lib.d:
        raise DomainError(f"Hamiltonian has d={F.d}, library {lib.case} has d={lib.d}")
    weights = [Fraction(0)] * lib.dim
    norm = [r.normalized() for r in lib.regions]
    offsets, start = [], 0
    for r in lib.regions:
        offsets.append(start)
        start += lib.d ** len(r)
    for region, vec in F.terms:
        try:
            idx = norm.index(region.normalized())
        except ValueError:
            raise DomainError(f"term on {list(region.sites)} is outside library {lib.case}; "
                              f"use the hierarchy bounds for it") from None
        for k, v in enumerate(vec):
            weights[offsets[idx] + k] += v
    best, arg = None, None
    for v in lib.vertices:
        value = sum((w * x for w, x in zip(weights, v) if w), Fraction(0))
        if best is None or value < best:
            best, arg = value, v
    return best, arg
