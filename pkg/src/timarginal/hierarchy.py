"""LP relaxations of the TI marginal set and bounds on the energy per site.

Level ``n`` of the hierarchy asks for a distribution on the strip
``rect(n, t)`` (``t`` the tallest pinned region) whose two overlapping
``(n-1)``-wide windows agree, whose two overlapping ``(t-1)``-tall windows
agree, and whose marginals on the pinned regions are the given tables.  A
TI marginal passes every level, so an infeasible level is a proof that the
input is not TI.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

from . import exactlp
from .errors import DomainError, ResourceError, StructuralError
from .exactlp import EQ, Certificate, LinearProgram
from .lattice import (Distribution, MarginalSpec, Pattern, Region, batch_window_counts,
                      config_index, config_key, index_config, parse_config_key, pattern_batch,
                      rect, transform_distribution, window_counts)
from .rational import fmt, to_rational

DEFAULT_BUDGET = 10 ** 6
TRANSPOSE = ((0, 1), (1, 0))


def _projection(d: int, strip: Region, sub: Region) -> list:
    """For every strip configuration, the index of its restriction to ``sub``."""
    pos = {site: i for i, site in enumerate(strip.sites)}
    idx = [pos[s] for s in sub.sites]
    size = len(strip)
    out = []
    for k in range(d ** size):
        config = index_config(k, d, size)
        out.append(config_index([config[i] for i in idx], d))
    return out


@dataclass(frozen=True)
class LTIProgram:
    """The level-n LP: variables are the probabilities of ``rect(n, t)`` configurations."""

    d: int
    n: int
    t: int
    pinned: tuple
    lp: LinearProgram = field(repr=False)
    transposed: bool = False

    @property
    def strip(self) -> Region:
        return rect(self.n, self.t)

    def marginal_rows(self, region: Region) -> list:
        """Sparse rows expressing each configuration probability of ``region``."""
        proj = _projection(self.d, self.strip, region)
        rows = [dict() for _ in range(self.d ** len(region))]
        for var, j in enumerate(proj):
            rows[j][var] = Fraction(1)
        return [tuple(sorted(r.items())) for r in rows]

    def strip_distribution(self, point) -> Distribution:
        return Distribution.from_vector(self.d, self.strip, list(point))

    def solve(self) -> Certificate:
        return exactlp.feasibility(self.lp)


def _check_budget(d: int, cells: int, budget: int):
    needed = d ** cells
    if needed > budget:
        raise ResourceError(f"level needs {needed} LP variables (d={d}, {cells} cells), "
                            f"budget is {budget}", needed=needed, budget=budget)


def _orient(regions: Sequence[Region]):
    """Whether the regions are taller than wide, in which case we work transposed."""
    width = max(r.width for r in regions)
    height = max(r.height for r in regions)
    return height > width


def _lti_rows(d: int, n: int, t: int):
    strip = rect(n, t)
    rows = []
    if n > 1:
        a = _projection(d, strip, rect(n - 1, t))
        b = _projection(d, strip, rect(n - 1, t).translate(1, 0))
        rows.extend(_difference_rows(a, b, d ** ((n - 1) * t)))
    if t > 1:
        a = _projection(d, strip, rect(n, t - 1))
        b = _projection(d, strip, rect(n, t - 1).translate(0, 1))
        rows.extend(_difference_rows(a, b, d ** (n * (t - 1))))
    return rows


def _difference_rows(a, b, size):
    rows = [dict() for _ in range(size)]
    for var, (ja, jb) in enumerate(zip(a, b)):
        if ja != jb:
            rows[ja][var] = rows[ja].get(var, 0) + 1
            rows[jb][var] = rows[jb].get(var, 0) - 1
    return [tuple((k, Fraction(v)) for k, v in sorted(r.items()) if v) for r in rows
            if any(r.values())]


def build_lti_program(d: int, n: int, pinned: Sequence[Distribution], *, t: Optional[int] = None,
                      objective=None, budget: int = DEFAULT_BUDGET,
                      allow_transpose: bool = True) -> LTIProgram:
    """Assemble the level-``n`` strip LP with the given tables pinned.

    Regions are moved so their bounding boxes start at the origin; by
    translation invariance of the strip this loses nothing.
    """
    pinned = list(pinned)
    regions = [p.region for p in pinned]
    transposed = False
    if allow_transpose and regions and _orient(regions):
        pinned = [transform_distribution(p, TRANSPOSE) for p in pinned]
        regions = [p.region for p in pinned]
        transposed = True
    if t is None:
        t = max((r.height for r in regions), default=1)
    for r in regions:
        if r.width > n or r.height > t:
            raise DomainError(f"region {list(r.sites)} does not fit in rect({n}, {t})")
    _check_budget(d, n * t, budget)
    strip = rect(n, t)
    nvars = d ** (n * t)
    rows = [tuple((j, Fraction(1)) for j in range(nvars))]
    rhs = [Fraction(1)]
    rows_lti = _lti_rows(d, n, t)
    rows.extend(rows_lti)
    rhs.extend([Fraction(0)] * len(rows_lti))
    normalized = []
    for dist in pinned:
        if dist.d != d:
            raise StructuralError(f"table with d={dist.d} in a d={d} problem")
        dist = dist.normalized()
        normalized.append(dist)
        proj = _projection(d, strip, dist.region)
        groups = [[] for _ in range(d ** len(dist.region))]
        for var, j in enumerate(proj):
            groups[j].append(var)
        vec = dist.vector()
        for j, members in enumerate(groups):
            rows.append(tuple((v, Fraction(1)) for v in members))
            rhs.append(vec[j])
    if objective is None:
        objective = [Fraction(0)] * nvars
    lp = LinearProgram(tuple(objective), tuple(rows), tuple(rhs), tuple([EQ] * len(rows)))
    return LTIProgram(d, n, t, tuple(normalized), lp, transposed)


def strip_program(spec: MarginalSpec, n: int, *, budget: int = DEFAULT_BUDGET) -> LTIProgram:
    return build_lti_program(spec.d, n, spec.entries, budget=budget)


def strip_feasible(spec: MarginalSpec, n: int, *, budget: int = DEFAULT_BUDGET) -> Certificate:
    """Level-``n`` strip test.  Infeasible certificates carry a Farkas vector
    for ``strip_program(spec, n).lp``."""
    return strip_program(spec, n, budget=budget).solve()


def square_program(spec: MarginalSpec, n: int, *, budget: int = DEFAULT_BUDGET) -> LTIProgram:
    return build_lti_program(spec.d, n, spec.entries, t=n, budget=budget, allow_transpose=False)


def square_feasible(spec: MarginalSpec, n: int, *, budget: int = DEFAULT_BUDGET) -> Certificate:
    """The n x n relaxation: both window equalities on rect(n, n)."""
    return square_program(spec, n, budget=budget).solve()


class Hamiltonian:
    """A finite sum of local terms ``F_i`` acting on regions ``K_i``."""

    def __init__(self, d: int, terms):
        self.d = d
        clean = []
        for region, table in terms:
            size = d ** len(region)
            if isinstance(table, dict):
                vec = [Fraction(0)] * size
                for config, value in table.items():
                    config = tuple(config)
                    if len(config) != len(region) or any(not 0 <= a < d for a in config):
                        raise StructuralError(f"configuration {config} does not fit {region}")
                    vec[config_index(config, d)] = to_rational(value)
            else:
                vec = [to_rational(v) for v in table]
                if len(vec) != size:
                    raise StructuralError(f"term on {region} needs {size} values, got {len(vec)}")
            clean.append((region, tuple(vec)))
        self.terms = tuple(clean)

    @classmethod
    def from_functions(cls, d: int, terms) -> "Hamiltonian":
        """Build from ``(region, callable)`` pairs; the callable takes the site values."""
        out = []
        for region, fn in terms:
            out.append((region, [fn(*index_config(k, d, len(region))) for k in range(d ** len(region))]))
        return cls(d, out)

    @property
    def regions(self) -> list:
        return [r for r, _ in self.terms]

    def negated(self) -> "Hamiltonian":
        return Hamiltonian(self.d, [(r, [-v for v in vec]) for r, vec in self.terms])

    def energy(self, tables: Sequence[Distribution]) -> Fraction:
        """Energy per site of a family of marginals, one per term, matched by region."""
        total = Fraction(0)
        by_region = {}
        for dist in tables:
            by_region.setdefault(dist.region, dist)
            by_region.setdefault(dist.region.normalized(), dist)
        for region, vec in self.terms:
            dist = by_region.get(region) or by_region.get(region.normalized())
            if dist is None:
                raise DomainError(f"no marginal supplied for term region {region}")
            total += sum((vec[config_index(c, self.d)] * p for c, p in dist.probs.items()),
                         Fraction(0))
        return total

    def pattern_energy(self, pattern: Pattern) -> Fraction:
        """Exact energy per site of the periodic tiling generated by ``pattern``."""
        area = pattern.width * pattern.height
        total = Fraction(0)
        for region, vec in self.terms:
            counts = window_counts(pattern, region)
            total += Fraction(sum(vec[config_index(c, self.d)] * k for c, k in counts.items()), area)
        return total

    def __eq__(self, other):
        return isinstance(other, Hamiltonian) and (self.d, self.terms) == (other.d, other.terms)

    def __repr__(self):
        return f"Hamiltonian(d={self.d}, regions={[list(r.sites) for r in self.regions]})"

    def to_json(self) -> dict:
        terms = []
        for region, vec in self.terms:
            size = len(region)
            values = {config_key(index_config(k, self.d, size), self.d): fmt(v)
                      for k, v in enumerate(vec) if v}
            terms.append({"region": region.to_json(), "values": values})
        return {"d": self.d, "terms": terms}

    @classmethod
    def from_json(cls, data: dict) -> "Hamiltonian":
        try:
            d = int(data["d"])
            raw_terms = data["terms"]
        except KeyError as exc:
            raise StructuralError(f"hamiltonian is missing field {exc.args[0]!r}") from None
        terms = []
        for term in raw_terms:
            region = Region.from_json(term["region"])
            table = {parse_config_key(k, d, len(region)): to_rational(v)
                     for k, v in term.get("values", {}).items()}
            terms.append((region, table))
        return cls(d, terms)


def lower_bound_program(H: Hamiltonian, n: int, *, budget: int = DEFAULT_BUDGET) -> LTIProgram:
    """Strip LP whose objective is minus the energy (the solver maximises)."""
    regions = H.regions
    transposed = _orient(regions)
    terms = H.terms
    if transposed:
        terms = [(r.transform(TRANSPOSE), _transpose_table(r, vec, H.d)) for r, vec in terms]
    t = max(r.height for r, _ in terms)
    for r, _ in terms:
        if r.width > n:
            raise DomainError(f"term region {list(r.sites)} does not fit in rect({n}, {t})")
    _check_budget(H.d, n * t, budget)
    strip = rect(n, t)
    objective = [Fraction(0)] * (H.d ** (n * t))
    for region, vec in terms:
        proj = _projection(H.d, strip, region.normalized())
        for var, j in enumerate(proj):
            objective[var] -= vec[j]
    return build_lti_program(H.d, n, [], t=t, objective=objective, budget=budget,
                             allow_transpose=False)


def _transpose_table(region: Region, vec, d: int) -> tuple:
    """Reindex a term table after swapping x and y of its region."""
    image = region.transform(TRANSPOSE)
    pos = {site: i for i, site in enumerate(region.sites)}
    order = [pos[(y, x)] for x, y in image.sites]
    out = [Fraction(0)] * len(vec)
    for k, v in enumerate(vec):
        config = index_config(k, d, len(region))
        out[config_index([config[i] for i in order], d)] = v
    return tuple(out)


def energy_lower_bound(H: Hamiltonian, n: int, *, budget: int = DEFAULT_BUDGET) -> Fraction:
    """The level-``n`` bound E^n, a certified lower bound on the energy per site."""
    prog = lower_bound_program(H, n, budget=budget)
    cert = exactlp.solve(prog.lp)
    if cert.kind != exactlp.OPTIMAL:
        raise RuntimeError(f"strip LP returned {cert.kind}; it is always feasible and bounded")
    return -cert.value


@dataclass(frozen=True)
class EnergyBounds:
    lower: Optional[Fraction]
    upper: Fraction
    witness_pattern: Optional[Pattern]
    partial: bool = False

    @property
    def exact(self) -> bool:
        return self.lower is not None and self.lower == self.upper

    def to_json(self) -> dict:
        return {
            "lower": None if self.lower is None else fmt(self.lower),
            "upper": fmt(self.upper),
            "exact": self.exact,
            "partial": self.partial,
            "witness": None if self.witness_pattern is None else self.witness_pattern.to_json(),
        }


@lru_cache(maxsize=64)
def _period_histograms(d: int, regions: tuple, m: int, n: int):
    """Distinct window-count rows over all m x n patterns, with a representative each."""
    import numpy as np

    patterns = pattern_batch(d, m, n)
    blocks = [batch_window_counts(patterns, r, d) for r in regions]
    stacked = np.concatenate(blocks, axis=1) if blocks else np.zeros((len(patterns), 0), np.int64)
    unique, first = np.unique(stacked, axis=0, return_index=True)
    order = np.argsort(first)
    return unique[order], first[order]


def _pattern_from_index(d: int, m: int, n: int, k: int) -> Pattern:
    digits = index_config(int(k), d, m * n)
    return Pattern(d, tuple(tuple(digits[y * m:(y + 1) * m]) for y in range(n)))


def period_shapes(max_period: int) -> list:
    shapes = [(m, n) for m in range(1, max_period + 1) for n in range(1, max_period + 1)]
    return sorted(shapes, key=lambda s: (s[0] * s[1], s[1], s[0]))


def energy_upper_bound(H: Hamiltonian, max_period: int, *,
                       pattern_budget: int = 2 * 10 ** 6) -> EnergyBounds:
    """Best periodic configuration with both periods at most ``max_period``.

    Shapes are visited by increasing area.  A shape whose pattern count would
    push the running total past ``pattern_budget`` is skipped and the result
    flagged partial.
    """
    import numpy as np

    regions = tuple(H.regions)
    denom = 1
    for _, vec in H.terms:
        for v in vec:
            denom = denom * v.denominator // gcd(denom, v.denominator)
    weights = [int(v * denom) for _, vec in H.terms for v in vec]
    # window counts never exceed the period area, so int64 is safe unless weights are huge
    wide = max((abs(w) for w in weights), default=0) * max_period ** 2 * max(len(weights), 1) >= 2 ** 62
    weights = np.array(weights, dtype=object if wide else np.int64)
    best = None
    best_pattern = None
    used = 0
    partial = False
    for m, n in period_shapes(max_period):
        count = H.d ** (m * n)
        if used + count > pattern_budget:
            partial = True
            continue
        used += count
        hist, first = _period_histograms(H.d, regions, m, n)
        if weights.size:
            scores = (hist.astype(object) if wide else hist).dot(weights)
            k = int(np.argmin(scores))
            value = Fraction(int(scores[k]), denom * m * n)
        else:
            k, value = 0, Fraction(0)
        if best is None or value < best:
            best = value
            best_pattern = _pattern_from_index(H.d, m, n, first[k])
    if best is None:
        raise ResourceError("pattern budget too small for even a 1x1 period",
                            needed=H.d, budget=pattern_budget)
    return EnergyBounds(lower=None, upper=best, witness_pattern=best_pattern, partial=partial)


def energy_bounds(H: Hamiltonian, n: int, max_period: int, *, budget: int = DEFAULT_BUDGET,
                  pattern_budget: int = 2 * 10 ** 6) -> EnergyBounds:
    upper = energy_upper_bound(H, max_period, pattern_budget=pattern_budget)
    lower = energy_lower_bound(H, n, budget=budget)
    return EnergyBounds(lower, upper.upper, upper.witness_pattern, upper.partial)
