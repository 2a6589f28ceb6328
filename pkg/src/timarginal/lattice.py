"""Regions, configurations and distributions on finite patches of Z^2.

Coordinates follow the picture convention: ``x`` grows to the right and
``y`` grows *downwards*, so row ``r`` of a depicted pattern is ``y = r``.
Sites of a region are ordered row-major, i.e. by ``(y, x)``.  A
configuration of a region is the tuple of site values in that order, and
its integer key is that tuple read as base-``d`` digits.  With this order
``v = {(0,0), (0,-1)}`` lists the upper site first, so ``P_v(a, b)`` has
``a`` above ``b``; ``h`` lists ``(0,0)`` then ``(1,0)``.
"""
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, StructuralError
from .rational import fmt, to_rational


def _site_order(site):
    return (site[1], site[0])


@dataclass(frozen=True)
class Region:
    """A nonempty finite set of lattice sites, stored in row-major order."""

    sites: tuple

    def __post_init__(self):
        sites = [tuple(int(c) for c in s) for s in self.sites]
        if not sites:
            raise StructuralError("a region needs at least one site")
        if len(set(sites)) != len(sites):
            raise StructuralError(f"duplicate sites in region {sites}")
        if any(len(s) != 2 for s in sites):
            raise StructuralError("sites are integer pairs (x, y)")
        object.__setattr__(self, "sites", tuple(sorted(sites, key=_site_order)))

    @classmethod
    def of(cls, *sites) -> "Region":
        return cls(tuple(sites))

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return tuple(site) in self.sites

    def issubset(self, other: "Region") -> bool:
        return set(self.sites) <= set(other.sites)

    def translate(self, dx: int, dy: int) -> "Region":
        return Region(tuple((x + dx, y + dy) for x, y in self.sites))

    @property
    def origin(self):
        return (min(x for x, _ in self.sites), min(y for _, y in self.sites))

    def normalized(self) -> "Region":
        """The translate whose bounding box starts at (0, 0)."""
        ox, oy = self.origin
        return self.translate(-ox, -oy)

    @property
    def width(self) -> int:
        xs = [x for x, _ in self.sites]
        return max(xs) - min(xs) + 1

    @property
    def height(self) -> int:
        ys = [y for _, y in self.sites]
        return max(ys) - min(ys) + 1

    def transform(self, matrix) -> "Region":
        (a, b), (c, d) = matrix
        return Region(tuple((a * x + b * y, c * x + d * y) for x, y in self.sites))

    def is_rectangle(self) -> bool:
        return len(self.sites) == self.width * self.height

    def to_json(self) -> list:
        return [list(s) for s in self.sites]

    @classmethod
    def from_json(cls, data) -> "Region":
        return cls(tuple(tuple(s) for s in data))

    def __repr__(self):
        return f"Region({list(self.sites)})"


def rect(m: int, n: int) -> Region:
    """The m-wide, n-tall rectangle {0 <= x < m, 0 <= y < n}."""
    if m < 1 or n < 1:
        raise StructuralError(f"rect({m}, {n}) is empty")
    return Region(tuple((x, y) for y in range(n) for x in range(m)))


H = Region.of((0, 0), (1, 0))
V = Region.of((0, 0), (0, -1))
PLUS = Region.of((0, 0), (1, 1))
MINUS = Region.of((0, 0), (1, -1))
SITE = Region.of((0, 0))

NAMED_REGIONS = {"h": H, "v": V, "plus": PLUS, "+": PLUS, "minus": MINUS, "-": MINUS, "site": SITE}


def region_from_name(name: str) -> Region:
    name = name.strip()
    if name in NAMED_REGIONS:
        return NAMED_REGIONS[name]
    if name.startswith("rect(") and name.endswith(")"):
        m, n = name[5:-1].split(",")
        return rect(int(m), int(n))
    raise DomainError(f"unknown region name {name!r}")


def config_index(config: Sequence[int], d: int) -> int:
    idx = 0
    for a in config:
        idx = idx * d + a
    return idx


def index_config(idx: int, d: int, size: int) -> tuple:
    digits = []
    for _ in range(size):
        idx, a = divmod(idx, d)
        digits.append(a)
    return tuple(reversed(digits))


def config_key(config: Sequence[int], d: int) -> str:
    sep = "" if d <= 10 else ","
    return sep.join(str(a) for a in config)


def parse_config_key(key: str, d: int, size: int) -> tuple:
    key = key.strip()
    if "," in key:
        config = tuple(int(a) for a in key.split(","))
    elif d <= 10:
        config = tuple(int(ch) for ch in key)
    else:
        raise StructuralError(f"configuration key {key!r} needs comma separators when d > 10")
    if len(config) != size or any(not 0 <= a < d for a in config):
        raise StructuralError(f"configuration key {key!r} does not fit {size} sites with d={d}")
    return config


def all_configs(d: int, size: int):
    return product(range(d), repeat=size)


class Distribution:
    """A probability table over the configurations of a region.

    Zero entries are implicit; ``probs`` maps configuration tuples to
    positive Fractions and always sums to exactly one.
    """

    __slots__ = ("d", "region", "probs")

    def __init__(self, d: int, region: Region, probs: Mapping, *, check: bool = True):
        if d < 2:
            raise StructuralError(f"local dimension must be at least 2, got {d}")
        self.d = d
        self.region = region
        clean = {}
        for config, p in probs.items():
            config = tuple(config)
            p = to_rational(p)
            if check:
                if len(config) != len(region) or any(not 0 <= a < d for a in config):
                    raise StructuralError(f"configuration {config} does not fit region/d")
                if p < 0:
                    raise DomainError(f"negative probability {p} at {config}")
            if p:
                clean[config] = clean.get(config, Fraction(0)) + p
        if check and sum(clean.values(), Fraction(0)) != 1:
            raise DomainError(f"probabilities sum to {sum(clean.values(), Fraction(0))}, not 1")
        self.probs = dict(sorted(clean.items()))

    @classmethod
    def from_vector(cls, d: int, region: Region, vector: Sequence) -> "Distribution":
        size = len(region)
        if len(vector) != d ** size:
            raise StructuralError(f"expected {d ** size} entries, got {len(vector)}")
        return cls(d, region, {index_config(i, d, size): p for i, p in enumerate(vector) if p})

    @classmethod
    def delta(cls, d: int, region: Region, config) -> "Distribution":
        return cls(d, region, {tuple(config): 1})

    @classmethod
    def uniform(cls, d: int, region: Region) -> "Distribution":
        n = d ** len(region)
        return cls(d, region, {c: Fraction(1, n) for c in all_configs(d, len(region))})

    @classmethod
    def from_function(cls, d: int, region: Region, fn) -> "Distribution":
        return cls(d, region, {c: fn(*c) for c in all_configs(d, len(region))})

    def __getitem__(self, config) -> Fraction:
        return self.probs.get(tuple(config), Fraction(0))

    def vector(self) -> list:
        size = len(self.region)
        out = [Fraction(0)] * (self.d ** size)
        for config, p in self.probs.items():
            out[config_index(config, self.d)] = p
        return out

    def support(self) -> frozenset:
        return frozenset(self.probs)

    def translate(self, dx: int, dy: int) -> "Distribution":
        return Distribution(self.d, self.region.translate(dx, dy), self.probs, check=False)

    def normalized(self) -> "Distribution":
        return Distribution(self.d, self.region.normalized(), self.probs, check=False)

    def same_table(self, other: "Distribution") -> bool:
        """Equal tables up to a translation of the region."""
        return (self.d == other.d and self.region.normalized() == other.region.normalized()
                and self.probs == other.probs)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.d == other.d and self.region == other.region and self.probs == other.probs

    def __hash__(self):
        return hash((self.d, self.region, tuple(self.probs.items())))

    def __repr__(self):
        body = ", ".join(f"{config_key(c, self.d)}: {fmt(p)}" for c, p in self.probs.items())
        return f"Distribution(d={self.d}, region={list(self.region.sites)}, {{{body}}})"

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "region": self.region.to_json(),
            "probs": {config_key(c, self.d): fmt(p) for c, p in self.probs.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Distribution":
        try:
            d = int(data["d"])
            region = Region.from_json(data["region"])
            raw = data["probs"]
        except KeyError as exc:
            raise StructuralError(f"distribution is missing field {exc.args[0]!r}") from None
        probs = {parse_config_key(k, d, len(region)): to_rational(v) for k, v in raw.items()}
        return cls(d, region, probs)


def transform_distribution(dist: Distribution, matrix, relabel=None) -> Distribution:
    """Image of ``dist`` under a lattice map and an optional outcome relabelling.

    The value carried by site ``s`` moves to site ``matrix @ s`` and is
    renamed ``relabel[value]``.
    """
    image = dist.region.transform(matrix)
    (a, b), (c, e) = matrix
    pos = {site: i for i, site in enumerate(dist.region.sites)}
    order = [pos[_preimage(site, matrix)] for site in image.sites]
    probs = {}
    for config, p in dist.probs.items():
        new = tuple(config[i] for i in order)
        if relabel is not None:
            new = tuple(relabel[v] for v in new)
        probs[new] = p
    return Distribution(dist.d, image, probs, check=False)


def _preimage(site, matrix):
    (a, b), (c, d) = matrix
    det = a * d - b * c
    x, y = site
    # lattice symmetries are orthogonal integer matrices, det = +-1
    return ((d * x - b * y) // det, (-c * x + a * y) // det)


@dataclass(frozen=True)
class MarginalSpec:
    """Input of the marginal problem: local dimension and a list of tables."""

    d: int
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for dist in self.entries:
            if dist.d != self.d:
                raise StructuralError(f"entry with d={dist.d} in a d={self.d} spec")

    @property
    def regions(self) -> list:
        return [dist.region for dist in self.entries]

    def __getitem__(self, i) -> Distribution:
        return self.entries[i]

    def __len__(self):
        return len(self.entries)

    def table(self, region: Region) -> Distribution:
        for dist in self.entries:
            if dist.region == region:
                return dist
        raise KeyError(region)

    def to_json(self) -> dict:
        return {"d": self.d, "entries": [dist.to_json() for dist in self.entries]}

    @classmethod
    def from_json(cls, data: dict) -> "MarginalSpec":
        if "entries" not in data:
            raise StructuralError("marginal spec is missing field 'entries'")
        return cls(int(data["d"]), tuple(Distribution.from_json(e) for e in data["entries"]))


@dataclass(frozen=True)
class Pattern:
    """A deterministic m-wide, n-tall block; ``rows[y][x]`` is the value at (x, y)."""

    d: int
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(a) for a in r) for r in self.rows)
        if not rows or not rows[0]:
            raise StructuralError("a pattern needs at least one cell")
        if any(len(r) != len(rows[0]) for r in rows):
            raise StructuralError("pattern rows have unequal lengths")
        if any(not 0 <= a < self.d for r in rows for a in r):
            raise StructuralError(f"pattern values must lie in 0..{self.d - 1}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def parse(cls, d: int, text: str) -> "Pattern":
        """Rows separated by '/' or newlines, cells by whitespace."""
        lines = [ln for ln in text.replace("/", "\n").splitlines() if ln.strip()]
        return cls(d, tuple(tuple(int(a) for a in ln.split()) for ln in lines))

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def height(self) -> int:
        return len(self.rows)

    def at(self, x: int, y: int) -> int:
        return self.rows[y % self.height][x % self.width]

    def transform(self, matrix, relabel=None) -> "Pattern":
        """Apply a lattice symmetry to the periodic tiling this pattern generates."""
        m, n = self.width, self.height
        # the image tiling has period box of the transformed (m, n) lattice
        corners = [(m, 0), (0, n)]
        imgs = [(matrix[0][0] * x + matrix[0][1] * y, matrix[1][0] * x + matrix[1][1] * y)
                for x, y in corners]
        w = max(abs(p[0]) for p in imgs)
        h = max(abs(p[1]) for p in imgs)
        rows = []
        for y in range(h):
            row = []
            for x in range(w):
                px, py = _preimage((x, y), matrix)
                a = self.at(px, py)
                row.append(relabel[a] if relabel is not None else a)
            rows.append(tuple(row))
        return Pattern(self.d, tuple(rows))

    def shifted(self, dx: int, dy: int) -> "Pattern":
        return Pattern(self.d, tuple(tuple(self.at(x + dx, y + dy) for x in range(self.width))
                                     for y in range(self.height)))

    def to_json(self) -> dict:
        return {"d": self.d, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_json(cls, data: dict) -> "Pattern":
        try:
            return cls(int(data["d"]), tuple(tuple(r) for r in data["rows"]))
        except KeyError as exc:
            raise StructuralError(f"pattern is missing field {exc.args[0]!r}") from None

    def __str__(self):
        return " / ".join(" ".join(str(a) for a in r) for r in self.rows)


def marginalize(dist: Distribution, sub: Region) -> Distribution:
    """Sum out every site of ``dist.region`` outside ``sub``."""
    if not sub.issubset(dist.region):
        raise DomainError(f"{sub} is not contained in {dist.region}")
    pos = {site: i for i, site in enumerate(dist.region.sites)}
    keep = [pos[s] for s in sub.sites]
    out = {}
    for config, p in dist.probs.items():
        key = tuple(config[i] for i in keep)
        out[key] = out.get(key, Fraction(0)) + p
    return Distribution(dist.d, sub, out, check=False)


def _horizontal_segment(region: Region) -> bool:
    ys = {y for _, y in region.sites}
    return len(ys) == 1 and region.is_rectangle()


def check_1d_ti(q: Distribution) -> bool:
    """Whether a table on a horizontal segment extends to a 1D TI process."""
    if not _horizontal_segment(q.region):
        raise DomainError(f"{q.region} is not a horizontal segment")
    if len(q.region) == 1:
        return True
    sites = q.region.sites
    left = marginalize(q, Region(sites[:-1]))
    right = marginalize(q, Region(sites[1:]))
    return left.probs == right.probs


def window_counts(pattern: Pattern, region: Region) -> Counter:
    """How often each configuration of ``region`` appears over the periodic tiling."""
    counts = Counter()
    sites = region.sites
    for y0 in range(pattern.height):
        for x0 in range(pattern.width):
            counts[tuple(pattern.at(x0 + x, y0 + y) for x, y in sites)] += 1
    return counts


def symmetrize_pattern(pattern: Pattern, targets: Iterable[Region]) -> MarginalSpec:
    """Exact marginals of the TI distribution obtained by tiling the plane with
    ``pattern`` and averaging over all of its translates."""
    area = pattern.width * pattern.height
    entries = []
    for region in targets:
        counts = window_counts(pattern, region)
        entries.append(Distribution(pattern.d, region,
                                    {c: Fraction(k, area) for c, k in counts.items()},
                                    check=False))
    return MarginalSpec(pattern.d, tuple(entries))


def reflect_symmetrize(dist: Distribution) -> Distribution:
    """Average of a rectangle table over the reflections of both axes."""
    region = dist.region
    if not region.is_rectangle():
        raise DomainError(f"{region} is not a rectangle")
    ox, oy = region.origin
    m, n = region.width, region.height
    pos = {site: i for i, site in enumerate(region.sites)}

    def perm(flip_x, flip_y):
        out = []
        for x, y in region.sites:
            sx = ox + (m - 1 - (x - ox)) if flip_x else x
            sy = oy + (n - 1 - (y - oy)) if flip_y else y
            out.append(pos[(sx, sy)])
        return out

    perms = [perm(fx, fy) for fx in (False, True) for fy in (False, True)]
    out = {}
    quarter = Fraction(1, 4)
    for config, p in dist.probs.items():
        for order in perms:
            key = tuple(config[i] for i in order)
            out[key] = out.get(key, Fraction(0)) + p * quarter
    return Distribution(dist.d, region, out, check=False)


def reflect_config(config: Sequence[int], region: Region, flip_x: bool, flip_y: bool) -> tuple:
    """The configuration ``a^V`` (flip_x) / ``a^H`` (flip_y) of a rectangle."""
    ox, oy = region.origin
    m, n = region.width, region.height
    pos = {site: i for i, site in enumerate(region.sites)}
    out = []
    for x, y in region.sites:
        sx = ox + (m - 1 - (x - ox)) if flip_x else x
        sy = oy + (n - 1 - (y - oy)) if flip_y else y
        out.append(config[pos[(sx, sy)]])
    return tuple(out)


def product_distribution(single: Sequence, region: Region) -> Distribution:
    """i.i.d. product of one single-site law over every site of ``region``."""
    d = len(single)
    single = [to_rational(p) for p in single]
    return Distribution(d, region, {c: prod((single[a] for a in c), start=Fraction(1))
                                    for c in all_configs(d, len(region))})


def pattern_batch(d: int, m: int, n: int):
    """Every m-wide, n-tall pattern over d symbols as an int array of shape (N, n, m).

    Pattern ``k`` is the row-major digit string of ``k`` in base ``d``, so the
    order matches ``itertools.product(range(d), repeat=m*n)``.
    """
    import numpy as np

    cells = m * n
    idx = np.arange(d ** cells, dtype=np.int64)
    digits = np.empty((idx.size, cells), dtype=np.int8)
    for pos in range(cells - 1, -1, -1):
        idx, digits[:, pos] = np.divmod(idx, d)
    return digits.reshape(-1, n, m)


def batch_window_counts(patterns, region: Region, d: int):
    """Vectorised :func:`window_counts` for a stack of equally sized patterns.

    Returns an int array of shape (N, d**len(region)) whose column ``j``
    counts windows showing the configuration with index ``j``.
    """
    import numpy as np

    patterns = np.asarray(patterns)
    count, n, m = patterns.shape
    code = np.zeros((count, n, m), dtype=np.int64)
    for x, y in region.sites:
        # value at (x0 + x, y0 + y) for every anchor (x0, y0)
        shifted = np.roll(patterns, shift=(-y, -x), axis=(1, 2))
        code = code * d + shifted
    size = d ** len(region)
    flat = code.reshape(count, -1) + (np.arange(count, dtype=np.int64) * size)[:, None]
    return np.bincount(flat.ravel(), minlength=count * size).reshape(count, size)
