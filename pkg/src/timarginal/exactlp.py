"""Exact rational linear programming.

Problems are always stated as maximisation::

    max  c.x
    s.t. a_i.x =  b_i   (row kind "eq")
         a_i.x >= b_i   (row kind "ge")
         x_j >= 0       (bound "nonneg")   or x_j free (bound "free")

The matching dual is ``min b.y`` subject to ``(A^T y)_j >= c_j`` for
nonnegative columns, ``= c_j`` for free ones, ``y_i <= 0`` on "ge" rows and
``y_i`` free on "eq" rows.  Every certificate produced by :func:`solve` is
stated in these terms, and :func:`verify_certificate` checks it with plain
``Fraction`` arithmetic without touching the solver.

The solver is a dense two-phase tableau simplex over ``gmpy2.mpq`` with
Bland's rule, so it terminates on degenerate input.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from gmpy2 import mpq

from .errors import StructuralError
from .rational import fmt, fmt_vec, parse_vec, to_rational

EQ = "eq"
GE = "ge"
NONNEG = "nonneg"
FREE = "free"

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_ZERO = mpq(0)
_ONE = mpq(1)


def _normalize_row(row) -> tuple:
    acc = {}
    for col, val in row:
        acc[int(col)] = acc.get(int(col), Fraction(0)) + to_rational(val)
    return tuple(sorted((c, v) for c, v in acc.items() if v))


@dataclass(frozen=True)
class LinearProgram:
    """An LP in the maximisation form described in the module docstring.

    ``rows`` is sparse and row-major: one tuple of ``(column, value)`` pairs
    per constraint.  All numbers are coerced to ``Fraction`` on construction.
    """

    objective: tuple
    rows: tuple
    rhs: tuple
    row_kinds: tuple
    variable_bounds: tuple = NONNEG

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(to_rational(c) for c in self.objective))
        object.__setattr__(self, "rows", tuple(_normalize_row(r) for r in self.rows))
        object.__setattr__(self, "rhs", tuple(to_rational(b) for b in self.rhs))
        bounds = self.variable_bounds
        if isinstance(bounds, str):
            bounds = (bounds,) * len(self.objective)
        object.__setattr__(self, "variable_bounds", tuple(bounds))
        object.__setattr__(self, "row_kinds", tuple(self.row_kinds))
        self.check()

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def check(self):
        m, n = len(self.rows), len(self.objective)
        if len(self.rhs) != m or len(self.row_kinds) != m:
            raise StructuralError(
                f"{m} rows but {len(self.rhs)} rhs entries and {len(self.row_kinds)} row kinds")
        if len(self.variable_bounds) != n:
            raise StructuralError(
                f"{n} objective entries but {len(self.variable_bounds)} variable bounds")
        for kind in self.row_kinds:
            if kind not in (EQ, GE):
                raise StructuralError(f"unknown row kind {kind!r}")
        for bound in self.variable_bounds:
            if bound not in (NONNEG, FREE):
                raise StructuralError(f"unknown variable bound {bound!r}")
        for i, row in enumerate(self.rows):
            for col, _ in row:
                if not 0 <= col < n:
                    raise StructuralError(f"row {i} references column {col} of {n}")

    @classmethod
    def dense(cls, objective, matrix, rhs, row_kinds, variable_bounds=NONNEG):
        rows = [[(j, a) for j, a in enumerate(r) if a] for r in matrix]
        return cls(tuple(objective), tuple(rows), tuple(rhs), tuple(row_kinds), variable_bounds)

    def with_objective(self, objective) -> "LinearProgram":
        return LinearProgram(tuple(objective), self.rows, self.rhs, self.row_kinds,
                             self.variable_bounds)

    def row_value(self, i: int, x: Sequence) -> Fraction:
        return sum((a * x[j] for j, a in self.rows[i]), Fraction(0))

    def to_text(self) -> str:
        """Plain-text standard-form dump, for debugging."""
        def term(j, a):
            return f"{'+' if a >= 0 else '-'} {fmt(abs(a))} x{j}"

        lines = ["max " + " ".join(term(j, c) for j, c in enumerate(self.objective) if c) or "max 0"]
        lines.append("subject to")
        for i, row in enumerate(self.rows):
            op = "=" if self.row_kinds[i] == EQ else ">="
            lhs = " ".join(term(j, a) for j, a in row) or "0"
            lines.append(f"  r{i}: {lhs} {op} {fmt(self.rhs[i])}")
        free = [f"x{j}" for j, b in enumerate(self.variable_bounds) if b == FREE]
        lines.append("bounds: all x >= 0" + (f" except free {', '.join(free)}" if free else ""))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "objective": fmt_vec(self.objective),
            "rows": [[[j, fmt(a)] for j, a in row] for row in self.rows],
            "rhs": fmt_vec(self.rhs),
            "row_kinds": list(self.row_kinds),
            "variable_bounds": list(self.variable_bounds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearProgram":
        return cls(
            parse_vec(data["objective"]),
            tuple(tuple((int(j), to_rational(a)) for j, a in row) for row in data["rows"]),
            parse_vec(data["rhs"]),
            tuple(data["row_kinds"]),
            tuple(data["variable_bounds"]),
        )


@dataclass(frozen=True)
class Certificate:
    """Outcome of an LP together with the evidence needed to check it.

    * ``optimal``: ``primal_point`` and ``dual_multipliers`` with equal
      objective values.
    * ``feasible``: ``primal_point`` only.
    * ``infeasible``: ``dual_multipliers`` form a Farkas vector.
    * ``unbounded``: a feasible ``primal_point`` and an improving ``ray``.
    """

    kind: str
    primal_point: Optional[tuple] = None
    dual_multipliers: Optional[tuple] = None
    ray: Optional[tuple] = None
    value: Optional[Fraction] = field(default=None, compare=False)

    @property
    def is_feasible(self) -> bool:
        return self.kind in (OPTIMAL, FEASIBLE, UNBOUNDED)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("primal_point", "dual_multipliers", "ray"):
            vec = getattr(self, name)
            out[name] = None if vec is None else fmt_vec(vec)
        out["value"] = None if self.value is None else fmt(self.value)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        def vec(name):
            v = data.get(name)
            return None if v is None else parse_vec(v)

        value = data.get("value")
        return cls(data["kind"], vec("primal_point"), vec("dual_multipliers"), vec("ray"),
                   None if value is None else to_rational(value))


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class _Tableau:
    """Dense simplex tableau; artificial columns are kept to read off B^-1."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        m = lp.num_rows
        self.pos, self.neg, self.slack = [], {}, {}
        ncols = 0
        for j, bound in enumerate(lp.variable_bounds):
            self.pos.append(ncols)
            ncols += 1
            if bound == FREE:
                self.neg[j] = ncols
                ncols += 1
        for i, kind in enumerate(lp.row_kinds):
            if kind == GE:
                self.slack[i] = ncols
                ncols += 1
        self.nstd = ncols
        self.ncols = ncols + m
        self.sigma = []
        self.T, self.beta = [], []
        for i in range(m):
            row = [_ZERO] * self.ncols
            for j, a in lp.rows[i]:
                a = mpq(a.numerator, a.denominator)
                row[self.pos[j]] += a
                if j in self.neg:
                    row[self.neg[j]] -= a
            if i in self.slack:
                row[self.slack[i]] = -_ONE
            b = mpq(lp.rhs[i].numerator, lp.rhs[i].denominator)
            sign = -1 if b < 0 else 1
            if sign < 0:
                row = [-x for x in row]
                b = -b
            row[self.nstd + i] = _ONE
            self.sigma.append(sign)
            self.T.append(row)
            self.beta.append(b)
        self.basis = [self.nstd + i for i in range(m)]
        self.d = [_ZERO] * self.ncols
        self.z = _ZERO

    def pivot(self, r: int, q: int):
        T, beta = self.T, self.beta
        prow = T[r]
        piv = prow[q]
        if piv != 1:
            inv = 1 / piv
            prow = [x * inv if x else x for x in prow]
            T[r] = prow
            beta[r] = beta[r] * inv
        nz = [j for j, x in enumerate(prow) if x]
        br = beta[r]
        for i, row in enumerate(T):
            if i == r:
                continue
            f = row[q]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
                beta[i] -= f * br
        f = self.d[q]
        if f:
            d = self.d
            for j in nz:
                d[j] -= f * prow[j]
            self.z += f * br
        self.basis[r] = q

    def entering(self, allowed: int) -> Optional[int]:
        d = self.d
        for j in range(allowed):
            if d[j] > 0:
                return j
        return None

    def leaving(self, q: int) -> Optional[int]:
        best, best_ratio = None, None
        for i, row in enumerate(self.T):
            a = row[q]
            if a > 0:
                ratio = self.beta[i] / a
                if (best is None or ratio < best_ratio
                        or (ratio == best_ratio and self.basis[i] < self.basis[best])):
                    best, best_ratio = i, ratio
        return best

    def run(self, allowed: int) -> Optional[int]:
        """Pivot to optimality; returns an unbounded entering column, if any."""
        while True:
            q = self.entering(allowed)
            if q is None:
                return None
            r = self.leaving(q)
            if r is None:
                return q
            self.pivot(r, q)

    def set_costs(self, costs: list):
        d = list(costs)
        z = _ZERO
        for i, bvar in enumerate(self.basis):
            cb = costs[bvar]
            if cb:
                row = self.T[i]
                for j, x in enumerate(row):
                    if x:
                        d[j] -= cb * x
                z += cb * self.beta[i]
        self.d, self.z = d, z

    def duals(self, art_costs) -> tuple:
        # d_art_i = c_art_i - y'_i, undo the row sign flips afterwards
        return tuple(_to_fraction(self.sigma[i] * (art_costs[i] - self.d[self.nstd + i]))
                     for i in range(len(self.T)))

    def std_point(self) -> list:
        x = [_ZERO] * self.ncols
        for i, bvar in enumerate(self.basis):
            x[bvar] = self.beta[i]
        return x

    def to_original(self, xs) -> tuple:
        out = []
        for j in range(self.lp.num_vars):
            v = xs[self.pos[j]]
            if j in self.neg:
                v -= xs[self.neg[j]]
            out.append(_to_fraction(v))
        return tuple(out)


def solve(lp: LinearProgram) -> Certificate:
    """Solve ``lp`` exactly.

    Returns an ``optimal`` certificate with primal and dual vectors whose
    objective values agree exactly, an ``infeasible`` certificate carrying a
    Farkas vector, or an ``unbounded`` certificate carrying a ray.
    """
    lp.check()
    tab = _Tableau(lp)
    m = lp.num_rows

    # phase 1: max -sum(artificials); artificials may not re-enter
    costs1 = [_ZERO] * tab.nstd + [-_ONE] * m
    tab.set_costs(costs1)
    tab.run(tab.nstd)
    if tab.z < 0:
        y = tab.duals([-_ONE] * m)
        return Certificate(INFEASIBLE, dual_multipliers=y)

    for i in range(m):
        if tab.basis[i] >= tab.nstd:
            row = tab.T[i]
            for j in range(tab.nstd):
                if row[j]:
                    tab.pivot(i, j)
                    break

    costs2 = [_ZERO] * tab.ncols
    for j, c in enumerate(lp.objective):
        if c:
            c = mpq(c.numerator, c.denominator)
            costs2[tab.pos[j]] = c
            if j in tab.neg:
                costs2[tab.neg[j]] = -c
    tab.set_costs(costs2)
    q = tab.run(tab.nstd)
    xs = tab.std_point()
    x = tab.to_original(xs)
    if q is not None:
        ray_std = [_ZERO] * tab.ncols
        ray_std[q] = _ONE
        for i, bvar in enumerate(tab.basis):
            ray_std[bvar] = -tab.T[i][q]
        return Certificate(UNBOUNDED, primal_point=x, ray=tab.to_original(ray_std))
    y = tab.duals([_ZERO] * m)
    return Certificate(OPTIMAL, primal_point=x, dual_multipliers=y, value=_to_fraction(tab.z))


def feasibility(lp: LinearProgram) -> Certificate:
    """Decide feasibility of ``lp``'s constraints, ignoring its objective."""
    cert = solve(lp.with_objective((0,) * lp.num_vars))
    if cert.kind == OPTIMAL:
        return Certificate(FEASIBLE, primal_point=cert.primal_point)
    return cert


def _dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def _primal_ok(lp: LinearProgram, x) -> bool:
    if x is None or len(x) != lp.num_vars:
        return False
    for j, bound in enumerate(lp.variable_bounds):
        if bound == NONNEG and x[j] < 0:
            return False
    for i in range(lp.num_rows):
        lhs = lp.row_value(i, x)
        if lp.row_kinds[i] == EQ and lhs != lp.rhs[i]:
            return False
        if lp.row_kinds[i] == GE and lhs < lp.rhs[i]:
            return False
    return True


def _transpose_times(lp: LinearProgram, y) -> list:
    out = [Fraction(0)] * lp.num_vars
    for i, row in enumerate(lp.rows):
        yi = y[i]
        if yi:
            for j, a in row:
                out[j] += a * yi
    return out


def _dual_signs_ok(lp: LinearProgram, y) -> bool:
    return all(not (kind == GE and yi > 0) for kind, yi in zip(lp.row_kinds, y))


def verify_certificate(lp: LinearProgram, cert: Certificate) -> bool:
    """Check the algebraic conditions of ``cert`` against ``lp`` exactly."""
    lp.check()
    for name, expected in (("primal_point", lp.num_vars), ("ray", lp.num_vars),
                           ("dual_multipliers", lp.num_rows)):
        vec = getattr(cert, name)
        if vec is not None and len(vec) != expected:
            raise StructuralError(f"certificate {name} has length {len(vec)}, expected {expected}")
    x = None if cert.primal_point is None else [to_rational(v) for v in cert.primal_point]
    y = None if cert.dual_multipliers is None else [to_rational(v) for v in cert.dual_multipliers]

    if cert.kind == FEASIBLE:
        return _primal_ok(lp, x)

    if cert.kind == INFEASIBLE:
        if y is None or not _dual_signs_ok(lp, y):
            return False
        aty = _transpose_times(lp, y)
        for j, bound in enumerate(lp.variable_bounds):
            if bound == NONNEG and aty[j] < 0:
                return False
            if bound == FREE and aty[j] != 0:
                return False
        return _dot(lp.rhs, y) < 0

    if cert.kind == OPTIMAL:
        if not _primal_ok(lp, x) or y is None or not _dual_signs_ok(lp, y):
            return False
        aty = _transpose_times(lp, y)
        for j, bound in enumerate(lp.variable_bounds):
            if bound == NONNEG and aty[j] < lp.objective[j]:
                return False
            if bound == FREE and aty[j] != lp.objective[j]:
                return False
        primal = _dot(lp.objective, x)
        if cert.value is not None and cert.value != primal:
            return False
        return primal == _dot(lp.rhs, y)

    if cert.kind == UNBOUNDED:
        if not _primal_ok(lp, x) or cert.ray is None:
            return False
        r = [to_rational(v) for v in cert.ray]
        for j, bound in enumerate(lp.variable_bounds):
            if bound == NONNEG and r[j] < 0:
                return False
        for i in range(lp.num_rows):
            lhs = lp.row_value(i, r)
            if lp.row_kinds[i] == EQ and lhs != 0:
                return False
            if lp.row_kinds[i] == GE and lhs < 0:
                return False
        return _dot(lp.objective, r) > 0

    raise StructuralError(f"unknown certificate kind {cert.kind!r}")


def maximize(lp: LinearProgram, objective) -> Certificate:
    return solve(lp.with_objective(objective))


def minimize(lp: LinearProgram, objective) -> Certificate:
    """Solve ``min objective.x``; the certificate is that of ``max -objective.x``."""
    return solve(lp.with_objective(tuple(-to_rational(c) for c in objective)))
