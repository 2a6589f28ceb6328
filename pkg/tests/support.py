"""Shared helpers for the test-suite (importable because pytest puts tests/ on sys.path)."""
import json
import random
from fractions import Fraction
from pathlib import Path

from timarginal.exactlp import EQ, FREE, GE, NONNEG, LinearProgram
from timarginal.lattice import Distribution, MarginalSpec, region_from_name

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name):
    return json.loads((FIXTURES / name).read_text())


def table(d, name, vec):
    return Distribution.from_vector(d, region_from_name(name), [Fraction(v) for v in vec])


def spec_from_tables(d, named):
    return MarginalSpec(d, tuple(table(d, n, v) for n, v in named))


def random_lp(rng: random.Random) -> LinearProgram:
    """Small LP with mixed row kinds and bounds; coefficients in [-3, 3], some fractional."""
    n = rng.randint(1, 5)
    m = rng.randint(1, 5)

    def coef():
        v = rng.randint(-3, 3)
        return Fraction(v, rng.choice((1, 1, 2, 3))) if v else Fraction(0)

    rows = [[(j, coef()) for j in range(n) if rng.random() < 0.7] for _ in range(m)]
    rhs = [coef() for _ in range(m)]
    kinds = [rng.choice((EQ, GE, GE)) for _ in range(m)]
    bounds = tuple(rng.choice((NONNEG, NONNEG, NONNEG, FREE)) for _ in range(n))
    objective = [coef() for _ in range(n)]
    return LinearProgram(tuple(objective), tuple(tuple(r) for r in rows), tuple(rhs), tuple(kinds), bounds)
