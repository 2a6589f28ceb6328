import math
import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from support import load_fixture
from timarginal.errors import DomainError, StructuralError
from timarginal.hierarchy import energy_lower_bound, energy_upper_bound
from timarginal.lattice import Pattern
from timarginal.tiling import (KariSystem, Tile, alphabet_contains, beatty_row, circle_point,
                               curve_point, immortal, is_valid_kari_grid, is_valid_tiling,
                               kari_alphabet, kari_left_vector_set, kari_rule, kari_strip_tiling,
                               orbit, periodic_tiling_search, rule_to_hamiltonian, witnesses)
from timarginal.tiling.kari import left_vector_bounds, orbit_region_average, sampled_witness
from timarginal.tiling.wang import TilingRule

F = Fraction


def no_tiling_rule():
    return TilingRule.from_json(load_fixture("rule_no_tiling.json"))


# ---------------------------------------------------------------- Wang rules

def test_all_pairs_accepts_everything():
    rule = TilingRule.all_pairs(3)
    rng = random.Random(1)
    for _ in range(20):
        rows = tuple(tuple(rng.randrange(3) for _ in range(4)) for _ in range(3))
        assert is_valid_tiling(rule, Pattern(3, rows), "torus")


def test_only_zero_one_fails_from_width_three():
    rule = no_tiling_rule()
    assert is_valid_tiling(rule, Pattern(2, ((0, 1),)))
    check = is_valid_tiling(rule, Pattern(2, ((0, 1, 0),)))
    assert not check
    assert check.violation == ("h", (1, 0), (1, 0))
    for row in product(range(2), repeat=3):
        assert not is_valid_tiling(rule, Pattern(2, (row,)))


def test_checkerboard_under_unequal_neighbours():
    rule = TilingRule.unequal_neighbours(2)
    grid = Pattern.from_json(load_fixture("checkerboard.json"))
    assert is_valid_tiling(rule, grid, "torus")
    assert TilingRule.from_json(load_fixture("rule_checkerboard.json")) == rule
    assert not is_valid_tiling(rule, Pattern(2, ((0, 0), (1, 1))))


def test_wrap_conventions():
    rule = TilingRule.unequal_neighbours(2)
    odd_width = Pattern(2, ((0, 1, 0), (1, 0, 1)))
    assert is_valid_tiling(rule, odd_width, "none")
    assert is_valid_tiling(rule, odd_width, "vertical")
    assert not is_valid_tiling(rule, odd_width, "horizontal")
    assert not is_valid_tiling(rule, odd_width, "torus")
    odd_height = Pattern(2, ((0, 1), (1, 0), (0, 1)))
    assert is_valid_tiling(rule, odd_height, "horizontal")
    assert not is_valid_tiling(rule, odd_height, "vertical")
    # a single row glued to itself vertically sees equal tiles
    assert not is_valid_tiling(rule, Pattern(2, ((0, 1),)), "vertical")


def test_bad_inputs():
    rule = TilingRule.all_pairs(2)
    with pytest.raises(DomainError):
        is_valid_tiling(rule, Pattern(3, ((2, 0),)))
    with pytest.raises(DomainError):
        is_valid_tiling(rule, Pattern(2, ((1, 0),)), "mobius")
    with pytest.raises(StructuralError):
        TilingRule(2, [(0, 2)], [])
    with pytest.raises(StructuralError):
        TilingRule.from_json({"size": 2, "horizontal": []})


def test_rule_json_roundtrip():
    rule = TilingRule.from_predicates(3, lambda a, b: a <= b, lambda a, b: (a + b) % 2 == 0)
    assert TilingRule.from_json(rule.to_json()) == rule


def test_periodic_search_examples():
    hit = periodic_tiling_search(TilingRule.all_pairs(2), 3)
    assert hit.found and (hit.pattern.width, hit.pattern.height) == (1, 1)
    hit = periodic_tiling_search(TilingRule.unequal_neighbours(2), 3)
    assert (hit.pattern.width, hit.pattern.height) == (2, 2)
    assert is_valid_tiling(TilingRule.unequal_neighbours(2), hit.pattern, "torus")
    miss = periodic_tiling_search(no_tiling_rule(), 4)
    assert not miss.found and not miss.partial


def test_periodic_search_budget():
    res = periodic_tiling_search(no_tiling_rule(), 6, budget=10)
    assert res.partial and not res.found and res.nodes == 10


def test_reduction_tables():
    red = rule_to_hamiltonian(no_tiling_rule())
    assert red.minimize == red.maximize.negated()
    grid = Pattern(2, ((0, 1), (0, 1)))
    # per site: one horizontal pair allowed of two, both vertical pairs allowed
    assert red.maximize.pattern_energy(grid) == F(3, 2)


def test_reduction_gap_for_rule_without_tiling():
    red = rule_to_hamiltonian(no_tiling_rule())
    lower = energy_lower_bound(red.minimize, 2)
    upper = energy_upper_bound(red.minimize, 2)
    assert lower == upper.upper == F(-3, 2)
    assert upper.witness_pattern.rows in (((0, 1),), ((1, 0),))


def _random_rule(rng, size):
    pairs = list(product(range(size), repeat=2))
    return TilingRule(size, [p for p in pairs if rng.random() < 0.6],
                      [p for p in pairs if rng.random() < 0.6])


def test_reduction_sound_on_random_rules():
    rng = random.Random(7)
    seen = 0
    for _ in range(40):
        rule = _random_rule(rng, 2)
        red = rule_to_hamiltonian(rule)
        upper = energy_upper_bound(red.minimize, 3)
        lower = energy_lower_bound(red.minimize, 2)
        assert F(-2) <= lower <= upper.upper
        hit = periodic_tiling_search(rule, 3)
        assert (upper.upper == -2) == hit.found
        if hit.found:
            seen += 1
            assert lower == -2
            assert red.maximize.pattern_energy(hit.pattern) == 2
    assert seen > 0


# ---------------------------------------------------------------- Kari tiles

def test_left_vector_set_of_rotation_system():
    sys = KariSystem.rotation()
    L = kari_left_vector_set(sys)
    assert len(L) == 169
    (m1, lo1, hi1), (m2, lo2, hi2) = left_vector_bounds(sys)
    assert (m1, m2) == (5, 5)
    assert (lo1, hi1, lo2, hi2) == (F(-3, 5), F(9, 5), F(-6, 5), F(6, 5))
    assert min(x for x, _ in L) == F(-3, 5) and max(y for _, y in L) == F(6, 5)


def test_left_vector_set_identity():
    sys = KariSystem(((1, 0), (0, 1)), (0, 0), ((0, 0),))
    assert kari_left_vector_set(sys) == frozenset(product((-1, 0, 1), repeat=2))


def test_identity_alphabet_brute_force():
    sys = KariSystem(((1, 0), (0, 1)), (0, 0), ((0, 0),))
    corners = list(product((0, 1), repeat=2))
    L = set(product((-1, 0, 1), repeat=2))
    expected = set()
    for t, b, l, r in product(corners, corners, L, L):
        if all(t[s] + l[s] == b[s] + r[s] for s in range(2)):
            expected.add(Tile(1, t, b, l, r))
    alphabet = kari_alphabet(sys)
    assert set(alphabet) == expected and len(alphabet) == len(expected)


def test_rotation_alphabet():
    sys = KariSystem.rotation()
    alphabet = kari_alphabet(sys)
    assert len(alphabet) == 2947
    assert all(t.is_consistent(sys) for t in alphabet)
    assert alphabet == sorted(set(alphabet))
    labeled = kari_alphabet(sys, labeled=True)
    assert len(labeled) == 4102
    assert {t.key for t in labeled} == {t.key for t in alphabet}


def test_system_json_roundtrip():
    sys = KariSystem.from_json(load_fixture("rotation_system.json"))
    assert sys == KariSystem.rotation()
    assert KariSystem.from_json(sys.to_json()) == sys
    tile = kari_alphabet(sys)[100]
    assert Tile.from_json(tile.to_json()) == tile


def test_beatty_row_examples():
    assert beatty_row((F(1, 2), F(1, 3)), range(1, 7)) == [
        (0, 0), (1, 0), (0, 1), (1, 0), (0, 0), (1, 1)]
    assert beatty_row((1, 0), range(1, 4)) == [(1, 0)] * 3


@given(st.fractions(min_value=0, max_value=1, max_denominator=50),
       st.fractions(min_value=0, max_value=1, max_denominator=50), st.integers(1, 40))
def test_beatty_row_sums_telescope(x, y, k):
    row = beatty_row((x, y), range(1, k + 1))
    assert sum(a for a, _ in row) == (k * x).__floor__()
    assert all(a in (0, 1) and b in (0, 1) for a, b in row)


def test_immortal_examples():
    sys = KariSystem.rotation()
    assert immortal((F(-1, 5), F(2, 5)))
    assert not immortal((1, 1))
    assert immortal((F(-1, 5), 0))
    assert sys.f((F(-1, 5), F(2, 5))) == (F(-1, 5), F(2, 5))
    with pytest.raises(DomainError):
        immortal((0, 0), KariSystem(((1, 0), (0, 1)), (0, 0), ((0, 0),)))


def test_orbit_inverse():
    z = circle_point(F(3, 10))
    pts = orbit(z, range(-5, 6))
    assert pts[5] == z
    sys = KariSystem.rotation()
    for a, b in zip(pts, pts[1:]):
        assert sys.f(a) == b


def test_fixed_point_strip_has_identical_rows():
    grid = kari_strip_tiling(KariSystem.rotation(), (F(-1, 5), F(2, 5)), 4, 12)
    assert all(row == grid[0] for row in grid)
    assert is_valid_kari_grid(grid)


def test_strips_from_immortal_points_use_alphabet_tiles():
    sys = KariSystem.rotation()
    keys = {t.key for t in kari_alphabet(sys)}
    rng = random.Random(3)
    used = set()
    for _ in range(300):
        mu = F(rng.randint(0, 40), 100)
        point = circle_point(mu, rng.choice([(F(3, 5), F(4, 5)), (F(-4, 5), F(3, 5)),
                                              (F(5, 13), F(-12, 13)), (1, 0)]))
        assert immortal(point)
        grid = kari_strip_tiling(sys, point, 4, 8, k_offset=rng.randint(-50, 50))
        assert is_valid_kari_grid(grid)
        for row in grid:
            for tile in row:
                assert alphabet_contains(keys, tile, sys)
                used.add(tile.key)
    assert len(used) > 50


def test_kari_rule_agrees_with_grid_check():
    sys = KariSystem.rotation()
    alphabet = kari_alphabet(sys)
    index = {t: j for j, t in enumerate(alphabet)}
    rule = kari_rule(alphabet)
    grid = kari_strip_tiling(sys, circle_point(F(1, 4)), 3, 6)
    pattern = Pattern(len(alphabet), tuple(tuple(index[t] for t in row) for row in grid))
    assert is_valid_tiling(rule, pattern)


def test_row_average_law():
    # f is affine, so summing f(t) + l = b + r along a row telescopes the l/r labels
    sys = KariSystem.rotation()
    grid = kari_strip_tiling(sys, circle_point(F(7, 20)), 5, 30)
    m = len(grid[0])
    for row in grid:
        mean_t = tuple(sum(F(t.t[s]) for t in row) / m for s in range(2))
        mean_b = tuple(sum(F(t.b[s]) for t in row) / m for s in range(2))
        ft = sys.f(mean_t)
        for s in range(2):
            assert ft[s] + row[0].l[s] / m == mean_b[s] + row[-1].r[s] / m


def test_escaping_row_raises():
    with pytest.raises(DomainError):
        kari_strip_tiling(KariSystem.rotation(), (F(9, 10), F(9, 10)), 5, 4)


def test_witness_of_region_one_grid():
    tile = Tile(1, (0, 0), (0, 0), (0, 0), (0, 0))
    w = witnesses([[tile] * 3] * 2)
    assert (w.omega, w.eta) == (0, 0)
    with pytest.raises(DomainError):
        witnesses([])


def test_curve_endpoints_and_shape():
    assert curve_point(F(1, 5)) == (0.0, 0.0)
    omega, eta = curve_point(F(2, 5))
    assert abs(omega - 0.4 / math.pi * math.sqrt(3) / 2) < 1e-9
    assert abs(eta - 1 / 3) < 1e-9
    mus = [0.2 + 0.01 * k for k in range(21)]
    etas = [curve_point(m)[1] for m in mus]
    assert etas == sorted(etas)
    with pytest.raises(DomainError):
        curve_point(F(1, 2))


def test_orbit_region_average_approaches_curve():
    for mu in (F(1, 4), F(3, 10), F(2, 5)):
        eta = curve_point(mu)[1]
        gaps = [abs(float(orbit_region_average(circle_point(mu), N)) - eta) for N in (100, 10000)]
        assert gaps[1] < gaps[0] and gaps[1] < 1e-3


def test_sampled_witness_close_to_curve():
    omega, eta = sampled_witness(F(3, 10), 400, 61).as_floats()
    target = curve_point(F(3, 10))
    assert abs(omega - target[0]) < 0.03 and abs(eta - target[1]) < 0.03
