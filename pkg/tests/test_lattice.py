import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from support import table
from timarginal.errors import DomainError, StructuralError
from timarginal.lattice import (H, MINUS, PLUS, SITE, V, Distribution, MarginalSpec, Pattern, Region,
                                batch_window_counts, check_1d_ti, config_index, config_key,
                                index_config, marginalize, parse_config_key, pattern_batch,
                                product_distribution, rect, reflect_config, reflect_symmetrize,
                                region_from_name, symmetrize_pattern, window_counts)

F = Fraction
half, third = F(1, 2), F(1, 3)


def test_named_regions():
    assert set(H.sites) == {(0, 0), (1, 0)}
    assert set(V.sites) == {(0, 0), (0, -1)}
    assert set(PLUS.sites) == {(0, 0), (1, 1)}
    assert set(MINUS.sites) == {(0, 0), (1, -1)}
    assert len(rect(3, 2)) == 6
    assert region_from_name("rect(2,3)") == rect(2, 3)
    assert region_from_name("+") == PLUS
    with pytest.raises((StructuralError, DomainError, ValueError)):
        region_from_name("diagonal")


def test_vertical_pair_lists_upper_site_first():
    # y grows downward in pattern pictures, so (0, -1) is the upper site
    assert V.sites[0] == (0, -1)
    spec = symmetrize_pattern(Pattern.parse(2, "0 / 1"), [V])
    assert spec.entries[0][(0, 1)] == half and spec.entries[0][(1, 0)] == half
    spec = symmetrize_pattern(Pattern.parse(3, "0 / 2 / 2"), [V])
    # pairs (upper, lower) over the period: (0,2), (2,2), (2,0)
    assert spec.entries[0][(0, 2)] == third and spec.entries[0][(2, 0)] == third


def test_region_invariants():
    with pytest.raises(StructuralError):
        Region(())
    with pytest.raises(StructuralError):
        Region.of((0, 0), (0, 0))
    r = Region.of((3, 4), (4, 4))
    assert r.normalized() == H
    assert Region.from_json(r.to_json()) == r


def test_config_encoding_round_trip():
    for d, size in ((2, 3), (3, 2), (12, 2)):
        for k in range(d ** size):
            c = index_config(k, d, size)
            assert config_index(c, d) == k
            assert parse_config_key(config_key(c, d), d, size) == c
    assert config_key((1, 0, 1), 2) == "101"
    assert config_key((11, 3), 12) == "11,3"


def test_distribution_validation():
    with pytest.raises(DomainError):
        Distribution(2, H, {(0, 0): F(1, 2)})
    with pytest.raises(DomainError):
        Distribution(2, H, {(0, 0): F(3, 2), (1, 1): F(-1, 2)})
    with pytest.raises(StructuralError):
        Distribution(2, H, {(0, 2): 1})
    with pytest.raises((TypeError, ValueError)):
        Distribution(2, H, {(0, 0): 0.5, (1, 1): 0.5})
    d = Distribution(2, H, {(0, 1): "1/3", (1, 0): "2/3"})
    assert Distribution.from_json(d.to_json()) == d
    assert d.vector() == [0, third, 2 * third, 0]


def test_marginalize_identity_and_product():
    p = Distribution.from_vector(2, rect(2, 2), [F(k + 1, 136) for k in range(16)])
    assert marginalize(p, p.region) == p
    prod = product_distribution([F(1, 4), F(3, 4)], H)
    m = marginalize(prod, SITE)
    assert m.vector() == [F(1, 4), F(3, 4)]
    with pytest.raises(DomainError):
        marginalize(prod, Region.of((5, 5)))


def test_marginalize_by_hand():
    # uniform on {0000, 1111} over rect(2,2): the h marginal is 1/2 delta_{a,b}
    p = Distribution(2, rect(2, 2), {(0, 0, 0, 0): half, (1, 1, 1, 1): half})
    assert marginalize(p, H).vector() == [half, 0, 0, half]


@given(st.lists(st.integers(1, 9), min_size=16, max_size=16))
def test_marginalize_transitive(weights):
    total = sum(weights)
    p = Distribution.from_vector(2, rect(2, 2), [F(w, total) for w in weights])
    b = Region.of((0, 0), (1, 0), (0, 1))
    for c in (Region.of((0, 0)), Region.of((1, 0)), H, Region.of((0, 0), (0, 1))):
        assert marginalize(marginalize(p, b), c) == marginalize(p, c)


def test_check_1d_ti_examples():
    assert check_1d_ti(Distribution(2, H, {(0, 1): half, (1, 0): half}))
    assert not check_1d_ti(Distribution.delta(2, H, (0, 1)))
    assert check_1d_ti(product_distribution([F(1, 5), F(3, 10), F(1, 2)], rect(4, 1)))
    with pytest.raises(DomainError):
        check_1d_ti(Distribution.uniform(2, V))


def test_symmetrize_examples():
    spec = symmetrize_pattern(Pattern.parse(2, "0 0 / 1 1"), [H, V, PLUS, MINUS])
    assert spec.entries[0].vector() == [half, 0, 0, half]
    for dist in spec.entries[1:]:
        assert dist.vector() == [0, half, half, 0]
    spec = symmetrize_pattern(Pattern.parse(2, "0"), [H, V, PLUS, MINUS])
    assert all(dist.vector() == [1, 0, 0, 0] for dist in spec.entries)
    spec = symmetrize_pattern(Pattern.parse(2, "0 0 1 / 0 1 0 / 1 0 0"), [H, V, PLUS, MINUS])
    for dist in spec.entries[:3]:
        assert dist.vector() == [third, third, third, 0]
    assert spec.entries[3].vector() == [2 * third, 0, 0, third]


def _brute_average(pattern, region):
    """Tile a patch large enough to hold every window and average explicitly."""
    m, n = pattern.width, pattern.height
    xs = [x for x, _ in region.sites]
    ys = [y for _, y in region.sites]
    pad_x, pad_y = max(xs) - min(xs), max(ys) - min(ys)
    big = [[pattern.rows[y % n][x % m] for x in range(m + pad_x)] for y in range(n + pad_y)]
    out = {}
    for y0 in range(n):
        for x0 in range(m):
            c = tuple(big[y0 + y - min(ys)][x0 + x - min(xs)] for x, y in region.sites)
            out[c] = out.get(c, 0) + F(1, m * n)
    return out


@given(st.integers(2, 3), st.integers(1, 4), st.integers(1, 4), st.data())
def test_symmetrize_matches_brute_force(d, m, n, data):
    rows = tuple(tuple(data.draw(st.integers(0, d - 1)) for _ in range(m)) for _ in range(n))
    p = Pattern(d, rows)
    regions = [H, V, PLUS, MINUS, rect(2, 2), rect(3, 1)]
    spec = symmetrize_pattern(p, regions)
    for dist, r in zip(spec.entries, regions):
        assert dist.probs == _brute_average(p, r)


@given(st.integers(2, 3), st.integers(1, 4), st.integers(1, 4), st.data())
def test_symmetrized_marginals_are_lti(d, m, n, data):
    rows = tuple(tuple(data.draw(st.integers(0, d - 1)) for _ in range(m)) for _ in range(n))
    spec = symmetrize_pattern(Pattern(d, rows), [H, V, PLUS, MINUS])
    singles = []
    for dist in spec.entries:
        vec = dist.vector()
        singles.append([sum(vec[a * d + b] for b in range(d)) for a in range(d)])
        singles.append([sum(vec[a * d + b] for a in range(d)) for b in range(d)])
    assert all(s == singles[0] for s in singles)


def test_reflect_symmetrize():
    d = Distribution.delta(2, H, (0, 1))
    r = reflect_symmetrize(d)
    assert r.vector() == [0, half, half, 0]
    assert reflect_symmetrize(r) == r
    u = Distribution.uniform(2, rect(3, 2))
    assert reflect_symmetrize(u) == u
    with pytest.raises(DomainError):
        reflect_symmetrize(Distribution.uniform(2, PLUS))


@given(st.lists(st.integers(0, 5), min_size=16, max_size=16).filter(any))
def test_reflect_symmetrize_properties(weights):
    total = sum(weights)
    region = rect(2, 2)
    p = Distribution.from_vector(2, region, [F(w, total) for w in weights])
    q = reflect_symmetrize(p)
    assert reflect_symmetrize(q) == q
    for config in itertools.product(range(2), repeat=4):
        for fx, fy in ((True, False), (False, True)):
            assert q[config] == q[reflect_config(config, region, fx, fy)]
    # a reflection-invariant functional: number of ones
    f = lambda c: sum(c)
    assert (sum(f(c) * v for c, v in p.probs.items()) == sum(f(c) * v for c, v in q.probs.items()))


def test_pattern_parse_transform_and_json():
    p = Pattern.parse(3, "0 2 1 / 2 1 0")
    assert (p.width, p.height) == (3, 2)
    assert Pattern.from_json(p.to_json()) == p
    assert p.at(-1, 2) == 1
    flipped = p.transform(((-1, 0), (0, 1)))
    assert symmetrize_pattern(flipped, [SITE]).entries[0] == symmetrize_pattern(p, [SITE]).entries[0]
    relabelled = p.transform(((1, 0), (0, 1)), [1, 2, 0])
    assert relabelled.rows[0] == (1, 0, 2)
    with pytest.raises(StructuralError):
        Pattern(2, ((0, 2),))


def test_pattern_batch_order():
    batch = pattern_batch(3, 2, 2)
    expected = list(itertools.product(range(3), repeat=4))
    assert [tuple(b.reshape(-1)) for b in batch] == expected


def test_batch_counts_match_python():
    for d, m, n in ((2, 3, 2), (3, 2, 2), (2, 1, 4)):
        batch = pattern_batch(d, m, n)
        for region in (H, V, PLUS, MINUS, rect(2, 2)):
            counts = batch_window_counts(batch, region, d)
            for k in range(0, len(batch), max(1, len(batch) // 50)):
                p = Pattern(d, tuple(tuple(int(v) for v in row) for row in batch[k]))
                wc = window_counts(p, region)
                vec = np.zeros(d ** len(region), dtype=np.int64)
                for c, v in wc.items():
                    vec[config_index(c, d)] = v
                assert (counts[k] == vec).all()


def test_marginal_spec_json():
    spec = MarginalSpec(2, (table(2, "h", [half, 0, 0, half]), table(2, "v", [0, half, half, 0])))
    again = MarginalSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()
    assert spec.table(V).vector() == [0, half, half, 0]
