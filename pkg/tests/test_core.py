import math

import pytest
from hypothesis import given, settings, strategies as st

from cuberec.core import (
    ClassKind,
    GridSpec,
    MissingSampleError,
    MultiIndex,
    SampleTable,
    SmoothnessClass,
    enumerate_multiindices,
    factorial_weight,
    make_point,
    nearest_grid_point,
)


def test_enumerate_small_cases():
    assert [b.entries for b in enumerate_multiindices(2, 1)] == [(0, 0), (1, 0), (0, 1)]
    assert [b.entries for b in enumerate_multiindices(1, 3)] == [(0,), (1,), (2,), (3,)]
    assert len(enumerate_multiindices(3, 2)) == 10


def test_enumerate_is_graded_lex_sorted():
    idx = enumerate_multiindices(3, 3)
    assert idx == sorted(idx)
    assert [b.entries for b in idx if b.order == 2][:3] == [(2, 0, 0), (1, 1, 0), (1, 0, 1)]


@pytest.mark.parametrize("d", range(1, 9))
@pytest.mark.parametrize("k", range(0, 7))
def test_enumerate_count(d, k):
    idx = enumerate_multiindices(d, k)
    assert len(idx) == math.comb(d + k, d)
    assert len(set(idx)) == len(idx)
    assert all(b.order <= k and b.order == sum(b.entries) for b in idx)


def test_multiindex_rejects_negative_and_roundtrips_json():
    with pytest.raises(ValueError):
        MultiIndex((1, -1))
    b = MultiIndex((2, 0, 1))
    assert b.order == 3
    assert MultiIndex.from_json(b.to_json()) == b


@pytest.mark.parametrize("x, m, expected", [
    ((0.26, 0.74), 2, (0.5, 0.5)),
    ((0.25,), 2, (0.5,)),
    ((0.0, 1.0), 3, (0.0, 1.0)),
    ((1 / 3, 2 / 3), 3, (1 / 3, 2 / 3)),
])
def test_nearest_grid_point_examples(x, m, expected):
    assert nearest_grid_point(x, GridSpec(m, len(x))) == expected


@settings(max_examples=300)
@given(
    st.integers(1, 12),
    st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=5),
)
def test_nearest_grid_point_properties(m, coords):
    g = GridSpec(m, len(coords))
    y = nearest_grid_point(coords, g)
    assert nearest_grid_point(y, g) == y
    assert max(abs(a - b) for a, b in zip(coords, y)) <= 1 / (2 * m) + 1e-15


@pytest.mark.parametrize("beta, expected", [((0, 0), 1.0), ((2, 1), 0.5), ((3,), 1 / 6)])
def test_factorial_weight(beta, expected):
    assert factorial_weight(MultiIndex(beta)) == expected


def test_factorial_weight_safe_up_to_twenty():
    assert factorial_weight(MultiIndex((20,))) == 1 / math.factorial(20)


@settings(max_examples=100)
@given(st.lists(
    st.tuples(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=2),
              st.floats(-1e6, 1e6, allow_nan=False)),
    min_size=1, max_size=30,
))
def test_sample_table_lookup_returns_inserted(pairs):
    table = SampleTable("prop")
    for x, v in pairs:
        table.insert(x, v)
    last = {}
    for x, v in pairs:
        last[tuple(round(c, 14) + 0.0 for c in x)] = v
    for x, v in pairs:
        assert table[x] == last[tuple(round(c, 14) + 0.0 for c in x)]


def test_sample_table_dedups_and_rejects_nonfinite():
    t = SampleTable("t")
    t.insert((0.1, 0.2), 1.0)
    t.insert((0.1 + 1e-17, 0.2), 2.0)
    assert len(t) == 1 and t[(0.1, 0.2)] == 2.0
    with pytest.raises(ValueError):
        t.insert((0.3, 0.3), float("nan"))
    with pytest.raises(MissingSampleError) as exc:
        t[(0.9, 0.9)]
    assert exc.value.point == (0.9, 0.9)


def test_make_point_bounds():
    assert make_point([1.0 + 1e-13, -1e-13]) == (1.0, 0.0)
    with pytest.raises(ValueError):
        make_point([1.1])


def test_class_and_grid_validation():
    assert SmoothnessClass(2, 3, "directional").kind is ClassKind.DIRECTIONAL
    assert GridSpec(2, 3).size == 27
    with pytest.raises(ValueError):
        GridSpec(0, 2)
    with pytest.raises(ValueError):
        SmoothnessClass(-1, 2)
