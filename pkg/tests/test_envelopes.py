import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from cuberec.core import ClassKind, DomainError
from cuberec.envelopes import (
    INT64_MAX,
    complexity_count,
    envelope_closed,
    envelope_recursive,
    envelope_table,
    n_app_lower,
    n_app_upper,
)

E = math.e


def test_closed_examples():
    assert envelope_closed(4, 2, 5) == pytest.approx(0.108731, abs=1e-6)
    assert envelope_closed(1, 3, 1) == pytest.approx(0.339785, abs=1e-6)
    assert envelope_closed(4, 2, 1, "Directional") == 1.0
    assert envelope_closed(3, 0, 2) == 1.0


def test_recursive_examples():
    # hand evaluation: E(1, 2) = e/4 and E(2, 0) = 1, so E(2, 2) = e/4 + 1/8
    assert envelope_recursive(2, 2, 1) == pytest.approx(E / 4 + 1 / 8, rel=1e-15)
    assert envelope_recursive(1, 2, 3) == pytest.approx(E / 36, rel=1e-15)
    assert envelope_recursive(5, 0, 3) == 1.0


@pytest.mark.parametrize("d", range(1, 7))
@pytest.mark.parametrize("r", [2, 4])
@pytest.mark.parametrize("m", range(1, 9))
def test_recursive_le_closed_even(d, r, m):
    assert envelope_recursive(d, r, m) <= envelope_closed(d, r, m) * (1 + 1e-12)


@settings(max_examples=200)
@given(st.integers(1, 10), st.integers(0, 8), st.integers(1, 50))
def test_directional_le_standard(d, r, m):
    assert envelope_closed(d, r, m, "Directional") <= envelope_closed(d, r, m, "Standard")


@pytest.mark.parametrize("r", [3, 5, 7])
@pytest.mark.parametrize("d", [1, 2, 5])
def test_odd_closed_composes_even(d, r):
    m = 3
    assert envelope_closed(d, r, m) == pytest.approx(d / (2 * m) * envelope_closed(d, r - 1, m), rel=1e-12)


@pytest.mark.parametrize("r", [2, 4, 6])
def test_dimension_shape(r):
    for d in range(1, 7):
        ratio = envelope_closed(d, r, 2) / envelope_closed(1, r, 2)
        assert ratio == pytest.approx(d ** (r / 2), rel=1e-12)


@settings(max_examples=200)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 30), st.sampled_from(["Standard", "Directional"]))
def test_monotonicity(d, r, m, kind):
    for f in (envelope_closed, envelope_recursive):
        assert f(d, r, m + 1, kind) < f(d, r, m, kind)
        assert f(d + 1, r, m, kind) >= f(d, r, m, kind)


def test_table_csv():
    text = envelope_table(2, 2, 2).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "d,r,m,kind,source,bound"
    assert len(lines) == 5
    assert lines[1].startswith("2,2,1,Standard,ClosedForm,")
    assert float(lines[1].split(",")[-1]) == envelope_closed(2, 2, 1)


def test_n_app_upper_examples():
    c = n_app_upper(0.1, 2, 2)
    assert (c.m_used, c.n_upper) == (4, 75)
    c = n_app_upper(0.25, 1, 1, "Directional")
    assert (c.m_used, c.n_upper) == (2, 3)


@settings(max_examples=100)
@given(st.floats(1e-4, 0.5), st.floats(1.01, 5.0), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from(["Standard", "Directional"]))
def test_n_app_upper_nonincreasing_in_epsilon(eps, factor, d, r, kind):
    a = n_app_upper(eps, d, r, kind)
    b = n_app_upper(eps * factor, d, r, kind)
    assert b.n_upper <= a.n_upper
    assert envelope_closed(d, r, a.m_used, kind) <= eps * (1 + 1e-12)


def test_odd_fallback_reported():
    c = n_app_upper(1e-3, 3, 3)
    assert c.m_fallback is not None and c.n_upper_fallback is not None
    assert c.best_upper == min(c.n_upper, c.n_upper_fallback)
    assert n_app_upper(1e-3, 3, 2).m_fallback is None


def test_saturation_flag():
    c = n_app_upper(1e-12, 6, 1)
    assert c.saturated and c.n_upper == INT64_MAX


def test_n_app_lower_high_precision():
    with mpmath.workdps(60):
        eps, d, r, K = mpmath.mpf("0.001"), 2, 2, mpmath.mpf(4)
        x = ((5**r * K) ** (-mpmath.mpf(1) / r) * mpmath.sqrt(d) * eps ** (-mpmath.mpf(1) / r)) ** d
        # the exact bound is the integer 20, which floats overshoot by an ulp
        nearest = mpmath.nint(x)
        x = nearest if abs(x - nearest) < mpmath.mpf(10) ** -40 else x
        expected = int(mpmath.ceil(x)) - 1
    assert expected == 19
    assert n_app_lower(0.001, 2, 2, 4.0) == expected


def test_n_app_lower_near_threshold_and_growth():
    K = 3.0
    eps = (1 / K) * (1 - 1e-9)
    assert n_app_lower(eps, 1, 1, K) == max(math.ceil(1 / (5 * K * eps)) - 1, 0)
    vals = [n_app_lower(e, 3, 2, 4.0) for e in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_n_app_lower_domain():
    with pytest.raises(DomainError):
        n_app_lower(0.5, 2, 2, 4.0)


def test_complexity_count_combines():
    c = complexity_count(0.01, 2, 2, ClassKind.DIRECTIONAL, 2.0)
    assert c.n_lower is not None and c.n_lower <= c.n_upper
    assert c.to_json()["K_hat"] == 2.0
    assert complexity_count(0.9, 2, 2, "Standard", 2.0).n_lower is None
