import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import stats

from bbrs.exceptions import DomainError, ModelError
from bbrs.numerics import (
    as_rational,
    cross_entropy_geometric,
    dyadic_ceiling_pow2,
    entropy_bits,
    format_rational,
    pow2_compare,
)

F = Fraction
positive_rationals = st.fractions(min_value=F(1, 10**6), max_value=10**6).filter(lambda r: r > 0)


@pytest.mark.parametrize("pmf, h", [((F(1),), 0.0), ((F(1, 2), F(1, 2)), 1.0), ((F(1, 4), F(1, 4), F(1, 2)), 1.5)])
def test_entropy_examples(pmf, h):
    assert entropy_bits(pmf) == pytest.approx(h, abs=1e-12)


def test_entropy_rejects_unnormalised():
    with pytest.raises(ModelError):
        entropy_bits((F(1, 2), F(1, 4)))


@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_entropy_matches_scipy(weights):
    total = sum(weights)
    pmf = [F(w, total) for w in weights]
    assert entropy_bits(pmf) == pytest.approx(stats.entropy(weights, base=2), abs=1e-9)


@pytest.mark.parametrize("r, k, expected", [(F(2), 1, 0), (F(8, 3), 1, 1), (F(8, 3), 2, -1)])
def test_pow2_compare_examples(r, k, expected):
    assert pow2_compare(r, k, 1, 1) == expected


def test_pow2_compare_domain():
    with pytest.raises(DomainError):
        pow2_compare(F(0), 1, 1, 1)


@given(positive_rationals, st.integers(-60, 60), st.integers(1, 5), st.integers(1, 5))
def test_pow2_compare_against_float_log(r, k, p, q):
    # compare r^q with 2^{kp}; trust the float only away from ties
    lhs = q * math.log2(r)
    rhs = k * p
    if abs(lhs - rhs) > 1e-6:
        assert pow2_compare(r, k, p, q) == (1 if lhs > rhs else -1)


@pytest.mark.parametrize("mt, mc, h", [(2, 2, 2.0), (4, 4, 3.2451), (1, 2, 1.0)])
def test_cross_entropy_examples(mt, mc, h):
    assert cross_entropy_geometric(F(mt), F(mc)) == pytest.approx(h, abs=1e-4)


def test_cross_entropy_domain():
    with pytest.raises(DomainError):
        cross_entropy_geometric(F(2), F(1))


@given(st.integers(1, 40), st.integers(2, 40))
def test_cross_entropy_matches_series(mt, mc):
    # direct sum of -pmf_t(n) log2 pmf_c(n), truncated far in the tail
    pt, pc = 1 / mt, 1 / mc
    total, n = 0.0, 1
    while n < 20000:
        w = pt * (1 - pt) ** (n - 1)
        total += -w * (math.log2(pc) + (n - 1) * math.log2(1 - pc))
        if mt == 1:
            break
        n += 1
    assert cross_entropy_geometric(F(mt), F(mc)) == pytest.approx(total, rel=1e-6)


def test_cross_entropy_huge_mean_is_finite():
    big = F(2) ** 4097
    assert cross_entropy_geometric(big, big) == pytest.approx(4097 + 1 / math.log(2), rel=1e-9)


@given(st.fractions(min_value=0, max_value=40, max_denominator=64))
def test_dyadic_ceiling_is_upper_bound(e):
    c = dyadic_ceiling_pow2(e)
    assert c.denominator & (c.denominator - 1) == 0
    # c >= 2^e  <=>  c^q >= 2^p
    assert c ** e.denominator >= F(2) ** e.numerator
    assert float(c) <= 2.0 ** float(e) * (1 + 2**-15)


def test_as_rational_and_format():
    assert as_rational("3/4") == F(3, 4)
    assert as_rational(2) == F(2)
    assert format_rational(F(3, 4)) == "3/4"
