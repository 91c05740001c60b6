import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bbrs.channel import (
    DiscreteChannel,
    bec_product,
    make_channel,
    mutual_information,
    product,
    random_channel,
    random_singular_channel,
    ratio,
    singular_g,
)
from bbrs.exceptions import DomainError, ModelError
from bbrs.numerics import entropy_bits

F = Fraction


def brute_mi(ch):
    """I(X;Y) from the joint table, H(X) + H(Y) - H(X,Y)."""
    joint = [ch.px[x] * q for x in range(ch.nx) for q in ch.rows[x].values()]
    return entropy_bits(ch.px) + entropy_bits(ch.py) - entropy_bits(joint)


def test_bec_marginal(bec_half):
    assert bec_half.py == (F(1, 4), F(1, 4), F(1, 2))
    assert bec_half.y_alphabet == (0, 1, "e")


def test_typewriter_marginal(tw42):
    assert tw42.py == (F(1, 4),) * 4
    assert all(set(row.values()) == {F(1, 2)} for row in tw42.rows)


def test_additive_marginal(add81):
    py = dict(zip(add81.y_alphabet, add81.py))
    assert py[-1] == py[8] == F(1, 24)
    assert py[0] == py[7] == F(1, 12)
    assert all(py[y] == F(1, 8) for y in range(1, 7))


@pytest.mark.parametrize("y, x, r", [(0, 0, 2), ("e", 0, 1), ("e", 1, 1), (1, 0, 0)])
def test_bec_ratio(bec_half, y, x, r):
    assert ratio(bec_half, y, x) == r


def test_singular_witnesses(bec_half, tw42):
    assert singular_g(bec_half).as_dict() == {0: 2, 1: 2, "e": 1}
    assert set(singular_g(tw42).g) == {F(2)}


def test_non_singular_table():
    ch = DiscreteChannel.from_table([F(1, 2)] * 2, [[F(1, 2), F(1, 2)], [F(1, 4), F(3, 4)]])
    verdict = singular_g(ch)
    assert not verdict and verdict.violations
    with pytest.raises(DomainError):
        verdict.g_of(0)


@pytest.mark.parametrize("fixture, mi", [("bec_half", 0.5), ("tw42", 1.0), ("add81", 1.6446)])
def test_mutual_information(request, fixture, mi):
    ch = request.getfixturevalue(fixture)
    assert mutual_information(ch) == pytest.approx(mi, abs=1e-3)
    assert mutual_information(ch) == pytest.approx(brute_mi(ch), abs=1e-12)


def test_bec_product_examples():
    assert bec_product(F(1, 2), 1).level_masses() == {0: F(1, 2), 1: F(1, 2)}
    assert bec_product(F(1, 2), 4).masses == tuple(F(c, 16) for c in (1, 4, 6, 4, 1))
    assert bec_product(F(1, 2), 4).gamma_entropy() == pytest.approx(2.0306, abs=1e-3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_closed_form_matches_enumerated_product(bec_half, n):
    cf = bec_product(F(1, 2), n)
    prod = product(bec_half, n)
    verdict = singular_g(prod)
    assert verdict
    masses: dict[int, Fraction] = {}
    for gy, p in zip(verdict.g, prod.py):
        k = gy.numerator.bit_length() - 1
        masses[k] = masses.get(k, F(0)) + p
    assert masses == cf.level_masses()
    assert mutual_information(prod) == pytest.approx(cf.mutual_information)


def test_product_size_guard(bec_half):
    with pytest.raises(ModelError):
        product(bec_half, 20)


@pytest.mark.parametrize("cfg", [
    {"type": "bec", "epsilon": "1/2"},
    {"type": "typewriter", "m": 4, "w": 2},
    {"type": "additive", "m": 8, "w": 1},
    {"type": "product", "base": {"type": "bec", "epsilon": "1/4"}, "n": 2},
])
def test_config_round_trip(cfg):
    ch = make_channel(cfg)
    again = make_channel(ch.to_config())
    assert again.py == ch.py and again.rows == ch.rows


@pytest.mark.parametrize("cfg", [{"type": "nope"}, {"epsilon": 1}, {"type": "bec"}, "{\"type\": \"typewriter\", \"m\": 2, \"w\": 3}"])
def test_bad_configs(cfg):
    with pytest.raises(ModelError):
        make_channel(cfg)


def test_table_validation():
    with pytest.raises(ModelError):
        DiscreteChannel.from_table([F(1, 2), F(1, 3)], [[1], [1]])
    with pytest.raises(ModelError):
        DiscreteChannel.from_table([F(1)], [[F(1, 2), F(1, 3)]])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6), st.integers(1, 3))
def test_random_singular_channels_are_singular(s, nx, rounds):
    ch = random_singular_channel(random.Random(s), nx=nx, rounds=rounds)
    verdict = singular_g(ch)
    assert verdict
    # every witness value is at least one and the columns agree with it
    for y, col in enumerate(ch.columns):
        assert verdict.g[y] >= 1
        assert all(q / ch.py[y] == verdict.g[y] for _, q in col)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_mi_bounds(s):
    ch = random_channel(random.Random(s))
    mi = mutual_information(ch)
    assert -1e-12 <= mi <= min(math.log2(ch.nx), math.log2(ch.ny)) + 1e-12
    assert mi == pytest.approx(brute_mi(ch), abs=1e-12)
