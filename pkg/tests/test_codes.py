import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bbrs.ans import BitStream, net_bits
from bbrs.codes import DyadicZetaCode, GeometricCode, geometric_code, zeta_code, zeta_param
from bbrs.exceptions import BudgetExceeded, CodingError, DomainError

F = Fraction


def fresh():
    return BitStream.from_seed(b"codes", 4096)


@pytest.mark.parametrize("n, bits", [(1, 1), (3, 3)])
def test_geometric_dyadic_costs(n, bits):
    s = fresh()
    before = s.copy()
    geometric_code(s, "push", n, F(2))
    assert net_bits(before, s) == bits


def test_geometric_round_trip_17():
    s = fresh()
    before = s.copy()
    geometric_code(s, "push", 17, F(4))
    s, n = geometric_code(s, "pop", None, F(4))
    assert n == 17 and s == before


def test_geometric_rejects_degenerate_mean():
    with pytest.raises(DomainError):
        GeometricCode(F(1))


def test_geometric_rejects_bad_index():
    with pytest.raises(CodingError):
        GeometricCode(F(2)).push(fresh(), 0)


def test_zeta_k1_cost():
    code = DyadicZetaCode(1.0)
    assert code.cost_bits(1) < 1.6
    s = fresh()
    before = s.copy()
    code.push(s, 1)
    assert abs(net_bits(before, s) - code.cost_bits(1)) < 1.5


def test_zeta_round_trip_1_to_1000():
    code = DyadicZetaCode(2.0)
    s = fresh()
    before = s.copy()
    for k in range(1, 1001):
        code.push(s, k)
    for k in range(1000, 0, -1):
        assert code.pop(s) == k
    assert s == before


def test_zeta_limits():
    with pytest.raises(BudgetExceeded):
        zeta_code(fresh(), "push", (1 << 40) + 1, 2.0)
    with pytest.raises(DomainError):
        zeta_code(fresh(), "sideways", 1, 2.0)


@pytest.mark.parametrize("h, lam", [(0, 1), (1, 2), (1.041, 2.041)])
def test_zeta_param(h, lam):
    assert zeta_param(h) == pytest.approx(lam)


@given(st.floats(0.2, 8), st.integers(1, 5000))
def test_zeta_cost_bound(lam, k):
    # level cost plus offset bits stays within log2 k + lam-scaled level cost + normaliser
    code = DyadicZetaCode(lam)
    level = k.bit_length() - 1
    assert code.cost_bits(k) == pytest.approx(code.level_cost(level) + level)
    assert code.cost_bits(k) <= (1 + 1 / lam) * math.log2(k) + code.level_cost(0) + 1e-9


def test_expected_cost_geometric_matches_monte_carlo():
    code = DyadicZetaCode(2.0)
    rng = random.Random(7)
    mean = 5
    samples = []
    for _ in range(20000):
        k = 1
        while rng.random() >= 1 / mean:
            k += 1
        samples.append(code.cost_bits(k))
    mc = sum(samples) / len(samples)
    assert code.expected_cost_geometric(F(mean)) == pytest.approx(mc, abs=0.05)


def test_expected_cost_geometric_tail_guard():
    with pytest.raises(BudgetExceeded):
        DyadicZetaCode(2.0).expected_cost_geometric(F(2) ** 45)


def test_measured_geometric_length_tracks_ideal():
    code = GeometricCode(F(3))
    rng = random.Random(2)
    s = fresh()
    before = s.bit_length()
    ideal = 0.0
    ns = [rng.randint(1, 9) for _ in range(3000)]
    for n in ns:
        code.push(s, n)
        ideal += code.cost_bits(n)
    assert abs(s.bit_length() - before - ideal) / len(ns) < 0.01
