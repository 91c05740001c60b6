from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import stats

from bbrs.channel import bec, make_channel
from bbrs.exceptions import DomainError
from bbrs.gamma import GammaModel
from bbrs.randomness import ExactSampler, SharedSeed, derive_uniform, proposal, upsilon

F = Fraction
SEED = SharedSeed.from_int(77)


def test_determinism():
    a = derive_uniform(SEED, "Z", 5).bits(128)
    b = derive_uniform(SEED, "Z", 5).bits(128)
    assert a == b


def test_neighbouring_indices_look_independent():
    a = derive_uniform(SEED, "Z", 5).bits(128)
    b = derive_uniform(SEED, "Z", 6).bits(128)
    assert 40 <= bin(a ^ b).count("1") <= 88


def test_labels_separate_streams():
    assert derive_uniform(SEED, "Z", 1).bits(64) != derive_uniform(SEED, "U", 1).bits(64)


def test_byte_chi_square():
    src = derive_uniform(SEED, "PAD", 0)
    counts = Counter(src.bits(8) for _ in range(100000))
    obs = [counts.get(i, 0) for i in range(256)]
    assert stats.chisquare(obs).pvalue > 1e-3


def test_bits_reservoir_is_prefix_consistent():
    # reading 3 + 5 bits equals reading 8 at once
    a = derive_uniform(SEED, "U", 9)
    b = derive_uniform(SEED, "U", 9)
    assert (a.bits(3) << 5) | a.bits(5) == b.bits(8)


def test_randbelow_range_and_uniformity():
    src = derive_uniform(SEED, "PRIVATE", 0)
    counts = Counter(src.randbelow(6) for _ in range(30000))
    assert set(counts) == set(range(6))
    assert stats.chisquare([counts[i] for i in range(6)]).pvalue > 1e-3
    with pytest.raises(DomainError):
        src.randbelow(0)


def test_below_is_exact_in_expectation():
    src = derive_uniform(SEED, "PRIVATE", 1)
    hits = sum(src.below(F(1, 3)) for _ in range(30000))
    assert abs(hits / 30000 - 1 / 3) < 3.5 * (2 / 9 / 30000) ** 0.5


def test_seed_parsing():
    assert SharedSeed.from_hex(SEED.hex()) == SEED
    assert SEED.for_trial(1) != SEED.for_trial(2)


@given(st.lists(st.integers(0, 9), min_size=1, max_size=6).filter(lambda w: sum(w) > 0))
def test_exact_sampler_support(weights):
    pmf = [F(w, sum(weights)) for w in weights]
    s = ExactSampler(pmf)
    src = derive_uniform(SEED, "Z", len(weights), sum(weights))
    for _ in range(50):
        assert pmf[s.sample(src)] > 0


def test_exact_sampler_frequencies():
    pmf = [F(1, 7), F(2, 7), F(4, 7)]
    s = ExactSampler(pmf)
    src = derive_uniform(SEED, "Z", 0)
    counts = Counter(s.sample(src) for _ in range(20000))
    assert stats.chisquare([counts[i] for i in range(3)], [20000 * float(p) for p in pmf]).pvalue > 1e-3


def test_proposal_frequencies_bec():
    ch = bec(F(1, 2))
    counts = Counter(proposal(SEED, ch, k) for k in range(1, 100001))
    for y, p in enumerate(ch.py):
        sigma = (float(p) * (1 - float(p)) / 100000) ** 0.5
        assert abs(counts[y] / 100000 - float(p)) < 3.5 * sigma


def test_proposal_replay_and_point_mass():
    ch = bec(F(1, 2))
    assert [proposal(SEED, ch, k) for k in range(1, 101)] == [proposal(SEED, ch, k) for k in range(1, 101)]
    point = make_channel({"type": "table", "px": ["1"], "pygx": [["1"]]})
    assert all(proposal(SEED, point, k) == 0 for k in range(1, 50))
    with pytest.raises(DomainError):
        proposal(SEED, ch, 0)


def test_upsilon_bec():
    model = GammaModel(bec(F(1, 2)))
    e = model.channel.y_index("e")
    assert all(upsilon(SEED, model, 0, n) == e for n in range(1, 200))
    counts = Counter(upsilon(SEED, model, 1, n) for n in range(1, 10001))
    assert set(counts) == {0, 1}
    assert abs(counts[0] / 10000 - 0.5) < 3.5 * 0.005
    with pytest.raises(DomainError):
        upsilon(SEED, model, 7, 1)
