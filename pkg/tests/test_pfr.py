from collections import Counter
from fractions import Fraction

import pytest

from bbrs.ans import BitStream
from bbrs.numerics import cross_entropy_geometric
from bbrs.pfr import appendixb_bound, m_prime, pfr_decode, pfr_encode, pfr_measure_rate, pfr_run_trial
from bbrs.randomness import SharedSeed, proposal

F = Fraction
SEED = SharedSeed.from_int(55)


def test_m_prime_examples(tw42, bec_half):
    assert m_prime(tw42, 0, 2) == 2
    assert m_prime(bec_half, 0, 1) == F(5, 4)
    assert m_prime(bec_half, 0, 2) == 2  # saturates at the max ratio


@pytest.mark.parametrize("name, bound", [("bec", 6.385), ("typewriter", 5.885), ("additive", 7.571)])
def test_appendixb_bound(models, name, bound):
    assert appendixb_bound(models[name]) == pytest.approx(bound, abs=2e-3)


def test_typewriter_k_cost(models):
    rep = pfr_measure_rate(models["typewriter"], None, 4000, SEED)
    info = pfr_run_trial(models["typewriter"], 0, SEED, 0)
    assert info.gamma == 1 and info.M == 5
    assert rep.extra["mean_pushed_gamma"] == 0
    assert abs(rep.mean_net - cross_entropy_geometric(F(2), F(5))) < 0.1


def test_bec_rate(models):
    rep = pfr_measure_rate(models["bec"], None, 3000, SEED)
    assert rep.mean_net <= 7.39


def test_round_trip(models):
    for model in models.values():
        for t in range(300):
            s = SEED.for_trial(t)
            stream = BitStream.from_seed(s.value)
            before = stream.copy()
            stream, info = pfr_encode(model, t % model.channel.nx, s, stream)
            assert info.y == proposal(s, model.channel, info.K)
            stream, y = pfr_decode(model, s, stream)
            assert y == info.y and stream == before
            assert info.M_prime <= info.R + 1 <= info.M


def test_bec_decoded_distribution(models):
    counts = Counter(pfr_run_trial(models["bec"], 0, SEED, t).y for t in range(20000))
    tv = 0.5 * (abs(counts[0] / 20000 - 0.5) + counts[1] / 20000 + abs(counts[2] / 20000 - 0.5))
    assert tv < 0.02
