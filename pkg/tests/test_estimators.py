from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bbrs.channel import bec, random_channel
from bbrs.estimators import BitsBackRejectionSampler, GreedyRejectionCoder, PoissonFunctionalCoder
from bbrs.exceptions import DomainError, NonSingularChannel

F = Fraction
CODERS = [BitsBackRejectionSampler, PoissonFunctionalCoder, GreedyRejectionCoder]


@pytest.mark.parametrize("cls", CODERS)
def test_message_round_trip(cls):
    coder = cls(seed=3).fit({"type": "bec", "epsilon": "1/2"})
    xs = [0, 1, 1, 0, 1] * 20
    stream = coder.encode(xs)
    start = coder.new_stream()
    assert stream.bit_length() > start.bit_length()
    ys = coder.decode(stream, len(xs))
    assert ys == coder.last_outputs_
    assert stream == start
    assert all(y in (x, "e") for x, y in zip(xs, ys))


@pytest.mark.parametrize("cls", CODERS)
def test_transform_distribution(cls):
    ys = cls(seed=1).fit_transform(bec(F(1, 2)), [0] * 4000)
    assert isinstance(ys, np.ndarray)
    c = Counter(ys.tolist())
    assert c[1] == 0 and abs(c[0] / 4000 - 0.5) < 0.03


def test_params_and_clone():
    est = BitsBackRejectionSampler(delta="1/2", seed=9)
    assert est.get_params() == {"delta": "1/2", "seed": 9, "pad_bits": 4096}
    assert clone(est).get_params() == est.get_params()
    est.fit(bec(F(1, 2)))
    assert est.theorem1_bound_ > 0


def test_validation():
    with pytest.raises(NotFittedError):
        BitsBackRejectionSampler().encode([0])
    with pytest.raises(DomainError):
        BitsBackRejectionSampler(delta="-1").fit(bec(F(1, 2)))
    with pytest.raises(DomainError):
        BitsBackRejectionSampler().fit(bec(F(1, 2))).encode([5])
    with pytest.raises(NonSingularChannel):
        BitsBackRejectionSampler().fit(random_channel(__import__("random").Random(0)))


def test_grs_accepts_non_singular():
    import random

    ch = random_channel(random.Random(0))
    coder = GreedyRejectionCoder(seed=2).fit(ch)
    stream = coder.encode([0, 1, 2, 3])
    assert coder.decode(stream, 4) == coder.last_outputs_
