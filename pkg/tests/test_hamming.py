import pytest
from hypothesis import given, strategies as st

from bbrs.ans import BitStream, net_bits
from bbrs.exceptions import CodingError, DomainError
from bbrs.hamming import HammingModel, bitsback_decode_symbol, bitsback_encode_symbol, encode_data, run_demo, syndrome
from bbrs.randomness import SharedSeed

MODEL = HammingModel()


def test_codebook():
    words = {encode_data(d) for d in range(16)}
    assert len(words) == 16 and all(syndrome(w) == 0 for w in words)
    # minimum distance three
    assert min(bin(a ^ b).count("1") for a in words for b in words if a != b) == 3


@given(st.integers(0, 15), st.integers(0, 7))
def test_single_errors_are_identified(d, j):
    x = encode_data(d)
    y = x ^ MODEL.noise[j]
    assert MODEL.noise_index(y) == j and MODEL.decode_word(y) == x


def test_symbol_costs_four_bits():
    stream = BitStream.from_seed(b"ham")
    before = stream.copy()
    x = encode_data(11)
    bitsback_encode_symbol(MODEL, x, stream)
    assert net_bits(before, stream) == 4
    stream, back = bitsback_decode_symbol(MODEL, stream)
    assert back == x and stream == before


def test_rejects_non_codeword():
    with pytest.raises(CodingError):
        bitsback_encode_symbol(MODEL, encode_data(3) ^ 1, BitStream.from_seed(b"ham"))
    with pytest.raises(DomainError):
        encode_data(16)


def test_demo_totals():
    res = run_demo(1000, SharedSeed.from_int(1))
    assert res.total_bits == 4000 and res.recovered and res.restored
    assert res.as_dict()["bits_per_symbol"] == 4.0
