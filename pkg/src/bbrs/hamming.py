"""Bits-back coding of Hamming(7,4) codewords through a radius-1 noise channel.

``X`` is uniform over the 16 codewords and ``Y = X xor e`` with ``e`` uniform
over the zero word and the seven single-bit flips. Encoding pops ``Y`` given
``X`` from the stream (3 bits back) and pushes ``Y`` under the uniform law on
7-bit words (7 bits); the decoder syndrome-decodes ``Y`` to recover ``X`` and
returns the 3 bits. Every symbol nets exactly 4 bits.

Words are 7-bit integers, bit ``i`` holding coordinate ``i``. The code is the
systematic one with generator ``[I4 | P]`` and parity check ``[P^T | I3]``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ans import BitStream, uniform_table
from .exceptions import CodingError, DomainError
from .randomness import SharedSeed

P_ROWS = ((1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1))
NOISE_TABLE = uniform_table(8)
WORD_TABLE = uniform_table(128)


def _bit(word: int, i: int) -> int:
    return (word >> i) & 1


def encode_data(data: int) -> int:
    """Codeword for a 4-bit data value (data bits in coordinates 0..3)."""
    if not 0 <= data < 16:
        raise DomainError("data must be a 4-bit value")
    word = data
    for j in range(3):
        parity = 0
        for i in range(4):
            parity ^= _bit(data, i) & P_ROWS[i][j]
        word |= parity << (4 + j)
    return word


def syndrome(word: int) -> int:
    s = 0
    for j in range(3):
        v = _bit(word, 4 + j)
        for i in range(4):
            v ^= _bit(word, i) & P_ROWS[i][j]
        s |= v << j
    return s


@dataclass(frozen=True)
class HammingModel:
    codewords: tuple[int, ...] = field(default_factory=lambda: tuple(encode_data(d) for d in range(16)))
    noise: tuple[int, ...] = (0,) + tuple(1 << i for i in range(7))

    def __post_init__(self):
        table = {}
        for j, e in enumerate(self.noise):
            s = syndrome(e)
            if s in table:
                raise DomainError("noise patterns must have distinct syndromes")
            table[s] = j
        object.__setattr__(self, "_syndrome_index", table)

    def noise_index(self, y: int) -> int:
        """Index of the unique noise pattern consistent with ``y``."""
        return self._syndrome_index[syndrome(y)]

    def decode_word(self, y: int) -> int:
        return y ^ self.noise[self.noise_index(y)]

    def is_codeword(self, x: int) -> bool:
        return 0 <= x < 128 and syndrome(x) == 0


def bitsback_encode_symbol(model: HammingModel, x: int, stream: BitStream) -> BitStream:
    if not model.is_codeword(x):
        raise CodingError(f"{x:07b} is not a codeword")
    j = stream.pop(NOISE_TABLE)
    stream.push(x ^ model.noise[j], WORD_TABLE)
    return stream


def bitsback_decode_symbol(model: HammingModel, stream: BitStream) -> tuple[BitStream, int]:
    y = stream.pop(WORD_TABLE)
    j = model.noise_index(y)
    stream.push(j, NOISE_TABLE)
    return stream, y ^ model.noise[j]


@dataclass
class DemoResult:
    symbols: int
    per_symbol_bits: list[int]
    total_bits: int
    recovered: bool
    restored: bool

    def as_dict(self) -> dict:
        return {
            "symbols": self.symbols,
            "total_bits": self.total_bits,
            "bits_per_symbol": self.total_bits / self.symbols if self.symbols else 0.0,
            "recovered": self.recovered,
            "restored": self.restored,
        }


def run_demo(symbols: int, seed: SharedSeed) -> DemoResult:
    """Encode a random message of codewords, decode it and account every bit."""
    if symbols < 1:
        raise DomainError("need at least one symbol")
    model = HammingModel()
    rng = random.Random(seed.value)
    message = [rng.choice(model.codewords) for _ in range(symbols)]
    stream = BitStream.from_seed(seed.value)
    initial = stream.copy()
    per_symbol = []
    for x in message:
        before = stream.bit_length()
        bitsback_encode_symbol(model, x, stream)
        per_symbol.append(stream.bit_length() - before)
    total = stream.bit_length() - initial.bit_length()
    decoded = []
    for _ in range(symbols):
        stream, x = bitsback_decode_symbol(model, stream)
        decoded.append(x)
    decoded.reverse()
    return DemoResult(symbols, per_symbol, total, decoded == message, stream == initial)
