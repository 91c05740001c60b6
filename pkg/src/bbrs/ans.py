"""Range-variant asymmetric numeral system (rANS) stack coder.

The coder state is a 64-bit head ``x`` in ``[2**32, 2**64)`` sitting on top of a
stack of 32-bit words. Below the payload words lies a fixed *pad* of
deterministic pseudo-random words that both parties can regenerate from the
shared seed. Pops that run out of payload words eat into the pad; this is how
bits-back sampling gets its initial random bits.

The bit length of a stream is ``32 * (live pad words + payload words) +
x.bit_length()``. For dyadic tables every push or pop changes it by exactly
``-log2 p`` bits.
"""
from __future__ import annotations

import hashlib
import math
import struct
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .exceptions import CodingError, DomainError, ModelError, RandomnessUnderflow
from .numerics import check_pmf

DEFAULT_PRECISION = 16
MIN_PRECISION = 1
MAX_PRECISION = 24
DEFAULT_PAD_BITS = 4096

RANS_L = 1 << 32
WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1
_HEADER = struct.Struct("<IHH")


@dataclass(frozen=True)
class FrequencyTable:
    """Quantised coding distribution: integer frequencies summing to 2**precision.

    ``certain`` is set when one symbol has probability exactly one; such a table
    never touches the stream.
    """

    freqs: tuple[int, ...]
    precision: int = DEFAULT_PRECISION
    certain: int | None = None
    starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not MIN_PRECISION <= self.precision <= MAX_PRECISION:
            raise DomainError(f"precision {self.precision} outside [{MIN_PRECISION}, {MAX_PRECISION}]")
        if self.certain is None and sum(self.freqs) != 1 << self.precision:
            raise ModelError("frequencies must sum to 2**precision")
        starts, acc = [], 0
        for f in self.freqs:
            starts.append(acc)
            acc += f
        object.__setattr__(self, "starts", tuple(starts))

    def __len__(self):
        return len(self.freqs)

    def cost_bits(self, symbol: int) -> float:
        """Ideal code length of ``symbol`` under the quantised table."""
        if self.certain is not None:
            if symbol != self.certain:
                raise CodingError(f"symbol {symbol} impossible under certain table")
            return 0.0
        f = self.freqs[symbol]
        if f == 0:
            raise CodingError(f"symbol {symbol} has zero frequency")
        return self.precision - math.log2(f)


def make_table(pmf: Sequence[Fraction], precision: int = DEFAULT_PRECISION) -> FrequencyTable:
    """Quantise an exact pmf by largest-remainder rounding.

    Every positive-probability symbol receives frequency >= 1; ties in the
    remainder go to the lowest symbol index.
    """
    pmf = check_pmf(pmf)
    if not MIN_PRECISION <= precision <= MAX_PRECISION:
        raise DomainError(f"precision {precision} outside [{MIN_PRECISION}, {MAX_PRECISION}]")
    for i, p in enumerate(pmf):
        if p == 1:
            return FrequencyTable(tuple(int(j == i) for j in range(len(pmf))), precision, certain=i)
    total = 1 << precision
    support = sum(1 for p in pmf if p > 0)
    if support > total:
        raise DomainError(f"{support} symbols cannot fit in a {precision}-bit table")
    freqs, rems = [], []
    for p in pmf:
        scaled = p * total
        base = scaled.numerator // scaled.denominator
        rem = scaled - base
        if p > 0 and base == 0:
            base, rem = 1, rem - 1
        freqs.append(base)
        rems.append(rem)
    deficit = total - sum(freqs)
    if deficit > 0:
        order = sorted((i for i, p in enumerate(pmf) if p > 0), key=lambda i: (-rems[i], i))
        for j in range(deficit):
            freqs[order[j % len(order)]] += 1
    while deficit < 0:
        order = sorted((i for i, f in enumerate(freqs) if f > 1), key=lambda i: (rems[i], i))
        for i in order:
            if deficit == 0:
                break
            freqs[i] -= 1
            rems[i] += 1
            deficit += 1
    return FrequencyTable(tuple(freqs), precision)


@lru_cache(maxsize=4096)
def bernoulli_table(p: Fraction, precision: int = DEFAULT_PRECISION) -> FrequencyTable:
    """Table over (0, 1) with P(1) = p."""
    return make_table((1 - p, p), precision)


@lru_cache(maxsize=64)
def uniform_table(n: int, precision: int = DEFAULT_PRECISION) -> FrequencyTable:
    return make_table([Fraction(1, n)] * n, precision)


def pad_id_for(seed: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(seed, digest_size=2, person=b"bbrs-pad-id").digest(), "little")


def _pad_material(seed: bytes, pad_words: int) -> tuple[tuple[int, ...], int]:
    raw = hashlib.shake_256(b"PAD\x00" + seed).digest(4 * pad_words + 8)
    words = struct.unpack(f"<{pad_words}I", raw[: 4 * pad_words])
    u, low = struct.unpack("<II", raw[4 * pad_words :])
    # head ~ 1/x on [2**32, 2**33) so that bit-length accounting starts unbiased
    hi = min(int(2.0 ** (32 + u / 2**32)), (1 << 33) - 1)
    head = (hi & ~0xFFFF) | (low & 0xFFFF)
    return words, head


class BitStream:
    """Mutable LIFO bit stream with a shared deterministic pad underneath.

    Streams are single-owner values; use :meth:`copy` to snapshot one.
    """

    __slots__ = ("head", "payload", "pad", "consumed", "pad_id")

    def __init__(self, pad: tuple[int, ...], pad_id: int, head: int, payload=None, consumed: int = 0):
        self.pad = pad
        self.pad_id = pad_id
        self.head = head
        self.payload = [] if payload is None else list(payload)
        self.consumed = consumed

    @classmethod
    def from_seed(cls, seed: bytes, pad_bits: int = DEFAULT_PAD_BITS) -> "BitStream":
        if pad_bits % WORD_BITS or pad_bits < 0:
            raise DomainError("pad length must be a non-negative multiple of 32 bits")
        pad, head = _pad_material(bytes(seed), pad_bits // WORD_BITS)
        return cls(pad, pad_id_for(bytes(seed)), head)

    @property
    def consumed_pad(self) -> int:
        """Pad bits currently popped."""
        return self.consumed * WORD_BITS

    def bit_length(self) -> int:
        return WORD_BITS * (len(self.pad) - self.consumed + len(self.payload)) + self.head.bit_length()

    def copy(self) -> "BitStream":
        return BitStream(self.pad, self.pad_id, self.head, self.payload, self.consumed)

    def __eq__(self, other):
        if not isinstance(other, BitStream):
            return NotImplemented
        return (
            self.pad_id == other.pad_id
            and self.head == other.head
            and self.consumed == other.consumed
            and self.payload == other.payload
        )

    def __repr__(self):
        return (
            f"BitStream(bits={self.bit_length()}, payload_words={len(self.payload)}, "
            f"consumed_pad={self.consumed_pad})"
        )

    # word-level stack -------------------------------------------------
    def _pull(self) -> int:
        if self.payload:
            return self.payload.pop()
        if self.consumed < len(self.pad):
            self.consumed += 1
            return self.pad[len(self.pad) - self.consumed]
        raise RandomnessUnderflow("pad exhausted; enlarge the pad")

    def _emit(self, word: int) -> None:
        # keep a canonical form: re-emitting the pad word just popped restores the pad
        if not self.payload and self.consumed and self.pad[len(self.pad) - self.consumed] == word:
            self.consumed -= 1
        else:
            self.payload.append(word)

    # symbol-level coding ------------------------------------------------
    def _push_range(self, start: int, freq: int, precision: int) -> None:
        x = self.head
        if x >= ((RANS_L >> precision) << WORD_BITS) * freq:
            self._emit(x & WORD_MASK)
            x >>= WORD_BITS
        self.head = ((x // freq) << precision) + (x % freq) + start

    def _pop_range(self, cf: int, start: int, freq: int, precision: int) -> None:
        x = freq * (self.head >> precision) + cf - start
        if x < RANS_L:
            x = (x << WORD_BITS) | self._pull()
        self.head = x

    def push(self, symbol: int, table: FrequencyTable) -> "BitStream":
        if table.certain is not None:
            if symbol != table.certain:
                raise CodingError(f"symbol {symbol} impossible under certain table")
            return self
        if not 0 <= symbol < len(table.freqs) or table.freqs[symbol] == 0:
            raise CodingError(f"symbol {symbol} has zero frequency")
        self._push_range(table.starts[symbol], table.freqs[symbol], table.precision)
        return self

    def pop(self, table: FrequencyTable) -> int:
        if table.certain is not None:
            return table.certain
        prec = table.precision
        cf = self.head & ((1 << prec) - 1)
        symbol = bisect_right(table.starts, cf) - 1
        while table.freqs[symbol] == 0:  # zero-width entries share a start
            symbol -= 1
        self._pop_range(cf, table.starts[symbol], table.freqs[symbol], prec)
        return symbol

    def push_bits(self, value: int, nbits: int) -> "BitStream":
        """Push ``nbits`` uniform bits (exactly ``nbits`` of cost), low chunk last."""
        if value < 0 or value >> nbits:
            raise CodingError(f"value {value} does not fit in {nbits} bits")
        chunks = []
        while nbits > 0:
            b = min(nbits, DEFAULT_PRECISION)
            chunks.append((value & ((1 << b) - 1), b))
            value >>= b
            nbits -= b
        for chunk, b in reversed(chunks):
            self._push_range(chunk << (DEFAULT_PRECISION - b), 1 << (DEFAULT_PRECISION - b), DEFAULT_PRECISION)
        return self

    def pop_bits(self, nbits: int) -> int:
        value, shift = 0, 0
        while nbits > 0:
            b = min(nbits, DEFAULT_PRECISION)
            cf = self.head & ((1 << DEFAULT_PRECISION) - 1)
            chunk = cf >> (DEFAULT_PRECISION - b)
            self._pop_range(cf, chunk << (DEFAULT_PRECISION - b), 1 << (DEFAULT_PRECISION - b), DEFAULT_PRECISION)
            value |= chunk << shift
            shift += b
            nbits -= b
        return value

    # serialization --------------------------------------------------------
    def to_bytes(self) -> bytes:
        """8-byte header (payload bits, pad id, consumed pad bits) + LE words."""
        words = [self.head & WORD_MASK, self.head >> WORD_BITS, *self.payload]
        header = _HEADER.pack(WORD_BITS * len(words), self.pad_id, self.consumed_pad)
        return header + struct.pack(f"<{len(words)}I", *words)

    @classmethod
    def from_bytes(cls, data: bytes, seed: bytes, pad_bits: int = DEFAULT_PAD_BITS) -> "BitStream":
        nbits, pad_id, consumed_bits = _HEADER.unpack_from(data)
        base = cls.from_seed(seed, pad_bits)
        if pad_id != base.pad_id:
            raise CodingError("stream was written against a different pad seed")
        nwords = nbits // WORD_BITS
        if nwords < 2 or len(data) != _HEADER.size + 4 * nwords or consumed_bits % WORD_BITS:
            raise CodingError("malformed stream")
        words = struct.unpack_from(f"<{nwords}I", data, _HEADER.size)
        head = words[0] | (words[1] << WORD_BITS)
        if not RANS_L <= head < 1 << 64:
            raise CodingError("malformed stream head")
        return cls(base.pad, pad_id, head, words[2:], consumed_bits // WORD_BITS)


def push_symbol(stream: BitStream, symbol: int, table: FrequencyTable) -> BitStream:
    return stream.push(symbol, table)


def pop_symbol(stream: BitStream, table: FrequencyTable) -> tuple[BitStream, int]:
    symbol = stream.pop(table)
    return stream, symbol


def net_bits(before: BitStream, after: BitStream) -> int:
    """Signed growth in bits from ``before`` to ``after``; pad bits cancel."""
    if before.pad_id != after.pad_id or len(before.pad) != len(after.pad):
        raise CodingError("streams were built from different pad seeds")
    return after.bit_length() - before.bit_length()
