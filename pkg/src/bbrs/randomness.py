"""Shared common randomness derived from a single 256-bit seed.

Every random object in a coding run (proposals ``Z_k``, the per-level
collections ``Upsilon_n``, encoder-private uniforms, the stream pad) is read
from a keyed BLAKE2b counter-mode stream addressed by ``(label, indices...)``.
Encoder and decoder holding the same seed therefore see identical draws, and
any draw can be regenerated out of order.
"""
from __future__ import annotations

import hashlib
import math
import struct
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exceptions import DomainError
from .numerics import check_pmf

LABELS = frozenset({"Z", "UPSILON", "U", "PAD", "PRIVATE"})
_WORD = struct.Struct("<4Q")
_TWO64 = 1 << 64


@dataclass(frozen=True)
class SharedSeed:
    """256-bit seed shared by encoder and decoder."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != 32:
            raise DomainError("seed must be exactly 32 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "SharedSeed":
        text = text.strip().lower()
        if len(text) != 64:
            raise DomainError("seed must be 64 hex characters")
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise DomainError(f"invalid hex seed {text!r}") from exc

    @classmethod
    def from_int(cls, n: int) -> "SharedSeed":
        return cls(hashlib.sha256(b"bbrs-int-seed" + str(n).encode()).digest())

    def hex(self) -> str:
        return self.value.hex()

    def for_trial(self, trial: int) -> "SharedSeed":
        """Independent per-trial seed (the trial index is folded in)."""
        h = hashlib.blake2b(b"TRIAL" + struct.pack("<q", trial), key=self.value, digest_size=32)
        return SharedSeed(h.digest())

    def source(self, label: str, *indices: int) -> "BitSource":
        return derive_uniform(self, label, *indices)


class BitSource:
    """Lazily extensible stream of uniform 64-bit words."""

    __slots__ = ("_key", "_prefix", "_counter", "_buf", "_res", "_res_bits", "words_used")

    def __init__(self, key: bytes, prefix: bytes):
        self._key = key
        self._prefix = prefix
        self._counter = 0
        self._buf: list[int] = []
        self._res = 0
        self._res_bits = 0
        self.words_used = 0

    def word(self) -> int:
        if not self._buf:
            digest = hashlib.blake2b(
                self._prefix + struct.pack("<I", self._counter), key=self._key, digest_size=32
            ).digest()
            self._counter += 1
            self._buf = list(reversed(_WORD.unpack(digest)))
        self.words_used += 1
        return self._buf.pop()

    def bits(self, n: int) -> int:
        """Next ``n`` uniform bits; leftovers of a word are kept for later calls."""
        while self._res_bits < n:
            self._res = (self._res << 64) | self.word()
            self._res_bits += 64
        self._res_bits -= n
        value = self._res >> self._res_bits
        self._res &= (1 << self._res_bits) - 1
        return value

    def randbelow(self, n: int) -> int:
        """Exact uniform integer in ``[0, n)`` by rejection on fresh bits."""
        if n < 1:
            raise DomainError("randbelow needs n >= 1")
        k = (n - 1).bit_length()
        while True:
            v = self.bits(k)
            if v < n:
                return v

    def uniform_float(self) -> float:
        """Uniform on the open interval (0, 1)."""
        return (self.word() + 0.5) / _TWO64

    def below(self, threshold: Fraction) -> bool:
        """Exact test ``U < threshold`` for U ~ Unif(0, 1), extending precision lazily."""
        if threshold >= 1:
            return True
        if threshold <= 0:
            return False
        a, b = threshold.numerator, threshold.denominator
        w, t = 0, 0
        while True:
            w = (w << 64) | self.word()
            t += 64
            lo = w * b
            hi = lo + b
            cut = a << t
            if hi <= cut:
                return True
            if lo >= cut:
                return False

    def exponential(self) -> float:
        return -math.log(self.uniform_float())


def derive_uniform(seed: SharedSeed, label: str, *indices: int) -> BitSource:
    if label not in LABELS:
        raise DomainError(f"unknown randomness label {label!r}")
    prefix = label.encode() + b"\x00" + b"".join(struct.pack("<q", i) for i in indices)
    return BitSource(seed.value, prefix)


class ExactSampler:
    """Inverse-CDF sampler that is exact for rational pmfs.

    Draws 64 bits at a time and keeps extending until the dyadic interval the
    uniform is known to lie in falls inside a single CDF cell.
    """

    __slots__ = ("cum", "den", "symbols", "certain")

    def __init__(self, pmf: Sequence[Fraction], symbols: Sequence | None = None, check: bool = True):
        if check:
            pmf = check_pmf(pmf)
        den = 1
        for p in pmf:
            den = den * p.denominator // math.gcd(den, p.denominator)
        cum, acc = [0], 0
        for p in pmf:
            acc += p.numerator * (den // p.denominator)
            cum.append(acc)
        self.cum = cum
        self.den = den
        self.symbols = tuple(range(len(pmf))) if symbols is None else tuple(symbols)
        nz = [i for i, p in enumerate(pmf) if p]
        self.certain = self.symbols[nz[0]] if len(nz) == 1 else None

    def sample(self, source: BitSource):
        if self.certain is not None:
            return self.certain
        cum, den = self.cum, self.den
        w, t = 0, 0
        while True:
            w = (w << 64) | source.word()
            t += 64
            i = bisect_right(cum, (w * den) >> t) - 1
            if (w + 1) * den <= cum[i + 1] << t:
                return self.symbols[i]


def proposal(seed: SharedSeed, model, k: int):
    """Common-randomness proposal ``Z_k ~ P_Y`` (an output-alphabet index)."""
    if k < 1:
        raise DomainError("proposal index starts at 1")
    return model.sample_marginal(derive_uniform(seed, "Z", k))


def upsilon(seed: SharedSeed, model, gamma: int, n: int):
    """Common-randomness draw ``Upsilon_n ~ P_{Y | Gamma = gamma}``."""
    if n < 1:
        raise DomainError("upsilon index starts at 1")
    if gamma not in model.level_set:
        raise DomainError(f"gamma index {gamma} outside the model support")
    return model.sample_level(gamma, derive_uniform(seed, "UPSILON", gamma, n))
