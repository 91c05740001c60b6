"""Index codes for unbounded positive integers, driven through the stack coder.

``GeometricCode`` codes ``n >= 1`` as ``n - 1`` failures and one success of a
Bernoulli(1/mean) coin. ``DyadicZetaCode`` codes ``k >= 1`` in two parts: the
level ``floor(log2 k)`` under a truncated geometric pmf, then the offset within
the level as raw bits. Its cost is roughly ``(1 + 1/lam) log2 k + log2 lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .ans import BitStream, FrequencyTable, bernoulli_table, make_table
from .exceptions import BudgetExceeded, CodingError, DomainError
from .numerics import as_rational

INDEX_PRECISION = 24
MAX_INDEX_LOG2 = 40
L_MAX = 40


@dataclass(frozen=True)
class GeometricCode:
    mean: Fraction
    precision: int = INDEX_PRECISION
    table: FrequencyTable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = as_rational(self.mean)
        if mean <= 1:
            raise DomainError(f"geometric code needs mean > 1, got {mean}; use the deterministic n = 1 path")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "table", bernoulli_table(1 / mean, self.precision))

    def push(self, stream: BitStream, n: int) -> BitStream:
        if n < 1:
            raise CodingError(f"geometric code needs n >= 1, got {n}")
        if n > 1 << MAX_INDEX_LOG2:
            raise BudgetExceeded(f"index {n} exceeds 2**{MAX_INDEX_LOG2}")
        stream.push(1, self.table)
        for _ in range(n - 1):
            stream.push(0, self.table)
        return stream

    def pop(self, stream: BitStream) -> int:
        n = 1
        while stream.pop(self.table) == 0:
            n += 1
            if n > 1 << MAX_INDEX_LOG2:
                raise BudgetExceeded("geometric index overflow; malformed stream")
        return n

    def cost_bits(self, n: int) -> float:
        """Ideal cost -log2 pmf(n) under the exact (unquantised) law."""
        return math.log2(self.mean) - (n - 1) * math.log2(1 - 1 / self.mean)


@lru_cache(maxsize=256)
def _level_pmf(lam: float, l_max: int) -> tuple[Fraction, ...]:
    weights = [Fraction(2.0 ** (-l / lam)) for l in range(l_max + 1)]
    total = sum(weights)
    return tuple(w / total for w in weights)


@dataclass(frozen=True)
class DyadicZetaCode:
    lam: float
    l_max: int = L_MAX
    precision: int = INDEX_PRECISION
    level_pmf: tuple[Fraction, ...] = field(init=False, repr=False, compare=False)
    table: FrequencyTable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"zeta shape must be positive, got {self.lam}")
        pmf = _level_pmf(float(self.lam), self.l_max)
        object.__setattr__(self, "level_pmf", pmf)
        object.__setattr__(self, "table", _level_table(float(self.lam), self.l_max, self.precision))

    def push(self, stream: BitStream, k: int) -> BitStream:
        if k < 1:
            raise CodingError(f"zeta code needs k >= 1, got {k}")
        if k > 1 << MAX_INDEX_LOG2:
            raise BudgetExceeded(f"index {k} exceeds 2**{MAX_INDEX_LOG2}")
        level = k.bit_length() - 1
        if level:
            stream.push_bits(k - (1 << level), level)
        stream.push(level, self.table)
        return stream

    def pop(self, stream: BitStream) -> int:
        level = stream.pop(self.table)
        offset = stream.pop_bits(level) if level else 0
        return (1 << level) + offset

    def level_cost(self, level: int) -> float:
        return -math.log2(self.level_pmf[level])

    def cost_bits(self, k: int) -> float:
        level = k.bit_length() - 1
        return self.level_cost(level) + level

    def expected_cost_geometric(self, mean: Fraction, rel_tol: float = 1e-9) -> float:
        """Expected ideal cost when K ~ Geom(mean).

        Raises :class:`BudgetExceeded` if the index tail beyond the largest
        codable level carries more than ``rel_tol`` probability.
        """
        mean = as_rational(mean)
        if mean == 1:
            return self.cost_bits(1)
        log_fail = math.log1p(-1 / float(mean))

        def survival(j: int) -> float:  # P(K > j)
            return math.exp(j * log_fail)

        total = 0.0
        for level in range(self.l_max + 1):
            p = survival((1 << level) - 1) - survival((1 << (level + 1)) - 1)
            total += p * (self.level_cost(level) + level)
        tail = survival((1 << (self.l_max + 1)) - 1)
        if tail > rel_tol:
            raise BudgetExceeded(f"Geom({float(mean):.3g}) index tail {tail:.2e} beyond the zeta code range")
        return total


@lru_cache(maxsize=256)
def _level_table(lam: float, l_max: int, precision: int) -> FrequencyTable:
    return make_table(_level_pmf(lam, l_max), precision)


def zeta_param(h_gamma: float) -> float:
    """Zeta shape used for the greedy index: one more than the level entropy."""
    if h_gamma < 0:
        raise DomainError("entropy must be non-negative")
    return h_gamma + 1.0


def geometric_code(stream: BitStream, direction: str, n: int | None, mean) -> tuple[BitStream, int]:
    code = GeometricCode(as_rational(mean))
    if direction == "push":
        return code.push(stream, n), n
    if direction == "pop":
        return stream, code.pop(stream)
    raise DomainError(f"direction must be 'push' or 'pop', got {direction!r}")


def zeta_code(stream: BitStream, direction: str, k: int | None, lam: float) -> tuple[BitStream, int]:
    code = DyadicZetaCode(lam)
    if direction == "push":
        return code.push(stream, k), k
    if direction == "pop":
        return stream, code.pop(stream)
    raise DomainError(f"direction must be 'push' or 'pop', got {direction!r}")
