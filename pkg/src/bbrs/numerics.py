"""Exact rational helpers and entropy evaluation.

Every probability in the package is a :class:`fractions.Fraction`. Real-valued
quantities (entropies, bounds) are returned as floats with an absolute error
well below 1e-9 for the alphabet sizes used here.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

from .exceptions import DomainError, ModelError

Rational = Fraction

MAX_DELTA_DENOMINATOR = 64


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are rejected so that no binary rounding sneaks into a channel model.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"cannot parse rational {value!r}") from exc
    raise TypeError(f"expected int, Fraction or 'num/den' string, got {type(value).__name__}")


def format_rational(r: Fraction) -> str:
    """Serialize as ``"num/den"``; integers keep an explicit ``/1``."""
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def log2_rational(r: Fraction) -> float:
    """log2 of a positive rational, safe for numerators far beyond float range."""
    if r <= 0:
        raise DomainError(f"log of non-positive value {r}")
    return math.log2(r.numerator) - math.log2(r.denominator)


def check_pmf(pmf: Sequence[Fraction]) -> tuple[Fraction, ...]:
    pmf = tuple(as_rational(p) for p in pmf)
    if not pmf:
        raise ModelError("empty pmf")
    for p in pmf:
        if p < 0 or p > 1:
            raise ModelError(f"probability {p} outside [0, 1]")
    if sum(pmf) != 1:
        raise ModelError(f"pmf sums to {sum(pmf)}, not 1")
    return pmf


def _plogp_terms(pmf: Iterable[Fraction]) -> list[float]:
    return [-float(p) * log2_rational(p) for p in pmf if p]


def entropy_bits(pmf: Sequence[Fraction]) -> float:
    """Shannon entropy in bits of an exactly normalized pmf (0 log 0 = 0)."""
    pmf = check_pmf(pmf)
    return max(0.0, math.fsum(_plogp_terms(pmf)))


def entropy_bits_unchecked(pmf: Iterable[Fraction]) -> float:
    # for sub-normalized slices where the caller handles normalization
    return math.fsum(_plogp_terms(pmf))


def pow2_compare(r: Fraction, k: int, p: int, q: int) -> int:
    """Exact ordering of log2(r) against k*p/q.

    Returns -1, 0 or 1 as log2(r) is less than, equal to or greater than
    k*p/q. Decided by comparing r**q with 2**(k*p) in integer arithmetic.
    """
    r = as_rational(r)
    if r <= 0:
        raise DomainError(f"pow2_compare needs r > 0, got {r}")
    if p <= 0 or q <= 0:
        raise DomainError("delta numerator and denominator must be positive")
    if q > MAX_DELTA_DENOMINATOR:
        raise DomainError(f"delta denominator {q} exceeds {MAX_DELTA_DENOMINATOR}")
    lhs = r.numerator**q
    rhs = r.denominator**q
    e = k * p
    if e >= 0:
        rhs <<= e
    else:
        lhs <<= -e
    return (lhs > rhs) - (lhs < rhs)


def cross_entropy_geometric(true_mean, coding_mean) -> float:
    """Cross entropy, in bits, of Geom(true_mean) coded with Geom(coding_mean).

    Both distributions are on {1, 2, ...} and parameterized by their mean.
    """
    mt = as_rational(true_mean) if not isinstance(true_mean, float) else true_mean
    mc = as_rational(coding_mean) if not isinstance(coding_mean, float) else coding_mean
    if mc <= 1:
        raise DomainError(f"coding mean must exceed 1, got {mc}")
    if mt < 1:
        raise DomainError(f"true mean must be at least 1, got {mt}")
    # (mt - 1) * log2(1 - 1/mc) written as -(mt - 1)/mc * phi(1/mc) / ln 2, with
    # phi(u) = -log1p(-u)/u -> 1; stays finite when mc is far beyond float range
    if isinstance(mc, Fraction):
        log_mc = log2_rational(mc)
        slope = float((Fraction(mt) - 1) / mc)
        u = float(1 / mc)
    else:
        log_mc = math.log2(mc)
        slope = float(mt - 1) / mc
        u = 1 / mc
    phi = -math.log1p(-u) / u if u > 0 else 1.0
    return log_mc + slope * phi / math.log(2)


def dyadic_ceiling_pow2(exponent: Fraction, frac_bits: int = 16) -> Fraction:
    """Smallest multiple of 2**-frac_bits that is >= 2**exponent (exact)."""
    exponent = as_rational(exponent)
    e_num, e_den = exponent.numerator, exponent.denominator
    # want smallest integer m with m**e_den >= 2**(frac_bits*e_den + e_num)
    total = frac_bits * e_den + e_num
    if total < 0:
        return Fraction(1, 1 << frac_bits)
    if e_den == 1:
        return Fraction(1 << total, 1 << frac_bits)
    m = _iroot_ceil(total, e_den)
    return Fraction(m, 1 << frac_bits)


def _iroot_ceil(e: int, q: int) -> int:
    """Smallest integer m with m**q >= 2**e."""
    target = 1 << e
    m = 1 << -(-e // q)  # an upper bound
    lo, hi = 1 << (e // q), m
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**q >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo
