"""Quantised log density ratio and every object derived from it.

For a singular channel the quantised log-ratio ``Gamma = Q_Delta(log2 g(Y))``
is a function of the output alone. The models here expose the level sets
``S_gamma``, the pushforwards ``P_Gamma`` and ``P_{Gamma|X}``, the conditionals
the bits-back sampler draws from, and the rejection bounds ``M(gamma)`` and
``M(gamma, x)``.

Level indices are stored as integers ``k`` with ``Gamma = k * Delta``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from .channel import ClosedFormProduct, DiscreteChannel, mutual_information, singular_g
from .codes import zeta_param
from .exceptions import DomainError, NonSingularChannel
from .numerics import (
    MAX_DELTA_DENOMINATOR,
    as_rational,
    dyadic_ceiling_pow2,
    entropy_bits_unchecked,
    format_rational,
    log2_rational,
    pow2_compare,
)
from .randomness import ExactSampler
from .samplers import GrsSchedule, TwoValuedTarget

M_FRACTION_BITS = 16


@dataclass(frozen=True)
class QuantizerSpec:
    """Floor quantiser with step ``delta = p/q`` (q <= 64)."""

    delta: Fraction = Fraction(1)

    def __post_init__(self):
        d = as_rational(self.delta)
        if d <= 0:
            raise DomainError("delta must be positive")
        if d.denominator > MAX_DELTA_DENOMINATOR:
            raise DomainError(f"delta denominator exceeds {MAX_DELTA_DENOMINATOR}")
        object.__setattr__(self, "delta", d)

    @property
    def p(self) -> int:
        return self.delta.numerator

    @property
    def q(self) -> int:
        return self.delta.denominator


def quantize_log_ratio(r, spec: QuantizerSpec = QuantizerSpec()) -> int:
    """The unique ``k`` with ``k*Delta <= log2 r < (k+1)*Delta``, decided exactly."""
    r = as_rational(r)
    if r <= 0:
        raise DomainError(f"cannot quantise log of {r}")
    p, q = spec.p, spec.q
    k = math.floor(log2_rational(r) / float(spec.delta))
    while pow2_compare(r, k, p, q) < 0:
        k -= 1
    while pow2_compare(r, k + 1, p, q) >= 0:
        k += 1
    return k


def m_gamma_value(k: int, spec: QuantizerSpec) -> Fraction:
    """``M(gamma) = 2**(gamma + Delta)`` rounded up to a multiple of 2**-16."""
    return dyadic_ceiling_pow2((k + 1) * spec.delta, M_FRACTION_BITS)


class _LevelModelMixin:
    """Shared behaviour of the enumerated and structured models."""

    spec: QuantizerSpec
    p_gamma: dict[int, Fraction]

    @cached_property
    def levels(self) -> tuple[int, ...]:
        return tuple(sorted(self.p_gamma))

    @cached_property
    def level_set(self) -> frozenset:
        return frozenset(self.p_gamma)

    @cached_property
    def h_gamma(self) -> float:
        return max(0.0, entropy_bits_unchecked(self.p_gamma.values()))

    @property
    def lam(self) -> float:
        return zeta_param(self.h_gamma)

    @property
    def delta(self) -> Fraction:
        return self.spec.delta

    @cached_property
    def m_gamma(self) -> dict[int, Fraction]:
        return {k: m_gamma_value(k, self.spec) for k in self.p_gamma}

    @cached_property
    def _schedules(self) -> dict[int, GrsSchedule]:
        return {}

    def grs_schedule(self, k: int) -> GrsSchedule:
        """GRS schedule for target ``P_{Y|Gamma=k}`` against proposal ``P_Y``."""
        sched = self._schedules.get(k)
        if sched is None:
            if k not in self.p_gamma:
                raise DomainError(f"gamma index {k} outside the model support")
            target = TwoValuedTarget(self.p_gamma[k], lambda y, k=k: self.level_of(y) == k)
            sched = self._schedules[k] = GrsSchedule(target)
        return sched

    def gamma_value(self, k: int) -> Fraction:
        return k * self.spec.delta


class GammaModel(_LevelModelMixin):
    """Enumerated Gamma model of a finite singular channel."""

    def __init__(self, channel: DiscreteChannel, spec: QuantizerSpec = QuantizerSpec()):
        verdict = singular_g(channel)
        if not verdict:
            raise NonSingularChannel("; ".join(verdict.violations))
        self.channel = channel
        self.spec = spec
        self.g = verdict.g
        self.level_of_y = tuple(quantize_log_ratio(gy, spec) for gy in self.g)
        members: dict[int, list[int]] = {}
        for y, k in enumerate(self.level_of_y):
            members.setdefault(k, []).append(y)
        self.members = {k: tuple(v) for k, v in sorted(members.items())}
        self.p_gamma = {k: sum((channel.py[y] for y in ys), Fraction(0)) for k, ys in self.members.items()}
        p_gamma_x = []
        for row in channel.rows:
            acc: dict[int, Fraction] = {}
            for y, q in row.items():
                k = self.level_of_y[y]
                acc[k] = acc.get(k, Fraction(0)) + q
            p_gamma_x.append(acc)
        self.p_gamma_x = tuple(p_gamma_x)
        self._accept: dict[tuple[int, int, int], Fraction] = {}

    def __repr__(self):
        return f"GammaModel({self.channel.name}, delta={self.spec.delta}, levels={self.levels})"

    @cached_property
    def mutual_information(self) -> float:
        return mutual_information(self.channel)

    def level_of(self, y: int) -> int:
        return self.level_of_y[y]

    def p_y_given_gamma(self, y: int, k: int) -> Fraction:
        if self.level_of_y[y] != k:
            return Fraction(0)
        return self.channel.py[y] / self.p_gamma[k]

    def p_y_given_x_gamma(self, y: int, x: int, k: int) -> Fraction:
        pgx = self.p_gamma_x[x].get(k)
        if not pgx:
            raise DomainError(f"gamma index {k} impossible given input {x}")
        if self.level_of_y[y] != k:
            return Fraction(0)
        return self.channel.cond(x, y) / pgx

    def m_gamma_x(self, x: int, k: int) -> Fraction:
        """``M(gamma, x) = M(gamma) * P_Gamma(gamma) / P_{Gamma|X}(gamma|x)``."""
        pgx = self.p_gamma_x[x].get(k)
        if not pgx:
            raise DomainError(f"gamma index {k} incompatible with input {x}")
        return self.m_gamma[k] * self.p_gamma[k] / pgx

    def stage3_ratio(self, y: int, x: int, k: int) -> Fraction:
        """Density ratio of ``P_{Y|X,Gamma}`` against ``P_{Y|Gamma}`` at ``y``."""
        pyg = self.p_y_given_gamma(y, k)
        return self.p_y_given_x_gamma(y, x, k) / pyg if pyg else Fraction(0)

    def stage3_accept(self, y: int, x: int, k: int) -> Fraction:
        key = (y, x, k)
        a = self._accept.get(key)
        if a is None:
            a = self._accept[key] = self.stage3_ratio(y, x, k) / self.m_gamma_x(x, k)
        return a

    # samplers -------------------------------------------------------------------
    @cached_property
    def _level_samplers(self) -> dict[int, ExactSampler]:
        py = self.channel.py
        return {
            k: ExactSampler([py[y] / self.p_gamma[k] for y in ys], symbols=ys, check=False)
            for k, ys in self.members.items()
        }

    def sample_level(self, k: int, source) -> int:
        return self._level_samplers[k].sample(source)

    def sample_marginal(self, source) -> int:
        return self.channel.sample_marginal(source)

    def sample_conditional(self, x: int, source) -> int:
        return self.channel.sample_conditional(x, source)

    def sample_input(self, source) -> int:
        return self.channel.sample_input(source)

    def x_gamma_weights(self):
        """Yield ``(P_X(x) P_{Gamma|X}(k|x), k, M(k, x))`` over compatible pairs."""
        for x, row in enumerate(self.p_gamma_x):
            for k, pgx in row.items():
                yield self.channel.px[x] * pgx, k, self.m_gamma_x(x, k)

    def inputs(self):
        return range(self.channel.nx)

    def input_symbol(self, x: int):
        return self.channel.x_alphabet[x]

    def output_symbol(self, y: int):
        return self.channel.y_alphabet[y]


def build_gamma_model(ch: DiscreteChannel, spec: QuantizerSpec = QuantizerSpec()) -> GammaModel:
    return GammaModel(ch, spec)


def m_gamma_x(model: GammaModel, x: int, k: int) -> Fraction:
    return model.m_gamma_x(x, k)


# M(gamma, x) bound check ------------------------------------------------------------


@dataclass
class MBoundReport:
    checked: int
    violations: int
    max_ratio_over_bound: Fraction
    tightest: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def as_json(self) -> list[dict]:
        return self.tightest


def verify_m_bound(model: GammaModel, top: int = 10) -> MBoundReport:
    """Check ``P_{Y|X,Gamma} / P_{Y|Gamma} <= M(gamma, x)`` on every triple.

    Ratios are recomputed from the raw channel tables, independently of the
    model's own conditional helpers.
    """
    ch = model.channel
    rows = []
    violations = 0
    worst = Fraction(0)
    for x in range(ch.nx):
        pgx: dict[int, Fraction] = {}
        for y, q in ch.rows[x].items():
            k = model.level_of_y[y]
            pgx[k] = pgx.get(k, Fraction(0)) + q
        for k, mass_x in pgx.items():
            bound = model.m_gamma[k] * model.p_gamma[k] / mass_x
            for y in model.members[k]:
                r = (ch.cond(x, y) / mass_x) / (ch.py[y] / model.p_gamma[k])
                frac = r / bound
                worst = max(worst, frac)
                if r > bound:
                    violations += 1
                rows.append((frac, x, k, y, r, bound))
    rows.sort(key=lambda t: (-t[0], t[1], t[2], t[3]))
    tightest = [
        {
            "x": ch.x_alphabet[x],
            "gamma": format_rational(model.gamma_value(k)),
            "y": ch.y_alphabet[y],
            "ratio": format_rational(r),
            "bound": format_rational(b),
        }
        for _, x, k, y, r, b in rows[:top]
    ]
    return MBoundReport(len(rows), violations, worst, tightest)


# structured product model --------------------------------------------------------------


def _unrank_arrangement(counts, r: int, total: int) -> list[int]:
    """The ``r``-th arrangement (lexicographic) of a multiset given by class counts."""
    counts = list(counts)
    remaining = sum(counts)
    out = []
    while remaining:
        for j, c in enumerate(counts):
            if not c:
                continue
            block = total * c // remaining
            if r < block:
                out.append(j)
                counts[j] -= 1
                total = block
                break
            r -= block
        remaining -= 1
    return out


class ProductGammaModel(_LevelModelMixin):
    """Gamma model of ``base^n`` without enumerating ``Y^n``.

    Outputs are grouped by their witness value ``g``; the level of an output
    sequence depends only on its class-count vector, so ``P_Gamma`` and
    ``P_{Gamma|X}`` are sums over count vectors. Inputs and outputs are
    tuples of base alphabet indices.
    """

    def __init__(self, base: DiscreteChannel, n: int, spec: QuantizerSpec = QuantizerSpec()):
        verdict = singular_g(base)
        if not verdict:
            raise NonSingularChannel("; ".join(verdict.violations))
        if n < 1:
            raise DomainError("product needs n >= 1")
        self.base = base
        self.n = n
        self.spec = spec
        self.g_base = verdict.g
        self.g_values = tuple(sorted(set(self.g_base)))
        self.class_of_y = tuple(self.g_values.index(gy) for gy in self.g_base)
        m = len(self.g_values)
        self.class_members = tuple(tuple(y for y in range(base.ny) if self.class_of_y[y] == j) for j in range(m))
        self.class_mass = tuple(sum((base.py[y] for y in ys), Fraction(0)) for ys in self.class_members)
        self._class_y_samplers = tuple(
            ExactSampler([base.py[y] / mass for y in ys], symbols=ys, check=False)
            for ys, mass in zip(self.class_members, self.class_mass)
        )
        self._row_class = tuple(
            tuple(sum((q for y, q in row.items() if self.class_of_y[y] == j), Fraction(0)) for j in range(m))
            for row in base.rows
        )
        self.counts = tuple(c for c in itertools.product(range(n + 1), repeat=m) if sum(c) == n)
        self.level_of_counts = {c: self._level_for_counts(c) for c in self.counts}
        marg = self._count_distribution([self.class_mass] * n)
        self.p_gamma = {}
        for c, p in marg.items():
            k = self.level_of_counts[c]
            self.p_gamma[k] = self.p_gamma.get(k, Fraction(0)) + p
        self._marg_counts = marg
        self._given_x: dict[tuple, dict[int, Fraction]] = {}
        self._level_count_samplers: dict[int, ExactSampler] = {}
        self._level_cache: dict[tuple, int] = {}
        self._arrangements: dict[tuple, int] = {}

    def __repr__(self):
        return f"ProductGammaModel({self.base.name}^{self.n}, delta={self.spec.delta})"

    def _level_for_counts(self, counts) -> int:
        r = Fraction(1)
        for gv, c in zip(self.g_values, counts):
            r *= gv**c
        return quantize_log_ratio(r, self.spec)

    def _count_distribution(self, per_coord) -> dict[tuple, Fraction]:
        dist = {tuple([0] * len(self.g_values)): Fraction(1)}
        for probs in per_coord:
            nxt: dict[tuple, Fraction] = {}
            for c, p in dist.items():
                for j, pj in enumerate(probs):
                    if pj:
                        c2 = c[:j] + (c[j] + 1,) + c[j + 1 :]
                        nxt[c2] = nxt.get(c2, Fraction(0)) + p * pj
            dist = nxt
        return dist

    @cached_property
    def mutual_information(self) -> float:
        return self.n * mutual_information(self.base)

    def gamma_given_x(self, x: tuple) -> dict[int, Fraction]:
        key = tuple(sorted(x))
        hit = self._given_x.get(key)
        if hit is None:
            dist = self._count_distribution([self._row_class[xi] for xi in key])
            hit = {}
            for c, p in dist.items():
                k = self.level_of_counts[c]
                hit[k] = hit.get(k, Fraction(0)) + p
            self._given_x[key] = hit
        return hit

    def level_of(self, y: tuple) -> int:
        k = self._level_cache.get(y)
        if k is None:
            counts = [0] * len(self.g_values)
            for yi in y:
                counts[self.class_of_y[yi]] += 1
            k = self._level_cache[y] = self.level_of_counts[tuple(counts)]
        return k

    def g_of(self, y: tuple) -> Fraction:
        r = Fraction(1)
        for yi in y:
            r *= self.g_base[yi]
        return r

    def m_gamma_x(self, x: tuple, k: int) -> Fraction:
        pgx = self.gamma_given_x(x).get(k)
        if not pgx:
            raise DomainError(f"gamma index {k} incompatible with input {x}")
        return self.m_gamma[k] * self.p_gamma[k] / pgx

    def stage3_ratio(self, y: tuple, x: tuple, k: int) -> Fraction:
        if self.level_of(y) != k or any(self.base.cond(xi, yi) == 0 for xi, yi in zip(x, y)):
            return Fraction(0)
        return self.p_gamma[k] / self.gamma_given_x(x)[k] * self.g_of(y)

    def stage3_accept(self, y: tuple, x: tuple, k: int) -> Fraction:
        return self.stage3_ratio(y, x, k) / self.m_gamma_x(x, k)

    def sample_marginal(self, source) -> tuple:
        s = self.base.marginal_sampler
        return tuple(s.sample(source) for _ in range(self.n))

    def sample_conditional(self, x: tuple, source) -> tuple:
        return tuple(self.base.sample_conditional(xi, source) for xi in x)

    def sample_input(self, source) -> tuple:
        s = self.base.input_sampler
        return tuple(s.sample(source) for _ in range(self.n))

    def sample_level(self, k: int, source) -> tuple:
        sampler = self._level_count_samplers.get(k)
        if sampler is None:
            cs = [c for c in self.counts if self.level_of_counts[c] == k and self._marg_counts.get(c)]
            sampler = ExactSampler([self._marg_counts[c] / self.p_gamma[k] for c in cs], symbols=cs, check=False)
            self._level_count_samplers[k] = sampler
        counts = sampler.sample(source)
        total = self._arrangements.get(counts)
        if total is None:
            total = math.factorial(self.n)
            for c in counts:
                total //= math.factorial(c)
            self._arrangements[counts] = total
        classes = _unrank_arrangement(counts, source.randbelow(total), total)
        samplers = self._class_y_samplers
        return tuple(samplers[j].sample(source) for j in classes)

    def x_gamma_weights(self):
        """Yield ``(P(x-type, k), k, M(k, x))`` over input multisets."""
        nx = self.base.nx
        for combo in itertools.combinations_with_replacement(range(nx), self.n):
            weight = Fraction(math.factorial(self.n))
            for xi in range(nx):
                weight /= math.factorial(combo.count(xi))
            for xi in combo:
                weight *= self.base.px[xi]
            for k, pgx in self.gamma_given_x(combo).items():
                yield weight * pgx, k, self.m_gamma_x(combo, k)

    def input_symbol(self, x: tuple):
        return tuple(self.base.x_alphabet[i] for i in x)

    def output_symbol(self, y: tuple):
        return tuple(self.base.y_alphabet[i] for i in y)


# closed-form level structure (analytic rates only) ------------------------------------


class ClosedFormLevels(_LevelModelMixin):
    """Level structure of a BEC product from binomial masses.

    Because ``P_{Gamma|X} = P_Gamma`` for every input, ``M(gamma, x) = M(gamma)``.
    """

    def __init__(self, cfp: ClosedFormProduct, spec: QuantizerSpec = QuantizerSpec()):
        self.cfp = cfp
        self.spec = spec
        self.p_gamma = dict(sorted(cfp.level_masses(spec.delta).items()))

    @property
    def mutual_information(self) -> float:
        return self.cfp.mutual_information

    def x_gamma_weights(self):
        for k, p in self.p_gamma.items():
            yield p, k, self.m_gamma[k]


def gamma_entropy(model, spec: QuantizerSpec | None = None) -> float:
    """H[Gamma] in bits for a model, or for a BEC closed-form product."""
    if isinstance(model, ClosedFormProduct):
        return model.gamma_entropy((spec or QuantizerSpec()).delta)
    return model.h_gamma
