"""Rejection sampling, greedy rejection sampling (GRS) and the PFR race.

GRS acceptance probabilities are computed in exact rationals. The recursion
for ``(L_k, S_k)`` depends only on the step and the target, so it is cached in
a :class:`GrsSchedule` and shared between encoder and decoder.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .ans import BitStream, bernoulli_table
from .channel import mutual_information
from .codes import DyadicZetaCode, zeta_param
from .exceptions import BudgetExceeded, DomainError, InvalidBound, InvariantViolation, ModelError
from .numerics import format_rational
from .randomness import SharedSeed, derive_uniform, proposal

DEFAULT_BUDGET = 1 << 24
DECISION_PRECISION = 16


# targets ------------------------------------------------------------------------


class EnumeratedTarget:
    """Target ``Q`` and proposal ``P`` given as pmfs over the same index set."""

    def __init__(self, q: Sequence[Fraction], p: Sequence[Fraction]):
        if len(q) != len(p):
            raise ModelError("target and proposal must share an alphabet")
        if any(qi > 0 and pi == 0 for qi, pi in zip(q, p)):
            raise ModelError("target is not absolutely continuous w.r.t. the proposal")
        self.q = tuple(q)
        self.p = tuple(p)
        self.ratios = tuple(qi / pi if pi else Fraction(0) for qi, pi in zip(q, p))
        self._cache: dict[Fraction, tuple[Fraction, Fraction]] = {}

    def ratio(self, y: int) -> Fraction:
        return self.ratios[y]

    def superlevel(self, level: Fraction) -> tuple[Fraction, Fraction]:
        """``(Q(H), P(H))`` for ``H = {y : level <= dQ/dP(y)}``."""
        hit = self._cache.get(level)
        if hit is None:
            qh = sum((qi for qi, r in zip(self.q, self.ratios) if r >= level), Fraction(0))
            ph = sum((pi for pi, r in zip(self.p, self.ratios) if r >= level), Fraction(0))
            hit = self._cache[level] = (qh, ph)
        return hit


class TwoValuedTarget:
    """``Q = P( . | A)`` for a set ``A`` of proposal mass ``mass``.

    The density ratio is ``1/mass`` on ``A`` and 0 elsewhere; ``member`` tests
    whether a proposal lies in ``A``.
    """

    def __init__(self, mass: Fraction, member: Callable[[object], bool]):
        if not 0 < mass <= 1:
            raise ModelError("conditioning set must have positive mass")
        self.mass = mass
        self.high = 1 / mass
        self.member = member

    def ratio(self, y) -> Fraction:
        return self.high if self.member(y) else Fraction(0)

    def superlevel(self, level: Fraction) -> tuple[Fraction, Fraction]:
        if level <= 0:
            return Fraction(1), Fraction(1)
        if level <= self.high:
            return Fraction(1), self.mass
        return Fraction(0), Fraction(0)

    def closed_form_state(self, k: int) -> tuple[Fraction, Fraction]:
        """``(L_k, S_k) = ((1 - q**(k-1)) / p, q**(k-1))`` with ``q = 1 - p``."""
        s = (1 - self.mass) ** (k - 1)
        return (1 - s) / self.mass, s

    def closed_form_accept(self) -> tuple[Fraction, Fraction]:
        """Acceptance probabilities on and off the set, the same at every step.

        On the set ``(1/p - L_k) / S_k = 1/p >= 1``; off it ``-L_k / S_k <= 0``.
        """
        return Fraction(1), Fraction(0)


class GrsSchedule:
    """Lazily extended ``(L_k, S_k)`` sequence of greedy rejection sampling."""

    def __init__(self, target):
        self.target = target
        self.L = [Fraction(0)]
        self.S = [Fraction(1)]
        self._accept: dict[tuple[int, Fraction], Fraction] = {}

    def state(self, k: int) -> tuple[Fraction, Fraction]:
        while len(self.L) < k:
            L_next = self.L[-1] + self.S[-1]
            qh, ph = self.target.superlevel(L_next)
            self.L.append(L_next)
            self.S.append(qh - L_next * ph)
        return self.L[k - 1], self.S[k - 1]

    def accept_prob(self, k: int, r: Fraction) -> Fraction:
        key = (k, r)
        a = self._accept.get(key)
        if a is None:
            L, S = self.state(k)
            if S <= 0:
                raise InvariantViolation(f"GRS reached step {k} with S_k = {S}")
            a = min(Fraction(1), max(Fraction(0), (r - L) / S))
            self._accept[key] = a
        return a


@dataclass
class GrsStep:
    k: int
    z: object
    L: Fraction
    S: Fraction
    A: Fraction
    B: int

    def as_json(self) -> dict:
        d = asdict(self)
        for key in ("L", "S", "A"):
            d[key] = format_rational(d[key])
        return d


# decision sources -----------------------------------------------------------------


def private_decisions(seed: SharedSeed, *prefix: int) -> Callable[[int, Fraction], int]:
    """Coin flips ``B_k ~ Bern(A_k)`` from encoder-private randomness."""

    def decide(k: int, a: Fraction) -> int:
        if a >= 1:
            return 1
        if a <= 0:
            return 0
        return int(derive_uniform(seed, "PRIVATE", *prefix, k).below(a))

    return decide


class StreamDecisions:
    """Decode ``B_k ~ Bern(A_k)`` from a bit stream (bits-back mode).

    Probability-0/1 decisions bypass the coder and touch no bits; ``bypassed``
    and ``coded`` count the two kinds.
    """

    def __init__(self, stream: BitStream, precision: int = DECISION_PRECISION):
        self.stream = stream
        self.precision = precision
        self.bypassed = 0
        self.coded = 0

    def __call__(self, k: int, a: Fraction) -> int:
        if a >= 1 or a <= 0:
            self.bypassed += 1
            return int(a >= 1)
        self.coded += 1
        return self.stream.pop(bernoulli_table(a, self.precision))


def push_decision(stream: BitStream, b: int, a: Fraction, precision: int = DECISION_PRECISION) -> None:
    """Inverse of :class:`StreamDecisions` for a single step."""
    if a >= 1 or a <= 0:
        if b != int(a >= 1):
            raise InvariantViolation(f"decision {b} impossible under acceptance probability {a}")
        return
    stream.push(b, bernoulli_table(a, precision))


# samplers ------------------------------------------------------------------------------


def rejection_sample(
    target_ratio: Callable[[object], Fraction],
    bound: Fraction,
    proposals: Callable[[int], object],
    uniforms: Callable[[int], object],
    budget: int = DEFAULT_BUDGET,
) -> tuple[object, int]:
    """Standard rejection sampling with bound ``M``: accept ``Z_n`` iff ``U_n < r(Z_n)/M``.

    ``uniforms(n)`` must return a :class:`~bbrs.randomness.BitSource`; the
    acceptance test is an exact rational comparison.
    """
    bound = Fraction(bound)
    for n in range(1, budget + 1):
        y = proposals(n)
        r = target_ratio(y)
        if r > bound:
            raise InvalidBound(f"density ratio {r} exceeds bound {bound}")
        if r and uniforms(n).below(r / bound):
            return y, n
    raise BudgetExceeded(f"rejection sampler exceeded {budget} steps")


def grs_sample(
    target,
    proposals: Callable[[int], object],
    decide: Callable[[int, Fraction], int],
    schedule: GrsSchedule | None = None,
    budget: int = DEFAULT_BUDGET,
    keep_trace: bool = True,
) -> tuple[object, int, list[GrsStep]]:
    """Greedy rejection sampling of ``target`` from ``proposals``.

    Returns the accepted proposal, its index ``K`` and the step trace.
    """
    schedule = schedule or GrsSchedule(target)
    trace: list[GrsStep] = []
    for k in range(1, budget + 1):
        z = proposals(k)
        a = schedule.accept_prob(k, target.ratio(z))
        b = decide(k, a)
        if keep_trace:
            L, S = schedule.state(k)
            trace.append(GrsStep(k, z, L, S, a, b))
        if b:
            return z, k, trace
    raise BudgetExceeded(f"greedy rejection sampler exceeded {budget} steps")


def replay_acceptance(schedule: GrsSchedule, zs: Sequence[object]) -> list[Fraction]:
    """Recompute ``A_1..A_K`` from the proposals alone (the decoder's view)."""
    return [schedule.accept_prob(k, schedule.target.ratio(z)) for k, z in enumerate(zs, start=1)]


# standalone GRS relative entropy code ---------------------------------------------


class GrsCode:
    """GRS channel simulation code for a fixed channel.

    The accepted index ``K`` is pushed with the zeta code (shape ``I + 1``).
    Per-input schedules are cached, so one instance serves many trials.
    """

    def __init__(self, ch, budget: int = DEFAULT_BUDGET):
        self.channel = ch
        self.budget = budget
        self.zeta = DyadicZetaCode(zeta_param(mutual_information(ch)))
        self._schedules: dict[int, GrsSchedule] = {}

    def schedule(self, x: int) -> GrsSchedule:
        sched = self._schedules.get(x)
        if sched is None:
            ch = self.channel
            target = EnumeratedTarget([ch.cond(x, y) for y in range(ch.ny)], ch.py)
            sched = self._schedules[x] = GrsSchedule(target)
        return sched

    def sample(self, x: int, seed: SharedSeed) -> tuple[int, int]:
        sched = self.schedule(x)
        y, k, _ = grs_sample(
            sched.target, lambda i: proposal(seed, self.channel, i), private_decisions(seed, 1),
            schedule=sched, budget=self.budget, keep_trace=False,
        )
        return y, k

    def push(self, stream: BitStream, x: int, seed: SharedSeed) -> tuple[int, int]:
        y, k = self.sample(x, seed)
        self.zeta.push(stream, k)
        return y, k

    def pop(self, stream: BitStream, seed: SharedSeed) -> int:
        return proposal(seed, self.channel, self.zeta.pop(stream))


def grs_code(ch, x, seed: SharedSeed, stream: BitStream, direction: str, budget: int = DEFAULT_BUDGET):
    """Push or pop one GRS-simulated sample; returns ``(stream, y)``.

    ``x`` is an input-alphabet index; on push ``y`` is the encoder's ``Z_K``.
    """
    code = ch.__dict__.get("_grs_code")
    if code is None or code.budget != budget:
        code = ch.__dict__["_grs_code"] = GrsCode(ch, budget)
    if direction == "push":
        y, _ = code.push(stream, x, seed)
        return stream, y
    if direction == "pop":
        return stream, code.pop(stream, seed)
    raise DomainError(f"direction must be 'push' or 'pop', got {direction!r}")


# Poisson functional representation ----------------------------------------------------


def pfr_select(ch, x: int, seed: SharedSeed, budget: int = DEFAULT_BUDGET) -> tuple[int, int, Fraction]:
    """Exponential race ``K = argmin_i T_i / r_x(Z_i)``.

    ``T_i`` are arrival times of a unit-rate Poisson process drawn from
    private randomness. The scan stops once ``T_i / max r_x`` exceeds the best
    score, after which no later index can win. Returns ``(Z_K, K, r_x(Z_K))``.
    """
    r_max = float(ch.max_ratio[x])
    t = 0.0
    best, best_k, best_z = math.inf, None, None
    for i in range(1, budget + 1):
        t += derive_uniform(seed, "PRIVATE", 2, i).exponential()
        if t / r_max > best:
            return best_z, best_k, ch.ratio_idx(best_z, x)
        z = proposal(seed, ch, i)
        r = ch.ratio_idx(z, x)
        if r:
            score = t / float(r)
            if score < best:
                best, best_k, best_z = score, i, z
    raise BudgetExceeded(f"PFR race exceeded {budget} arrivals")


def pfr_select_unpruned(ch, x: int, seed: SharedSeed, arrivals: int) -> tuple[int, int]:
    """Reference race over a fixed number of arrivals, without the stopping rule."""
    t = 0.0
    best, best_k, best_z = math.inf, None, None
    for i in range(1, arrivals + 1):
        t += derive_uniform(seed, "PRIVATE", 2, i).exponential()
        z = proposal(seed, ch, i)
        r = ch.ratio_idx(z, x)
        if r and t / float(r) < best:
            best, best_k, best_z = t / float(r), i, z
    return best_z, best_k
