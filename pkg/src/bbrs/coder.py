"""Bits-back rejection sampling (BBRS) for singular channels.

Encoding a channel input ``x`` runs three stages against shared randomness:

1. draw ``Y^ ~ P_{Y|X=x}`` privately and read off its level ``Gamma``;
2. run greedy rejection sampling for ``P_{Y|Gamma}`` over the shared
   proposals ``Z_1, Z_2, ...``, decoding each accept/reject decision from the
   stream (this is where bits come back);
3. rejection-sample ``Upsilon_N ~ P_{Y|X,Gamma}`` from the level-keyed shared
   collection with bound ``M(Gamma, x)``.

``N`` is then pushed under ``Geom(M(Gamma))`` and ``K`` under the zeta code.
The decoder pops ``K``, recovers ``Gamma`` from ``Z_K`` through the witness
``g``, pops ``N``, and re-encodes the stage-2 decisions so the stream is
returned bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .ans import BitStream, pad_id_for
from .codes import DyadicZetaCode, GeometricCode
from .exceptions import (
    BudgetExceeded,
    DomainError,
    GammaMismatch,
    InvariantViolation,
)
from .numerics import cross_entropy_geometric, format_rational
from .randomness import SharedSeed, derive_uniform, proposal, upsilon
from .samplers import DEFAULT_BUDGET, StreamDecisions, push_decision, rejection_sample

STAGE2_ANALYTIC_STEPS = 32
NEGLIGIBLE_MASS = 1e-10


@dataclass
class BbrsTrial:
    x: object
    y_hat: object
    gamma: int
    K: int
    N: int
    y: object
    popped_stage2: int
    pushed_N: int
    pushed_K: int
    net: int
    coded_decisions: int = 0

    def as_json(self) -> str:
        return json.dumps(asdict(self), default=str, sort_keys=True)


def _codes(model):
    """Per-model cache of the zeta code and the per-level geometric codes."""
    cache = model.__dict__.get("_bbrs_codes")
    if cache is None:
        geo = {k: GeometricCode(m) for k, m in model.m_gamma.items()}
        cache = model.__dict__["_bbrs_codes"] = (DyadicZetaCode(model.lam), geo)
    return cache


def _grs_stage(model, k: int, seed: SharedSeed, stream: BitStream, budget: int):
    """Stage 2: GRS for ``P_{Y|Gamma=k}`` with decisions drawn from ``stream``."""
    sched = model.grs_schedule(k)
    ratio = sched.target.ratio
    decide = StreamDecisions(stream)
    for i in range(1, budget + 1):
        z = proposal(seed, model, i)
        if decide(i, sched.accept_prob(i, ratio(z))):
            return z, i, decide.coded
    raise BudgetExceeded(f"stage-2 sampler exceeded {budget} steps")


def bbrs_encode(model, x, seed: SharedSeed, stream: BitStream, budget: int = DEFAULT_BUDGET):
    """Encode one channel input; ``stream`` is mutated and returned."""
    zeta, geo = _codes(model)
    start = stream.bit_length()

    y_hat = model.sample_conditional(x, derive_uniform(seed, "PRIVATE", 0))
    k = model.level_of(y_hat)

    _, K, coded = _grs_stage(model, k, seed, stream, budget)
    after2 = stream.bit_length()

    bound = model.m_gamma_x(x, k)
    y, N = rejection_sample(
        lambda v: model.stage3_ratio(v, x, k),
        bound,
        lambda n: upsilon(seed, model, k, n),
        lambda n: derive_uniform(seed, "U", k, n),
        budget,
    )
    geo[k].push(stream, N)
    afterN = stream.bit_length()
    zeta.push(stream, K)
    end = stream.bit_length()
    trial = BbrsTrial(
        x=x, y_hat=y_hat, gamma=k, K=K, N=N, y=y,
        popped_stage2=start - after2, pushed_N=afterN - after2, pushed_K=end - afterN,
        net=end - start, coded_decisions=coded,
    )
    return stream, trial


def _decode(model, seed: SharedSeed, stream: BitStream, check_pad: bool = True):
    if check_pad and stream.pad_id != pad_id_for(seed.value):
        raise GammaMismatch("stream pad was not derived from this seed; seed or model diverged")
    zeta, geo = _codes(model)
    K = zeta.pop(stream)
    zs = [proposal(seed, model, i) for i in range(1, K + 1)]
    k = model.level_of(zs[-1])
    if k not in geo:
        raise GammaMismatch(f"recovered gamma index {k} has zero probability")
    N = geo[k].pop(stream)
    sched = model.grs_schedule(k)
    ratio = sched.target.ratio
    for i in range(K, 0, -1):
        a = sched.accept_prob(i, ratio(zs[i - 1]))
        try:
            push_decision(stream, int(i == K), a)
        except InvariantViolation as exc:
            raise GammaMismatch(f"stage-2 replay inconsistent at step {i}: {exc}") from exc
    return upsilon(seed, model, k, N), k, K, N


def bbrs_decode(model, seed: SharedSeed, stream: BitStream, check_pad: bool = True):
    """Decode one sample; returns ``(stream, y)`` with the stream restored.

    ``check_pad`` requires the stream's pad to come from ``seed``; turn it off
    when several per-symbol seeds share one stream.
    """
    y, *_ = _decode(model, seed, stream, check_pad)
    return stream, y


# bounds ----------------------------------------------------------------------------


def theorem1_bound(model) -> float:
    """``I + log2(H[Gamma] + 1) + 2 Delta + 5``."""
    return model.mutual_information + math.log2(model.h_gamma + 1) + 2 * float(model.delta) + 5


def conservative_bound(model) -> float:
    """Rate bound without the bits-back credit: adds ``H[Gamma]``."""
    return theorem1_bound(model) + model.h_gamma


def grs_baseline(mi: float) -> float:
    """Generic channel-simulation rate ``I + log2(I + 1) + 4``."""
    return mi + math.log2(mi + 1) + 4


# rate measurement ----------------------------------------------------------------------


@dataclass
class RateReport:
    trials: int
    mean_net: float
    std_net: float
    mean_popped_stage2: float
    mean_pushed_N: float
    mean_pushed_K: float
    mutual_information: float
    h_gamma: float
    theorem1_bound: float
    conservative_bound: float
    delta: Fraction
    scheme: str = "bbrs"
    baseline: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def stderr(self) -> float:
        return self.std_net / math.sqrt(self.trials) if self.trials else math.inf

    def as_dict(self) -> dict:
        d = asdict(self)
        d["delta"] = format_rational(self.delta)
        d["stderr"] = self.stderr
        return d

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _mean_std(values) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var)


def run_trial(model, x, seed: SharedSeed, trial: int, pad_bits: int | None = None):
    """One verified round trip; returns ``(BbrsTrial, decoded y)``."""
    s = seed.for_trial(trial)
    stream = BitStream.from_seed(s.value) if pad_bits is None else BitStream.from_seed(s.value, pad_bits)
    before = stream.copy()
    if x is None:
        x = model.sample_input(derive_uniform(s, "PRIVATE", 3))
    stream, info = bbrs_encode(model, x, s, stream)
    y, k, K, N = _decode(model, s, stream)
    if k != info.gamma:
        raise GammaMismatch(f"trial {trial}: decoder gamma {k} != encoder gamma {info.gamma}")
    if (K, N, y) != (info.K, info.N, info.y):
        raise InvariantViolation(f"trial {trial}: decoder disagrees with encoder")
    if stream != before:
        raise InvariantViolation(f"trial {trial}: stream not restored")
    return info, y


def measure_rate(model, x=None, trials: int = 1000, seed: SharedSeed | None = None, trace=None) -> RateReport:
    """Monte Carlo BBRS rate with per-trial verification.

    ``x=None`` draws the input from ``P_X`` in every trial. ``trace`` may be a
    writable text file receiving one JSON line per trial.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    seed = seed or SharedSeed.from_int(0)
    nets, pops, ns, ks = [], [], [], []
    for t in range(trials):
        try:
            info, _ = run_trial(model, x, seed, t)
        except (GammaMismatch, InvariantViolation, BudgetExceeded) as exc:
            raise type(exc)(f"trial {t}: {exc}") from exc
        if trace is not None:
            trace.write(info.as_json() + "\n")
        nets.append(info.net)
        pops.append(info.popped_stage2)
        ns.append(info.pushed_N)
        ks.append(info.pushed_K)
    mean, std = _mean_std(nets)
    return RateReport(
        trials=trials,
        mean_net=mean,
        std_net=std,
        mean_popped_stage2=math.fsum(pops) / trials,
        mean_pushed_N=math.fsum(ns) / trials,
        mean_pushed_K=math.fsum(ks) / trials,
        mutual_information=model.mutual_information,
        h_gamma=model.h_gamma,
        theorem1_bound=theorem1_bound(model),
        conservative_bound=conservative_bound(model),
        delta=model.delta,
        baseline=grs_baseline(model.mutual_information),
    )


# analytic expectations ---------------------------------------------------------------------


def _binary_entropy(a: Fraction) -> float:
    if a <= 0 or a >= 1:
        return 0.0
    p = float(a)
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def _stage2_bits(model, k: int) -> float:
    """Expected decision bits popped in stage 2 at level ``k``.

    A proposal lands in the level set with probability ``p``; a step whose
    acceptance probability is ``A`` costs ``h(A)`` bits on average. Targets
    with a closed-form schedule use it; others run the exact recursion for
    ``STAGE2_ANALYTIC_STEPS`` steps.
    """
    p = float(model.p_gamma[k])
    sched = model.grs_schedule(k)
    target = sched.target
    if hasattr(target, "closed_form_accept"):
        a_in, a_out = target.closed_form_accept()
        per_step = p * _binary_entropy(a_in) + (1 - p) * _binary_entropy(a_out)
        stay = 1 - p * float(a_in) - (1 - p) * float(a_out)
        if per_step == 0:
            return 0.0
        return per_step / (1 - stay)
    total, reach = 0.0, 1.0
    for i in range(1, STAGE2_ANALYTIC_STEPS + 1):
        a_in = sched.accept_prob(i, target.high)
        a_out = sched.accept_prob(i, Fraction(0))
        total += reach * (p * _binary_entropy(a_in) + (1 - p) * _binary_entropy(a_out))
        reach *= 1 - p * float(a_in) - (1 - p) * float(a_out)
        if reach == 0.0:
            break
    return total


@dataclass
class AnalyticRate:
    total: float
    k_bits: float
    n_bits: float
    stage2_bits: float
    skipped_mass: float
    mutual_information: float
    h_gamma: float
    theorem1_bound: float
    conservative_bound: float

    def as_dict(self) -> dict:
        return asdict(self)


def expected_rate_analytic(model) -> AnalyticRate:
    """Exact expected BBRS rate from the level structure.

    ``K | Gamma=k`` is geometric with mean ``1/P_Gamma(k)``; ``N | x, k`` is
    geometric with mean ``M(k, x)`` and coded at mean ``M(k)``. Levels with
    mass below ``NEGLIGIBLE_MASS`` are left out of the ``K`` term and their
    total mass is reported.
    """
    zeta = DyadicZetaCode(model.lam)
    k_bits, stage2, skipped = 0.0, 0.0, 0.0
    for k, p in model.p_gamma.items():
        pf = float(p)
        if pf < NEGLIGIBLE_MASS:
            skipped += pf
            continue
        k_bits += pf * zeta.expected_cost_geometric(1 / p)
        stage2 += pf * _stage2_bits(model, k)
    n_bits = 0.0
    for w, k, m in model.x_gamma_weights():
        wf = float(w)
        if wf:
            n_bits += wf * cross_entropy_geometric(m, model.m_gamma[k])
    return AnalyticRate(
        total=k_bits + n_bits - stage2,
        k_bits=k_bits,
        n_bits=n_bits,
        stage2_bits=stage2,
        skipped_mass=skipped,
        mutual_information=model.mutual_information,
        h_gamma=model.h_gamma,
        theorem1_bound=theorem1_bound(model),
        conservative_bound=conservative_bound(model),
    )
