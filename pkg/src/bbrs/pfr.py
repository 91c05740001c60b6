"""Two-part Poisson functional representation code for singular channels.

The race index ``K`` is geometric given the selected ratio ``R_x`` with mean
``M'(R_x)``. The encoder quantises ``R_x`` to ``Gamma_x``, codes ``K`` with the
upper mean ``M(Gamma_x) = 2**(Gamma_x + Delta) + 1`` and then codes
``Gamma_x`` under the shared marginal ``P_Gamma``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .ans import BitStream, make_table
from .codes import INDEX_PRECISION, GeometricCode
from .coder import RateReport, _mean_std, conservative_bound, grs_baseline, theorem1_bound
from .exceptions import DomainError, InvariantViolation
from .gamma import quantize_log_ratio
from .numerics import as_rational, format_rational
from .randomness import SharedSeed, derive_uniform, proposal
from .samplers import pfr_select

LOG2E = math.log2(math.e)


def m_prime(ch, x: int, r) -> Fraction:
    """``E_{Z ~ P_Y}[max(dP_{Y|X=x}/dP_Y(Z), r)]``, exactly."""
    r = as_rational(r)
    if r < 0:
        raise DomainError("m_prime needs r >= 0")
    return sum((py * max(ch.ratio_idx(y, x), r) for y, py in enumerate(ch.py)), Fraction(0))


@dataclass
class PfrTrial:
    x: object
    K: int
    R: Fraction
    gamma: int
    M: Fraction
    M_prime: Fraction
    pushed_gamma: int
    pushed_K: int
    y: object

    @property
    def net(self) -> int:
        return self.pushed_gamma + self.pushed_K

    def as_json(self) -> str:
        d = asdict(self)
        for key in ("R", "M", "M_prime"):
            d[key] = format_rational(d[key])
        return json.dumps(d, default=str, sort_keys=True)


def _pfr_codes(model):
    cache = model.__dict__.get("_pfr_codes")
    if cache is None:
        levels = model.levels
        table = make_table([model.p_gamma[k] for k in levels], INDEX_PRECISION)
        geo = {k: GeometricCode(m + 1) for k, m in model.m_gamma.items()}
        cache = model.__dict__["_pfr_codes"] = (levels, {k: i for i, k in enumerate(levels)}, table, geo)
    return cache


def pfr_encode(model, x: int, seed: SharedSeed, stream: BitStream):
    levels, pos, table, geo = _pfr_codes(model)
    ch = model.channel
    y, K, R = pfr_select(ch, x, seed)
    k = quantize_log_ratio(R, model.spec)
    if k not in geo:
        raise InvariantViolation(f"selected ratio level {k} outside the model support")
    start = stream.bit_length()
    geo[k].push(stream, K)
    mid = stream.bit_length()
    stream.push(pos[k], table)
    end = stream.bit_length()
    trial = PfrTrial(
        x=x, K=K, R=R, gamma=k, M=geo[k].mean, M_prime=m_prime(ch, x, R),
        pushed_gamma=end - mid, pushed_K=mid - start, y=y,
    )
    return stream, trial


def pfr_decode(model, seed: SharedSeed, stream: BitStream):
    levels, _, table, geo = _pfr_codes(model)
    k = levels[stream.pop(table)]
    K = geo[k].pop(stream)
    return stream, proposal(seed, model.channel, K)


def appendixb_bound(model) -> float:
    """``I + H[Gamma] + Delta + 2 log2(e) + 1``."""
    return model.mutual_information + model.h_gamma + float(model.delta) + 2 * LOG2E + 1


def pfr_run_trial(model, x, seed: SharedSeed, trial: int):
    s = seed.for_trial(trial)
    stream = BitStream.from_seed(s.value)
    before = stream.copy()
    if x is None:
        x = model.sample_input(derive_uniform(s, "PRIVATE", 3))
    stream, info = pfr_encode(model, x, s, stream)
    stream, y = pfr_decode(model, s, stream)
    if y != info.y:
        raise InvariantViolation(f"trial {trial}: decoded {y} but encoder selected {info.y}")
    if stream != before:
        raise InvariantViolation(f"trial {trial}: stream not restored")
    if not info.M_prime <= info.R + 1 <= info.M:
        raise InvariantViolation(f"trial {trial}: M'(R) <= R + 1 <= M(Gamma) fails")
    return info


def pfr_measure_rate(model, x=None, trials: int = 1000, seed: SharedSeed | None = None, trace=None) -> RateReport:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    seed = seed or SharedSeed.from_int(0)
    infos = []
    for t in range(trials):
        info = pfr_run_trial(model, x, seed, t)
        if trace is not None:
            trace.write(info.as_json() + "\n")
        infos.append(info)
    mean, std = _mean_std([i.net for i in infos])
    return RateReport(
        trials=trials,
        mean_net=mean,
        std_net=std,
        mean_popped_stage2=0.0,
        mean_pushed_N=0.0,
        mean_pushed_K=math.fsum(i.pushed_K for i in infos) / trials,
        mutual_information=model.mutual_information,
        h_gamma=model.h_gamma,
        theorem1_bound=theorem1_bound(model),
        conservative_bound=conservative_bound(model),
        delta=model.delta,
        scheme="pfr",
        baseline=grs_baseline(model.mutual_information),
        extra={
            "appendixb_bound": appendixb_bound(model),
            "mean_pushed_gamma": math.fsum(i.pushed_gamma for i in infos) / trials,
        },
    )
