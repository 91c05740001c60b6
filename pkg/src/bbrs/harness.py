"""Experiment drivers: distribution checks, rate runs and redundancy sweeps."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy import stats

from .ans import BitStream
from .channel import ClosedFormProduct, DiscreteChannel, mutual_information
from .coder import (
    RateReport,
    _mean_std,
    conservative_bound,
    expected_rate_analytic,
    grs_baseline,
    measure_rate,
    run_trial,
    theorem1_bound,
)
from .exceptions import BudgetExceeded, DomainError, InvariantViolation
from .gamma import ClosedFormLevels, GammaModel, ProductGammaModel, QuantizerSpec
from .pfr import pfr_run_trial
from .randomness import SharedSeed, derive_uniform
from .samplers import GrsCode

SIGNIFICANCE = 1e-3
SCHEMES = ("bbrs", "grs", "pfr")
CSV_COLUMNS = (
    "n", "I_n", "H_gamma_n", "mean_rate", "popped_stage2", "pushed_K", "pushed_N",
    "thm1_bound", "conservative_bound", "redundancy", "redundancy_per_log2n",
)


def seed_for_input(seed: SharedSeed, x) -> SharedSeed:
    """Independent seed per conditioning input so per-x runs do not share draws."""
    return SharedSeed(hashlib.sha256(seed.value + repr(x).encode()).digest())


# distribution checks -------------------------------------------------------------


@dataclass
class DistributionReport:
    scheme: str
    x: object
    trials: int
    statistic: float
    p_value: float
    dof: int
    off_support: int
    counts: dict = field(repr=False, default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.off_support == 0 and self.p_value > SIGNIFICANCE

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme, "x": repr(self.x), "trials": self.trials,
            "statistic": self.statistic, "p_value": self.p_value, "dof": self.dof,
            "off_support": self.off_support, "passed": self.passed,
        }


def chi_square(counts: dict, pmf: dict, trials: int) -> tuple[float, float, int, int]:
    """Pearson test of ``counts`` against ``pmf``; mass off the support is counted apart."""
    support = [y for y, p in pmf.items() if p > 0]
    off = sum(c for y, c in counts.items() if pmf.get(y, 0) == 0)
    if len(support) < 2:
        return 0.0, 1.0, 0, off
    observed = [counts.get(y, 0) for y in support]
    expected = [trials * float(pmf[y]) for y in support]
    # off-support mass is reported separately, so the test runs on the supported counts alone
    if sum(observed) == 0:
        return math.inf, 0.0, len(support) - 1, off
    scale = sum(observed) / math.fsum(expected)
    res = stats.chisquare(observed, [e * scale for e in expected])
    return float(res.statistic), float(res.pvalue), len(support) - 1, off


def _sampler(scheme: str, model, ch: DiscreteChannel):
    if scheme == "bbrs":
        return lambda x, seed, t: run_trial(model, x, seed, t)[1]
    if scheme == "pfr":
        return lambda x, seed, t: pfr_run_trial(model, x, seed, t).y
    if scheme == "grs":
        code = GrsCode(ch)

        def grs_trial(x, seed, t):
            s = seed.for_trial(t)
            stream = BitStream.from_seed(s.value)
            before = stream.copy()
            y, _ = code.push(stream, x, s)
            if code.pop(stream, s) != y:
                raise InvariantViolation(f"trial {t}: GRS decoder disagrees with encoder")
            if stream != before:
                raise InvariantViolation(f"trial {t}: stream not restored")
            return y

        return grs_trial
    raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def verify_distribution(scheme: str, ch: DiscreteChannel, x=None, trials: int = 20000,
                        seed: SharedSeed | None = None, delta=Fraction(1)) -> DistributionReport:
    """Chi-square test of decoded outputs against ``P_{Y|X=x}`` (``P_Y`` when ``x`` is None).

    Every round trip also checks stream restitution and encoder/decoder
    agreement; a breach raises with the trial index.
    """
    seed = seed or SharedSeed.from_int(0)
    model = GammaModel(ch, QuantizerSpec(delta)) if scheme in ("bbrs", "pfr") else None
    draw = _sampler(scheme, model, ch)
    seed_x = seed_for_input(seed, x)
    counts: dict = {}
    for t in range(trials):
        xt = x
        if x is None:
            xt = ch.sample_input(derive_uniform(seed_x.for_trial(t), "PRIVATE", 3))
        y = draw(xt, seed_x, t)
        counts[y] = counts.get(y, 0) + 1
    pmf = dict(enumerate(ch.py)) if x is None else dict(ch.rows[x])
    statistic, p, dof, off = chi_square(counts, pmf, trials)
    return DistributionReport(scheme, x, trials, statistic, p, dof, off, counts)


def verify_all_inputs(scheme: str, ch: DiscreteChannel, trials: int, seed: SharedSeed | None = None,
                      delta=Fraction(1)) -> list[DistributionReport]:
    return [verify_distribution(scheme, ch, x, trials, seed, delta) for x in range(ch.nx)]


# GRS rate ----------------------------------------------------------------------


def grs_measure_rate(ch: DiscreteChannel, trials: int = 1000, seed: SharedSeed | None = None) -> RateReport:
    """Mean zeta-coded index length of the GRS code with ``X ~ P_X``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    seed = seed or SharedSeed.from_int(0)
    code = GrsCode(ch)
    costs = []
    for t in range(trials):
        s = seed.for_trial(t)
        x = ch.sample_input(derive_uniform(s, "PRIVATE", 3))
        stream = BitStream.from_seed(s.value)
        before = stream.bit_length()
        y, _ = code.push(stream, x, s)
        costs.append(stream.bit_length() - before)
        if code.pop(stream, s) != y:
            raise InvariantViolation(f"trial {t}: GRS decoder disagrees with encoder")
    mean, std = _mean_std(costs)
    mi = mutual_information(ch)
    return RateReport(
        trials=trials, mean_net=mean, std_net=std, mean_popped_stage2=0.0, mean_pushed_N=0.0,
        mean_pushed_K=mean, mutual_information=mi, h_gamma=math.nan, theorem1_bound=math.nan,
        conservative_bound=math.nan, delta=Fraction(1), scheme="grs", baseline=grs_baseline(mi),
        extra={"grs_bound": grs_rate_bound(mi)},
    )


def grs_rate_bound(mi: float) -> float:
    """Acceptance bound for the zeta-coded GRS index: ``I + log2(I + 1) + 6``."""
    return mi + math.log2(mi + 1) + 6


# redundancy sweep ------------------------------------------------------------------


@dataclass
class SweepRow:
    n: int
    I_n: float
    H_gamma_n: float
    mean_rate: float | None
    popped_stage2: float | None
    pushed_K: float | None
    pushed_N: float | None
    thm1_bound: float
    conservative_bound: float

    @property
    def skipped(self) -> bool:
        return self.mean_rate is None

    @property
    def redundancy(self) -> float | None:
        return None if self.skipped else self.mean_rate - self.I_n

    @property
    def redundancy_per_log2n(self) -> float | None:
        if self.skipped or self.n < 2:
            return None
        return self.redundancy / math.log2(self.n)

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def closed_form_base(ch: DiscreteChannel):
    """Erasure probability if ``ch`` is a uniform-input BEC, else None."""
    cfg = ch.config or {}
    if cfg.get("type") == "bec" and "px" not in cfg:
        return Fraction(cfg["epsilon"])
    return None


def sweep_model(ch: DiscreteChannel, n: int, spec: QuantizerSpec, mode: str):
    eps = closed_form_base(ch)
    if mode == "analytic" and eps is not None:
        return ClosedFormLevels(ClosedFormProduct(eps, n), spec)
    if n == 1:
        return GammaModel(ch, spec)
    return ProductGammaModel(ch, n, spec)


def redundancy_sweep(ch: DiscreteChannel, ns, delta=Fraction(1), trials: int = 2000, mode: str = "analytic",
                     seed: SharedSeed | None = None) -> list[SweepRow]:
    if mode not in ("analytic", "sampled"):
        raise DomainError(f"mode must be 'analytic' or 'sampled', got {mode!r}")
    ns = sorted(set(int(n) for n in ns))
    if not ns or ns[0] < 1:
        raise DomainError("sweep needs positive n values")
    spec = QuantizerSpec(delta)
    seed = seed or SharedSeed.from_int(0)
    rows = []
    for n in ns:
        model = sweep_model(ch, n, spec, mode)
        row = SweepRow(
            n=n, I_n=model.mutual_information, H_gamma_n=model.h_gamma,
            mean_rate=None, popped_stage2=None, pushed_K=None, pushed_N=None,
            thm1_bound=theorem1_bound(model), conservative_bound=conservative_bound(model),
        )
        try:
            if mode == "analytic":
                a = expected_rate_analytic(model)
                row.mean_rate, row.popped_stage2, row.pushed_K, row.pushed_N = a.total, a.stage2_bits, a.k_bits, a.n_bits
            else:
                r = measure_rate(model, None, trials, seed_for_input(seed, n))
                row.mean_rate, row.popped_stage2 = r.mean_net, r.mean_popped_stage2
                row.pushed_K, row.pushed_N = r.mean_pushed_K, r.mean_pushed_N
        except BudgetExceeded:
            pass
        rows.append(row)
    return rows


def fit_log_slope(rows, upper_half: bool = True) -> tuple[float, float]:
    """Least-squares slope (and its standard error) of redundancy against log2 n.

    With ``upper_half`` only rows whose log2 n lies in the upper half of the
    range are used, falling back to the last three rows if that leaves fewer.
    """
    usable = [r for r in rows if not r.skipped and r.n >= 1]
    if len(usable) < 3:
        raise DomainError("slope fit needs at least three rows")
    logs = [math.log2(r.n) for r in usable]
    if max(logs) == min(logs):
        raise DomainError("slope fit needs distinct n values")
    if upper_half:
        mid = (max(logs) + min(logs)) / 2
        chosen = [r for r, lg in zip(usable, logs) if lg >= mid]
        if len(chosen) < 3:
            chosen = sorted(usable, key=lambda r: r.n)[-3:]
        usable = chosen
    res = stats.linregress([math.log2(r.n) for r in usable], [r.redundancy for r in usable])
    return float(res.slope), float(res.stderr)


def _fmt(v) -> str:
    if v is None:
        return "skipped"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv(rows, slope: tuple[float, float] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = row.as_dict()
        writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    if slope is not None:
        buf.write(f"# slope={slope[0]!r},stderr={slope[1]!r}\n")
    return buf.getvalue()
