import math
import random
from fractions import Fraction

import pytest

from bbrs.channel import bec, random_channel, typewriter
from bbrs.exceptions import DomainError
from bbrs.harness import (
    SweepRow,
    chi_square,
    fit_log_slope,
    grs_measure_rate,
    grs_rate_bound,
    redundancy_sweep,
    sweep_csv,
    verify_distribution,
)
from bbrs.randomness import SharedSeed

F = Fraction
SEED = SharedSeed.from_int(8)


def row(n, red):
    return SweepRow(n, 0.0, 0.0, red, 0.0, 0.0, 0.0, math.inf, math.inf)


def test_fit_log_slope_recovers_line():
    rows = [row(n, 0.5 * math.log2(n) + 3) for n in (4, 16, 64, 256, 1024)]
    slope, err = fit_log_slope(rows)
    assert slope == pytest.approx(0.5) and err == pytest.approx(0, abs=1e-12)


def test_fit_log_slope_skips_and_guards():
    rows = [row(4, 1.0), row(16, None), row(64, 2.0)]
    with pytest.raises(DomainError):
        fit_log_slope(rows)


def test_chi_square_counts_off_support():
    stat, p, dof, off = chi_square({0: 50, 1: 50, 2: 3}, {0: F(1, 2), 1: F(1, 2)}, 103)
    assert off == 3 and dof == 1


@pytest.mark.parametrize("scheme", ["bbrs", "pfr", "grs"])
def test_verify_passes_on_typewriter(scheme):
    rep = verify_distribution(scheme, typewriter(4, 2), 1, 4000, SEED)
    assert rep.passed and rep.off_support == 0


def test_verify_mixed_input():
    rep = verify_distribution("bbrs", bec(F(1, 2)), None, 4000, SEED)
    assert rep.passed


def test_verify_unknown_scheme():
    with pytest.raises(DomainError):
        verify_distribution("nope", bec(F(1, 2)), 0, 10, SEED)


def test_grs_rate_below_bound():
    ch = random_channel(random.Random(2))
    rep = grs_measure_rate(ch, 1000, SEED)
    assert rep.mean_net <= grs_rate_bound(rep.mutual_information)


def test_analytic_sweep_rows_and_csv():
    rows = redundancy_sweep(bec(F(1, 2)), [4, 16, 64, 256], mode="analytic")
    assert [r.n for r in rows] == [4, 16, 64, 256]
    assert all(r.mean_rate <= r.conservative_bound for r in rows)
    text = sweep_csv(rows, fit_log_slope(rows))
    lines = text.splitlines()
    assert lines[0].startswith("n,I_n,H_gamma_n") and lines[-1].startswith("# slope=")
    assert text == sweep_csv(redundancy_sweep(bec(F(1, 2)), [4, 16, 64, 256], mode="analytic"),
                             fit_log_slope(rows))


def test_sampled_sweep_small():
    rows = redundancy_sweep(bec(F(1, 2)), [1, 2, 4], trials=200, mode="sampled", seed=SEED)
    assert all(not r.skipped for r in rows)
    assert all(r.mean_rate <= r.conservative_bound for r in rows)


def test_sampled_matches_analytic_at_small_n():
    sampled = redundancy_sweep(bec(F(1, 2)), [4], trials=2000, mode="sampled", seed=SEED)[0]
    analytic = redundancy_sweep(bec(F(1, 2)), [4], mode="analytic")[0]
    assert abs(sampled.mean_rate - analytic.mean_rate) < 0.3


def test_sweep_rejects_bad_mode():
    with pytest.raises(DomainError):
        redundancy_sweep(bec(F(1, 2)), [4], mode="other")


def test_skipped_rows_marked_in_csv():
    text = sweep_csv([row(4, None)])
    assert "skipped" in text.splitlines()[1]
