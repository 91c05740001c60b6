"""Command line interface.

Exit codes: 0 when every check passes, 1 on an assertion failure, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channel import make_channel, mutual_information, singular_g
from .coder import (
    conservative_bound,
    expected_rate_analytic,
    grs_baseline,
    measure_rate,
    theorem1_bound,
)
from .exceptions import BBRSError, BudgetExceeded, GammaMismatch, InvariantViolation, ModelError
from .gamma import GammaModel, QuantizerSpec, verify_m_bound
from .hamming import run_demo
from .harness import (
    fit_log_slope,
    grs_measure_rate,
    grs_rate_bound,
    redundancy_sweep,
    sweep_csv,
    verify_all_inputs,
    verify_distribution,
)
from .numerics import as_rational, format_rational
from .pfr import appendixb_bound, pfr_measure_rate
from .randomness import SharedSeed

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_CHANNEL = {"type": "bec", "epsilon": "1/2"}
DEFAULT_NS = {"analytic": "4,16,64,256,1024,4096", "sampled": "1,2,4,8,16"}


class ConfigError(Exception):
    pass


def parse_seed(text: str | None) -> SharedSeed:
    if text is None:
        return SharedSeed.from_int(0)
    text = text.strip()
    if len(text) == 64:
        return SharedSeed.from_hex(text)
    try:
        return SharedSeed.from_int(int(text, 0))
    except ValueError:
        raise ConfigError(f"seed must be 64 hex characters or an integer, got {text!r}") from None


def load_config(path: str | None) -> dict:
    """Run config: either a bare channel config or ``{"channel": ..., ...}``."""
    if path is None:
        return {"channel": DEFAULT_CHANNEL}
    text = path if path.lstrip().startswith("{") else None
    try:
        raw = json.loads(text if text is not None else Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return {"channel": raw} if "type" in raw else raw


class Run:
    """Resolved options: flags override config entries."""

    def __init__(self, args):
        cfg = load_config(getattr(args, "config", None))
        self.cfg = cfg
        self.channel = make_channel(cfg.get("channel", DEFAULT_CHANNEL))
        delta = getattr(args, "delta", None) or cfg.get("delta", "1")
        self.delta = as_rational(str(delta))
        self.spec = QuantizerSpec(self.delta)
        seed = getattr(args, "seed", None) or cfg.get("seed")
        self.seed = parse_seed(None if seed is None else str(seed))
        trials = getattr(args, "trials", None)
        self.trials = int(cfg.get("trials", 2000) if trials is None else trials)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        self.mode = getattr(args, "mode", None) or cfg.get("mode", "sampled")
        self.as_json = getattr(args, "json", False)
        self.out = getattr(args, "out", None)
        self.x = cfg.get("x")

    def model(self) -> GammaModel:
        return GammaModel(self.channel, self.spec)

    def input_index(self, symbol):
        if symbol is None:
            return None
        for i, s in enumerate(self.channel.x_alphabet):
            if s == symbol or str(s) == str(symbol):
                return i
        raise ConfigError(f"input {symbol!r} not in the channel's input alphabet")

    def emit(self, payload, text: str):
        out = json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n" if self.as_json else text
        if self.out:
            Path(self.out).write_text(out)
        else:
            sys.stdout.write(out)


def _line(name: str, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n"


# commands ---------------------------------------------------------------------------


def cmd_channel_info(run: Run, args) -> int:
    ch = run.channel
    verdict = singular_g(ch)
    mi = mutual_information(ch)
    info = {
        "name": ch.name, "nx": ch.nx, "ny": ch.ny, "mutual_information": mi,
        "singular": bool(verdict), "baseline_I": mi, "baseline_grs": grs_baseline(mi),
    }
    if verdict:
        model = run.model()
        info.update({
            "g": {str(y): format_rational(v) for y, v in verdict.as_dict().items()},
            "delta": format_rational(run.delta),
            "levels": [format_rational(model.gamma_value(k)) for k in model.levels],
            "p_gamma": [format_rational(model.p_gamma[k]) for k in model.levels],
            "h_gamma": model.h_gamma,
            "theorem1_bound": theorem1_bound(model),
            "conservative_bound": conservative_bound(model),
            "appendixb_bound": appendixb_bound(model),
        })
    else:
        info["violations"] = verdict.violations
    text = "".join(f"{k}: {v}\n" for k, v in info.items())
    run.emit(info, text)
    return EXIT_OK


def cmd_verify(run: Run, args) -> int:
    x = run.input_index(args.x if args.x is not None else run.x)
    if x is None and not args.mixed:
        reports = verify_all_inputs(args.scheme, run.channel, run.trials, run.seed, run.delta)
    else:
        reports = [verify_distribution(args.scheme, run.channel, x, run.trials, run.seed, run.delta)]
    ok = all(r.passed for r in reports)
    text = "".join(
        _line(f"{r.scheme} x={r.x!r}", r.passed, f"chi2={r.statistic:.3f} dof={r.dof} p={r.p_value:.4g} off_support={r.off_support}")
        for r in reports
    )
    run.emit({"passed": ok, "reports": [r.as_dict() for r in reports]}, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_rate(run: Run, args) -> int:
    model = run.model()
    x = run.input_index(args.x if args.x is not None else run.x)
    if run.mode == "analytic":
        a = expected_rate_analytic(model)
        ok = a.total <= a.conservative_bound + 1
        payload = {**a.as_dict(), "delta": format_rational(run.delta), "mode": "analytic", "passed": ok}
        text = _line("rate", ok, f"expected={a.total:.4f} thm1={a.theorem1_bound:.4f} conservative={a.conservative_bound:.4f}")
    else:
        trace = open(args.dump_trace, "w") if args.dump_trace else None
        try:
            r = measure_rate(model, x, run.trials, run.seed, trace)
        finally:
            if trace:
                trace.close()
        ok = r.mean_net <= r.conservative_bound + 1
        payload = {**r.as_dict(), "mode": "sampled", "passed": ok}
        text = _line(
            "rate", ok,
            f"mean={r.mean_net:.4f}±{r.stderr:.4f} popped_stage2={r.mean_popped_stage2:.4f} "
            f"K={r.mean_pushed_K:.4f} N={r.mean_pushed_N:.4f} thm1={r.theorem1_bound:.4f} "
            f"conservative={r.conservative_bound:.4f} I={r.mutual_information:.4f} baseline={r.baseline:.4f}",
        )
    run.emit(payload, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(run: Run, args) -> int:
    ns_text = args.ns or run.cfg.get("ns") or DEFAULT_NS.get(run.mode, DEFAULT_NS["sampled"])
    ns = [int(n) for n in (ns_text.split(",") if isinstance(ns_text, str) else ns_text)]
    rows = redundancy_sweep(run.channel, ns, run.delta, run.trials, run.mode, run.seed)
    try:
        slope = fit_log_slope(rows)
    except BBRSError:
        slope = None
    ok = all(r.skipped or r.mean_rate <= r.conservative_bound for r in rows)
    if run.as_json:
        payload = {"rows": [r.as_dict() for r in rows], "passed": ok}
        if slope:
            payload.update(slope=slope[0], stderr=slope[1])
        run.emit(payload, "")
    else:
        csv_text = sweep_csv(rows, slope)
        if run.out:
            Path(run.out).write_text(csv_text)
        else:
            sys.stdout.write(csv_text)
    if not ok:
        sys.stderr.write("FAIL sweep: a row exceeds its conservative bound\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_grs_rate(run: Run, args) -> int:
    r = grs_measure_rate(run.channel, run.trials, run.seed)
    bound = grs_rate_bound(r.mutual_information)
    ok = r.mean_net <= bound
    text = _line("grs-rate", ok, f"mean={r.mean_net:.4f}±{r.stderr:.4f} bound={bound:.4f} I={r.mutual_information:.4f}")
    run.emit({**r.as_dict(), "passed": ok}, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_pfr_rate(run: Run, args) -> int:
    model = run.model()
    x = run.input_index(args.x if args.x is not None else run.x)
    r = pfr_measure_rate(model, x, run.trials, run.seed)
    bound = r.extra["appendixb_bound"]
    ok = r.mean_net <= bound + 1
    text = _line("pfr-rate", ok, f"mean={r.mean_net:.4f}±{r.stderr:.4f} bound={bound:.4f} baseline={r.baseline:.4f}")
    run.emit({**r.as_dict(), "passed": ok}, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_bounds(run: Run, args) -> int:
    report = verify_m_bound(run.model())
    payload = {
        "checked": report.checked, "violations": report.violations,
        "max_ratio_over_bound": format_rational(report.max_ratio_over_bound), "tightest": report.as_json(),
    }
    text = _line("check-bounds", report.ok, f"{report.checked} triples, {report.violations} violations, "
                 f"max ratio/bound={float(report.max_ratio_over_bound):.4f}")
    text += "".join(json.dumps(t, default=str) + "\n" for t in report.tightest)
    run.emit(payload, text)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_demo_hamming(run: Run, args) -> int:
    res = run_demo(args.symbols, run.seed)
    ok = res.recovered and res.restored and res.total_bits == 4 * res.symbols
    lines = [f"symbol {i}: {b} bits\n" for i, b in enumerate(res.per_symbol_bits)] if args.verbose else []
    lines.append(_line("demo-hamming", ok, f"{res.symbols} symbols, total {res.total_bits} bits, "
                       f"{res.total_bits / res.symbols:.4f} bits/symbol, recovered={res.recovered}, restored={res.restored}"))
    run.emit({**res.as_dict(), "per_symbol_bits": res.per_symbol_bits, "passed": ok}, "".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "channel-info": cmd_channel_info,
    "verify": cmd_verify,
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "grs-rate": cmd_grs_rate,
    "pfr-rate": cmd_pfr_rate,
    "check-bounds": cmd_check_bounds,
    "demo-hamming": cmd_demo_hamming,
}


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON config file or inline JSON object")
    p.add_argument("--seed", help="64 hex characters, or an integer")
    p.add_argument("--delta", help="quantiser step p/q")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--mode", choices=("sampled", "analytic"))
    p.add_argument("--json", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="bbrs", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    cmds = {name: sub.add_parser(name, parents=[common]) for name in COMMANDS}
    for name in ("verify", "rate", "pfr-rate"):
        cmds[name].add_argument("--x", default=None, help="input symbol (default: all inputs or P_X)")
    cmds["verify"].add_argument("--scheme", choices=("bbrs", "grs", "pfr"), default="bbrs")
    cmds["verify"].add_argument("--mixed", action="store_true", help="draw x from P_X and test against P_Y")
    cmds["rate"].add_argument("--dump-trace", default=None, help="write per-trial JSON lines")
    cmds["sweep"].add_argument("--ns", default=None, help="comma-separated n values")
    cmds["demo-hamming"].add_argument("--symbols", type=int, default=1000)
    cmds["demo-hamming"].add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(args)
        return COMMANDS[args.command](run, args)
    except (ConfigError, ModelError, ValueError, KeyError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (GammaMismatch, InvariantViolation, BudgetExceeded) as exc:
        sys.stderr.write(f"FAIL: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
