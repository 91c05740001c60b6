import json

import pytest

from bbrs.cli import main

TW = '{"type": "typewriter", "m": 4, "w": 2}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_channel_info(capsys):
    code, out, _ = run(capsys, "channel-info", "--json")
    assert code == 0
    assert json.loads(out)


def test_channel_info_non_singular(capsys):
    cfg = '{"type": "table", "px": ["1/2", "1/2"], "pygx": [["1/2", "1/2"], ["1/4", "3/4"]]}'
    code, out, _ = run(capsys, "channel-info", "--config", cfg)
    assert code in (0, 1) and out


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--config", TW, "--trials", "2000", "--x", "1")
    assert code == 0 and out.startswith("PASS")


def test_rate_sampled_and_analytic(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "rate", "--trials", "200", "--dump-trace", str(trace))
    assert code == 0 and "PASS rate" in out
    assert len(trace.read_text().splitlines()) == 200
    code, out, _ = run(capsys, "rate", "--mode", "analytic", "--json")
    assert code == 0 and json.loads(out)["passed"]


def test_sweep_analytic(capsys, tmp_path):
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--mode", "analytic", "--ns", "4,16,64", "--out", str(out_file))
    assert code == 0
    assert out_file.read_text().splitlines()[-1].startswith("# slope=")


def test_grs_and_pfr_rate(capsys):
    assert run(capsys, "grs-rate", "--trials", "200")[0] == 0
    assert run(capsys, "pfr-rate", "--trials", "200", "--config", TW)[0] == 0


def test_check_bounds(capsys):
    code, out, _ = run(capsys, "check-bounds", "--delta", "1/2", "--json")
    assert code == 0 and json.loads(out)["violations"] == 0


def test_demo_hamming(capsys):
    code, out, _ = run(capsys, "demo-hamming", "--symbols", "50")
    assert code == 0 and "total 200 bits" in out


@pytest.mark.parametrize("argv", [
    ["rate", "--config", '{"type": "nope"}'],
    ["rate", "--seed", "not-a-seed"],
    ["rate", "--config", "/nonexistent/config.json"],
    ["rate", "--trials", "0"],
    ["verify", "--x", "9"],
])
def test_config_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_flags_after_subcommand_and_before(capsys):
    a = run(capsys, "--seed", "7", "rate", "--trials", "50", "--json")
    b = run(capsys, "rate", "--seed", "7", "--trials", "50", "--json")
    assert a[0] == b[0] == 0 and json.loads(a[1]) == json.loads(b[1])
