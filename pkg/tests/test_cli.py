import json
import subprocess
import sys

import pytest

from scgrowth.cli import RunConfig, _resolve, build_parser, parse, run


def _run(argv, capsys):
    rc = run(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_oracle(capsys):
    rc, out, _ = _run(["oracle", "--l", "3", "--r", "6", "--n", "4", "--W", "2"], capsys)
    assert rc == 0 and out == "226/77\n"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["oracle", "--l", "3", "--r", "6", "--n", "4"],
        ["oracle", "--l", "3", "--r", "6", "--n", "4", "--W", "9"],
        ["oracle", "--l", "3", "--r", "7", "--n", "4", "--W", "2"],
        ["chain", "--l", "3", "--r", "6", "--L", "x"],
    ],
)
def test_usage_errors(argv, capsys):
    rc, _, err = _run(argv, capsys)
    assert rc == 1 and "usage" in err


def test_solver_failure_exit_code(capsys, monkeypatch):
    import scgrowth.cli as cli
    from scgrowth.errors import NoConvergence

    def boom(ns):
        raise NoConvergence("forced", worst=3e-3)

    monkeypatch.setitem(cli.COMMANDS, "single", boom)
    rc, _, err = _run(["single", "--l", "3", "--r", "6"], capsys)
    assert rc == 2 and "NoConvergence" in err and "0.003" in err


def test_single_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(["single", "--l", "3", "--r", "6", "--step", "0.05", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,h,G"
    assert lines[1].split(",")[0] == "0"
    cfg = RunConfig.from_json((tmp_path / "s.csv.config.json").read_text(encoding="utf-8"))
    assert cfg.command == "single" and cfg.params["step"] == 0.05
    assert cfg.schema_version == 1


def test_config_round_trip(tmp_path, capsys):
    argv = ["popdyn", "--l", "3", "--r", "6", "--w", "2", "--L", "3", "--pop", "300", "--h", "0.2", "--h", "0.3", "--seed", "5"]
    cfg = _resolve(parse(argv))
    again = _resolve(parse(cfg.argv()))
    assert again == cfg
    assert RunConfig.from_json(cfg.to_json()) == cfg


def test_config_rerun_is_identical(tmp_path, capsys):
    out = tmp_path / "p.csv"
    argv = ["popdyn", "--l", "3", "--r", "6", "--w", "2", "--L", "3", "--pop", "500", "--h", "0.2", "--h", "0.35", "--out", str(out)]
    assert run(argv) == 0
    first = out.read_bytes()
    assert run(["--config", str(tmp_path / "p.csv.config.json")]) == 0
    assert out.read_bytes() == first
    assert first.startswith(b"x,h,G\n") and first.endswith(b"\n")


def test_single_thresholds(tmp_path, capsys):
    rc, out, _ = _run(["single-thresholds", "--l", "3", "--r", "6"], capsys)
    rep = json.loads(out)
    assert rc == 0 and rep["schema_version"] == 1
    assert abs(rep["h_c"] - 0.446) < 2e-3 and abs(rep["h_it"] - 0.543) < 2e-3


def test_cw_and_hull(tmp_path, capsys):
    csv = tmp_path / "cw.csv"
    assert run(["cw", "--J", "2", "--step", "0.01", "--out", str(csv)]) == 0
    assert csv.read_text(encoding="utf-8").startswith("m,h,Phi\n")
    rc, out, _ = _run(["hull", "--csv", str(csv), "--lower", "--anchor=-1,-1", "--anchor=1,-1"], capsys)
    rep = json.loads(out)
    assert rc == 0 and rep["kind"] == "convex" and rep["schema_version"] == 1
    assert abs(rep["maxwell_level"]) < 1e-9


def test_cw_chain_small(capsys):
    rc, out, _ = _run(["cw", "--J", "2", "--L", "4", "--w", "2", "--pin", "antisymmetric", "--step", "0.1"], capsys)
    assert rc == 0 and out.count("\n") == 20


def test_chain_small(capsys):
    rc, out, _ = _run(["chain", "--l", "3", "--r", "6", "--L", "2", "--step", "0.1", "--max-omega", "0.9"], capsys)
    rows = out.splitlines()
    assert rc == 0 and rows[0] == "x,h,G" and len(rows) == 11


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "scgrowth", "oracle", "--l", "3", "--r", "6", "--n", "4", "--W", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "226/77\n"


def test_parser_lists_all_commands():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == {"single", "single-thresholds", "chain", "popdyn", "popdyn-threshold", "oracle", "cw", "hull", "table1"}
