#!/usr/bin/env python3
"""
Tests for the command-line front end: argument grammars, output files
and exit codes.

Usage:
    pytest test_cli.py -v
"""

import json
import math

import numpy as np
import pytest

import cli
from errors import InvalidArgumentError

FOCK1_WLN = math.log2(4 * math.exp(-0.5) - 1)


def test_parse_range_forms():
    assert np.allclose(cli.parse_range("0:1:5"), [0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(cli.parse_range("0.01:1:3", logspace=True), [0.01, 0.1, 1.0])
    assert np.allclose(cli.parse_range("0.3,0.5"), [0.3, 0.5])
    assert np.allclose(cli.parse_range("2"), [2.0])


@pytest.mark.parametrize("text,logspace", [("a:b:3", False), ("0:1:0", False), ("0:1:4", True), (",", False)])
def test_parse_range_rejects(text, logspace):
    with pytest.raises(InvalidArgumentError):
        cli.parse_range(text, logspace)


def test_parse_int_range():
    assert cli.parse_int_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_int_range("1,3") == [1, 3]
    with pytest.raises(InvalidArgumentError):
        cli.parse_int_range("x..3")


def test_wln_command_prints_json(capsys):
    assert cli.main(["--output", "-", "wln", "--state", "fock:1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["state"] == "fock:1"
    assert payload["wln"] == pytest.approx(FOCK1_WLN, abs=1e-4)


def test_delta_command_reports_closed_form(capsys):
    assert cli.main(["delta", "--state", "cubic:0.1,0.5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["difference"]) < 1e-3


def test_bad_state_exits_with_error(capsys):
    assert cli.main(["wln", "--state", "banana:1"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "fock:n" in err


def test_sweep_csv_has_provenance_and_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        assert cli.main(["--seed", "3", "--output", str(path), "sweep", "fock", "--n", "1", "--c", "0.5,1.0"]) == 0
    text = first.read_text()
    assert text == second.read_text()
    lines = text.splitlines()
    header = [line for line in lines if line.startswith("# ")]
    assert "# seed=3" in header
    assert "# command=sweep_fock" in header
    table = [line for line in lines if not line.startswith("#")]
    assert table[0] == "n,T,c,p,wln_out,eta,epsilon,ratio"
    assert len(table) == 3


def test_json_format_for_tables(tmp_path):
    path = tmp_path / "lossy.json"
    assert cli.main(["--format", "json", "--output", str(path), "sweep", "lossy", "--beta", "0.9", "--c", "0.5"]) == 0
    payload = json.loads(path.read_text())
    assert payload["provenance"]["command"] == "sweep_lossy"
    (row,) = payload["rows"]
    assert row["beta"] == 0.9
    assert row["eta"] <= 1.0


def test_convex_roof_command(tmp_path, capsys):
    path = tmp_path / "gaps.csv"
    code = cli.main(["--output", str(path), "check", "convex-roof", "--N", "2", "--trials", "2", "--detectors", "het"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"]
    assert "het:N=2" in summary["summary"]
    assert "# rng=numpy.random.Philox" in path.read_text()


def test_run_config_applies_tolerance_flags():
    args = cli.build_parser().parse_args(["--tol", "1e-5", "--leakage", "1e-9", "--dim", "30", "wln", "--state", "fock:1"])
    cfg = cli._run_config(args)
    assert cfg.tolerances.integration_tol == 1e-5
    assert cfg.tolerances.truncation_leakage == 1e-9
    assert cfg.provenance()["dim"] == 30


@pytest.mark.parametrize("argv", [
    ["wln", "--state", "fock:1", "--dim", "30", "--tol", "1e-6"],
    ["--dim", "30", "wln", "--state", "fock:1", "--tol", "1e-6"],
    ["--dim", "30", "--tol", "1e-6", "wln", "--state", "fock:1"],
])
def test_shared_options_work_on_either_side_of_the_subcommand(argv):
    args = cli.build_parser().parse_args(argv)
    cfg = cli._run_config(args)
    assert cfg.dim == 30
    assert cfg.tolerances.integration_tol == 1e-6


def test_global_value_survives_when_subcommand_omits_it():
    args = cli.build_parser().parse_args(["--seed", "5", "--workers", "3", "check", "monotones"])
    assert args.seed == 5
    assert args.workers == 3
    assert args.output is None and args.fmt == "csv"


def test_options_after_nested_subcommand():
    args = cli.build_parser().parse_args(["check", "convex-roof", "--N", "3", "--trials", "2", "--seed", "7"])
    assert (args.N, args.trials, args.seed) == ("3", 2, 7)
    args = cli.build_parser().parse_args(["sweep", "fock", "--n", "1", "--c", "0.5", "--format", "json", "-o", "-"])
    assert args.fmt == "json" and args.output == "-"


def test_wln_command_line_with_trailing_options(capsys):
    assert cli.main(["wln", "--state", "fock:1", "--dim", "30", "--tol", "1e-6"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["dim_used"] == [30]
    assert payload["wln"] == pytest.approx(FOCK1_WLN, abs=1e-5)


def test_convex_roof_command_line_with_trailing_seed(tmp_path, capsys):
    path = tmp_path / "gaps.csv"
    assert cli.main(["check", "convex-roof", "--N", "3", "--trials", "2", "--seed", "7", "--output", str(path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"]
    assert set(summary["summary"]) == {"het:N=3", "hom:N=3"}
    assert "# seed=7" in path.read_text().splitlines()


@pytest.mark.parametrize("family,options", [
    ("fock", ["--n", "1,2", "--c", "0.5,1.0"]),
    ("cubic", ["--u", "0.1:0.3:2"]),
])
def test_parallel_sweep_matches_serial(tmp_path, family, options):
    serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
    assert cli.main(["sweep", family, *options, "--output", str(serial)]) == 0
    assert cli.main(["sweep", family, *options, "--workers", "2", "--output", str(pooled)]) == 0
    assert serial.read_text() == pooled.read_text()


def test_parallel_frontier_keeps_family_order(tmp_path):
    path = tmp_path / "frontier.csv"
    assert cli.main(["frontier", "--families", "fock,addsub", "--nbar", "1,2", "--workers", "2",
                     "--output", str(path)]) == 0
    table = [line.split(",") for line in path.read_text().splitlines() if not line.startswith("#")]
    assert [row[1] for row in table[1:]] == ["fock", "fock", "addsub", "addsub"]
