"""Command-line interface: analysis output, determinism, config precedence."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dynhac.cli import build_parser, main, read_config_file, read_series_csv
from dynhac.core import Sample
from dynhac.dgp import DgpKind, DgpSpec, ShockStream, dump_sample, simulate
from dynhac.dynreg import default_p_max, select_order
from dynhac.errors import ParseError


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_xy(path, y, x):
    with open(path, "w") as fh:
        fh.write("y,x\n")
        for yi, xi in zip(y, x):
            fh.write(f"{yi:.17g},{xi:.17g}\n")


# ------------------------------------------------------------------ analyze


def test_analyze_exact_relationship(tmp_path, capsys):
    x = np.linspace(1.0, 4.0, 24)
    path = str(tmp_path / "d.csv")
    write_xy(path, x, x)
    for method in ("ols", "nw", "dynreg", "m-llsw"):
        code, out, _ = run_cli(
            ["analyze", path, "--method", method, "--null", "1"], capsys
        )
        assert code == 0
        assert "beta_hat=1" in out
        assert "reject=no" in out


def test_analyze_prints_bandwidth_line(tmp_path, capsys):
    sim = simulate(DgpSpec(kind=DgpKind.AR_AR, rho=0.5, T=200), ShockStream(1, 0))
    path = str(tmp_path / "d.csv")
    dump_sample(sim, path)
    code, out, _ = run_cli(["analyze", path, "--method", "nw"], capsys)
    assert code == 0
    assert "h=5" in out


def test_analyze_dynreg_round_trips_simulated_dump(tmp_path, capsys):
    spec = DgpSpec(kind=DgpKind.AR_AR, rho=0.9, T=150)
    sim = simulate(spec, ShockStream(42, 3))
    path = str(tmp_path / "d.csv")
    dump_sample(sim, path)
    code, out, _ = run_cli(["analyze", path, "--method", "dynreg", "--json"], capsys)
    assert code == 0
    report = json.loads(out)
    direct = select_order(
        Sample(y=sim.y, x=sim.x), default_p_max(150), "BIC"
    )
    assert report["p"] == direct.p
    assert report["theta_hat"] == [float(v) for v in direct.theta_hat]


def test_analyze_json_fields(tmp_path, capsys):
    sim = simulate(DgpSpec(kind=DgpKind.AR_AR, rho=0.3, T=80), ShockStream(2, 0))
    path = str(tmp_path / "d.csv")
    dump_sample(sim, path)
    code, out, _ = run_cli(
        ["analyze", path, "--method", "nw-kv", "--json", "--level", "0.1"], capsys
    )
    rep = json.loads(out)
    assert rep["method"] == "NW_KV"
    assert rep["bandwidth"] == 80
    assert rep["level"] == 0.1
    assert isinstance(rep["reject"], bool)


def test_analyze_rank_deficient_advice(tmp_path, capsys):
    path = str(tmp_path / "d.csv")
    with open(path, "w") as fh:
        fh.write("y,x1,x2\n")
        for i in range(20):
            fh.write(f"{i},{i},{2*i}\n")
    code, _, err = run_cli(["analyze", path, "--method", "ols"], capsys)
    assert code == 2
    assert "collinear" in err


def test_analyze_parse_errors(tmp_path, capsys):
    path = str(tmp_path / "bad.csv")
    with open(path, "w") as fh:
        fh.write("y,x\n1.0,2.0\nnot,a_number\n")
    code, _, err = run_cli(["analyze", path], capsys)
    assert code == 2
    assert "line 3" in err

    short = str(tmp_path / "short.csv")
    write_xy(short, np.arange(5.0), np.arange(5.0))
    code, _, err = run_cli(["analyze", short], capsys)
    assert code == 2
    assert "10 rows" in err


def test_read_series_csv_x_columns(tmp_path):
    path = str(tmp_path / "multi.csv")
    with open(path, "w") as fh:
        fh.write("t,y,x1,x2\n")
        rng = np.random.default_rng(0)
        for i in range(15):
            fh.write(f"{i},{rng.normal()},{rng.normal()},{rng.normal()}\n")
    sample = read_series_csv(path)
    assert sample.x.shape == (15, 2)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ParseError):
        read_series_csv(str(empty))


# ----------------------------------------------------------------- simulate


def test_simulate_writes_csv(tmp_path, capsys):
    out_path = str(tmp_path / "s.csv")
    code, _, _ = run_cli(
        ["simulate", "--rho", "0.9", "--T", "25", "--seed", "5", "--out", out_path],
        capsys,
    )
    assert code == 0
    lines = open(out_path).read().splitlines()
    assert lines[0] == "t,y,x,u"
    assert len(lines) == 26


def test_simulate_stdout_deterministic(capsys):
    args = ["simulate", "--rho", "0.5", "--T", "10", "--seed", "3"]
    _, out1, _ = run_cli(args, capsys)
    _, out2, _ = run_cli(args, capsys)
    assert out1 == out2


# -------------------------------------------------------------- experiments


def test_table_byte_identical_runs(tmp_path, capsys):
    base = ["table", "--dgp", "ar", "--rho", "0.3", "--T", "50",
            "--reps", "100", "--seed", "7"]
    d1, d2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert run_cli(base + ["--out", d1], capsys)[0] == 0
    assert run_cli(base + ["--out", d2], capsys)[0] == 0
    for name in ("efficiency.csv", "size.csv"):
        a = open(os.path.join(d1, name), "rb").read()
        b = open(os.path.join(d2, name), "rb").read()
        assert a == b
        assert len(a) > 0


def test_power_and_forecast_outputs(tmp_path, capsys):
    out = str(tmp_path / "o")
    code, _, _ = run_cli(
        ["power", "--rho", "0.3", "--T", "50", "--reps", "100", "--seed", "7",
         "--betas", "1.0,1.3", "--out", out], capsys)
    assert code == 0
    lines = open(os.path.join(out, "power.csv")).read().splitlines()
    assert lines[0] == "dgp,criterion,rho,T,method,beta_true,rejection"
    assert len(lines) == 1 + 2 * 7

    code, _, _ = run_cli(
        ["forecast", "--rho", "0.3", "--T", "60", "--reps", "100", "--seed", "7",
         "--out", out], capsys)
    assert code == 0
    lines = open(os.path.join(out, "forecast.csv")).read().splitlines()
    assert lines[0] == "T,rho,mspe_ols,mspe_dynreg,re_pred,analytic_re_pred,reps"
    assert len(lines) == 2


def test_weakexo_and_surface_outputs(tmp_path, capsys):
    out = str(tmp_path / "o")
    code, _, _ = run_cli(
        ["weakexo", "--T", "50", "--reps", "100", "--seed", "7", "--out", out],
        capsys)
    assert code == 0
    assert os.path.exists(os.path.join(out, "weakexo.csv"))

    code, _, _ = run_cli(
        ["surface", "--rho", "0.0,0.5", "--T", "50", "--reps", "100",
         "--seed", "7", "--out", out], capsys)
    assert code == 0
    lines = open(os.path.join(out, "surface.csv")).read().splitlines()
    assert lines[0] == "rho,T,method,size_distortion"
    assert len(lines) == 1 + 2 * 7


def test_resume_flag_appends(tmp_path, capsys):
    out = str(tmp_path / "o")
    args = ["table", "--rho", "0.3", "--T", "50", "--reps", "100", "--seed", "7",
            "--out", out]
    run_cli(args, capsys)
    first = open(os.path.join(out, "size.csv")).read()
    run_cli(["table", "--rho", "0.3,0.5", "--T", "50", "--reps", "100",
             "--seed", "7", "--out", out, "--resume"], capsys)
    second = open(os.path.join(out, "size.csv")).read()
    assert second.startswith(first)
    assert second.count("\n") == 1 + 14


# ------------------------------------------------------------------ critval


def test_critval_prints_constant(capsys):
    code, out, _ = run_cli(["critval", "--level", "0.05"], capsys)
    assert code == 0
    value = float(out.split(":")[-1])
    assert value > 1.96


# ------------------------------------------------------- config and parsing


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for desk runs\nreps=100\nrho=0.3\nT=50\nseed=9\n")
    out1 = str(tmp_path / "a")
    code, _, _ = run_cli(["--config", str(cfg), "table", "--out", out1], capsys)
    assert code == 0
    text = open(os.path.join(out1, "size.csv")).read()
    assert ",50," in text
    # explicit flag beats the file
    out2 = str(tmp_path / "b")
    run_cli(["--config", str(cfg), "table", "--T", "60", "--out", out2], capsys)
    assert ",60," in open(os.path.join(out2, "size.csv")).read()


def test_config_file_rejects_garbage(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("reps 100\n")
    with pytest.raises(ParseError):
        read_config_file(str(cfg))


def test_unknown_flag_is_error():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["table", "--frobnicate", "1"])
    assert exc.value.code == 2


def test_invalid_flag_values(tmp_path, capsys):
    code, _, err = run_cli(
        ["table", "--dgp", "arma", "--out", str(tmp_path)], capsys
    )
    assert code == 2 and "unknown dgp" in err
    code, _, err = run_cli(
        ["table", "--rho", "0.3;0.5", "--out", str(tmp_path)], capsys
    )
    assert code == 2


def test_help_lists_every_flag():
    parser = build_parser()
    helps = {}
    for name in ("analyze", "table", "power", "critval", "simulate"):
        sub = [a for a in parser._subparsers._group_actions[0].choices.items()
               if a[0] == name][0][1]
        helps[name] = sub.format_help()
    assert "--pmax" in helps["analyze"] and "--null" in helps["analyze"]
    for flag in ("--rho", "--T", "--reps", "--criterion", "--seed", "--threads",
                 "--out", "--init"):
        assert flag in helps["table"]
    assert "--betas" in helps["power"]
    assert "--draws" in helps["critval"]
    assert "default" in helps["table"]


def test_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "dynhac.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "analyze" in proc.stdout
