"""Command-line interface.

Subcommands cover single-dataset analysis (``analyze``), sample generation
(``simulate``), the Monte Carlo experiment families (``table``, ``surface``,
``power``, ``forecast``, ``weakexo``), and the simulated fixed-bandwidth
critical value (``critval``).

Configuration precedence is built-in defaults, then an optional flat
key=value file given with --config, then explicit flags. All randomness
flows from --seed; omitting it uses the fixed documented default, so every
invocation is reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np
from scipy.stats import t as student_t

from .core import Sample, ols_fit, ols_t_stat
from .dgp import DgpKind, DgpSpec, ShockStream, dump_sample, simulate
from .dynreg import default_p_max, dynreg_t_test, select_order
from .errors import DynhacError, InvalidFlagValue, ParseError, RankDeficient
from .experiments import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    ExperimentConfig,
    run_efficiency,
    run_forecast,
    run_power,
    run_size,
    run_surface,
    run_weak_exo,
    surface_config,
)
from .hac import (
    BandwidthRule,
    fixed_b_critical_value,
    hac_t_test,
    lrv_estimate,
)

_METHOD_ALIASES = {
    "ols": "OLS",
    "nw": "NW",
    "nw-a": "NW_A",
    "nw_a": "NW_A",
    "nw-llsw": "NW_LLSW",
    "nw_llsw": "NW_LLSW",
    "nw-kv": "NW_KV",
    "nw_kv": "NW_KV",
    "m-llsw": "M_LLSW",
    "m_llsw": "M_LLSW",
    "dynreg": "DynReg",
}

_DGP_ALIASES = {"ar": DgpKind.AR_AR, "ma": DgpKind.AR_MA, "weakexo": DgpKind.WEAK_EXO}


def _parse_method(value: str) -> str:
    try:
        return _METHOD_ALIASES[value.lower()]
    except KeyError:
        raise InvalidFlagValue(
            f"unknown method {value!r}; choose from {sorted(_METHOD_ALIASES)}"
        ) from None


def _parse_dgp(value: str) -> DgpKind:
    try:
        return _DGP_ALIASES[value.lower()]
    except KeyError:
        raise InvalidFlagValue(
            f"unknown dgp {value!r}; choose from {sorted(_DGP_ALIASES)}"
        ) from None


def _parse_float_list(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(",") if v != "")
    except ValueError:
        raise InvalidFlagValue(f"not a comma-separated float list: {value!r}") from None


def _parse_int_list(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in value.split(",") if v != "")
    except ValueError:
        raise InvalidFlagValue(f"not a comma-separated int list: {value!r}") from None


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value file; blank lines and #-comments ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", line=lineno)
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def read_series_csv(path: str) -> Sample:
    """Read a CSV with a y column and x (or x1..xk) columns into a Sample."""
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        names = [h.strip() for h in header]
        if "y" not in names:
            raise ParseError(f"no 'y' column in header {names}", line=1)
        if "x" in names:
            x_cols = ["x"]
        else:
            x_cols = sorted(
                (n for n in names if n.startswith("x") and n[1:].isdigit()),
                key=lambda n: int(n[1:]),
            )
        if not x_cols:
            raise ParseError(f"no regressor columns in header {names}", line=1)
        iy = names.index("y")
        ix = [names.index(c) for c in x_cols]
        ys, xs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                ys.append(float(row[iy]))
                xs.append([float(row[j]) for j in ix])
            except (ValueError, IndexError):
                raise ParseError(f"bad row {row!r}", line=lineno) from None
    if len(ys) < 10:
        raise ParseError(f"need at least 10 rows, got {len(ys)}")
    return Sample(y=np.array(ys), x=np.array(xs))


def _add_experiment_flags(sub, with_dgp=True):
    if with_dgp:
        sub.add_argument("--dgp", default=None, help="process: ar, ma, weakexo (default ar)")
    sub.add_argument("--rho", default=None, help="comma-separated rho grid")
    sub.add_argument("--T", default=None, help="comma-separated sample sizes")
    sub.add_argument("--reps", type=int, default=None,
                     help=f"Monte Carlo replications (default {DEFAULT_REPS})")
    sub.add_argument("--criterion", default=None, help="lag-order criterion: bic or aic (default bic)")
    sub.add_argument("--seed", type=int, default=None,
                     help=f"stream seed (default {DEFAULT_SEED})")
    sub.add_argument("--threads", type=int, default=None, help="worker processes (default 1)")
    sub.add_argument("--rho-x", type=float, default=None,
                     help="fix the AR coefficient of x (default: equal to rho)")
    sub.add_argument("--init", choices=("stationary", "wide"), default=None,
                     help="presample draw scale (default wide)")
    sub.add_argument("--out", default=".", help="output directory (default .)")
    sub.add_argument("--resume", action="store_true",
                     help="skip cells already present in the output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynhac",
        description="Time-series regression inference: HAC and dynamic regression.",
    )
    parser.add_argument("--config", default=None,
                        help="flat key=value config file; flags override it")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("analyze", help="fit one dataset and test H0 on the first coefficient")
    p.add_argument("input", help="CSV with columns y and x (or x1..xk)")
    p.add_argument("--method", default="dynreg",
                   help="ols, nw, nw-a, nw-llsw, nw-kv, m-llsw, dynreg (default dynreg)")
    p.add_argument("--pmax", type=int, default=None,
                   help="max dynamic lag order (default min(T//5, 30))")
    p.add_argument("--criterion", default="bic", help="bic or aic (default bic)")
    p.add_argument("--level", type=float, default=0.05, help="test level (default 0.05)")
    p.add_argument("--null", type=float, default=1.0,
                   help="null value for the first coefficient (default 1.0)")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = subs.add_parser("simulate", help="simulate one sample and dump it as CSV")
    p.add_argument("--dgp", default="ar", help="ar, ma, weakexo (default ar)")
    p.add_argument("--rho", type=float, default=0.9, help="rho (default 0.9)")
    p.add_argument("--rho-x", type=float, default=None,
                   help="AR coefficient of x (default: rho)")
    p.add_argument("--T", type=int, default=200, help="sample size (default 200)")
    p.add_argument("--beta", type=float, default=1.0, help="true beta (default 1.0)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"stream seed (default {DEFAULT_SEED})")
    p.add_argument("--rep", type=int, default=0, help="replication index (default 0)")
    p.add_argument("--extra", type=int, default=0, help="extra observations (default 0)")
    p.add_argument("--init", choices=("stationary", "wide"), default="stationary",
                   help="presample draw scale (default stationary)")
    p.add_argument("--out", default="-", help="output file, - for stdout (default -)")

    p = subs.add_parser("table", help="efficiency and size tables -> efficiency.csv, size.csv")
    _add_experiment_flags(p)

    p = subs.add_parser("surface", help="size-distortion grid -> surface.csv")
    _add_experiment_flags(p)

    p = subs.add_parser("power", help="rejection frequencies over a beta grid -> power.csv")
    _add_experiment_flags(p)
    p.add_argument("--betas", default=None,
                   help="comma-separated true beta grid (default 1.0..1.5 step 0.025)")

    p = subs.add_parser("forecast", help="one-step MSPE comparison -> forecast.csv")
    _add_experiment_flags(p)

    p = subs.add_parser("weakexo", help="weak-exogeneity panel -> weakexo.csv")
    _add_experiment_flags(p, with_dgp=False)

    p = subs.add_parser("critval", help="simulated whole-sample-bandwidth critical value")
    p.add_argument("--level", type=float, default=0.05, help="two-sided level (default 0.05)")
    p.add_argument("--grid", type=int, default=1000, help="grid points (default 1000)")
    p.add_argument("--draws", type=int, default=200000, help="simulated paths (default 200000)")
    p.add_argument("--seed", type=int, default=1821, help="simulation seed (default 1821)")

    return parser


def _merged(args, file_cfg: dict[str, str], key: str, default, parse=None):
    """flag > config file > default."""
    flag_val = getattr(args, key.replace("-", "_"), None)
    if flag_val is not None:
        return flag_val if parse is None or not isinstance(flag_val, str) else parse(flag_val)
    if key in file_cfg:
        raw = file_cfg[key]
        return parse(raw) if parse else raw
    return default


def _experiment_config(args, file_cfg) -> ExperimentConfig:
    dgp = _parse_dgp(str(_merged(args, file_cfg, "dgp", "ar")))
    kwargs = dict(
        dgp=dgp,
        reps=int(_merged(args, file_cfg, "reps", DEFAULT_REPS)),
        criterion=str(_merged(args, file_cfg, "criterion", "BIC")).upper(),
        seed=int(_merged(args, file_cfg, "seed", DEFAULT_SEED)),
        threads=int(_merged(args, file_cfg, "threads", 1)),
    )
    rhos = _merged(args, file_cfg, "rho", None, _parse_float_list)
    if rhos is not None:
        if isinstance(rhos, str):
            rhos = _parse_float_list(rhos)
        kwargs["rhos"] = rhos
    ts = _merged(args, file_cfg, "T", None, _parse_int_list)
    if ts is not None:
        if isinstance(ts, str):
            ts = _parse_int_list(ts)
        kwargs["Ts"] = ts
    rho_x = _merged(args, file_cfg, "rho-x", None)
    if rho_x is not None:
        kwargs["rho_x"] = float(rho_x)
    init = _merged(args, file_cfg, "init", None)
    if init is not None:
        kwargs["init"] = str(init)
    if kwargs["criterion"] not in ("BIC", "AIC"):
        raise InvalidFlagValue(f"criterion must be bic or aic, got {kwargs['criterion']}")
    return ExperimentConfig(**kwargs)


def _cmd_analyze(args, file_cfg) -> int:
    sample = read_series_csv(args.input)
    method = _parse_method(args.method)
    level = float(args.level)
    null = float(args.null)
    T = sample.n_obs
    report: dict = {"method": method, "T": T, "null": null, "level": level}

    if method == "DynReg":
        p_max = args.pmax if args.pmax is not None else default_p_max(T)
        fit = select_order(sample, p_max, args.criterion.upper())
        res = dynreg_t_test(fit, null, level)
        report.update(
            p=fit.p,
            p_max=p_max,
            criterion=args.criterion.upper(),
            theta_hat=[float(v) for v in fit.theta_hat],
            beta_hat=float(fit.theta_hat[fit.beta_index()]),
            n_effective=fit.n_effective,
        )
    else:
        fit = ols_fit(sample.x, sample.y)
        report["beta_hat"] = float(fit.beta_hat[0])
        if method == "OLS":
            stat = ols_t_stat(fit, 0, null)
            cv = float(student_t.ppf(1.0 - level / 2.0, T - sample.n_regressors))
            report.update(std_error=_ols_se(fit))
            res = _simple_result(stat, cv, "OLS", level)
        else:
            rule = BandwidthRule[method]
            lrv = lrv_estimate(fit, sample.x, rule)
            res = hac_t_test(fit, lrv, 0, null, level)
            report.update(
                bandwidth=lrv.bandwidth_used,
                omega_hat=float(lrv.omega_hat[0, 0]),
                std_error=_hac_se(fit, lrv),
            )
    report.update(
        statistic=res.statistic,
        critical_value=res.critical_value,
        reject=bool(res.reject),
    )
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    print(f"method={method}  T={T}  H0: beta={null:g}  level={level:g}")
    if method == "DynReg":
        print(f"selected p={report['p']} by {report['criterion']} (pmax={report['p_max']})")
        theta = ", ".join(f"{v:.6g}" for v in report["theta_hat"])
        print(f"theta_hat=[{theta}]")
        print(f"beta_hat={report['beta_hat']:.6g}")
    else:
        if "bandwidth" in report:
            tag = "nu" if method == "M_LLSW" else "h"
            print(f"{tag}={report['bandwidth']}")
        print(f"beta_hat={report['beta_hat']:.6g}")
        if report.get("std_error") is not None:
            print(f"std_error={report['std_error']:.6g}")
    print(
        f"t={res.statistic:.6g}  critical={res.critical_value:.6g}  "
        f"reject={'yes' if res.reject else 'no'}"
    )
    return 0


def _ols_se(fit) -> float:
    return math.sqrt(fit.sigma2_hat * fit.q_inv_diag(0) / fit.n_obs)


def _hac_se(fit, lrv) -> float:
    qinv_omega = fit.solve_q(lrv.omega_hat)
    mid = fit.solve_q(qinv_omega.T)
    return math.sqrt(mid[0, 0] / fit.n_obs)


def _simple_result(stat, cv, method, level):
    from .hac import TestResult

    return TestResult(
        statistic=stat,
        critical_value=cv,
        reject=abs(stat) > cv,
        method=method,
        nominal_level=level,
    )


def _cmd_simulate(args, file_cfg) -> int:
    spec = DgpSpec(
        kind=_parse_dgp(args.dgp),
        rho=args.rho,
        T=args.T,
        beta=args.beta,
        rho_x=args.rho_x,
        init=args.init,
    )
    sample = simulate(spec, ShockStream(args.seed, args.rep), horizon_extra=args.extra)
    if args.out == "-":
        dump_sample(sample, sys.stdout)
    else:
        dump_sample(sample, args.out)
    return 0


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _cmd_table(args, file_cfg) -> int:
    config = _experiment_config(args, file_cfg)
    eff_path = _out_path(args, "efficiency.csv")
    size_path = _out_path(args, "size.csv")
    if not args.resume:
        _fresh(eff_path), _fresh(size_path)
    run_efficiency(config, out_path=eff_path)
    run_size(config, out_path=size_path)
    print(f"wrote {eff_path} and {size_path}")
    return 0


def _cmd_surface(args, file_cfg) -> int:
    base = _experiment_config(args, file_cfg)
    dense = surface_config(base)
    config = replace(
        dense,
        rhos=base.rhos if (args.rho is not None or "rho" in file_cfg) else dense.rhos,
        Ts=base.Ts if (args.T is not None or "T" in file_cfg) else dense.Ts,
    )
    path = _out_path(args, "surface.csv")
    if not args.resume:
        _fresh(path)
    run_surface(config, out_path=path)
    print(f"wrote {path}")
    return 0


def _cmd_power(args, file_cfg) -> int:
    config = _experiment_config(args, file_cfg)
    betas = _merged(args, file_cfg, "betas", None, _parse_float_list)
    if betas is not None:
        if isinstance(betas, str):
            betas = _parse_float_list(betas)
        config = replace(config, beta_grid=betas)
    path = _out_path(args, "power.csv")
    if not args.resume:
        _fresh(path)
    run_power(config, out_path=path)
    print(f"wrote {path}")
    return 0


def _cmd_forecast(args, file_cfg) -> int:
    config = _experiment_config(args, file_cfg)
    path = _out_path(args, "forecast.csv")
    if not args.resume:
        _fresh(path)
    results = run_forecast(config, out_path=path)
    print(f"wrote {path}")
    failed = [(rho, T) for rho, T, r in results if r.failures]
    if failed:
        print(f"cells with skipped replications: {failed}", file=sys.stderr)
        return 1
    return 0


def _cmd_weakexo(args, file_cfg) -> int:
    config = _experiment_config(args, file_cfg)
    path = _out_path(args, "weakexo.csv")
    if not args.resume:
        _fresh(path)
    run_weak_exo(config, out_path=path)
    print(f"wrote {path}")
    return 0


def _cmd_critval(args, file_cfg) -> int:
    cv = fixed_b_critical_value(args.level, args.grid, args.draws, args.seed)
    print(f"fixed-b critical value (level={args.level:g}): {cv:.5f}")
    return 0


def _fresh(path: str) -> None:
    if os.path.exists(path):
        os.remove(path)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "table": _cmd_table,
    "surface": _cmd_surface,
    "power": _cmd_power,
    "forecast": _cmd_forecast,
    "weakexo": _cmd_weakexo,
    "critval": _cmd_critval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    file_cfg = read_config_file(args.config) if args.config else {}
    try:
        return _COMMANDS[args.command](args, file_cfg)
    except RankDeficient as exc:
        print(
            f"error: {exc}\nthe design matrix has (numerically) collinear "
            "columns; drop redundant regressors or reduce the lag order",
            file=sys.stderr,
        )
        return 2
    except DynhacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
