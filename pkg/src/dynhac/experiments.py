"""Monte Carlo harness: estimation efficiency, test size, power, surfaces.

Each cell of an experiment is a (process, rho, T) combination run for a
fixed number of replications. Within a replication every inference method
sees the same simulated data, and across cells that differ only in rho,
beta, or sample length the underlying shock streams are identical (common
random numbers), so cross-method and cross-cell comparisons are
shock-matched.

All HAC methods share one least-squares point estimate per replication;
they differ only in the standard error. The estimation-statistics block of
a cell is therefore computed once for the static arm and once for the
dynamic-regression arm.

Per-cell results can stream to CSV as they complete; a rerun pointed at the
same file skips cells whose key is already present.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm, t as student_t

from ._parallel import map_replications
from .core import Sample, ols_fit, ols_t_stat
from .dgp import DgpKind, DgpSpec, ShockStream, simulate
from .dynreg import default_p_max, dynreg_t_test, select_order
from .forecasting import MspeResult, analytic_re_pred, mspe_experiment
from .hac import (
    BandwidthRule,
    LrvEstimate,
    bandwidth,
    bartlett_weighted_sum,
    cosine_lrv,
    fixed_b_critical_value,
    hac_t_test,
    score_autocovariances,
)

METHODS = ("OLS", "NW", "NW_A", "NW_LLSW", "NW_KV", "M_LLSW", "DynReg")
_NW_RULES = ("NW", "NW_A", "NW_LLSW", "NW_KV")

DEFAULT_RHOS = (0.0, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99)
DEFAULT_TS = (50, 200, 600, 2500)
SURFACE_RHOS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
SURFACE_TS = (50, 200, 500, 1000, 1500, 2000, 2500)
DEFAULT_BETA_GRID = tuple(round(1.0 + 0.025 * i, 3) for i in range(21))
DEFAULT_SEED = 90210
DEFAULT_REPS = 2000
PAPER_REPS = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs for every experiment family."""

    dgp: DgpKind = DgpKind.AR_AR
    rhos: tuple[float, ...] = DEFAULT_RHOS
    Ts: tuple[int, ...] = DEFAULT_TS
    reps: int = DEFAULT_REPS
    criterion: str = "BIC"
    methods: tuple[str, ...] = METHODS
    beta_grid: tuple[float, ...] = DEFAULT_BETA_GRID
    level: float = 0.05
    seed: int = DEFAULT_SEED
    threads: int = 1
    rho_x: float | None = None
    p_max: int | None = None
    init: str = "wide"

    def __post_init__(self):
        if self.reps < 100:
            raise ValueError("need at least 100 replications")
        for rho in self.rhos:
            if not abs(rho) < 1.0:
                raise ValueError(f"rho {rho} outside (-1, 1)")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")

    def spec(self, rho: float, T: int, beta: float = 1.0) -> DgpSpec:
        # The wide presample start is what the reproduced result tables use.
        return DgpSpec(
            kind=self.dgp, rho=rho, T=T, beta=beta, rho_x=self.rho_x, init=self.init
        )

    def p_max_for(self, T: int) -> int:
        return self.p_max if self.p_max is not None else default_p_max(T)


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregates for one (process, rho, T, method) cell."""

    dgp: str
    criterion: str
    rho: float
    T: int
    method: str
    reps_used: int
    beta_true: float = 1.0
    bias: float | None = None
    variance: float | None = None
    mse: float | None = None
    re_est: float | None = None
    rejection: float | None = None
    mc_se: float | None = None
    lag_median: float | None = None
    lag_mean: float | None = None
    rejection_alt: float | None = None
    beta_alt: float | None = None
    nominal_level: float = 0.05


# ----------------------------------------------------------------------
# Per-replication worker


def _cell_worker(start, stop, spec, criterion, seed, level, betas, p_max, methods, cvs):
    """Replications [start, stop) of one cell for every beta in ``betas``.

    Returns arrays with replication on the last axis: selected lag and both
    point estimates per beta, plus a (method, beta) panel of rejections of
    H0: beta = 1 when ``methods`` is non-empty.
    """
    n = stop - start
    nb = len(betas)
    T = spec.T
    null_value = 1.0
    want_dyn = True
    out = {
        "beta_ols": np.empty((nb, n)),
        "beta_dyn": np.empty((nb, n)),
        "p_sel": np.empty((nb, n), dtype=np.int64),
    }
    if methods:
        out["reject"] = np.zeros((len(methods), nb, n), dtype=bool)
    hac_methods = [m for m in methods if m not in ("OLS", "DynReg")]
    hs = {m: bandwidth(BandwidthRule[m], T) for m in hac_methods}
    max_nw_lag = max(
        (min(hs[m], T - 1) for m in hac_methods if m != "M_LLSW"), default=0
    )

    for i, r in enumerate(range(start, stop)):
        sim = simulate(spec, ShockStream(seed, r))
        x1 = sim.x[:, 0]
        for bi, b in enumerate(betas):
            y = b * x1 + sim.u
            sample = Sample(y=y, x=sim.x, u=sim.u, meta=sim.meta)
            static_fit = ols_fit(sample.x, y)
            out["beta_ols"][bi, i] = static_fit.beta_hat[0]

            dyn = None
            if want_dyn:
                dyn = select_order(sample, p_max, criterion)
                out["beta_dyn"][bi, i] = dyn.theta_hat[dyn.beta_index()]
                out["p_sel"][bi, i] = dyn.p

            if not methods:
                continue
            acov = None
            if max_nw_lag:
                v = x1 * static_fit.residuals
                acov = score_autocovariances(v, max_nw_lag)
            for mi, m in enumerate(methods):
                if m == "OLS":
                    stat = ols_t_stat(static_fit, 0, null_value)
                    rej = abs(stat) > cvs["OLS"]
                elif m == "DynReg":
                    rej = dynreg_t_test(dyn, null_value, level).reject
                elif m == "M_LLSW":
                    lrv = cosine_lrv(static_fit, sample.x, min(hs[m], T - 1))
                    rej = hac_t_test(
                        static_fit, lrv, 0, null_value, level,
                        critical_value=cvs[m],
                    ).reject
                else:
                    omega = bartlett_weighted_sum(acov, hs[m]) / T
                    lrv = LrvEstimate(
                        omega_hat=np.array([[omega]]),
                        method=BandwidthRule[m],
                        bandwidth_used=hs[m],
                    )
                    rej = hac_t_test(
                        static_fit, lrv, 0, null_value, level,
                        critical_value=cvs[m],
                    ).reject
                out["reject"][mi, bi, i] = rej
    return out


def _critical_values(config: ExperimentConfig, T: int) -> dict[str, float]:
    """Per-method two-sided critical values for a cell of length T.

    The classical OLS test uses Student-t(T - k) quantiles (it is exact
    under iid normal errors); the Bartlett-window rules use normal
    quantiles, the whole-sample rule its simulated fixed-bandwidth constant,
    and the cosine rule Student-t with as many degrees of freedom as
    projections.
    """
    level = config.level
    z = float(norm.ppf(1.0 - level / 2.0))
    cvs: dict[str, float] = {}
    for m in config.methods:
        if m == "OLS":
            cvs[m] = float(student_t.ppf(1.0 - level / 2.0, T - 1))
        elif m == "NW_KV":
            cvs[m] = fixed_b_critical_value(level)
        elif m == "M_LLSW":
            nu = min(bandwidth(BandwidthRule.M_LLSW, T), T - 1)
            cvs[m] = float(student_t.ppf(1.0 - level / 2.0, nu))
        elif m == "DynReg":
            cvs[m] = z
        else:
            cvs[m] = z
    return cvs


def _run_cell(config, spec, betas, methods):
    cvs = _critical_values(config, spec.T) if methods else {}
    args = (
        spec,
        config.criterion,
        config.seed,
        config.level,
        tuple(betas),
        config.p_max_for(spec.T),
        tuple(methods),
        cvs,
    )
    return map_replications(_cell_worker, config.reps, config.threads, args)


def _moments(estimates: np.ndarray, beta_true: float) -> tuple[float, float, float]:
    mean = float(np.mean(estimates))
    bias = mean - beta_true
    variance = float(np.mean((estimates - mean) ** 2))
    return bias, variance, bias * bias + variance


def _mc_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / reps)


# ----------------------------------------------------------------------
# Experiment families


def run_efficiency(
    config: ExperimentConfig, out_path: str | None = None
) -> list[ExperimentSummary]:
    """Bias, variance, MSE of both arms and their MSE ratio, per cell."""
    writer = _CellCsv(out_path, EFFICIENCY_HEADER, _efficiency_row) if out_path else None
    summaries = []
    for T in config.Ts:
        for rho in config.rhos:
            key = (config.dgp.value, config.criterion.upper(), rho, T)
            if writer and writer.has_cell(key):
                continue
            res = _run_cell(config, config.spec(rho, T), [1.0], ())
            cell = _efficiency_summaries(config, rho, T, res)
            summaries.extend(cell)
            if writer:
                writer.write_cell(key, cell)
    if writer:
        writer.close()
    return summaries


def _efficiency_summaries(config, rho, T, res, beta_true=1.0):
    bias_o, var_o, mse_o = _moments(res["beta_ols"][0], beta_true)
    bias_d, var_d, mse_d = _moments(res["beta_dyn"][0], beta_true)
    re_est = mse_o / mse_d
    p_sel = res["p_sel"][0]
    common = dict(
        dgp=config.dgp.value,
        criterion=config.criterion.upper(),
        rho=rho,
        T=T,
        reps_used=len(p_sel),
        beta_true=beta_true,
        re_est=re_est,
    )
    return [
        ExperimentSummary(method="OLS", bias=bias_o, variance=var_o, mse=mse_o, **common),
        ExperimentSummary(
            method="DynReg",
            bias=bias_d,
            variance=var_d,
            mse=mse_d,
            lag_median=float(np.median(p_sel)),
            lag_mean=float(np.mean(p_sel)),
            **common,
        ),
    ]


def run_size(
    config: ExperimentConfig, out_path: str | None = None
) -> list[ExperimentSummary]:
    """Rejection frequency of each method's nominal-level test of the true
    coefficient value, per cell."""
    writer = _CellCsv(out_path, SIZE_HEADER, _size_row) if out_path else None
    summaries = []
    for T in config.Ts:
        for rho in config.rhos:
            key = (config.dgp.value, config.criterion.upper(), rho, T)
            if writer and writer.has_cell(key):
                continue
            res = _run_cell(config, config.spec(rho, T), [1.0], config.methods)
            cell = _rejection_summaries(config, rho, T, res, beta_true=1.0)
            summaries.extend(cell)
            if writer:
                writer.write_cell(key, cell)
    if writer:
        writer.close()
    return summaries


def _rejection_summaries(config, rho, T, res, beta_true, beta_index=0):
    out = []
    reps = res["reject"].shape[-1]
    for mi, m in enumerate(config.methods):
        rate = float(np.mean(res["reject"][mi, beta_index]))
        out.append(
            ExperimentSummary(
                dgp=config.dgp.value,
                criterion=config.criterion.upper(),
                rho=rho,
                T=T,
                method=m,
                reps_used=reps,
                beta_true=beta_true,
                rejection=rate,
                mc_se=_mc_se(rate, reps),
                nominal_level=config.level,
            )
        )
    return out


def run_power(
    config: ExperimentConfig, out_path: str | None = None
) -> list[ExperimentSummary]:
    """Rejection frequencies of H0: beta = 1 on a grid of true beta values.

    The data are generated at each beta on the grid from the same shock
    streams, so the beta = 1 column reproduces the size experiment exactly.
    """
    if 1.0 not in config.beta_grid:
        raise ValueError("beta grid must include 1.0")
    writer = _CellCsv(out_path, POWER_HEADER, _power_row) if out_path else None
    summaries = []
    betas = list(config.beta_grid)
    for T in config.Ts:
        for rho in config.rhos:
            key = (config.dgp.value, config.criterion.upper(), rho, T)
            if writer and writer.has_cell(key):
                continue
            res = _run_cell(config, config.spec(rho, T), betas, config.methods)
            cell = []
            for bi, b in enumerate(betas):
                cell.extend(
                    _rejection_summaries(config, rho, T, res, b, beta_index=bi)
                )
            summaries.extend(cell)
            if writer:
                writer.write_cell(key, cell)
    if writer:
        writer.close()
    return summaries


def run_surface(
    config: ExperimentConfig, out_path: str | None = None
) -> list[ExperimentSummary]:
    """Size-distortion grid over a denser (rho, T) lattice; raw cells only,
    smoothing and rendering are downstream concerns."""
    writer = _CellCsv(out_path, SURFACE_HEADER, _surface_row) if out_path else None
    summaries = []
    for T in config.Ts:
        for rho in config.rhos:
            if writer and writer.has_cell((rho, T)):
                continue
            res = _run_cell(config, config.spec(rho, T), [1.0], config.methods)
            cell = _rejection_summaries(config, rho, T, res, beta_true=1.0)
            summaries.extend(cell)
            if writer:
                writer.write_cell((rho, T), cell)
    if writer:
        writer.close()
    return summaries


def surface_config(base: ExperimentConfig) -> ExperimentConfig:
    """The denser lattice used for response-surface grids."""
    return replace(base, rhos=SURFACE_RHOS, Ts=SURFACE_TS)


def run_weak_exo(
    config: ExperimentConfig,
    beta_alt: float = 0.8,
    out_path: str | None = None,
) -> list[ExperimentSummary]:
    """Weak-exogeneity panel: estimation statistics at the true beta = 1 and
    rejection frequencies of H0: beta = 1 when the truth is 1 and beta_alt."""
    config = replace(config, dgp=DgpKind.WEAK_EXO)
    writer = _CellCsv(out_path, WEAKEXO_HEADER, _weakexo_row) if out_path else None
    summaries = []
    for T in config.Ts:
        key = (config.dgp.value, config.criterion.upper(), T)
        if writer and writer.has_cell(key):
            continue
        spec = DgpSpec(kind=DgpKind.WEAK_EXO, T=T)
        res = _run_cell(config, spec, [1.0, beta_alt], config.methods)
        eff = {s.method: s for s in _efficiency_summaries(config, 0.0, T, res)}
        cell = []
        reps = res["reject"].shape[-1]
        for mi, m in enumerate(config.methods):
            rate_null = float(np.mean(res["reject"][mi, 0]))
            rate_alt = float(np.mean(res["reject"][mi, 1]))
            base = eff.get(m)
            cell.append(
                ExperimentSummary(
                    dgp=config.dgp.value,
                    criterion=config.criterion.upper(),
                    rho=0.0,
                    T=T,
                    method=m,
                    reps_used=reps,
                    bias=base.bias if base else None,
                    variance=base.variance if base else None,
                    mse=base.mse if base else None,
                    re_est=base.re_est if base else None,
                    lag_median=base.lag_median if base else None,
                    lag_mean=base.lag_mean if base else None,
                    rejection=rate_null,
                    mc_se=_mc_se(rate_null, reps),
                    rejection_alt=rate_alt,
                    beta_alt=beta_alt,
                )
            )
        summaries.extend(cell)
        if writer:
            writer.write_cell(key, cell)
    if writer:
        writer.close()
    return summaries


def run_forecast(
    config: ExperimentConfig, out_path: str | None = None
) -> list[tuple[float, int, MspeResult]]:
    """MSPE comparison per (rho, T) cell; returns (rho, T, result) triples."""
    writer = _CellCsv(out_path, FORECAST_HEADER, _forecast_row) if out_path else None
    results = []
    for T in config.Ts:
        for rho in config.rhos:
            if writer and writer.has_cell((T, rho)):
                continue
            res = mspe_experiment(
                config.spec(rho, T),
                reps=config.reps,
                criterion=config.criterion,
                seed=config.seed,
                threads=config.threads,
            )
            results.append((rho, T, res))
            if writer:
                writer.write_cell((T, rho), [(rho, T, res)])
    if writer:
        writer.close()
    return results


# ----------------------------------------------------------------------
# CSV emission

EFFICIENCY_HEADER = (
    "dgp,criterion,rho,T,method,bias,variance,mse,re_est,lag_median,lag_mean,reps"
)
SIZE_HEADER = "dgp,criterion,rho,T,method,rejection,mc_se"
POWER_HEADER = "dgp,criterion,rho,T,method,beta_true,rejection"
SURFACE_HEADER = "rho,T,method,size_distortion"
WEAKEXO_HEADER = (
    "dgp,criterion,T,method,bias,variance,mse,re_est,lag_median,lag_mean,"
    "rejection_beta_true,rejection_beta_alt,beta_alt,reps"
)
FORECAST_HEADER = "T,rho,mspe_ols,mspe_dynreg,re_pred,analytic_re_pred,reps"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _efficiency_row(s: ExperimentSummary) -> tuple[str, list[str]]:
    key = f"{s.dgp},{s.criterion},{_fmt(s.rho)},{s.T},{s.method}"
    return key, [
        key,
        _fmt(s.bias),
        _fmt(s.variance),
        _fmt(s.mse),
        _fmt(s.re_est),
        _fmt(s.lag_median),
        _fmt(s.lag_mean),
        str(s.reps_used),
    ]


def _size_row(s: ExperimentSummary) -> tuple[str, list[str]]:
    key = f"{s.dgp},{s.criterion},{_fmt(s.rho)},{s.T},{s.method}"
    return key, [key, _fmt(s.rejection), _fmt(s.mc_se)]


def _power_row(s: ExperimentSummary) -> tuple[str, list[str]]:
    key = f"{s.dgp},{s.criterion},{_fmt(s.rho)},{s.T},{s.method}"
    return f"{key},{_fmt(s.beta_true)}", [key, _fmt(s.beta_true), _fmt(s.rejection)]


def _surface_row(s: ExperimentSummary) -> tuple[str, list[str]]:
    key = f"{_fmt(s.rho)},{s.T},{s.method}"
    return key, [key, _fmt(s.rejection - s.nominal_level)]


def _weakexo_row(s: ExperimentSummary) -> tuple[str, list[str]]:
    key = f"{s.dgp},{s.criterion},{s.T},{s.method}"
    return key, [
        key,
        _fmt(s.bias),
        _fmt(s.variance),
        _fmt(s.mse),
        _fmt(s.re_est),
        _fmt(s.lag_median),
        _fmt(s.lag_mean),
        _fmt(s.rejection),
        _fmt(s.rejection_alt),
        _fmt(s.beta_alt),
        str(s.reps_used),
    ]


def _forecast_row(item) -> tuple[str, list[str]]:
    rho, T, res = item
    key = f"{T},{_fmt(rho)}"
    return key, [
        key,
        _fmt(res.mspe_subopt),
        _fmt(res.mspe_opt),
        _fmt(res.re_pred_hat),
        _fmt(analytic_re_pred(rho)),
        str(res.reps_used),
    ]


class _CellCsv:
    """Append-per-cell CSV writer, crash-resumable by cell key.

    A cell key is the tuple of leading row columns shared by every row of
    that cell; a rerun pointed at an existing file skips keys it finds and
    appends only the missing cells.
    """

    def __init__(self, path, header, row_fn):
        self.path = path
        self.header = header
        self.row_fn = row_fn
        self._prefixes: list[str] = []
        if os.path.exists(path) and os.path.getsize(path) > 0:
            with open(path, encoding="utf-8") as fh:
                first = fh.readline().rstrip("\n")
                if first != header:
                    raise ValueError(
                        f"{path} exists with a different header; refusing to append"
                    )
                self._prefixes = [line.rstrip("\n") for line in fh]
            self._fh = open(path, "a", encoding="utf-8")
        else:
            parent = os.path.dirname(os.path.abspath(path))
            os.makedirs(parent, exist_ok=True)
            self._fh = open(path, "w", encoding="utf-8")
            self._fh.write(header + "\n")

    @staticmethod
    def cell_prefix(cell_key: tuple) -> str:
        return ",".join(
            _fmt(v) if isinstance(v, float) else str(v) for v in cell_key
        ) + ","

    def has_cell(self, cell_key: tuple) -> bool:
        prefix = self.cell_prefix(cell_key)
        return any(line.startswith(prefix) for line in self._prefixes)

    def write_cell(self, cell_key: tuple, items) -> None:
        for item in items:
            _, fields = self.row_fn(item)
            self._fh.write(",".join(fields) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def write_summaries(summaries, path: str, family: str) -> None:
    """Write a completed experiment's rows to ``path`` in one pass."""
    header, row_fn = {
        "efficiency": (EFFICIENCY_HEADER, _efficiency_row),
        "size": (SIZE_HEADER, _size_row),
        "power": (POWER_HEADER, _power_row),
        "surface": (SURFACE_HEADER, _surface_row),
        "weakexo": (WEAKEXO_HEADER, _weakexo_row),
        "forecast": (FORECAST_HEADER, _forecast_row),
    }[family]
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for s in summaries:
            _, fields = row_fn(s)
            fh.write(",".join(fields) + "\n")
