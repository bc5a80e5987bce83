"""One-step-ahead forecast comparison: static OLS versus dynamic regression.

The static forecaster ignores disturbance dynamics; the dynamic one models
them. With known parameters and AR(1) disturbances their mean squared
prediction error ratio has the closed form 1/2 + 1/(2(1 - rho^2)), which the
Monte Carlo estimator here approaches as T grows.

Neither forecaster observes x_{T+1}: both plug in the same AR(1) prediction
of it. Conditioning on the realized regressor instead would change the
comparison into one about disturbance variance alone and no longer match
the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._parallel import map_replications
from .core import Sample, ols_fit
from .dgp import DgpSpec, ShockStream, simulate
from .dynreg import default_p_max, dynreg_forecast, select_order
from .errors import DynhacError


@dataclass(frozen=True)
class ForecastPair:
    """One replication's forecasts and the realized value they target."""

    optimal: float
    suboptimal: float
    realized: float


@dataclass(frozen=True)
class MspeResult:
    """Monte Carlo mean squared prediction errors and their ratio."""

    mspe_subopt: float
    mspe_opt: float
    re_pred_hat: float
    reps_used: int
    failures: int
    mean_err_subopt: float
    mean_err_opt: float


def analytic_re_pred(rho: float) -> float:
    """Known-parameter MSPE ratio of the static to the dynamic forecast.

    Equals 1 at rho = 0 and increases without bound as |rho| -> 1.
    """
    if not abs(rho) < 1.0:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    return 0.5 + 0.5 / (1.0 - rho * rho)


def forecast_pair(sample_full: Sample, T: int, criterion: str) -> ForecastPair:
    """Forecasts of observation T+1 from the first T observations.

    Fits the static regression and an order-selected dynamic regression on
    t = 1..T, predicts x_{T+1} from an AR(1) fit to x alone, and forms
    beta_ols * x_hat (static) and the dynamic one-step forecast (dynamic).
    """
    y = sample_full.y[:T]
    x = sample_full.x[:T]
    est = Sample(y=y, x=x, meta=sample_full.meta)

    static_fit = ols_fit(x, y)
    dyn = select_order(est, default_p_max(T), criterion)

    x1 = x[:, 0]
    denom = float(x1[:-1] @ x1[:-1])
    rho_x_hat = float(x1[1:] @ x1[:-1]) / denom if denom > 0.0 else 0.0
    x_next_hat = rho_x_hat * x1[-1]

    subopt = float(static_fit.beta_hat[0]) * x_next_hat
    opt = dynreg_forecast(dyn, y, x1, x_next_hat)
    return ForecastPair(
        optimal=opt, suboptimal=subopt, realized=float(sample_full.y[T])
    )


def _forecast_worker(start, stop, spec, criterion, seed):
    n = stop - start
    err_sub = np.empty(n)
    err_opt = np.empty(n)
    failed = np.zeros(n, dtype=bool)
    for i, r in enumerate(range(start, stop)):
        sim = simulate(spec, ShockStream(seed, r), horizon_extra=1)
        try:
            pair = forecast_pair(sim, spec.T, criterion)
        except DynhacError:
            failed[i] = True
            err_sub[i] = np.nan
            err_opt[i] = np.nan
            continue
        err_sub[i] = pair.realized - pair.suboptimal
        err_opt[i] = pair.realized - pair.optimal
    return {"err_sub": err_sub, "err_opt": err_opt, "failed": failed}


def mspe_experiment(
    spec: DgpSpec,
    T: int | None = None,
    reps: int = 2000,
    criterion: str = "BIC",
    seed: int = 0,
    threads: int = 1,
) -> MspeResult:
    """Estimate both MSPEs and their ratio over ``reps`` replications.

    Replications whose fits fail are counted and skipped; the ratio is
    MSPE(static) / MSPE(dynamic).
    """
    if reps < 100:
        raise ValueError("need at least 100 replications")
    if T is not None and T != spec.T:
        spec = replace(spec, T=T)
    out = map_replications(_forecast_worker, reps, threads, (spec, criterion, seed))
    ok = ~out["failed"]
    failures = int(out["failed"].sum())
    err_sub = out["err_sub"][ok]
    err_opt = out["err_opt"][ok]
    mspe_sub = float(np.mean(err_sub * err_sub))
    mspe_opt = float(np.mean(err_opt * err_opt))
    return MspeResult(
        mspe_subopt=mspe_sub,
        mspe_opt=mspe_opt,
        re_pred_hat=mspe_sub / mspe_opt,
        reps_used=int(ok.sum()),
        failures=failures,
        mean_err_subopt=float(np.mean(err_sub)),
        mean_err_opt=float(np.mean(err_opt)),
    )
