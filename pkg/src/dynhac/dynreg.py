"""Dynamic regression: lagged-design construction, order selection, inference.

The model augments the static regression of y on x with p lags of y and of
every regressor, estimated by OLS:

    y_t = sum_j phi_j y_{t-j} + sum_i beta_i x_{i,t}
          + sum_j sum_i gamma_{i,j} x_{i,t-j} + eps_t

The coefficient vector is ordered exactly like the design rows
(y_{t-1}, ..., y_{t-p}, x_{1,t}, ..., x_{k,t}, x_{1,t-1}, ..., x_{k,t-p}).
When the static disturbance is an AR(p) process this form holds exactly with
gamma_{i,j} = -beta_i * phi_j absorbed into the unrestricted coefficients,
so OLS on the lagged design restores classical (normal-limit) inference.

Order selection scores every candidate p on a common sample aligned at
p_max, because log-SSE criteria computed on different response rows are not
comparable, then refits the winner on all rows it can use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm, t as student_t

from .core import RegressionFit, Sample, ols_fit, ols_t_stat
from .errors import InsufficientData, InsufficientHistory, ZeroSse
from .hac import TestResult

# Candidate-order cap: floor(T/5) capped at 30 (10 at T=50, 30 from T=150 up).
P_MAX_CAP = 30

# Relative SSE below which a candidate is treated as an exact fit.
_EXACT_FIT_RTOL = 1e-13


def default_p_max(T: int) -> int:
    return min(T // 5, P_MAX_CAP)


@dataclass(frozen=True)
class DynRegFit:
    """A fitted dynamic regression.

    ``theta_hat`` is ordered (phi_1..phi_p, beta_1..beta_k,
    gamma_{1,1}..gamma_{k,1}, ..., gamma_{1,p}..gamma_{k,p}).
    """

    p: int
    theta_hat: np.ndarray
    fit: RegressionFit
    criterion_used: str
    n_effective: int
    n_regressors: int

    @property
    def phi_hat(self) -> np.ndarray:
        return self.theta_hat[: self.p]

    @property
    def beta_hat(self) -> np.ndarray:
        return self.theta_hat[self.p : self.p + self.n_regressors]

    def gamma_hat(self, lag: int) -> np.ndarray:
        """gamma_{., lag} for lag in 1..p."""
        if not 1 <= lag <= self.p:
            raise IndexError(f"lag {lag} outside 1..{self.p}")
        k = self.n_regressors
        start = self.p + k * lag
        return self.theta_hat[start : start + k]

    def beta_index(self, regressor: int = 0) -> int:
        """Position of the contemporaneous coefficient in theta_hat."""
        return self.p + regressor


def build_lagged_design(
    sample: Sample, p: int, start: int
) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and response for rows t = start..T (1-indexed).

    Column order: p lags of y, then contemporaneous x, then lag blocks of x
    for j = 1..p. With p = 0 this degenerates to the static design.
    """
    y, x = sample.y, sample.x
    T, k = len(y), x.shape[1]
    if not 0 <= p < start:
        raise InsufficientData(f"need start > p >= 0, got start={start}, p={p}")
    if start > T:
        raise InsufficientData(f"start={start} beyond sample length {T}")
    n = T - start + 1
    m = p + k + k * p
    if n <= m:
        raise InsufficientData(
            f"{n} rows cannot identify {m} coefficients (p={p}, k={k})"
        )
    i0 = start - 1
    cols = [y[i0 - j : T - j, None] for j in range(1, p + 1)]
    cols.append(x[i0:T])
    cols.extend(x[i0 - j : T - j] for j in range(1, p + 1))
    return np.hstack(cols), y[i0:T].copy()


def ic_score(sse: float, n: int, p: int, k: int, criterion: str) -> float:
    """Information-criterion score n*log(sse) + penalty.

    Penalty is log(n)*(p + k + kp) for BIC and 2*(p + k + kp) for AIC.
    """
    if n < 2:
        raise InsufficientData(f"need n >= 2, got {n}")
    if sse <= 0.0:
        raise ZeroSse(f"sse={sse}: exact fit, score is -inf by convention")
    n_par = p + k + k * p
    crit = criterion.upper()
    if crit == "BIC":
        penalty = math.log(n) * n_par
    elif crit == "AIC":
        penalty = 2.0 * n_par
    else:
        raise ValueError(f"criterion must be BIC or AIC, got {criterion!r}")
    return n * math.log(sse) + penalty


def dynreg_fit(sample: Sample, p: int, criterion_used: str = "fixed") -> DynRegFit:
    """Fit the dynamic regression at a fixed lag order on rows t = p+1..T."""
    design, response = build_lagged_design(sample, p, p + 1)
    fit = ols_fit(design, response)
    return DynRegFit(
        p=p,
        theta_hat=fit.beta_hat,
        fit=fit,
        criterion_used=criterion_used,
        n_effective=fit.n_obs,
        n_regressors=sample.n_regressors,
    )


def _candidate_sse(sample: Sample, p_max: int) -> tuple[np.ndarray, int]:
    """SSE of every candidate order 0..p_max on the common sample.

    Builds one design whose leading k + p(1+k) columns span exactly the
    candidate-p regressor set (contemporaneous x first, then one (y, x) lag
    block per j), so a single unpivoted QR yields every candidate's SSE as a
    tail sum of squares of Q'y.
    """
    y, x = sample.y, sample.x
    T, k = len(y), x.shape[1]
    start = p_max + 1
    n = T - start + 1
    m_max = k + p_max * (1 + k)
    if start > T or n <= m_max:
        raise InsufficientData(
            f"T={T} cannot score candidates up to p_max={p_max} (k={k})"
        )
    i0 = start - 1
    blocks = [x[i0:T]]
    for j in range(1, p_max + 1):
        blocks.append(y[i0 - j : T - j, None])
        blocks.append(x[i0 - j : T - j])
    design = np.hstack(blocks)
    ys = y[i0:T]

    q, _ = np.linalg.qr(design)
    c2 = (q.T @ ys) ** 2
    total = float(ys @ ys)
    explained = np.concatenate(([0.0], np.cumsum(c2)))
    m_of_p = k + np.arange(p_max + 1) * (1 + k)
    sse = np.maximum(total - explained[m_of_p], 0.0)
    return sse, n


def select_order(sample: Sample, p_max: int, criterion: str = "BIC") -> DynRegFit:
    """Choose the lag order minimizing the criterion, then refit.

    All candidates are scored on the rows t = p_max+1..T so their scores are
    comparable; ties (including exact fits) resolve to the smallest order.
    The returned fit uses rows t = p+1..T at the selected p.
    """
    if p_max < 0:
        raise InsufficientData(f"p_max must be >= 0, got {p_max}")
    sse, n = _candidate_sse(sample, p_max)
    k = sample.n_regressors
    floor_sse = _EXACT_FIT_RTOL * max(float(sample.y @ sample.y), 1.0)
    scores = np.empty(p_max + 1)
    for p in range(p_max + 1):
        if sse[p] <= floor_sse:
            scores[p] = -math.inf
        else:
            scores[p] = ic_score(sse[p], n, p, k, criterion)
    best_p = int(np.argmin(scores))
    return dynreg_fit(sample, best_p, criterion_used=criterion.upper())


def dynreg_t_test(
    fit: DynRegFit,
    null_value: float,
    level: float = 0.05,
    regressor: int = 0,
    use_student_t: bool = False,
) -> TestResult:
    """t test of H0: beta_regressor = null_value on the lagged design.

    The statistic is the classical OLS form; critical values are standard
    normal by default (the limit distribution), with a Student-t switch for
    small-sample experimentation.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    stat = ols_t_stat(fit.fit, fit.beta_index(regressor), null_value)
    if use_student_t:
        dof = fit.n_effective - fit.fit.n_params
        cv = _student_quantile(level, dof)
    else:
        cv = _normal_quantile(level)
    return TestResult(
        statistic=stat,
        critical_value=cv,
        reject=abs(stat) > cv,
        method="DynReg",
        nominal_level=level,
    )


@lru_cache(maxsize=64)
def _normal_quantile(level: float) -> float:
    return float(norm.ppf(1.0 - level / 2.0))


@lru_cache(maxsize=256)
def _student_quantile(level: float, dof: int) -> float:
    return float(student_t.ppf(1.0 - level / 2.0, dof))


def dynreg_forecast(
    fit: DynRegFit,
    history_y: np.ndarray,
    history_x: np.ndarray,
    x_next: float | np.ndarray,
) -> float:
    """One-step-ahead conditional forecast given trailing history.

    y_hat_{T+1} = sum_j phi_j y_{T+1-j} + beta' x_next
                  + sum_j gamma_{., j}' x_{T+1-j}
    """
    hy = np.asarray(history_y, dtype=float).ravel()
    hx = np.asarray(history_x, dtype=float)
    if hx.ndim == 1:
        hx = hx[:, None]
    k = fit.n_regressors
    if hx.shape[1] != k:
        raise InsufficientHistory(f"history_x has {hx.shape[1]} columns, need {k}")
    if len(hy) < fit.p or hx.shape[0] < fit.p:
        raise InsufficientHistory(
            f"need at least p={fit.p} trailing observations"
        )
    xn = np.asarray(x_next, dtype=float).ravel()
    if len(xn) != k:
        raise InsufficientHistory(f"x_next has {len(xn)} entries, need {k}")
    yhat = float(fit.beta_hat @ xn)
    for j in range(1, fit.p + 1):
        yhat += fit.phi_hat[j - 1] * hy[-j]
        yhat += float(fit.gamma_hat(j) @ hx[-j])
    return yhat
