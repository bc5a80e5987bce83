"""Long-run variance estimators, bandwidth rules, and HAC t tests.

The object being estimated is the spectral density at frequency zero of the
regressor-disturbance product v_t = x_t * u_t: the sum of all its
autocovariances. Two estimator families are provided:

* a Bartlett (linearly decreasing) lag-window estimator, used by the
  Newey-West style bandwidth rules, and
* an orthogonal-series estimator averaging squared projections of v on
  type-II discrete cosines.

Each bandwidth rule carries its own critical-value convention for the t test:
asymptotically normal rules use normal quantiles, the cosine estimator with
nu terms uses Student-t(nu), and the whole-sample Bartlett rule uses a
simulated fixed-bandwidth asymptotic critical value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.stats import norm, t as student_t

from .core import RegressionFit, centered_numerator
from .errors import BandwidthOutOfRange, NonPsdLrv

# Coefficient in the cosine-count rule nu = floor(coef * T^(2/3)). The
# commonly quoted value is 0.4; 0.41 is the default here because it is what
# the reproduced result tables use.
COSINE_RULE_COEF = 0.41

# Defaults for the fixed-b critical value simulation (see
# fixed_b_critical_value); chosen so the quantile is stable to ~0.01.
FIXED_B_GRID = 1000
FIXED_B_DRAWS = 200_000
FIXED_B_SEED = 1821


class BandwidthRule(enum.Enum):
    """Truncation-lag rules, each a pure function of the sample size."""

    NW = "NW"            # floor(4 (T/100)^(2/9)) + 1, textbook default
    NW_A = "NW_A"        # floor(0.75 T^(1/3)) + 1, AR(1)-targeted variant
    NW_LLSW = "NW_LLSW"  # floor(1.3 T^(1/2)) + 1, long-lag variant
    NW_KV = "NW_KV"      # h = T, whole-sample Bartlett
    M_LLSW = "M_LLSW"    # nu = floor(0.41 T^(2/3)) cosine terms

    @property
    def is_cosine(self) -> bool:
        return self is BandwidthRule.M_LLSW


@dataclass(frozen=True)
class LrvEstimate:
    """A long-run variance estimate with its method metadata.

    ``dof_for_test`` is set for the cosine estimator (the number of averaged
    projections, which doubles as the Student-t degrees of freedom).
    """

    omega_hat: np.ndarray
    method: BandwidthRule
    bandwidth_used: int
    dof_for_test: int | None = None


@dataclass(frozen=True)
class TestResult:
    """Outcome of a two-sided t test."""

    statistic: float
    critical_value: float
    reject: bool
    method: str
    nominal_level: float


def bandwidth(rule: BandwidthRule, T: int, cosine_coef: float = COSINE_RULE_COEF) -> int:
    """Truncation lag (or cosine count) implied by ``rule`` at sample size T.

    Exact floor-formula evaluation, clamped below at 1 so every rule yields
    a usable bandwidth down to T = 2.
    """
    if T < 2:
        raise BandwidthOutOfRange(f"need T >= 2, got {T}")
    if rule is BandwidthRule.NW:
        h = math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)) + 1
    elif rule is BandwidthRule.NW_A:
        h = math.floor(0.75 * T ** (1.0 / 3.0)) + 1
    elif rule is BandwidthRule.NW_LLSW:
        h = math.floor(1.3 * T ** 0.5) + 1
    elif rule is BandwidthRule.NW_KV:
        h = T
    elif rule is BandwidthRule.M_LLSW:
        h = math.floor(cosine_coef * T ** (2.0 / 3.0))
    else:  # pragma: no cover
        raise ValueError(f"unknown rule {rule}")
    return max(h, 1)


def _score_series(fit: RegressionFit, x: np.ndarray) -> np.ndarray:
    """v_t = x_t * u_hat_t as a (T, k) array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    u = np.asarray(fit.residuals, dtype=float)
    if x.shape[0] != len(u):
        raise BandwidthOutOfRange(
            f"x has {x.shape[0]} rows but fit has {len(u)} residuals"
        )
    return x * u[:, None]


def score_autocovariances(v: np.ndarray, max_lag: int) -> np.ndarray:
    """Unnormalized autocovariances c_tau = sum_t v_t v_{t-tau}, tau = 0..max_lag.

    Computed by FFT; for a scalar score series this is the only ingredient
    every Bartlett bandwidth rule needs, so callers evaluating several rules
    can compute it once.
    """
    T = len(v)
    nfft = scipy.fft.next_fast_len(2 * T)
    fv = np.fft.rfft(v, nfft)
    return np.fft.irfft(fv * np.conj(fv), nfft)[: max_lag + 1]


def bartlett_weighted_sum(acov: np.ndarray, h: int) -> float:
    """c_0 + 2 sum_{tau=1..h} (1 - tau/(h+1)) c_tau over available lags."""
    max_lag = min(h, len(acov) - 1)
    weights = 1.0 - np.arange(1, max_lag + 1) / (h + 1.0)
    return float(acov[0] + 2.0 * (weights @ acov[1 : max_lag + 1]))


def bartlett_lrv(
    fit: RegressionFit,
    x: np.ndarray,
    h: int,
    method: BandwidthRule = BandwidthRule.NW,
) -> LrvEstimate:
    """Bartlett lag-window estimate of the long-run variance of x_t u_t.

    omega_hat = Gamma_0 + sum_{tau=1..h} (1 - tau/(h+1)) (Gamma_tau + Gamma_tau')
    with Gamma_tau = (1/T) sum_t u_t x_t x_{t-tau}' u_{t-tau}. The linearly
    decreasing weights guarantee a positive semi-definite estimate.
    """
    v = _score_series(fit, x)
    T, k = v.shape
    if not 0 <= h <= T:
        raise BandwidthOutOfRange(f"need 0 <= h <= T={T}, got h={h}")
    max_lag = min(h, T - 1)
    if k == 1:
        acov = score_autocovariances(v[:, 0], max_lag)
        omega_hat = np.array([[bartlett_weighted_sum(acov, h) / T]])
    else:
        weights = 1.0 - np.arange(1, max_lag + 1) / (h + 1.0)
        omega_hat = (v.T @ v) / T
        for tau in range(1, max_lag + 1):
            gamma = (v[tau:].T @ v[:-tau]) / T
            omega_hat += weights[tau - 1] * (gamma + gamma.T)
    return LrvEstimate(omega_hat=omega_hat, method=method, bandwidth_used=h)


def cosine_lrv(fit: RegressionFit, x: np.ndarray, nu: int) -> LrvEstimate:
    """Orthogonal-series estimate: average of nu squared cosine projections.

    Lambda_j = sqrt(2/T) sum_t v_t cos(pi j (t - 1/2) / T), j = 1..nu, and
    omega_hat = (1/nu) sum_j Lambda_j Lambda_j'. PSD by construction.
    """
    v = _score_series(fit, x)
    T, k = v.shape
    if not 1 <= nu <= T - 1:
        raise BandwidthOutOfRange(f"need 1 <= nu <= T-1={T - 1}, got nu={nu}")
    # Type-II DCT: dct(v)[j] = 2 sum_n v_n cos(pi j (2n+1) / (2T)), so the
    # projection is sqrt(2/T) * dct(v)[j] / 2.
    proj = scipy.fft.dct(v, type=2, axis=0)[1 : nu + 1] * (0.5 * math.sqrt(2.0 / T))
    omega_hat = (proj.T @ proj) / nu
    if k == 1:
        omega_hat = omega_hat.reshape(1, 1)
    return LrvEstimate(
        omega_hat=omega_hat,
        method=BandwidthRule.M_LLSW,
        bandwidth_used=nu,
        dof_for_test=nu,
    )


def lrv_estimate(
    fit: RegressionFit,
    x: np.ndarray,
    rule: BandwidthRule,
    T: int | None = None,
    cosine_coef: float = COSINE_RULE_COEF,
) -> LrvEstimate:
    """Dispatch to the estimator and bandwidth implied by ``rule``."""
    n = len(fit.residuals) if T is None else T
    b = bandwidth(rule, n, cosine_coef=cosine_coef)
    if rule.is_cosine:
        return cosine_lrv(fit, x, min(b, n - 1))
    return bartlett_lrv(fit, x, b, method=rule)


@lru_cache(maxsize=16)
def fixed_b_critical_value(
    level: float = 0.05,
    grid_points: int = FIXED_B_GRID,
    draws: int = FIXED_B_DRAWS,
    seed: int = FIXED_B_SEED,
) -> float:
    """Simulated two-sided critical value for the whole-sample Bartlett t test.

    With the truncation lag equal to the sample size, the t statistic is not
    asymptotically normal; its limit is W(1) / sqrt(2 * int_0^1 B(r)^2 dr)
    where W is a standard Brownian motion and B(r) = W(r) - r W(1) the bridge
    it induces. The level-alpha two-sided critical value is the (1 - alpha)
    quantile of the absolute statistic, estimated on ``draws`` discretized
    paths of ``grid_points`` steps.

    Deterministic for a given (seed, grid_points, draws): the draw index
    space is partitioned into fixed blocks with per-block counter-based
    streams, so the result does not depend on evaluation order.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if grid_points < 200:
        raise ValueError("grid_points must be at least 200")
    if draws < 50_000:
        raise ValueError("draws must be at least 50,000")
    block = 4096
    r = np.arange(1, grid_points + 1) / grid_points
    stats = np.empty(draws)
    done = 0
    for iblock in range(math.ceil(draws / block)):
        n = min(block, draws - done)
        key = np.array([seed, iblock], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        z = rng.standard_normal((n, grid_points)) / math.sqrt(grid_points)
        w = np.cumsum(z, axis=1)
        w1 = w[:, -1]
        bridge = w - np.outer(w1, r)
        denom = 2.0 * np.mean(bridge * bridge, axis=1)
        stats[done : done + n] = np.abs(w1) / np.sqrt(denom)
        done += n
    return float(np.quantile(stats, 1.0 - level))


def critical_value_for(
    method: BandwidthRule,
    level: float,
    dof: int | None = None,
) -> float:
    """Two-sided critical value under the convention attached to ``method``."""
    if method is BandwidthRule.NW_KV:
        return fixed_b_critical_value(level)
    if method is BandwidthRule.M_LLSW:
        if dof is None:
            raise ValueError("cosine-estimator test needs dof_for_test")
        return float(student_t.ppf(1.0 - level / 2.0, dof))
    return float(norm.ppf(1.0 - level / 2.0))


def hac_t_test(
    fit: RegressionFit,
    lrv: LrvEstimate,
    coef_index: int,
    null_value: float,
    level: float = 0.05,
    critical_value: float | None = None,
) -> TestResult:
    """Two-sided t test of H0: beta[coef_index] = null_value with HAC variance.

    The statistic is (beta_hat_j - b0) / sqrt([Q^-1 Omega Q^-1]_jj / T).
    The critical value follows the convention of the bandwidth rule unless
    one is supplied explicitly (useful to amortize the fixed-b simulation).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    m = fit.n_params
    if not 0 <= coef_index < m:
        raise IndexError(f"coef_index {coef_index} out of range")
    if lrv.omega_hat.shape != (m, m):
        raise BandwidthOutOfRange(
            f"omega_hat is {lrv.omega_hat.shape}, fit has {m} coefficients"
        )
    qinv_omega = fit.solve_q(lrv.omega_hat)
    mid = fit.solve_q(qinv_omega.T)
    var_j = mid[coef_index, coef_index] / fit.n_obs
    num = centered_numerator(fit.beta_hat[coef_index], null_value)
    if var_j < 0.0:
        raise NonPsdLrv(f"variance of coefficient {coef_index} is {var_j:.3e}")
    if num == 0.0:
        stat = 0.0
    elif var_j == 0.0:
        stat = math.copysign(math.inf, num)
    else:
        stat = float(num / math.sqrt(var_j))
    cv = (
        critical_value
        if critical_value is not None
        else critical_value_for(lrv.method, level, lrv.dof_for_test)
    )
    return TestResult(
        statistic=stat,
        critical_value=cv,
        reject=abs(stat) > cv,
        method=lrv.method.value,
        nominal_level=level,
    )
