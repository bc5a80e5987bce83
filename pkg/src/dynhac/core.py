"""Plain OLS estimation and the shared regression containers.

Least squares is solved through an orthogonal (QR) decomposition rather than
the normal equations: designs built from highly persistent series are
near-collinear with their own lags, and the normal equations square the
condition number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import DimensionMismatch, RankDeficient, SingularQ

# Relative singular-value cutoff below which a design is treated as rank
# deficient.
RANK_RTOL = 1e-10

# Coefficient-null differences below this relative scale are representation
# noise from the solve, not signal; treating them as exact equality keeps
# exact-fit t statistics at their defined 0/0 = 0 value instead of a ratio
# of rounding errors.
_NUMERATOR_RTOL = 1e-12


def centered_numerator(estimate: float, null_value: float) -> float:
    num = estimate - null_value
    if abs(num) <= _NUMERATOR_RTOL * max(abs(estimate), abs(null_value)):
        return 0.0
    return float(num)


@dataclass(frozen=True)
class Sample:
    """One simulated (y, x) realization plus its disturbance path.

    Attributes
    ----------
    y : ndarray, shape (T,)
        Response series.
    x : ndarray, shape (T, k)
        Regressor matrix; k = 1 in every experiment shipped here, but the
        container is general.
    u : ndarray, shape (T,) or None
        True disturbance series when the sample came from a simulator
        (y = x @ beta + u); None for user-supplied data.
    meta : Any
        Provenance: the generating process spec and replication index,
        or None for external data.
    """

    y: np.ndarray
    x: np.ndarray
    u: np.ndarray | None = None
    meta: Any = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if y.ndim != 1 or x.ndim != 2:
            raise DimensionMismatch("y must be a vector and x a matrix")
        if len(y) != x.shape[0]:
            raise DimensionMismatch(
                f"y has {len(y)} rows but x has {x.shape[0]}"
            )
        if len(y) < 2:
            raise DimensionMismatch("need at least 2 observations")
        if not (np.isfinite(y).all() and np.isfinite(x).all()):
            raise ValueError("sample contains non-finite entries")

    @property
    def n_obs(self) -> int:
        return len(self.y)

    @property
    def n_regressors(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class RegressionFit:
    """Output of an OLS fit.

    ``q_hat`` is the scaled moment matrix (1/n) * design' design, and
    ``sigma2_hat`` the degrees-of-freedom corrected residual variance
    SSE / (n - m).
    """

    beta_hat: np.ndarray
    residuals: np.ndarray
    q_hat: np.ndarray
    sigma2_hat: float
    sse: float
    n_obs: int
    _q_chol: Any = field(default=None, repr=False, compare=False)

    @property
    def n_params(self) -> int:
        return len(self.beta_hat)

    def q_inv_diag(self, j: int) -> float:
        """Return [q_hat^{-1}]_jj, factorizing q_hat on first use."""
        sol = self.solve_q(np.eye(self.n_params)[:, j])
        return float(sol[j])

    def solve_q(self, rhs: np.ndarray) -> np.ndarray:
        chol = self._q_chol
        if chol is None:
            try:
                chol = cho_factor(self.q_hat, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SingularQ("moment matrix is not positive definite") from exc
            object.__setattr__(self, "_q_chol", chol)
        return cho_solve(chol, rhs, check_finite=False)


def ols_fit(design: np.ndarray, response: np.ndarray) -> RegressionFit:
    """Fit response on design by least squares via QR.

    Parameters
    ----------
    design : ndarray, shape (n, m)
        Full-column-rank design matrix. No intercept is added implicitly.
    response : ndarray, shape (n,)

    Returns
    -------
    RegressionFit

    Raises
    ------
    DimensionMismatch
        If the row counts disagree or n <= m.
    RankDeficient
        If the smallest singular value is below RANK_RTOL times the largest.
    """
    a = np.asarray(design, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    y = np.asarray(response, dtype=float).ravel()
    n, m = a.shape
    if len(y) != n:
        raise DimensionMismatch(f"design has {n} rows, response has {len(y)}")
    if n <= m:
        raise DimensionMismatch(f"need n > m, got n={n}, m={m}")

    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficient(
            f"smallest singular value {sv[-1]:.3e} below "
            f"{RANK_RTOL:g} x largest {sv[0]:.3e}"
        )

    q, r = np.linalg.qr(a)
    beta = solve_triangular(r, q.T @ y, check_finite=False)
    resid = y - a @ beta
    sse = float(resid @ resid)
    return RegressionFit(
        beta_hat=beta,
        residuals=resid,
        q_hat=(a.T @ a) / n,
        sigma2_hat=sse / (n - m),
        sse=sse,
        n_obs=n,
    )


def ols_t_stat(fit: RegressionFit, coef_index: int, null_value: float) -> float:
    """Classical t statistic for H0: beta[coef_index] = null_value.

    Uses the textbook standard error sqrt(sigma2 * [q_hat^{-1}]_jj / n).
    A 0/0 from an exact fit under a centered null is defined as 0.
    """
    if not 0 <= coef_index < fit.n_params:
        raise IndexError(f"coef_index {coef_index} out of range")
    se2 = fit.sigma2_hat * fit.q_inv_diag(coef_index) / fit.n_obs
    num = centered_numerator(fit.beta_hat[coef_index], null_value)
    if num == 0.0:
        return 0.0
    if se2 <= 0.0:
        return math.copysign(math.inf, num)
    return float(num / math.sqrt(se2))
