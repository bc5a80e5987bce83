"""Time-series regression with HAC standard errors and dynamic regression.

Estimation, long-run variance estimators with the usual bandwidth rules,
information-criterion lag selection, one-step forecasting, the simulated
processes these are evaluated on, and a Monte Carlo harness tying it all
together.
"""

from .core import RegressionFit, Sample, ols_fit, ols_t_stat
from .dgp import (
    DgpKind,
    DgpSpec,
    ShockStream,
    StreamRole,
    dump_sample,
    simulate,
    stationary_init,
)
from .dynreg import (
    DynRegFit,
    build_lagged_design,
    default_p_max,
    dynreg_fit,
    dynreg_forecast,
    dynreg_t_test,
    ic_score,
    select_order,
)
from .errors import (
    BandwidthOutOfRange,
    DimensionMismatch,
    DynhacError,
    ExplosiveSpec,
    InsufficientData,
    InsufficientHistory,
    InvalidFlagValue,
    NonPsdLrv,
    ParseError,
    RankDeficient,
    SingularQ,
    ZeroSse,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    METHODS,
    run_efficiency,
    run_forecast,
    run_power,
    run_size,
    run_surface,
    run_weak_exo,
)
from .forecasting import ForecastPair, MspeResult, analytic_re_pred, mspe_experiment
from .hac import (
    BandwidthRule,
    LrvEstimate,
    TestResult,
    bandwidth,
    bartlett_lrv,
    cosine_lrv,
    fixed_b_critical_value,
    hac_t_test,
    lrv_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthOutOfRange",
    "BandwidthRule",
    "DgpKind",
    "DgpSpec",
    "DimensionMismatch",
    "DynRegFit",
    "DynhacError",
    "ExperimentConfig",
    "ExperimentSummary",
    "ExplosiveSpec",
    "ForecastPair",
    "InsufficientData",
    "InsufficientHistory",
    "InvalidFlagValue",
    "LrvEstimate",
    "METHODS",
    "MspeResult",
    "NonPsdLrv",
    "ParseError",
    "RankDeficient",
    "RegressionFit",
    "Sample",
    "ShockStream",
    "SingularQ",
    "StreamRole",
    "TestResult",
    "ZeroSse",
    "analytic_re_pred",
    "bandwidth",
    "bartlett_lrv",
    "build_lagged_design",
    "cosine_lrv",
    "default_p_max",
    "dump_sample",
    "dynreg_fit",
    "dynreg_forecast",
    "dynreg_t_test",
    "fixed_b_critical_value",
    "hac_t_test",
    "ic_score",
    "lrv_estimate",
    "mspe_experiment",
    "ols_fit",
    "ols_t_stat",
    "run_efficiency",
    "run_forecast",
    "run_power",
    "run_size",
    "run_surface",
    "run_weak_exo",
    "select_order",
    "simulate",
    "stationary_init",
]
