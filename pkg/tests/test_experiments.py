"""Harness-level behavior: summaries, identities, determinism, CSV schemas.

The statistical reproduction targets live in test_acceptance; these tests
pin the plumbing at small replication counts.
"""

import os

import numpy as np
import pytest

from dynhac.dgp import DgpKind
from dynhac.experiments import (
    EFFICIENCY_HEADER,
    FORECAST_HEADER,
    METHODS,
    POWER_HEADER,
    SIZE_HEADER,
    SURFACE_HEADER,
    WEAKEXO_HEADER,
    ExperimentConfig,
    run_efficiency,
    run_forecast,
    run_power,
    run_size,
    run_surface,
    run_weak_exo,
    surface_config,
    write_summaries,
)

SMALL = dict(rhos=(0.0, 0.9), Ts=(50,), reps=150, seed=77)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(reps=10)
    with pytest.raises(ValueError):
        ExperimentConfig(rhos=(1.2,))
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("OLS", "GLS"))


def test_efficiency_summaries_and_identity():
    out = run_efficiency(ExperimentConfig(**SMALL))
    assert len(out) == 4  # 2 cells x 2 arms
    for s in out:
        assert s.method in ("OLS", "DynReg")
        assert s.mse == s.bias * s.bias + s.variance  # exact by construction
        assert s.reps_used == 150
    by_cell = {(s.rho, s.method): s for s in out}
    # serial correlation inflates the static arm only
    assert by_cell[(0.9, "OLS")].mse > 3 * by_cell[(0.9, "DynReg")].mse
    assert by_cell[(0.9, "DynReg")].re_est == pytest.approx(
        by_cell[(0.9, "OLS")].mse / by_cell[(0.9, "DynReg")].mse
    )
    assert by_cell[(0.9, "DynReg")].lag_median is not None
    assert by_cell[(0.9, "OLS")].lag_median is None


def test_size_summaries():
    out = run_size(ExperimentConfig(**SMALL))
    assert len(out) == 2 * len(METHODS)
    for s in out:
        assert 0.0 <= s.rejection <= 1.0
        assert s.mc_se == pytest.approx(
            np.sqrt(s.rejection * (1 - s.rejection) / s.reps_used)
        )
    ols_09 = [s for s in out if s.method == "OLS" and s.rho == 0.9][0]
    dyn_09 = [s for s in out if s.method == "DynReg" and s.rho == 0.9][0]
    assert ols_09.rejection > 0.3  # badly oversized
    assert dyn_09.rejection < 0.15


def test_methods_subset_respected():
    cfg = ExperimentConfig(rhos=(0.0,), Ts=(50,), reps=120, seed=3,
                           methods=("OLS", "DynReg"))
    out = run_size(cfg)
    assert sorted(s.method for s in out) == ["DynReg", "OLS"]


def test_power_beta_one_reproduces_size():
    cfg = ExperimentConfig(rhos=(0.5,), Ts=(50,), reps=150, seed=9,
                           beta_grid=(1.0, 1.2))
    size = {s.method: s.rejection for s in run_size(cfg)}
    power = run_power(cfg)
    at_one = {s.method: s.rejection for s in power if s.beta_true == 1.0}
    assert at_one == size
    at_alt = {s.method: s.rejection for s in power if s.beta_true == 1.2}
    assert at_alt["DynReg"] >= at_one["DynReg"]


def test_power_requires_unit_beta():
    with pytest.raises(ValueError):
        run_power(ExperimentConfig(beta_grid=(1.1, 1.2)))


def test_surface_rows_and_monotone_nw():
    cfg = ExperimentConfig(rhos=(0.0, 0.5, 0.9), Ts=(50,), reps=300, seed=13)
    out = run_surface(cfg)
    nw = {s.rho: s.rejection for s in out if s.method == "NW"}
    assert nw[0.0] < nw[0.5] < nw[0.9]
    dynreg = [s for s in out if s.method == "DynReg"]
    for s in dynreg:
        assert abs(s.rejection - 0.05) < 0.06  # loose at 300 reps; flat layer
    ols_0 = [s for s in out if s.method == "OLS" and s.rho == 0.0][0]
    assert abs(ols_0.rejection - 0.05) < 0.04


def test_surface_config_uses_dense_grids():
    dense = surface_config(ExperimentConfig())
    assert len(dense.rhos) == 12
    assert dense.Ts == (50, 200, 500, 1000, 1500, 2000, 2500)


def test_weak_exo_summary_shape():
    out = run_weak_exo(ExperimentConfig(Ts=(50,), reps=200, seed=5))
    assert len(out) == len(METHODS)
    ols = [s for s in out if s.method == "OLS"][0]
    dyn = [s for s in out if s.method == "DynReg"][0]
    assert ols.bias > 0.15  # inconsistent under weak exogeneity
    assert abs(dyn.bias) < 0.1
    assert ols.rejection_alt is not None and ols.beta_alt == 0.8


def test_seed_reproducibility_and_thread_invariance():
    cfg1 = ExperimentConfig(rhos=(0.5,), Ts=(50,), reps=160, seed=42, threads=1)
    cfg2 = ExperimentConfig(rhos=(0.5,), Ts=(50,), reps=160, seed=42, threads=2)
    a = run_size(cfg1)
    b = run_size(cfg1)
    c = run_size(cfg2)
    assert a == b
    assert a == c  # bitwise identical summaries regardless of worker count


def test_seed_changes_results():
    base = dict(rhos=(0.5,), Ts=(50,), reps=150)
    a = run_size(ExperimentConfig(seed=1, **base))
    b = run_size(ExperimentConfig(seed=2, **base))
    assert any(x.rejection != y.rejection for x, y in zip(a, b))


# ------------------------------------------------------------------- CSVs


def test_csv_headers_and_determinism(tmp_path):
    cfg = ExperimentConfig(rhos=(0.3,), Ts=(50,), reps=120, seed=7)
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    run_size(cfg, out_path=p1)
    run_size(cfg, out_path=p2)
    t1, t2 = open(p1).read(), open(p2).read()
    assert t1 == t2
    assert t1.splitlines()[0] == SIZE_HEADER

    eff = run_efficiency(cfg, out_path=str(tmp_path / "eff.csv"))
    text = open(tmp_path / "eff.csv").read()
    assert text.splitlines()[0] == EFFICIENCY_HEADER
    assert len(text.splitlines()) == 1 + len(eff)


def test_csv_resume_skips_completed_cells(tmp_path):
    path = str(tmp_path / "size.csv")
    cfg = ExperimentConfig(rhos=(0.3,), Ts=(50,), reps=120, seed=7)
    run_size(cfg, out_path=path)
    before = open(path).read()
    # a second run over a superset grid appends only the new cell
    cfg2 = ExperimentConfig(rhos=(0.3, 0.5), Ts=(50,), reps=120, seed=7)
    run_size(cfg2, out_path=path)
    after = open(path).read()
    assert after.startswith(before)
    assert after.count("\n") == 1 + 2 * len(METHODS)


def test_csv_refuses_foreign_header(tmp_path):
    path = tmp_path / "size.csv"
    path.write_text("something,else\n1,2\n")
    cfg = ExperimentConfig(rhos=(0.3,), Ts=(50,), reps=120, seed=7)
    with pytest.raises(ValueError):
        run_size(cfg, out_path=str(path))


def test_write_summaries_families(tmp_path):
    cfg = ExperimentConfig(rhos=(0.3,), Ts=(50,), reps=120, seed=7)
    size = run_size(cfg)
    eff = run_efficiency(cfg)
    power = run_power(ExperimentConfig(rhos=(0.3,), Ts=(50,), reps=120, seed=7,
                                       beta_grid=(1.0, 1.3)))
    wx = run_weak_exo(ExperimentConfig(Ts=(50,), reps=120, seed=7))
    fc = run_forecast(ExperimentConfig(rhos=(0.3,), Ts=(60,), reps=120, seed=7))
    for family, rows, header in [
        ("size", size, SIZE_HEADER),
        ("efficiency", eff, EFFICIENCY_HEADER),
        ("power", power, POWER_HEADER),
        ("surface", size, SURFACE_HEADER),
        ("weakexo", wx, WEAKEXO_HEADER),
        ("forecast", fc, FORECAST_HEADER),
    ]:
        path = tmp_path / f"{family}.csv"
        write_summaries(rows, str(path), family)
        lines = path.read_text().splitlines()
        assert lines[0] == header
        assert len(lines) == 1 + len(rows)
        # 17-significant-digit floats round-trip; '.' decimal separator
        assert "," in lines[1] and ";" not in lines[1]


def test_float_formatting_round_trips(tmp_path):
    cfg = ExperimentConfig(rhos=(0.9,), Ts=(50,), reps=150, seed=21)
    out = run_efficiency(cfg)
    path = tmp_path / "eff.csv"
    write_summaries(out, str(path), "efficiency")
    line = path.read_text().splitlines()[1].split(",")
    dyn = [s for s in out if s.method == "OLS"][0]
    assert float(line[5]) == dyn.bias
    assert float(line[6]) == dyn.variance
    assert float(line[7]) == dyn.mse
