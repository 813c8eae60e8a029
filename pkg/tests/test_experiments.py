import math

import numpy as np
import pytest

from spavg import ConstantSet, LogReal, closeness_sweep, fit_order, reproduce_figures
from spavg.experiments import FigureConfig, SweepResult, SweepRow

EXAMPLE_C = ConstantSet(L=7.3, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=10.0)


@pytest.fixture(scope="module")
def two_eps_sweep():
    from spavg import builtin_example

    sys_, dom, att = builtin_example()
    return closeness_sweep(sys_, dom, att, [2.0], [0.0, 1.5], 10.0, None, [0.015, 0.15],
                           constants=EXAMPLE_C, gamma=lambda s: 3.0 / s)


def test_smaller_eps_is_closer(two_eps_sweep):
    rows = two_eps_sweep.rows
    assert [r.eps for r in rows] == [0.015, 0.15]
    assert rows[0].sup_x_err < rows[1].sup_x_err
    assert rows[0].sup_z_gap <= 2 * rows[1].sup_z_gap
    assert two_eps_sweep.t_a == 1.0


def test_rows_respect_K(two_eps_sweep):
    for r in two_eps_sweep.rows:
        assert r.ok and r.sup_x_err >= 0 and r.sup_z_gap >= 0
        assert LogReal.from_float(r.sup_x_err) <= r.K_eps
        # F is undefined when the interval length is below the coarse-grid threshold
        assert r.F_eps is None and r.z_gap_bound is None


def test_single_eps_sweep(example):
    sys_, dom, att = example
    res = closeness_sweep(sys_, dom, att, [1.0], [1.0, 0.0], 2.0, 0.5, [0.1])
    assert len(res.rows) == 1 and res.rows[0].ok and res.rows[0].K_eps is None


def test_z_gap_bound_attached_when_F_defined(example):
    sys_, dom, att = example
    c = ConstantSet(L=0.5, P=5.1, L_av=1.2, R=2.5, z_bar=1.5, T=2.0)
    res = closeness_sweep(sys_, dom, att, [1.0], [1.0, 0.5], 2.0, 0.5, [0.1], constants=c)
    r = res.rows[0]
    assert r.F_eps is not None and r.z_gap_bound >= r.F_eps


def test_failed_rows_do_not_stop_sweep(example):
    sys_, dom, att = example
    res = closeness_sweep(sys_, dom, att, [2.4], [0.0, 1.5], 2.0, None, [0.2, 0.1])
    bad = [r for r in res.rows if not r.ok]
    assert len(bad) == 1 and bad[0].eps == 0.2 and math.isnan(bad[0].sup_x_err)
    assert "failed" in res.to_csv().splitlines()[-1]


def test_domain_exit_marks_row(example):
    from spavg import SystemSpec
    from spavg.model import DomainSpec

    _, dom, att = example
    drift = SystemSpec(n=1, m=2, f=lambda x, z, e: np.ones(1), g=lambda x, z, e: np.zeros(2),
                       f_av=lambda x: np.ones(1))
    small = DomainSpec(R=1.0, M=dom.M, eps1=0.15)
    res = closeness_sweep(drift, small, att, [0.5], [1.0, 0.0], 2.0, None, [0.1, 0.15])
    assert all(r.status.startswith("failed: DomainError") for r in res.rows)


def test_sweep_preconditions(example):
    sys_, dom, att = example
    with pytest.raises(ValueError):
        closeness_sweep(sys_, dom, att, [1.0], [1.0, 0.0], 2.0, 3.0, [0.1])
    with pytest.raises(ValueError):
        closeness_sweep(sys_, dom, att, [1.0], [1.0, 0.0], 2.0, None, [0.1], n_grid=100)


def test_sweep_csv_layout(two_eps_sweep):
    lines = two_eps_sweep.to_csv().splitlines()
    assert lines[0] == "eps,sup_x_err,sup_z_gap,log_K,log_F,status,wall_ms"
    assert lines[1].startswith("0.015,") and lines[1].endswith(",ok,nan")
    timed = two_eps_sweep.to_csv(include_timing=True).splitlines()
    assert float(timed[1].split(",")[-1]) > 0


@pytest.mark.parametrize("power", [1.0, 0.5])
def test_fit_order_synthetic(power):
    eps = 0.15 * 2.0 ** -np.arange(8)
    fit = fit_order(list(zip(eps, 3.0 * eps**power)))
    assert fit.slope == pytest.approx(power, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    slope, intercept, r2 = fit
    assert intercept == pytest.approx(math.log(3.0), abs=1e-9)


def test_fit_order_drops_and_notes():
    eps = 10.0 ** -np.arange(1, 7)
    errs = list(np.sqrt(eps))
    errs[2] = 0.0
    fit = fit_order(list(zip(eps, errs)))
    assert fit.n_used == 5 and any("dropped" in n for n in fit.notes)
    assert fit.supports_sqrt_order
    short = fit_order(list(zip(eps[:4] * 1e-1 + 0.01, np.sqrt(eps[:4]))))
    assert any("decades" in n for n in short.notes)
    with pytest.raises(ValueError):
        fit_order([(0.1, 1.0), (0.01, 0.1), (0.001, -1.0), (1e-4, 0.0)])


def test_fit_order_uses_successful_rows_only():
    rows = [SweepRow(eps=e, sup_x_err=e) for e in (0.1, 0.01, 0.001, 1e-4)]
    rows.append(SweepRow(eps=0.2, status="failed: x"))
    fit = fit_order(SweepResult(rows=rows, t_a=1.0, T=10.0))
    assert fit.n_used == 4 and fit.slope == pytest.approx(1.0)


@pytest.fixture(scope="module")
def figures():
    return reproduce_figures()


def test_figure_one_closeness(figures):
    x_small, x_big = figures["x"][1], figures["x"][0]
    xav = figures["x_av"]
    assert np.abs(x_small - xav).max() < np.abs(x_big - xav).max()
    assert figures["fig1.csv"].splitlines()[0] == "t,x_eps_0.15,x_eps_0.015,x_av"


def test_figure_two_settles(figures):
    t = figures["t"]
    for eps, zn in zip((0.15, 0.015), figures["znorm"]):
        outside = np.nonzero(np.abs(zn - 1) > 0.05)[0]
        settle = t[outside[-1]] if len(outside) else 0.0
        assert settle <= 5 * eps * math.log(100 * 0.5)


def test_identical_eps_series_coincide():
    out = reproduce_figures(FigureConfig(eps_values=(0.1, 0.1), T=2.0, n_points=300))
    assert np.array_equal(out["x"][0], out["x"][1])
    assert np.array_equal(out["znorm"][0], out["znorm"][1])


def test_figure_files(tmp_path):
    reproduce_figures(FigureConfig(T=1.0, n_points=101), out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig1.csv", "fig1.svg", "fig2.csv", "fig2.svg"]
    svg = (tmp_path / "fig1.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 3 and "reduced x_av" in svg
