"""Epsilon sweeps, empirical convergence orders and the example's figure datasets."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spavg.averaging import build_fav_field
from spavg.bounds import ConstantSet, bound_report
from spavg.integrate import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    integrate_boundary_layer,
    integrate_full,
    integrate_reduced,
)
from spavg.logreal import LogReal
from spavg.model import AttractorSpec, DomainSpec, SystemSpec, builtin_example
from spavg.svgplot import line_plot

SWEEP_HEADER = ["eps", "sup_x_err", "sup_z_gap", "log_K", "log_F", "status", "wall_ms"]


@dataclass
class SweepRow:
    eps: float
    sup_x_err: float = math.nan
    sup_z_gap: float = math.nan
    K_eps: LogReal | None = None
    F_eps: LogReal | None = None
    z_gap_bound: LogReal | None = None
    wall_time: float = math.nan
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class SweepResult:
    rows: list
    t_a: float
    T: float
    constants: ConstantSet | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self, include_timing: bool = False) -> str:
        """CSV rows ordered by eps. ``wall_ms`` is ``nan`` unless timing is requested,
        so that repeated runs serialize identically."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in sorted(self.rows, key=lambda r: r.eps):
            logK = r.K_eps.log() if r.K_eps is not None else math.nan
            logF = r.F_eps.log() if r.F_eps is not None else math.nan
            wall = 1000.0 * r.wall_time if include_timing else math.nan
            w.writerow([repr(float(r.eps)), repr(float(r.sup_x_err)), repr(float(r.sup_z_gap)),
                        repr(float(logK)), repr(float(logF)), r.status, repr(float(wall))])
        return buf.getvalue()


def _dense_grid(T, eps, n_min):
    return np.linspace(0.0, T, max(n_min, int(math.ceil(20 * T / eps)) + 1))


def _sweep_row(sys, dom, att, x0, z0, T, t_a, eps, cfg, constants, gamma, f_av, n_min):
    row = SweepRow(eps=eps)
    t0 = time.perf_counter()
    xt, zt = integrate_full(sys, x0, z0, eps, T, cfg, dom)
    xav = integrate_reduced(f_av, x0, T, cfg)
    bl = integrate_boundary_layer(sys, x0, z0, T / eps, cfg)
    ts = _dense_grid(T, eps, n_min)
    x_err = np.linalg.norm(np.atleast_2d(xt.at(ts)) - np.atleast_2d(xav.at(ts)), axis=1)
    row.sup_x_err = float(x_err.max())
    late = ts[ts >= t_a]
    zs = np.atleast_2d(zt.at(late))
    zb = np.atleast_2d(bl.at(late / eps))
    gaps = [abs(att.dist(a) - att.dist(b)) for a, b in zip(zs, zb)]
    row.sup_z_gap = float(max(gaps))
    if constants is not None:
        rep = bound_report(eps, constants, gamma)
        row.K_eps, row.F_eps = rep.K_eps, rep.F_eps
        if rep.F_eps is not None:
            c = constants
            lead = 2 * c.r_y * att.dist(np.asarray(z0, dtype=float))
            decay = LogReal.from_float(lead) * LogReal.exp(-(c.beta_y - c.delta_y) * t_a / eps) if lead > 0 else LogReal(0, -math.inf)
            row.z_gap_bound = decay + rep.F_eps
    row.wall_time = time.perf_counter() - t0
    return row


def closeness_sweep(sys: SystemSpec, dom: DomainSpec, att: AttractorSpec, x0, z0, T: float, t_a: float | None,
                    eps_list, cfg: IntegratorConfig = DEFAULT_CONFIG, constants: ConstantSet | None = None,
                    gamma=None, f_av=None, n_grid: int = 2000, T_av: float = 500.0) -> SweepResult:
    """Measure ``sup |x - x_av|`` and the late fast-state gap for every ``eps``.

    The reduced system uses ``f_av`` if given, else the system's analytic
    average, else a numerically averaged field. With ``constants`` the bounds
    ``K(eps)`` and ``F(eps)`` are attached (``gamma`` feeds ``K``). A failing
    row is recorded with its error message and the sweep carries on.
    """
    t_a = T / 10 if t_a is None else t_a
    if not 0 < t_a < T:
        raise ValueError("need 0 < t_a < T")
    if n_grid < 2000:
        raise ValueError("need at least 2000 grid points")
    if f_av is None:
        f_av = sys.f_av if sys.f_av is not None else build_fav_field(sys, z0, T_av, cfg)
    rows = []
    for eps in sorted(float(e) for e in eps_list):
        if not 0 < eps <= dom.eps1:
            rows.append(SweepRow(eps=eps, status=f"failed: eps outside (0, {dom.eps1}]"))
            continue
        try:
            rows.append(_sweep_row(sys, dom, att, x0, z0, T, t_a, eps, cfg, constants, gamma, f_av, n_grid))
        except Exception as exc:  # noqa: BLE001 - any sub-run failure marks the row
            rows.append(SweepRow(eps=eps, status=f"failed: {type(exc).__name__}: {exc}"))
    return SweepResult(rows=rows, t_a=t_a, T=T, constants=constants)


@dataclass
class OrderFit:
    slope: float
    intercept: float
    r2: float
    n_used: int
    notes: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))

    @property
    def supports_sqrt_order(self) -> bool:
        return self.slope >= 0.5 - 0.05


def fit_order(result, column: str = "sup_x_err") -> OrderFit:
    """Least-squares slope of ``ln(err)`` against ``ln(eps)`` over successful rows.

    ``result`` is a :class:`SweepResult` or an iterable of ``(eps, err)`` pairs.
    Non-positive errors are dropped with a note.
    """
    if isinstance(result, SweepResult):
        pairs = [(r.eps, getattr(r, column)) for r in result.rows if r.ok]
    else:
        pairs = [(float(e), float(v)) for e, v in result]
    notes = []
    kept = []
    for e, v in pairs:
        if v > 0 and math.isfinite(v):
            kept.append((e, v))
        else:
            notes.append(f"dropped eps={e!r}: value {v!r} has no logarithm")
    if len(kept) < 4:
        raise ValueError(f"need at least 4 usable rows, have {len(kept)}")
    le = np.log([e for e, _ in kept])
    lv = np.log([v for _, v in kept])
    span = (le.max() - le.min()) / math.log(10)
    if span < 2:
        notes.append(f"eps range spans {span:.2f} decades (< 2)")
    slope, icpt = np.polyfit(le, lv, 1)
    resid = lv - (icpt + slope * le)
    ss_tot = float(((lv - lv.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return OrderFit(float(slope), float(icpt), r2, len(kept), notes)


@dataclass(frozen=True)
class FigureConfig:
    eps_values: tuple = (0.15, 0.015)
    T: float = 10.0
    x0: float = 2.0
    z0: tuple = (0.0, 1.5)
    n_points: int = 2001
    integrator: IntegratorConfig = DEFAULT_CONFIG


def _csv(header, cols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*cols):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def reproduce_figures(cfg: FigureConfig = FigureConfig(), out_dir=None) -> dict:
    """Datasets for the slow-state and fast-norm figures of the built-in example.

    Returns a dict with ``fig1.csv``, ``fig2.csv``, ``fig1.svg``, ``fig2.svg``
    contents plus the raw arrays; writes the four files when ``out_dir`` is given.
    """
    sys, dom, _ = builtin_example()
    t = np.linspace(0.0, cfg.T, cfg.n_points)
    xs, zn = [], []
    for eps in cfg.eps_values:
        xt, zt = integrate_full(sys, [cfg.x0], cfg.z0, eps, cfg.T, cfg.integrator, dom)
        xs.append(xt.at(t)[:, 0])
        zn.append(np.linalg.norm(zt.at(t), axis=1))
    xav = integrate_reduced(sys.f_av, [cfg.x0], cfg.T, cfg.integrator).at(t)[:, 0]
    labels = [f"eps={e!r}" for e in cfg.eps_values]
    fig1 = _csv(["t"] + [f"x_eps_{e!r}" for e in cfg.eps_values] + ["x_av"], [t, *xs, xav])
    fig2 = _csv(["t"] + [f"znorm_eps_{e!r}" for e in cfg.eps_values], [t, *zn])
    svg1 = line_plot(t, {**dict(zip(labels, xs)), "reduced x_av": xav}, title="slow variable x(t)",
                     ylabel="x")
    svg2 = line_plot(t, dict(zip(labels, zn)), title="fast variable norm |z(t)|", ylabel="|z|")
    out = {"fig1.csv": fig1, "fig2.csv": fig2, "fig1.svg": svg1, "fig2.svg": svg2,
           "t": t, "x": xs, "x_av": xav, "znorm": zn}
    if out_dir is not None:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name in ("fig1.csv", "fig2.csv", "fig1.svg", "fig2.svg"):
            (d / name).write_text(out[name])
    return out
