"""Interval length map, interval grid and the piecewise frozen-slow-state approximants.

The horizon ``[0, T]`` is cut into intervals of slow-time length ``eps * S``.
On each interval the slow state is frozen at its value ``xi_l`` at the left
knot, the fast state ``y`` restarts from the true fast state and follows the
frozen fast dynamics, and ``xi`` integrates ``f(xi_l, y, 0)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from spavg.integrate import (
    DEFAULT_CONFIG,
    FAST,
    SLOW,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    solve,
)
from spavg.logreal import LogReal
from spavg.model import SystemSpec

MAX_GRID_POINTS = 2_000_000


class GridResolutionError(ValueError):
    """The interval grid cannot be materialized in double precision / memory."""


# --- interval length -----------------------------------------------------------


def _log_residual(u: float, L: float, T: float, c: float) -> float:
    """``ln(S e^{TL(1 + S L e^{LS})}) - ln(eps^{-1/4})`` at ``S = e^u``."""
    inner = u + L * math.exp(u)
    if inner > 700.0:
        return math.inf
    return u + T * L + T * L * L * math.exp(inner) - c


def solve_Seps(L: float, T: float, eps: float) -> float:
    """Positive root ``S`` of ``eps**(-1/4) = S * exp(T L (1 + S L exp(L S)))``.

    Solved for ``u = ln S`` by bracketing, bisection and a Newton polish. The
    right-hand side is evaluated through its logarithm, so no intermediate
    overflows even when the bracket reaches large ``S``.
    """
    if not (L > 0 and T > 0):
        raise ValueError("L and T must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    c = -0.25 * math.log(eps)
    F = lambda u: _log_residual(u, L, T, c)  # noqa: E731

    lo = c - T * L - 1.0
    step = 1.0
    while F(lo) >= 0:
        lo -= step
        step *= 2
    hi = max(lo + 1.0, 0.0)
    step = 1.0
    while F(hi) <= 0:
        hi += step
        step *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if F(mid) < 0:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    for _ in range(4):
        r = F(u)
        if r == 0 or not math.isfinite(r):
            break
        S = math.exp(u)
        dr = 1.0 + T * L * L * math.exp(u + L * S) * (1.0 + L * S)
        u_new = u - r / dr
        if not (lo <= u_new <= hi) or abs(F(u_new)) >= abs(r):
            break
        u = u_new
    return math.exp(u)


def seps_relative_residual(S: float, L: float, T: float, eps: float) -> float:
    """``|eps^{-1/4} - RHS(S)| / eps^{-1/4}`` computed without overflow."""
    r = _log_residual(math.log(S), L, T, -0.25 * math.log(eps))
    return abs(math.expm1(r)) if math.isfinite(r) else math.inf


# --- time grid -----------------------------------------------------------------


@dataclass(frozen=True)
class EpsGrid:
    """Uniform grid with spacing ``eps * S_eps`` closed by ``T``.

    ``t_grid`` is ``None`` when the grid is too fine to store (``resolvable``
    false); ``index_set`` is a lazy ``range`` either way.
    """

    eps: float
    S_eps: float
    T: float
    spacing: float
    n_floor: int
    t_grid: np.ndarray | None
    degenerate: bool = False

    @property
    def index_set(self) -> range:
        return range(self.n_floor + 1)

    @property
    def resolvable(self) -> bool:
        return self.t_grid is not None

    @property
    def n_intervals(self) -> int:
        if self.t_grid is not None:
            return len(self.t_grid) - 1
        return self.n_floor + 1

    def interval(self, l: int):
        """``(t_l, t_{l+1})``; the trailing index of an exact grid is the point interval ``[T, T]``."""
        if self.t_grid is None:
            raise GridResolutionError("grid not materialized")
        if l == len(self.t_grid) - 1:
            return self.T, self.T
        return float(self.t_grid[l]), float(self.t_grid[l + 1])


def _floor_quotient(T: float, eps: float, S: float) -> int:
    """``floor(T / (eps S))`` in exact arithmetic, snapping quotients within rounding of an integer."""
    q = Fraction(T) / (Fraction(eps) * Fraction(S))
    k = round(q)
    if k > 0 and abs(q - k) <= Fraction(1, 2**46) * k:
        return int(k)
    return math.floor(q)


def build_time_grid(eps: float, S_eps: float, T: float, max_points: int = MAX_GRID_POINTS) -> EpsGrid:
    """Knots ``0 = t_0 < t_1 < ... = T`` with spacing ``eps * S_eps`` (last interval possibly shorter)."""
    if not (eps > 0 and S_eps > 0 and T > 0):
        raise ValueError("eps, S_eps and T must be positive")
    h = eps * S_eps
    n = _floor_quotient(T, eps, S_eps)
    if h >= T:
        return EpsGrid(eps, S_eps, T, h, n, np.array([0.0, T]), degenerate=True)
    too_fine = h <= 64 * math.ulp(T) or n + 2 > max_points
    if too_fine:
        return EpsGrid(eps, S_eps, T, h, n, None)
    t = np.arange(n + 1, dtype=float) * h
    t = t[t < T - 16 * math.ulp(T)]
    t = np.append(t, T)
    return EpsGrid(eps, S_eps, T, h, n, t)


# --- frozen-slow-state approximants ------------------------------------------------


@dataclass
class SchemeRun:
    """Piecewise approximants on an :class:`EpsGrid` plus per-interval error signals."""

    grid: EpsGrid
    xi_knots: np.ndarray
    xi_pieces: list
    y_pieces: list
    Delta: np.ndarray | None = None
    d: np.ndarray | None = None
    D: np.ndarray | None = None
    refinement_change: float | None = None

    @property
    def xi(self) -> Trajectory:
        """``xi`` on ``[0, T]`` as one (continuous) trajectory."""
        ts, xs, ds = [], [], []
        for k, p in enumerate(self.xi_pieces):
            sl = slice(0 if k == 0 else 1, None)
            ts.append(p.times[sl])
            xs.append(p.states[sl])
            ds.append(p.derivs[sl])
        return Trajectory(np.concatenate(ts), np.concatenate(xs), np.concatenate(ds), SLOW)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "t_l", "Delta_l", "d_l", "D_l"])
        for l in range(len(self.Delta)):
            t_l = self.grid.interval(l)[0]
            w.writerow([l, repr(float(t_l)), repr(float(self.Delta[l])), repr(float(self.d[l])),
                        repr(float(self.D[l]))])
        return buf.getvalue()


def construct_xi_y(sys: SystemSpec, grid: EpsGrid, z_full: Trajectory, x0,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> SchemeRun:
    """Build ``xi`` and ``y`` interval by interval.

    On ``[t_l, t_{l+1}]``: ``eps y' = g(xi_l, y, 0)`` from ``y(t_l) = z(t_l)`` and
    ``xi(t) = xi_l + int_{t_l}^t f(xi_l, y(s), 0) ds``. Both are integrated
    together in fast time, so each interval spans at most ``S_eps`` units.
    """
    if not grid.resolvable:
        raise GridResolutionError(
            f"interval length eps*S = {grid.spacing:.3g} gives ~{grid.n_floor:.3g} intervals; "
            "use scheme_limit for this grid"
        )
    eps = grid.eps
    n, m = sys.n, sys.m
    f, g = sys.f, sys.g
    xi_l = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    knots = [xi_l.copy()]
    xi_pieces, y_pieces = [], []
    for l in range(grid.n_intervals):
        a, b = grid.interval(l)
        z_l = np.atleast_1d(z_full.at(a))
        if b <= a:
            xi_pieces.append(Trajectory([a], xi_l[None, :], np.zeros((1, n)), SLOW))
            y_pieces.append(Trajectory([a], z_l[None, :], np.zeros((1, m)), SLOW))
            continue
        frozen = xi_l.copy()

        def rhs(tau, w, frozen=frozen):
            y = w[:m]
            return np.concatenate([np.asarray(g(frozen, y, 0.0), dtype=float),
                                   eps * np.asarray(f(frozen, y, 0.0), dtype=float)])

        try:
            taus, ws, dws = solve(rhs, 0.0, np.concatenate([z_l, np.zeros(n)]), (b - a) / eps, cfg)
        except (IntegrationError, ValueError) as exc:
            raise IntegrationError(f"interval {l} [{a}, {b}]: {exc}") from exc
        ts = a + taus * eps
        ts[-1] = b
        dws = dws / eps
        y_pieces.append(Trajectory(ts, ws[:, :m], dws[:, :m], SLOW))
        xi_pieces.append(Trajectory(ts, frozen + ws[:, m:], dws[:, m:], SLOW))
        xi_l = frozen + ws[-1, m:]
        knots.append(xi_l.copy())
    return SchemeRun(grid=grid, xi_knots=np.array(knots[: grid.n_intervals]), xi_pieces=xi_pieces,
                     y_pieces=y_pieces)


def _signals(x_full, z_full, run, n_per):
    Delta, d, D = [], [], []
    for l in range(run.grid.n_intervals):
        a, b = run.grid.interval(l)
        s = np.linspace(a, b, n_per) if b > a else np.array([a])
        xs = np.atleast_2d(x_full.at(s))
        zs = np.atleast_2d(z_full.at(s))
        xis = np.atleast_2d(run.xi_pieces[l].at(s))
        ys = np.atleast_2d(run.y_pieces[l].at(s))
        Delta.append(np.linalg.norm(xs - xis, axis=1).max())
        d.append(np.linalg.norm(xs - run.xi_knots[l], axis=1).max())
        D.append(np.linalg.norm(zs - ys, axis=1).max())
    return np.array(Delta), np.array(d), np.array(D)


def error_signals(x_full: Trajectory, z_full: Trajectory, run: SchemeRun, grid: EpsGrid | None = None,
                  n_per_interval: int = 50) -> SchemeRun:
    """Per-interval running maxima ``Delta_l``, ``d_l``, ``D_l`` at ``t_{l+1}``.

    Maxima are taken over ``n_per_interval`` dense-output samples per interval
    and are therefore lower bounds on the true suprema; ``refinement_change``
    records the relative change when the sampling is doubled.
    """
    grid = run.grid if grid is None else grid
    if n_per_interval < 50:
        raise ValueError("need at least 50 samples per interval")
    tol = 1e-9 * max(1.0, grid.T)
    for tr in (x_full, z_full):
        if tr.t0 > tol or tr.t_end < grid.T - tol:
            raise ValueError(f"trajectory covers [{tr.t0}, {tr.t_end}], grid needs [0, {grid.T}]")
    Delta, d, D = _signals(x_full, z_full, run, n_per_interval)
    D2, d2, DD2 = _signals(x_full, z_full, run, 2 * n_per_interval)
    change = 0.0
    for lo, hi in ((Delta, D2), (d, d2), (D, DD2)):
        big = hi.max()
        if big > 0:
            change = max(change, float(np.max(hi - lo)) / big)
    run.Delta, run.d, run.D = D2, d2, DD2
    run.refinement_change = change
    return run


# --- sub-resolution grids ----------------------------------------------------------


@dataclass
class LimitScheme:
    """Scheme signals for grids too fine to materialize.

    As the interval length shrinks, ``xi`` converges to the solution of
    ``x~' = f(x~, z(t), 0)`` driven by the true fast state and ``y`` collapses
    onto ``z``. The fields bracket the signals at the actual interval length:
    ``Delta_upper = sup|x - x~| + margin`` with an explicit Gronwall margin,
    ``D_upper = 2 P S_eps``.
    """

    grid: EpsGrid
    x_limit: Trajectory
    sup_x_limit_gap: float
    margin: LogReal
    Delta_upper: LogReal
    d_upper: LogReal
    D_upper: LogReal
    extra: dict = field(default_factory=dict)


def scheme_limit(sys: SystemSpec, grid: EpsGrid, x_full: Trajectory, z_full: Trajectory, x0,
                 L: float, P: float, cfg: IntegratorConfig = DEFAULT_CONFIG, n_samples: int = 4000) -> LimitScheme:
    """Upper estimates of ``max_l Delta_l``, ``max_l d_l``, ``max_l D_l`` on an unresolvable grid.

    With ``h = eps S`` and constants ``L``, ``P``, the chained frozen-state
    approximant differs from the driven limit ``x~`` by at most
    ``P (h + 2 S) (exp(L (T + h)) - 1)``; ``y`` stays within ``P S`` of ``y(t_l)``
    and ``z`` within ``P S`` of ``z(t_l)``.
    """
    z_at = z_full.at
    f = sys.f
    T = grid.T

    def rhs(t, x):
        return np.asarray(f(x, np.atleast_1d(z_at(min(t, T))), 0.0), dtype=float)

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    slow_cfg = IntegratorConfig(method=cfg.method, h=cfg.h * grid.eps, rel_tol=cfg.rel_tol,
                                abs_tol=cfg.abs_tol, max_steps=cfg.max_steps,
                                max_step=min(cfg.max_step * grid.eps, 0.5 * grid.eps))
    ts, xs, dxs = solve(rhs, 0.0, x0, T, slow_cfg)
    x_lim = Trajectory(ts, xs, dxs, SLOW)
    s = np.linspace(0.0, T, n_samples)
    gap = float(np.linalg.norm(np.atleast_2d(x_full.at(s)) - np.atleast_2d(x_lim.at(s)), axis=1).max())
    h, S = grid.spacing, grid.S_eps
    grow = LogReal.exp(L * (T + h)) - 1.0
    margin = LogReal.from_float(P * (h + 2.0 * S)) * grow
    Delta_up = LogReal.from_float(gap) + margin
    d_up = Delta_up + LogReal.from_float(h * P)
    D_up = LogReal.from_float(2.0 * P * S)
    return LimitScheme(grid=grid, x_limit=x_lim, sup_x_limit_gap=gap, margin=margin,
                       Delta_upper=Delta_up, d_upper=d_up, D_upper=D_up)
