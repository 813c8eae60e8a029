"""Average vector field along boundary-layer trajectories and its convergence envelope."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from spavg.integrate import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    Trajectory,
    integrate_boundary_layer_batch,
)
from spavg.model import SystemSpec

DEFAULT_T_AV = 500.0
DEFAULT_DTAU = 0.01


class AverageNotWellDefined(RuntimeError):
    """The finite-horizon averages depend on the fast initial condition."""


@dataclass(frozen=True)
class AverageResult:
    x: np.ndarray
    f_av: np.ndarray
    T_av: float
    cauchy_gap: float
    z0_spread: float = 0.0


@dataclass(frozen=True)
class WellDefinedReport:
    x: np.ndarray
    averages: np.ndarray
    z0_spread: float
    passed: bool


@dataclass
class GammaEnvelope:
    """Sampled envelope ``s -> gamma_hat(s)`` of finite-window averaging errors."""

    s_grid: np.ndarray
    gamma_hat: np.ndarray
    s_star: float
    n_samples: int = 0
    per_sample: list = field(default_factory=list, repr=False)

    def at(self, s: float) -> float:
        """Log-log interpolation of the envelope; raises outside the sampled range."""
        sg, gh = self.s_grid, self.gamma_hat
        if s < sg[0] * (1 - 1e-12) or s > sg[-1] * (1 + 1e-12):
            raise ValueError(f"s={s} outside envelope grid [{sg[0]}, {sg[-1]}]: extend s_grid")
        if np.any(gh <= 0):
            return float(np.interp(s, sg, gh))
        return float(np.exp(np.interp(math.log(s), np.log(sg), np.log(gh))))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "gamma_hat"])
        for s, g in zip(self.s_grid, self.gamma_hat):
            w.writerow([repr(float(s)), repr(float(g))])
        return buf.getvalue()


def _eval_f_along(sys: SystemSpec, x: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """``f(x, z, 0)`` for every row of ``zs``; returns shape ``(N, n)``."""
    if sys.vectorized:
        X = np.broadcast_to(x[:, None], (len(x), zs.shape[0]))
        return np.asarray(sys.f(X, zs.T, 0.0), dtype=float).reshape(len(x), -1).T
    return np.array([np.asarray(sys.f(x, z, 0.0), dtype=float) for z in zs])


def _refined_times(traj: Trajectory, dtau: float) -> np.ndarray:
    t = traj.times
    h = np.diff(t)
    pieces = np.maximum(1, np.ceil(h / dtau - 1e-9)).astype(int)
    frac = np.concatenate([np.arange(p) / p for p in pieces])
    starts = np.repeat(t[:-1], pieces)
    widths = np.repeat(h, pieces)
    return np.append(starts + frac * widths, t[-1])


def running_integral(sys: SystemSpec, x, traj: Trajectory, dtau: float = DEFAULT_DTAU):
    """Cumulative trapezoid of ``f(x, phi_b(tau), 0)`` along a boundary-layer run.

    The accepted steps are refined by dense output to spacing at most ``dtau``.
    Returns ``(taus, cumulative)`` with ``cumulative[0] = 0``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    taus = _refined_times(traj, dtau)
    vals = _eval_f_along(sys, x, traj.at(taus))
    incr = 0.5 * np.diff(taus)[:, None] * (vals[1:] + vals[:-1])
    cum = np.vstack([np.zeros((1, vals.shape[1])), np.cumsum(incr, axis=0)])
    return taus, cum


def _averages(sys, xs, z0s, T_av, cfg, dtau):
    trajs = integrate_boundary_layer_batch(sys, xs, z0s, T_av, cfg)
    out = []
    for x, tr in zip(xs, trajs):
        taus, cum = running_integral(sys, x, tr, dtau)
        full = cum[-1] / T_av
        half_I = np.array([np.interp(T_av / 2, taus, cum[:, j]) for j in range(cum.shape[1])])
        half = half_I / (T_av / 2)
        out.append((full, float(np.linalg.norm(full - half))))
    return out


def compute_fav(sys: SystemSpec, x, z0, T_av: float = DEFAULT_T_AV,
                cfg: IntegratorConfig = DEFAULT_CONFIG, dtau: float = DEFAULT_DTAU) -> AverageResult:
    """Finite-horizon average ``(1/T_av) * int_0^T_av f(x, phi_b(s, x, z0), 0) ds``.

    ``cauchy_gap`` compares against the half-horizon average.
    """
    if not T_av > 0:
        raise ValueError("T_av must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ((fav, gap),) = _averages(sys, x[None, :], np.atleast_2d(np.asarray(z0, dtype=float)), T_av, cfg, dtau)
    return AverageResult(x=x, f_av=fav, T_av=float(T_av), cauchy_gap=gap, z0_spread=0.0)


def compute_fav_many(sys: SystemSpec, xs, z0s, T_av: float = DEFAULT_T_AV,
                     cfg: IntegratorConfig = DEFAULT_CONFIG, dtau: float = DEFAULT_DTAU) -> list:
    """:func:`compute_fav` over paired rows of ``xs`` and ``z0s`` (batched when possible)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    z0s = np.atleast_2d(np.asarray(z0s, dtype=float))
    res = _averages(sys, xs, z0s, T_av, cfg, dtau)
    return [AverageResult(x=x, f_av=fav, T_av=float(T_av), cauchy_gap=gap) for x, (fav, gap) in zip(xs, res)]


def _max_pairwise(vals: np.ndarray) -> float:
    if len(vals) < 2:
        return 0.0
    d = vals[:, None, :] - vals[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def check_average_well_defined(sys: SystemSpec, x_samples, z0_samples, T_av: float = DEFAULT_T_AV,
                               tol: float = 0.05, cfg: IntegratorConfig = DEFAULT_CONFIG,
                               dtau: float = DEFAULT_DTAU) -> list:
    """Spread of the finite-horizon averages across ``z0_samples``, per ``x``."""
    z0s = np.atleast_2d(np.asarray(z0_samples, dtype=float))
    reports = []
    for x in np.atleast_2d(np.asarray(x_samples, dtype=float)):
        xs = np.repeat(x[None, :], len(z0s), axis=0)
        avgs = np.array([fav for fav, _ in _averages(sys, xs, z0s, T_av, cfg, dtau)])
        spread = _max_pairwise(avgs)
        reports.append(WellDefinedReport(x=x, averages=avgs, z0_spread=spread, passed=spread <= tol))
    return reports


def estimate_gamma(sys: SystemSpec, f_av_fn, x_samples, z0_samples, s_grid, tau_prime_samples,
                   cfg: IntegratorConfig = DEFAULT_CONFIG, dtau: float = DEFAULT_DTAU) -> GammaEnvelope:
    """Envelope of ``(1/s) |int_{tau'}^{tau'+s} (f(x, phi_b, 0) - f_av(x)) dtau|``.

    The maximum is taken over every combination of ``x``, ``z0`` and ``tau'``.
    The growth factor in ``max(|x|, |z0|)`` is not separated out; on a compact
    domain the envelope absorbs it.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be positive and increasing")
    tps = np.atleast_1d(np.asarray(tau_prime_samples, dtype=float))
    if np.any(tps < 0):
        raise ValueError("tau' samples must be non-negative")
    horizon = float(tps.max() + s_grid.max())
    xs = np.atleast_2d(np.asarray(x_samples, dtype=float))
    z0s = np.atleast_2d(np.asarray(z0_samples, dtype=float))
    pairs_x = np.repeat(xs, len(z0s), axis=0)
    pairs_z = np.tile(z0s, (len(xs), 1))
    trajs = integrate_boundary_layer_batch(sys, pairs_x, pairs_z, horizon, cfg)
    gamma = np.zeros_like(s_grid)
    per_sample = []
    for x, z0, tr in zip(pairs_x, pairs_z, trajs):
        taus, cum = running_integral(sys, x, tr, dtau)
        fav = np.atleast_1d(np.asarray(f_av_fn(x), dtype=float))
        lo = np.stack([np.interp(tps, taus, cum[:, j]) for j in range(cum.shape[1])], axis=-1)
        ends = tps[:, None] + s_grid[None, :]
        hi = np.stack([np.interp(ends, taus, cum[:, j]) for j in range(cum.shape[1])], axis=-1)
        win = hi - lo[:, None, :] - s_grid[None, :, None] * fav
        vals = np.linalg.norm(win, axis=-1) / s_grid[None, :]
        sample_env = vals.max(axis=0)
        per_sample.append((x, z0, sample_env))
        gamma = np.maximum(gamma, sample_env)
    return GammaEnvelope(s_grid=s_grid, gamma_hat=gamma, s_star=float(s_grid[0]),
                         n_samples=len(per_sample) * len(tps), per_sample=per_sample)


def build_fav_field(sys: SystemSpec, z0_ref, T_av: float = DEFAULT_T_AV,
                    cfg: IntegratorConfig = DEFAULT_CONFIG, dtau: float = DEFAULT_DTAU,
                    check_z0=None, tol: float = 0.05):
    """Numerical average field ``x -> f_av(x)`` evaluated on demand and memoized.

    With ``check_z0`` given, every new ``x`` is first checked for a
    ``z0``-independent average; failure raises :class:`AverageNotWellDefined`.
    """
    z0_ref = np.atleast_1d(np.asarray(z0_ref, dtype=float))
    cache: dict = {}

    def field_fn(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        key = x.tobytes()
        hit = cache.get(key)
        if hit is not None:
            return hit.copy()
        if check_z0 is not None:
            (rep,) = check_average_well_defined(sys, x[None, :], check_z0, T_av, tol, cfg, dtau)
            if not rep.passed:
                raise AverageNotWellDefined(f"z0 spread {rep.z0_spread:.3g} > {tol} at x={x.tolist()}")
        val = compute_fav(sys, x, z0_ref, T_av, cfg, dtau).f_av
        cache[key] = val
        return val.copy()

    field_fn.cache = cache
    return field_fn
