"""Explicit Runge-Kutta integration of the full, boundary-layer and reduced systems.

Two schemes are provided: classical fixed-step RK4 and an adaptive
Dormand-Prince 5(4) pair. Both record the derivative at every accepted node so
trajectories can be evaluated between nodes by cubic Hermite interpolation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from spavg.model import DomainError, DomainSpec, SystemSpec

SLOW = "slow-time"
FAST = "fast-time"


class IntegrationError(RuntimeError):
    """Integration could not be completed (step budget, step-size underflow, ...)."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45-adaptive"
    h: float = 0.01
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_steps: int = 10_000_000
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.h > 0 and self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("step and tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


DEFAULT_CONFIG = IntegratorConfig()


class Trajectory:
    """Time-stamped states with derivatives for Hermite dense output.

    Attributes
    ----------
    times : ndarray, shape (N,)
        Strictly increasing sample times on ``clock``.
    states : ndarray, shape (N, k)
    derivs : ndarray, shape (N, k)
        Time derivative of the state at each node, on the same clock.
    clock : str
        ``"slow-time"`` or ``"fast-time"``.
    """

    def __init__(self, times, states, derivs=None, clock=SLOW):
        self.times = np.asarray(times, dtype=float)
        self.states = np.atleast_2d(np.asarray(states, dtype=float))
        if self.states.shape[0] != self.times.shape[0]:
            self.states = self.states.reshape(self.times.shape[0], -1)
        self.derivs = None if derivs is None else np.asarray(derivs, dtype=float).reshape(self.states.shape)
        if clock not in (SLOW, FAST):
            raise ValueError(f"unknown clock {clock!r}")
        self.clock = clock
        if self.times.ndim != 1 or len(self.times) < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states must be finite")

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def at(self, t) -> np.ndarray:
        """Evaluate the trajectory at ``t`` (scalar or array) by cubic Hermite interpolation.

        Falls back to linear interpolation when no derivatives were recorded.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        lo, hi = self.times[0], self.times[-1]
        span = max(abs(lo), abs(hi), 1.0)
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise ValueError(f"requested times outside [{lo}, {hi}]")
        if len(self.times) == 1:
            out = np.repeat(self.states[:1], len(t), axis=0)
            return out[0] if scalar else out
        t = np.clip(t, lo, hi)
        i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        t0 = self.times[i]
        h = self.times[i + 1] - t0
        s = ((t - t0) / h)[:, None]
        y0 = self.states[i]
        y1 = self.states[i + 1]
        if self.derivs is None:
            out = y0 + s * (y1 - y0)
        else:
            d0 = self.derivs[i] * h[:, None]
            d1 = self.derivs[i + 1] * h[:, None]
            s2 = s * s
            s3 = s2 * s
            out = (
                (2 * s3 - 3 * s2 + 1) * y0
                + (s3 - 2 * s2 + s) * d0
                + (-2 * s3 + 3 * s2) * y1
                + (s3 - s2) * d1
            )
        return out[0] if scalar else out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["clock", "t"] + [f"state_{j}" for j in range(self.dim)])
        for t, row in zip(self.times, self.states):
            w.writerow([self.clock, repr(float(t))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        body = rows[1:]
        clock = body[0][0] if body else SLOW
        times = [float(r[1]) for r in body]
        states = [[float(v) for v in r[2:]] for r in body]
        return cls(times, states, clock=clock)


# --- steppers ----------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _solve_rk4(rhs, t0, y0, t1, cfg):
    n = max(1, int(math.ceil((t1 - t0) / cfg.h - 1e-9)))
    if n > cfg.max_steps:
        raise IntegrationError(f"rk4-fixed needs {n} steps > max_steps={cfg.max_steps}")
    ts = t0 + (t1 - t0) * np.arange(n + 1) / n
    ts[-1] = t1
    ys = np.empty((n + 1, len(y0)))
    ds = np.empty_like(ys)
    y = np.array(y0, dtype=float)
    k1 = rhs(t0, y)
    ys[0], ds[0] = y, k1
    for i in range(n):
        t, h = ts[i], ts[i + 1] - ts[i]
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        k1 = rhs(ts[i + 1], y)
        ys[i + 1], ds[i + 1] = y, k1
    return ts, ys, ds


def _initial_step(rhs, t0, y0, f0, span, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span, cfg.max_step)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span, cfg.max_step)


_A_MAT = np.zeros((7, 7))
for _i, _row in enumerate(_A):
    _A_MAT[_i, : len(_row)] = _row
_B_VEC = np.array(_B)
_E_VEC = np.array(_E)


def _solve_rk45(rhs, t0, y0, t1, cfg):
    y = np.array(y0, dtype=float)
    t = t0
    f = rhs(t, y)
    span = t1 - t0
    h = _initial_step(rhs, t0, y, f, span, cfg)
    ts, ys, ds = [t], [y], [f]
    K = np.empty((7, len(y)))
    rtol, atol, hmax = cfg.rel_tol, cfg.abs_tol, cfg.max_step
    inv_n = 1.0 / len(y)
    attempts = 0
    while t < t1:
        if attempts >= cfg.max_steps:
            raise IntegrationError(f"step budget exhausted at t={t} (max_steps={cfg.max_steps})")
        attempts += 1
        last = t + 1.01 * h >= t1
        if last:
            h = t1 - t
        K[0] = f
        for s in range(1, 6):
            K[s] = rhs(t + _C[s] * h, y + h * (_A_MAT[s, :s] @ K[:s]))
        y_new = y + h * (_B_VEC[:6] @ K[:6])
        t_new = t1 if last else t + h
        f_new = rhs(t_new, y_new)
        K[6] = f_new
        err = h * (_E_VEC @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        q = err / scale
        en = math.sqrt(float(q @ q) * inv_n)
        if en <= 1.0:
            t, y, f = t_new, y_new, f_new
            ts.append(t)
            ys.append(y)
            ds.append(f)
            fac = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
            h = min(h * fac, hmax)
        else:
            h *= max(0.2, 0.9 * en ** -0.2)
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t}")
    return np.array(ts), np.array(ys), np.array(ds)


def solve(rhs, t0, y0, t1, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``; return ``(times, states, derivs)``."""
    if not t1 > t0:
        raise ValueError("t1 must exceed t0 (backward integration unsupported)")
    if cfg.method == "rk4-fixed":
        return _solve_rk4(rhs, t0, y0, t1, cfg)
    return _solve_rk45(rhs, t0, y0, t1, cfg)


# --- system-level integrators -------------------------------------------------


def _guarded_g(sys: SystemSpec):
    g = sys.g
    excluded = sys.excluded_region

    def call(x, z, eps, tau):
        hit = False if excluded is None else excluded(z)
        if hit is not False and (hit is True or np.any(hit)):
            raise DomainError(f"trajectory reached the excluded region at z={np.asarray(z).tolist()}", point=z, time=tau)
        return np.asarray(g(x, z, eps), dtype=float)

    return call


def first_domain_exit(x_traj: Trajectory, z_traj: Trajectory, dom: DomainSpec, slack=1e-9):
    """First sample time at which ``(x, z)`` leaves ``B_R(0) x M``, or ``None``."""
    for t, x, z in zip(x_traj.times, x_traj.states, z_traj.states):
        if not dom.contains_x(x, slack) or not dom.M.contains(z, slack):
            return float(t)
    return None


def integrate_full(sys: SystemSpec, x0, z0, eps: float, T: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                   dom: DomainSpec | None = None):
    """Integrate the full system on ``[0, T]`` and return ``(x_traj, z_traj)`` in slow time.

    The combined state is advanced in fast time ``tau = t / eps`` so the fast
    subsystem is O(1); ``cfg.h`` and ``cfg.max_step`` are therefore in fast-time
    units. When ``dom`` is given, leaving ``B_R(0) x M`` raises
    :class:`DomainError` carrying the first exit time.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if dom is not None and eps > dom.eps1:
        raise ValueError(f"eps={eps} exceeds eps1={dom.eps1}")
    if not T > 0:
        raise ValueError("T must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    n, f = sys.n, sys.f
    g = _guarded_g(sys)

    def rhs(tau, w):
        x, z = w[:n], w[n:]
        return np.concatenate([eps * np.asarray(f(x, z, eps), dtype=float), g(x, z, eps, tau * eps)])

    taus, ws, dws = solve(rhs, 0.0, np.concatenate([x0, z0]), T / eps, cfg)
    ts = taus * eps
    ts[-1] = T
    dws = dws / eps
    xt = Trajectory(ts, ws[:, :n], dws[:, :n], SLOW)
    zt = Trajectory(ts, ws[:, n:], dws[:, n:], SLOW)
    if dom is not None:
        t_exit = first_domain_exit(xt, zt, dom)
        if t_exit is not None:
            raise DomainError(f"trajectory left B_R(0) x M at t={t_exit}", time=t_exit)
    return xt, zt


def integrate_boundary_layer(sys: SystemSpec, x_frozen, z0, tau_end: float, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Solve ``dz/dtau = g(x_frozen, z, 0)`` on ``[0, tau_end]`` (fast-time clock)."""
    if not tau_end > 0:
        raise ValueError("tau_end must be positive")
    xf = np.atleast_1d(np.asarray(x_frozen, dtype=float))
    g = _guarded_g(sys)

    def rhs(tau, z):
        return g(xf, z, 0.0, tau)

    taus, zs, dzs = solve(rhs, 0.0, np.atleast_1d(np.asarray(z0, dtype=float)), tau_end, cfg)
    return Trajectory(taus, zs, dzs, FAST)


def integrate_boundary_layer_batch(sys: SystemSpec, xs, z0s, tau_end: float,
                                   cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Boundary-layer runs for many ``(x_frozen, z0)`` pairs at once.

    ``xs`` has shape ``(k, n)`` and ``z0s`` shape ``(k, m)``. Vectorized systems
    are advanced as one stacked ODE (shared step sequence, so every run meets
    the tolerance); others fall back to independent runs.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    z0s = np.atleast_2d(np.asarray(z0s, dtype=float))
    if xs.shape[0] != z0s.shape[0]:
        raise ValueError("xs and z0s must have the same number of rows")
    if not sys.vectorized or xs.shape[0] == 1:
        return [integrate_boundary_layer(sys, x, z, tau_end, cfg) for x, z in zip(xs, z0s)]
    if not tau_end > 0:
        raise ValueError("tau_end must be positive")
    k, m = z0s.shape
    X = xs.T.copy()
    g = _guarded_g(sys)

    def rhs(tau, w):
        return g(X, w.reshape(m, k), 0.0, tau).reshape(-1)

    taus, ws, dws = solve(rhs, 0.0, z0s.T.reshape(-1), tau_end, cfg)
    ws = ws.reshape(len(taus), m, k)
    dws = dws.reshape(len(taus), m, k)
    return [Trajectory(taus, ws[:, :, j], dws[:, :, j], FAST) for j in range(k)]


def integrate_reduced(f_av, x0, T: float, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Solve the reduced average system ``x' = f_av(x)`` on ``[0, T]``."""
    if not T > 0:
        raise ValueError("T must be positive")

    def rhs(t, x):
        return np.atleast_1d(np.asarray(f_av(x), dtype=float))

    ts, xs, dxs = solve(rhs, 0.0, np.atleast_1d(np.asarray(x0, dtype=float)), T, cfg)
    return Trajectory(ts, xs, dxs, SLOW)
