"""Closed-form closeness bounds evaluated in log-domain arithmetic."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields

from spavg.logreal import LogReal
from spavg.scheme import solve_Seps


@dataclass(frozen=True)
class ConstantSet:
    """Analysis constants.

    ``L`` Lipschitz constant of f and g, ``P`` bound on |f| and |g|, ``L_av``
    Lipschitz constant of the average field, ``R`` slow-ball radius, ``z_bar``
    max |z| over M, ``T`` horizon, ``r_y``/``beta_y`` boundary-layer decay
    pair, ``delta_y`` in ``(0, beta_y)`` (defaults to ``beta_y / 2``).
    """

    L: float
    P: float
    L_av: float
    R: float
    z_bar: float
    T: float
    r_y: float = 1.0
    beta_y: float = 1.0
    delta_y: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.delta_y is None:
            object.__setattr__(self, "delta_y", self.beta_y / 2)
        for name in ("L", "P", "L_av", "R", "z_bar", "T", "r_y", "beta_y", "delta_y"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.delta_y < self.beta_y:
            raise ValueError("delta_y must be smaller than beta_y")

    def replace(self, **kw) -> "ConstantSet":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return ConstantSet(**d)

    def to_text(self) -> str:
        lines = []
        for k, v in self.meta.items():
            lines.append(f"# {k} = {v}")
        for f_ in fields(self):
            if f_.name != "meta":
                lines.append(f"{f_.name} = {getattr(self, f_.name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ConstantSet":
        vals, meta = {}, {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            target = vals
            if line.startswith("#"):
                line, target = line[1:].strip(), meta
            if "=" not in line:
                continue
            k, v = (s.strip() for s in line.split("=", 1))
            target[k] = v
        known = {f_.name for f_ in fields(cls)} - {"meta"}
        kw = {k: float(v) for k, v in vals.items() if k in known}
        return cls(**kw, meta=meta)


def _exponent_chain(S: float, L: float):
    """``(1 + L S e^{LS})`` as a LogReal, plus ``e^{LS}``."""
    e_LS = LogReal.exp(L * S)
    return 1.0 + (L * S) * e_LS, e_LS


def delta_bar(eps: float, S_eps: float, c: ConstantSet) -> LogReal:
    """``(2 eps S P + T L (eps S P + eps)(1 + L S e^{LS})) * exp(T L (1 + S L e^{LS}))``."""
    L, P, T = c.L, c.P, c.T
    A, _ = _exponent_chain(S_eps, L)
    first = LogReal.from_float(2 * eps * S_eps * P)
    second = (T * L * (eps * S_eps * P + eps)) * A
    return (first + second) * LogReal.exp(A * (T * L))


def delta_bar_terms(eps: float, S_eps: float, c: ConstantSet):
    """The three summands of ``delta_bar`` (P-term, P-weighted chain term, bare chain term)."""
    L, P, T = c.L, c.P, c.T
    A, _ = _exponent_chain(S_eps, L)
    E = LogReal.exp(A * (T * L))
    return (
        LogReal.from_float(2 * eps * S_eps * P) * E,
        (T * L * eps * S_eps * P) * A * E,
        (T * L * eps) * A * E,
    )


def d_bar(eps: float, S_eps: float, delta_bar_val: LogReal, c: ConstantSet) -> LogReal:
    """``S L (delta_bar + eps S P + eps) e^{LS}``."""
    L, P = c.L, c.P
    return (S_eps * L) * (delta_bar_val + (eps * S_eps * P + eps)) * LogReal.exp(L * S_eps)


def d_bar_terms(eps: float, S_eps: float, delta_bar_val: LogReal, c: ConstantSet):
    """Pieces of ``d_bar``: ``S L e^{LS} delta_bar`` and ``(eps S P + eps) S L e^{LS}``."""
    L, P = c.L, c.P
    w = (S_eps * L) * LogReal.exp(L * S_eps)
    return w * delta_bar_val, w * (eps * S_eps * P + eps)


def k_eps(eps: float, S_eps: float, delta_bar_val: LogReal, gamma_at_Seps: float, c: ConstantSet) -> LogReal:
    """``delta_bar + T g M + eps S L_av (eps S P + T g M) e^{eps S L_av}`` with ``M = max(R, z_bar)``."""
    if gamma_at_Seps < 0:
        raise ValueError("gamma must be non-negative")
    hS = eps * S_eps
    avg_term = LogReal.from_float(c.T * max(c.R, c.z_bar)) * LogReal.from_float(gamma_at_Seps)
    drift = (hS * c.L_av) * (hS * c.P + avg_term) * LogReal.exp(hS * c.L_av)
    return delta_bar_val + avg_term + drift


class CoarseGridError(ValueError):
    pass


def f_eps(eps: float, S_eps: float, d_bar_val: LogReal, c: ConstantSet) -> LogReal:
    """``d_bar (1 + r_y e^{-beta S} / (1 - e^{-(beta - delta) S}))``."""
    gap = (c.beta_y - c.delta_y) * S_eps
    denom = -math.expm1(-gap)
    if denom <= 1e-12:
        raise CoarseGridError("grid too coarse for F(eps): exp(-(beta_y - delta_y) S) >= 1 - 1e-12")
    tail = LogReal.from_float(c.r_y) * LogReal.exp(-c.beta_y * S_eps) / denom
    return d_bar_val * (1.0 + tail)


def eps_bar(c: ConstantSet, eps1: float) -> float:
    """Largest ``eps <= eps1`` with ``exp(-delta_y S_eps) <= 1 / r_y``.

    ``S_eps`` decreases in ``eps``, so the condition holds below the ``eps``
    whose interval length equals ``ln(r_y) / delta_y``; that ``eps`` follows
    from the defining relation in closed form.
    """
    if c.r_y <= 1.0:
        return eps1
    S = math.log(c.r_y) / c.delta_y
    L, T = c.L, c.T
    inner = L * S + math.log(L * S)
    if inner > 700:
        return 0.0
    log_rhs = math.log(S) + T * L * (1.0 + math.exp(inner))
    return min(eps1, math.exp(-4.0 * log_rhs))


def eps_double_star(t_a: float, c: ConstantSet):
    """Solve ``(beta_y - delta_y) t_a = eps ln(1/sqrt(eps))`` on the increasing branch.

    ``eps ln(1/sqrt(eps))`` increases on ``(0, 1/e)`` up to ``1/(2e)``. Returns
    ``(eps, vacuous)``; when the target exceeds the maximum, ``vacuous`` is true
    and the maximizer ``1/e`` is returned.
    """
    if not 0 < t_a < c.T:
        raise ValueError("need 0 < t_a < T")
    target = (c.beta_y - c.delta_y) * t_a
    phi = lambda u: -0.5 * math.exp(u) * u  # noqa: E731  (u = ln eps)
    top = -1.0
    if phi(top) < target:
        return math.exp(top), True
    lo = -1.0
    while phi(lo) > target:
        lo *= 2
        if lo < -745:
            return 0.0, False
    hi = top
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if phi(mid) < target:
            lo = mid
        else:
            hi = mid
    u = lo if abs(phi(lo) - target) <= abs(phi(hi) - target) else hi
    return math.exp(u), False


@dataclass(frozen=True)
class GammaConditionRow:
    eps: float
    S_eps: float
    log_gamma: float
    log_rhs: float
    log_gap: float
    holds: bool


def check_gamma_condition(gamma, c: ConstantSet, r_prime: float, alpha1: float, eps_grid) -> list:
    """Test ``gamma(S_eps) <= r' exp(-alpha1 T L (1 + S L e^{LS}))`` per ``eps``.

    ``gamma`` is a :class:`GammaEnvelope` (interpolated, raising outside its
    grid) or a callable. ``log_gap = ln gamma - ln rhs``; the condition holds
    iff ``log_gap <= 0``.
    """
    if not alpha1 > 2:
        raise ValueError("alpha1 must exceed 2")
    if not r_prime > 0:
        raise ValueError("r_prime must be positive")
    g_at = gamma.at if hasattr(gamma, "at") else gamma
    rows = []
    for eps in eps_grid:
        S = solve_Seps(c.L, c.T, eps)
        A, _ = _exponent_chain(S, c.L)
        log_rhs = math.log(r_prime) - alpha1 * c.T * c.L * A.to_float()
        gv = float(g_at(S))
        log_g = math.log(gv) if gv > 0 else -math.inf
        gap = log_g - log_rhs
        rows.append(GammaConditionRow(eps, S, log_g, log_rhs, gap, gap <= 0))
    return rows


@dataclass(frozen=True)
class BoundReport:
    eps: float
    S_eps: float
    Delta_bar: LogReal
    D_bar: LogReal
    K_eps: LogReal
    F_eps: LogReal | None

    def ratio(self, name: str) -> float:
        """``bound / sqrt(eps)`` as a float (``inf`` beyond double range)."""
        v = getattr(self, name)
        if v is None:
            return math.nan
        return (v / math.sqrt(self.eps)).to_float()

    def row(self) -> list:
        logF = self.F_eps.log() if self.F_eps is not None else math.nan
        return [self.eps, self.S_eps, self.Delta_bar.log(), self.D_bar.log(), self.K_eps.log(), logF,
                self.ratio("Delta_bar"), self.ratio("D_bar")]


def bound_report(eps: float, c: ConstantSet, gamma=None, S_eps: float | None = None) -> BoundReport:
    """All bounds at one ``eps``. ``gamma`` is a callable or envelope; ``None`` means zero."""
    S = solve_Seps(c.L, c.T, eps) if S_eps is None else S_eps
    db = delta_bar(eps, S, c)
    dd = d_bar(eps, S, db, c)
    g = 0.0 if gamma is None else float((gamma.at if hasattr(gamma, "at") else gamma)(S))
    K = k_eps(eps, S, db, g, c)
    try:
        F = f_eps(eps, S, dd, c)
    except CoarseGridError:
        F = None
    return BoundReport(eps, S, db, dd, K, F)


BOUND_HEADER = ["eps", "S_eps", "log_Delta_bar", "log_D_bar", "log_K", "log_F", "ratio_Delta_sqrt", "ratio_D_sqrt"]


def bounds_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUND_HEADER)
    for r in reports:
        w.writerow([repr(float(v)) for v in r.row()])
    return buf.getvalue()
