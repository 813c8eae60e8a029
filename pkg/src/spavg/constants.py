"""Sampling estimates of the analysis constants.

Every estimate is a maximum over finitely many samples, hence a lower bound
on the true supremum; the safety factor applied on top is returned alongside
where it matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from spavg.model import AttractorSpec, DomainSpec, SystemSpec

LIPSCHITZ_SAFETY = 1.2
BOUND_SAFETY = 1.1
LOCAL_RADIUS = 1e-3


class DecayViolation(ValueError):
    """A boundary-layer run does not approach the attractor exponentially."""


def _sample_points(sys: SystemSpec, dom: DomainSpec, rng, k: int, eps_range):
    """``k`` admissible points ``(x, z, eps)`` as a ``(k, n + m + 1)`` array."""
    out = np.empty((0, sys.n + sys.m + 1))
    lo, hi = eps_range
    while len(out) < k:
        need = k - len(out)
        xs = dom.sample_x(rng, need, sys.n)
        zs = dom.M.sample(rng, need)
        es = rng.uniform(lo, hi, size=need)
        keep = np.array([not sys.is_excluded(z) for z in zs], dtype=bool)
        out = np.vstack([out, np.column_stack([xs, zs, es])[keep]])
    return out


def _inside(sys, dom, p, eps_range):
    x, z, e = p[: sys.n], p[sys.n: sys.n + sys.m], p[-1]
    return (dom.contains_x(x) and dom.M.contains(z) and eps_range[0] <= e <= eps_range[1]
            and not sys.is_excluded(z))


def _eval_fields(sys: SystemSpec, pts: np.ndarray):
    n, m = sys.n, sys.m
    if sys.vectorized:
        X, Z, E = pts[:, :n].T, pts[:, n: n + m].T, pts[:, -1]
        F = np.asarray(sys.f(X, Z, E), dtype=float).reshape(n, -1).T
        G = np.asarray(sys.g(X, Z, E), dtype=float).reshape(m, -1).T
        return F, G
    F = np.array([np.asarray(sys.f(p[:n], p[n: n + m], p[-1]), dtype=float) for p in pts])
    G = np.array([np.asarray(sys.g(p[:n], p[n: n + m], p[-1]), dtype=float) for p in pts])
    return F, G


def lipschitz_from_pairs(sys: SystemSpec, A: np.ndarray, B: np.ndarray) -> float:
    """Largest difference quotient of ``f`` and ``g`` over paired rows of ``A`` and ``B``."""
    FA, GA = _eval_fields(sys, A)
    FB, GB = _eval_fields(sys, B)
    dist = np.linalg.norm(A - B, axis=1)
    ok = dist > 0
    qf = np.linalg.norm(FA - FB, axis=1)[ok] / dist[ok]
    qg = np.linalg.norm(GA - GB, axis=1)[ok] / dist[ok]
    return float(max(qf.max(initial=0.0), qg.max(initial=0.0)))


def sample_pairs(sys: SystemSpec, dom: DomainSpec, n_pairs: int, eps_range=None, seed: int = 42):
    """Half uniform pairs, half locally clustered pairs (separation <= 1e-3) inside the domain."""
    rng = np.random.default_rng(seed)
    eps_range = (0.0, dom.eps1) if eps_range is None else tuple(eps_range)
    n_uni = n_pairs // 2
    n_loc = n_pairs - n_uni
    A = _sample_points(sys, dom, rng, n_uni, eps_range)
    B = _sample_points(sys, dom, rng, n_uni, eps_range)
    base = _sample_points(sys, dom, rng, n_loc, eps_range)
    C = np.empty_like(base)
    for i, p in enumerate(base):
        while True:
            d = rng.normal(size=p.shape)
            q = p + d / np.linalg.norm(d) * LOCAL_RADIUS * rng.uniform(0.05, 1.0)
            if _inside(sys, dom, q, eps_range):
                C[i] = q
                break
    return np.vstack([A, base]), np.vstack([B, C])


def estimate_lipschitz(sys: SystemSpec, dom: DomainSpec, n_pairs: int = 10_000, eps_range=None,
                       seed: int = 42, safety: float = LIPSCHITZ_SAFETY) -> float:
    """Sampled Lipschitz constant of ``f`` and ``g`` in ``(x, z, eps)``, times ``safety``."""
    if n_pairs < 100:
        raise ValueError("n_pairs must be at least 100")
    A, B = sample_pairs(sys, dom, n_pairs, eps_range, seed)
    return safety * lipschitz_from_pairs(sys, A, B)


def estimate_bound_P(sys: SystemSpec, dom: DomainSpec, n_samples: int = 10_000, eps_range=None,
                     seed: int = 42, safety: float = BOUND_SAFETY) -> float:
    """Sampled ``max(|f|, |g|)`` over the domain, times ``safety``."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    rng = np.random.default_rng(seed)
    eps_range = (0.0, dom.eps1) if eps_range is None else tuple(eps_range)
    pts = _sample_points(sys, dom, rng, n_samples, eps_range)
    F, G = _eval_fields(sys, pts)
    return safety * float(max(np.linalg.norm(F, axis=1).max(), np.linalg.norm(G, axis=1).max()))


def estimate_lav(f_av_fn, R: float, n_pairs: int = 1000, n: int = 1, seed: int = 42,
                 safety: float = LIPSCHITZ_SAFETY) -> float:
    """Sampled Lipschitz constant of an average field on ``B_R(0)``, times ``safety``."""
    if n_pairs < 100:
        raise ValueError("n_pairs must be at least 100")
    rng = np.random.default_rng(seed)
    dom = DomainSpec(R=R, M=None, eps1=1.0)

    def ball(k):
        return dom.sample_x(rng, k, n)

    n_uni = n_pairs // 2
    A = ball(n_uni)
    B = ball(n_uni)
    base = ball(n_pairs - n_uni)
    C = np.empty_like(base)
    for i, p in enumerate(base):
        while True:
            d = rng.normal(size=n)
            q = p + d / np.linalg.norm(d) * LOCAL_RADIUS * rng.uniform(0.05, 1.0)
            if np.linalg.norm(q) <= R:
                C[i] = q
                break
    P = np.vstack([A, base])
    Q = np.vstack([B, C])
    best = 0.0
    for p, q in zip(P, Q):
        dist = float(np.linalg.norm(p - q))
        if dist > 0:
            diff = np.atleast_1d(f_av_fn(p)) - np.atleast_1d(f_av_fn(q))
            best = max(best, float(np.linalg.norm(diff)) / dist)
    return safety * best


@dataclass(frozen=True)
class DecayFit:
    r_y: float
    beta_y: float
    rms: float
    slopes: tuple
    intercepts: tuple


def fit_decay_samples(samples, floor: float = 1e-8) -> DecayFit:
    """Fit ``ln(d / d0) = ln r - beta tau`` per run and return the envelope pair.

    ``samples`` holds ``(taus, dists, d0)`` triples. ``beta_y`` is the smallest
    fitted rate; ``r_y`` is then raised until every sample lies under
    ``r_y exp(-beta_y tau) d0`` (and is at least 1).
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 runs")
    slopes, intercepts, sq, count = [], [], 0.0, 0
    for taus, dists, d0 in samples:
        taus = np.asarray(taus, dtype=float)
        dists = np.asarray(dists, dtype=float)
        if not d0 > 0:
            raise ValueError("initial distance must be positive")
        keep = dists >= floor
        if keep.sum() < 2:
            raise ValueError("fewer than two samples above the distance floor")
        t, yv = taus[keep], np.log(dists[keep] / d0)
        slope, icpt = np.polyfit(t, yv, 1)
        if slope >= 0:
            raise DecayViolation("fitted decay rate is not positive: exponential convergence violated")
        resid = yv - (icpt + slope * t)
        sq += float(resid @ resid)
        count += len(t)
        slopes.append(float(-slope))
        intercepts.append(float(icpt))
    beta = float(min(slopes))
    r = max(1.0, max(math.exp(i) for i in intercepts))
    for taus, dists, d0 in samples:
        taus = np.asarray(taus, dtype=float)
        ratio = np.asarray(dists, dtype=float) / (d0 * np.exp(-beta * taus))
        r = max(r, float(ratio.max()))
    return DecayFit(r_y=r, beta_y=beta, rms=math.sqrt(sq / count), slopes=tuple(slopes),
                    intercepts=tuple(intercepts))


def fit_exponential_decay(runs, att: AttractorSpec, floor: float = 1e-8, full: bool = False):
    """``(r_y, beta_y)`` bounding ``|z(tau)|_eta <= r_y e^{-beta_y tau} |z(0)|_eta`` over boundary-layer runs."""
    samples = []
    for tr in runs:
        d = np.array([att.dist(z) for z in tr.states])
        samples.append((tr.times - tr.times[0], d, d[0]))
    fit = fit_decay_samples(samples, floor)
    return fit if full else (fit.r_y, fit.beta_y)
