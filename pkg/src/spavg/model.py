"""System definitions, domain sets and the built-in limit-cycle example."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

VectorField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class DomainError(ValueError):
    """Raised when a vector field is evaluated outside its domain.

    The offending point is kept on ``point`` (and ``time`` when known).
    """

    def __init__(self, message, point=None, time=None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, dtype=float)
        self.time = time


@dataclass(frozen=True)
class SystemSpec:
    """Slow/fast system ``x' = f(x, z, eps)``, ``eps z' = g(x, z, eps)``.

    Parameters
    ----------
    n, m : int
        Slow and fast dimensions.
    f, g : callable
        ``f(x, z, eps) -> R^n`` and ``g(x, z, eps) -> R^m``.
    excluded_region : callable, optional
        Predicate on ``z`` marking points where ``g`` is undefined.
    clearance : float
        Minimum clearance radius around the singular set; ``excluded_region``
        is expected to flag every point closer than this.
    f_av : callable, optional
        Analytic average field when one is known.
    vectorized : bool
        When true, ``f`` and ``g`` (and ``excluded_region``) also accept
        stacked inputs of shape ``(n, k)`` / ``(m, k)`` and broadcast over the
        trailing axis. Batched integrators and quadratures use this.
    """

    n: int
    m: int
    f: VectorField
    g: VectorField
    excluded_region: Optional[Callable[[np.ndarray], bool]] = None
    clearance: float = 0.0
    f_av: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    vectorized: bool = False

    def is_excluded(self, z) -> bool:
        if self.excluded_region is None:
            return False
        hit = self.excluded_region(np.asarray(z, dtype=float))
        return hit if hit is True or hit is False else bool(np.any(hit))


@dataclass(frozen=True)
class Annulus:
    """``{z : inner <= |z - center| <= outer}``."""

    center: tuple
    inner: float
    outer: float

    @property
    def dim(self):
        return len(self.center)

    def contains(self, z, slack=0.0) -> bool:
        r = float(np.linalg.norm(np.asarray(z, dtype=float) - np.asarray(self.center)))
        return self.inner - slack <= r <= self.outer + slack

    def max_norm(self) -> float:
        return float(np.linalg.norm(self.center)) + self.outer

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        # uniform in volume: radius^m uniform between inner^m and outer^m
        m = self.dim
        u = rng.uniform(self.inner**m, self.outer**m, size=k)
        r = u ** (1.0 / m)
        d = rng.normal(size=(k, m))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return np.asarray(self.center) + r[:, None] * d


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= z <= hi``."""

    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, z, slack=0.0) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= np.asarray(self.lo) - slack) and np.all(z <= np.asarray(self.hi) + slack))

    def max_norm(self) -> float:
        corners = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.linalg.norm(corners))

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(k, self.dim))


@dataclass(frozen=True)
class DomainSpec:
    """Slow ball ``B_R(0)``, fast set ``M`` and admissible ``eps`` range ``(0, eps1]``."""

    R: float
    M: object
    eps1: float

    def __post_init__(self):
        if not (self.R > 0 and self.eps1 > 0):
            raise ValueError("R and eps1 must be positive")

    def sample_x(self, rng: np.random.Generator, k: int, n: int) -> np.ndarray:
        d = rng.normal(size=(k, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.R * rng.uniform(size=k) ** (1.0 / n)
        return r[:, None] * d

    def contains_x(self, x, slack=0.0) -> bool:
        return float(np.linalg.norm(x)) <= self.R + slack

    @property
    def z_bar(self) -> float:
        return self.M.max_norm()


@dataclass(frozen=True)
class AttractorSpec:
    """Distance-to-attractor map ``z -> |z|_eta`` (x-independent)."""

    dist: Callable[[np.ndarray], float]
    description: str = ""
    sample: Optional[Callable[[int], np.ndarray]] = field(default=None, compare=False)


def eval_rhs_full(sys: SystemSpec, x, z, eps: float):
    """Return ``(dx/dt, dz/dt) = (f, g / eps)`` for ``eps > 0``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if sys.is_excluded(z):
        raise DomainError(f"z={z.tolist()} lies in the excluded region of {sys.name}", point=z)
    return np.asarray(sys.f(x, z, eps), dtype=float), np.asarray(sys.g(x, z, eps), dtype=float) / eps


# --- built-in example: a unit limit cycle in the fast variable ---------------


# both fields broadcast over a trailing sample axis; 1-D inputs take a
# plain-float path because numpy scalar arithmetic dominates small solves


def _example_f(x, z, eps):
    if z.ndim == 1:
        x0 = float(x[0])
        return np.array([-x0 + float(z[0]) + eps * x0 * x0])
    return np.array([-x[0] + z[0] + eps * x[0] * x[0]])


def _example_g(x, z, eps):
    if z.ndim == 1:
        z1, z2 = z.tolist()
        r = math.sqrt(z1 * z1 + z2 * z2)
        return np.array([-z1 + z2 + z1 / r, -z1 - z2 + z2 / r + eps * float(x[0])])
    z1, z2 = z[0], z[1]
    r = np.sqrt(z1 * z1 + z2 * z2)
    return np.array([-z1 + z2 + z1 / r, -z1 - z2 + z2 / r + eps * x[0]])


_EXAMPLE_CLEARANCE = 1e-6
_EXAMPLE_CLEARANCE2 = _EXAMPLE_CLEARANCE**2


def _example_excluded(z):
    if z.ndim == 1:
        z1, z2 = z.tolist()
        return z1 * z1 + z2 * z2 < _EXAMPLE_CLEARANCE2
    return bool(np.any(z[0] * z[0] + z[1] * z[1] < _EXAMPLE_CLEARANCE2))


def _example_fav(x):
    return -np.asarray(x, dtype=float)


def _unit_circle_dist(z) -> float:
    return abs(math.hypot(z[0], z[1]) - 1.0)


def _unit_circle_sample(k: int) -> np.ndarray:
    th = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
    return np.stack([np.cos(th), np.sin(th)], axis=1)


EXAMPLE_SYSTEM = SystemSpec(
    n=1,
    m=2,
    f=_example_f,
    g=_example_g,
    excluded_region=_example_excluded,
    clearance=_EXAMPLE_CLEARANCE,
    f_av=_example_fav,
    name="example",
    vectorized=True,
)
EXAMPLE_DOMAIN = DomainSpec(R=2.5, M=Annulus(center=(0.0, 0.0), inner=0.5, outer=1.5), eps1=0.15)
EXAMPLE_ATTRACTOR = AttractorSpec(
    dist=_unit_circle_dist, description="unit circle |z| = 1", sample=_unit_circle_sample
)


def builtin_example():
    """Return the planar limit-cycle example as ``(system, domain, attractor)``."""
    return EXAMPLE_SYSTEM, EXAMPLE_DOMAIN, EXAMPLE_ATTRACTOR


def example_polar_rhs(x: float, r: float, theta: float, eps: float):
    """Polar form of the example: ``(x', r', theta')`` in slow time."""
    dx = -x + r * math.cos(theta) + eps * x * x
    dr = (1.0 - r + eps * x * math.sin(theta)) / eps
    dth = (-1.0 + eps * x * math.cos(theta) / r) / eps
    return dx, dr, dth


def example_boundary_closed_form(z0, tau):
    """Boundary-layer solution of the example started from ``z0`` at fast time ``tau``.

    Works elementwise when ``tau`` is an array; the result then has shape
    ``(len(tau), 2)``.
    """
    z0 = np.asarray(z0, dtype=float)
    r0 = math.hypot(z0[0], z0[1])
    if r0 == 0.0:
        raise DomainError("closed form undefined at the origin", point=z0)
    th0 = math.atan2(z0[1], z0[0])
    tau = np.asarray(tau, dtype=float)
    rad = (r0 - 1.0) * np.exp(-tau) + 1.0
    out = np.stack([rad * np.cos(-tau + th0), rad * np.sin(-tau + th0)], axis=-1)
    return out


# --- registry ----------------------------------------------------------------

_REGISTRY: dict = {}


def register_system(name: str, factory: Callable[[], tuple]) -> None:
    """Register a zero-argument factory returning ``(SystemSpec, DomainSpec, AttractorSpec)``."""
    _REGISTRY[name] = factory


def get_system(name: str):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {sorted(_REGISTRY)}") from None


register_system("example", builtin_example)
