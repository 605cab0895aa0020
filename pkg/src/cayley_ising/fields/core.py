"""Thermodynamic parameters, the cavity map f and bracketing root finders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class Thermo:
    """Coupling ``J`` (any sign) and inverse temperature ``beta > 0``."""

    J: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")

    @classmethod
    def from_alpha(cls, alpha: float, J: float = 1.0) -> "Thermo":
        """Parametrise by ``alpha = exp(-2 beta J)``."""
        if not alpha > 0:
            raise DomainError("alpha must be positive")
        return cls(J=J, beta=-math.log(alpha) / (2 * J))

    @classmethod
    def from_theta(cls, theta: float, J: float = 1.0) -> "Thermo":
        """The sign of ``theta`` fixes the sign of ``J``; ``|J|`` sets the scale."""
        if not -1 < theta < 1 or theta == 0:
            raise DomainError("theta must lie in (-1, 1) and be nonzero")
        J = math.copysign(abs(J), theta)
        return cls(J=J, beta=math.atanh(theta) / J)

    @property
    def beta_j(self) -> float:
        return self.beta * self.J

    @property
    def theta(self) -> float:
        return math.tanh(self.beta_j)

    @property
    def alpha(self) -> float:
        return math.exp(-2 * self.beta_j)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 10_000
    grid_cells: int = 2048


@dataclass
class SolveReport:
    roots: list = field(default_factory=list)
    residual_sup: float = 0.0
    bracket: tuple | None = None
    grid_cells: int = 0
    iterations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.roots)


def critical_theta(k: int) -> float:
    """Ferromagnetic uniqueness threshold ``1/k``."""
    return 1.0 / k


def f_theta(h, theta):
    """``arctanh(theta * tanh h)``; odd in ``h``, bounded by ``arctanh|theta|``."""
    if isinstance(h, np.ndarray):
        return np.arctanh(theta * np.tanh(h))
    return math.atanh(theta * math.tanh(h))


def f_theta_prime(h, theta):
    t = np.tanh(h)
    return theta * (1 - t * t) / (1 - (theta * t) ** 2)


def f_theta_inverse(y: float, theta: float) -> float:
    """The ``h`` with ``f(h, theta) = y``; exists only while ``|tanh y| < |theta|``."""
    ty = math.tanh(y)
    if theta == 0 or abs(ty) >= abs(theta):
        raise DomainError(f"no real preimage: |tanh {y!r}| >= |theta| = {abs(theta)!r}")
    return math.atanh(ty / theta)


def bisect(g: Callable[[float], float], lo: float, hi: float, glo: float | None = None,
           tol: float = 1e-12, max_iter: int = 10_000) -> tuple[float, int]:
    """Bisection on a sign-changing bracket down to absolute width ``tol``."""
    glo = g(lo) if glo is None else glo
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        gm = g(mid)
        if gm == 0:
            return mid, it + 1
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def scan_roots(g: Callable[[float], float], lo: float, hi: float, cells: int = 2048,
               tol: float = 1e-12, max_iter: int = 10_000,
               dg: Callable[[float], float] | None = None) -> tuple[list[float], int]:
    """All sign-change roots of ``g`` on ``[lo, hi]``.

    Uniform scan, bisection on every bracketing cell, then one Newton step kept
    only if it stays inside the cell and lowers the residual.  Grid nodes where
    ``g`` vanishes exactly are reported as roots.
    """
    xs = np.linspace(lo, hi, cells + 1)
    gs = [g(float(x)) for x in xs]
    roots = []
    iters = 0
    for i in range(cells):
        a, b, ga, gb = float(xs[i]), float(xs[i + 1]), gs[i], gs[i + 1]
        if ga == 0:
            roots.append(a)
            continue
        if gb == 0 or (ga < 0) == (gb < 0):
            continue
        r, it = bisect(g, a, b, ga, tol, max_iter)
        iters += it
        if dg is not None:
            d = dg(r)
            if d != 0:
                cand = r - g(r) / d
                if a <= cand <= b and abs(g(cand)) <= abs(g(r)):
                    r = cand
        roots.append(float(r))
    if gs[-1] == 0:
        roots.append(float(xs[-1]))
    return roots, iters
