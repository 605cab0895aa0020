"""Solvers for translation-invariant, periodic and weakly periodic fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DomainError
from ..tree import SubgroupSpec
from .core import (
    SolveReport,
    SolverConfig,
    Thermo,
    f_theta,
    f_theta_inverse,
    f_theta_prime,
    scan_roots,
)


def _odd_roots(g, dg, bound: float, cfg: SolverConfig) -> tuple[list[float], int]:
    """Roots of an odd function: zero plus the mirrored positive roots.

    The scan starts just right of zero so that a root born at the origin by a
    pitchfork is bracketed even when it lies inside the first grid cell.
    """
    eps = bound * 1e-9
    pos, iters = scan_roots(g, eps, bound, cfg.grid_cells, cfg.tol, cfg.max_iter, dg)
    pos = sorted(r for r in pos if r > 0)
    return [-r for r in reversed(pos)] + [0.0] + pos, iters


def solve_ti(k: int, thermo: Thermo, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """All real roots of ``h = k f(h, theta)`` in increasing order."""
    theta = thermo.theta
    if theta == 0:
        return SolveReport([0.0], 0.0, (0.0, 0.0), 0, 0)
    bound = k * math.atanh(abs(theta)) * 1.01

    def g(h):
        return h - k * f_theta(h, theta)

    def dg(h):
        return 1 - k * f_theta_prime(h, theta)

    roots, iters = _odd_roots(g, dg, bound, cfg)
    res = max(abs(g(r)) for r in roots)
    return SolveReport(roots, res, (-bound, bound), cfg.grid_cells, iters)


def h_star(k: int, thermo: Thermo, cfg: SolverConfig = SolverConfig()) -> float:
    """The positive translation-invariant root; requires ``theta > 1/k``."""
    roots = [r for r in solve_ti(k, thermo, cfg).roots if r > 0]
    if not roots:
        raise DomainError(f"no nonzero TI solution: theta={thermo.theta:.6g} <= 1/k={1 / k:.6g}")
    return roots[-1]


def h_star_closed_k2(thermo: Thermo) -> float:
    """Positive root for ``k = 2`` in closed form (needs ``exp(2 beta J) > 3``)."""
    e = math.exp(2 * thermo.beta_j)
    if e <= 3:
        raise DomainError(f"exp(2 beta J) = {e:.6g} <= 3: only the zero solution exists")
    inner = 0.5 * (e * e - 2 * e - 1 + (e - 1) * math.sqrt((e + 1) * (e - 3)))
    return 0.5 * math.log(inner)


def solve_periodic(k: int, thermo: Thermo, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Solutions ``(u, v)`` of ``u = k f(v), v = k f(u)``.

    Every solution has ``v = k f(u)`` with ``u`` a root of the odd scalar
    equation ``u = k f(k f(u))``, so the scan over ``u`` is exhaustive.
    ``extra['alternating']`` counts solutions with ``u != v``.
    """
    theta = thermo.theta
    if theta == 0:
        return SolveReport([(0.0, 0.0)], 0.0, (0.0, 0.0), 0, 0, extra={"alternating": 0})
    bound = k * math.atanh(abs(theta)) * 1.01

    def g(u):
        return u - k * f_theta(k * f_theta(u, theta), theta)

    def dg(u):
        v = k * f_theta(u, theta)
        return 1 - k * f_theta_prime(v, theta) * k * f_theta_prime(u, theta)

    us, iters = _odd_roots(g, dg, bound, cfg)
    sols = [(u, k * f_theta(u, theta)) for u in us]
    res = max(
        max(abs(u - k * f_theta(v, theta)), abs(v - k * f_theta(u, theta))) for u, v in sols
    )
    alternating = sum(1 for u, v in sols if abs(u - v) > 1e-9)
    return SolveReport(sols, res, (-bound, bound), cfg.grid_cells, iters,
                       extra={"alternating": alternating})


# --- weakly periodic -------------------------------------------------------

def wp_residual(h, k: int, j: int, theta: float) -> np.ndarray:
    """Residual of the four-equation weakly periodic system (vectorised over rows)."""
    h = np.asarray(h, dtype=float)
    f = np.arctanh(theta * np.tanh(h))
    f1, f2, f3, f4 = f[..., 0], f[..., 1], f[..., 2], f[..., 3]
    r = np.empty_like(h)
    r[..., 0] = h[..., 0] - (j * f3 + (k - j) * f1)
    r[..., 1] = h[..., 1] - ((j - 1) * f3 + (k + 1 - j) * f1)
    r[..., 2] = h[..., 2] - ((j - 1) * f2 + (k + 1 - j) * f4)
    r[..., 3] = h[..., 3] - (j * f2 + (k - j) * f4)
    return r


def _wp_jacobian(h, k, j, theta):
    d = f_theta_prime(h, theta)
    d1, d2, d3, d4 = d[..., 0], d[..., 1], d[..., 2], d[..., 3]
    jac = np.zeros(h.shape + (4,))
    jac[..., 0, 0] = 1 - (k - j) * d1
    jac[..., 0, 2] = -j * d3
    jac[..., 1, 0] = -(k + 1 - j) * d1
    jac[..., 1, 1] = 1.0
    jac[..., 1, 2] = -(j - 1) * d3
    jac[..., 2, 1] = -(j - 1) * d2
    jac[..., 2, 2] = 1.0
    jac[..., 2, 3] = -(k + 1 - j) * d4
    jac[..., 3, 1] = -j * d2
    jac[..., 3, 3] = 1 - (k - j) * d4
    return jac


def _newton_multistart(k, j, theta, bound, points_per_axis, tol, steps=100):
    axis = np.linspace(-bound, bound, points_per_axis)
    h = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)
    for _ in range(steps):
        r = wp_residual(h, k, j, theta)
        jac = _wp_jacobian(h, k, j, theta)
        ok = np.abs(np.linalg.det(jac)) > 1e-300
        step = np.zeros_like(h)
        step[ok] = np.linalg.solve(jac[ok], r[ok][..., None])[..., 0]
        h = np.clip(h - step, -bound, bound)
    r = np.max(np.abs(wp_residual(h, k, j, theta)), axis=1)
    good = h[r < max(tol, 1e-11)]
    sols: list[np.ndarray] = []
    for cand in good:
        if not any(np.max(np.abs(cand - s)) < 1e-7 for s in sols):
            sols.append(cand)
    sols.sort(key=lambda s: tuple(np.round(s, 9)))
    return [tuple(float(x) for x in s) for s in sols]


def reduced_wp_roots(k: int, thermo: Thermo, cfg: SolverConfig = SolverConfig()) -> list[tuple[float, float]]:
    """Solutions on the invariant set ``h4 = -h1, h3 = -h2`` for ``|A| = 1``.

    There ``h2 = k f(h1)`` and ``h1 = (k-1) f(h1) - f(h2)``; for ``k = 4`` this
    is the pair ``h1 = 3 f(h1) - f(h2), h2 = 4 f(h1)``.
    """
    theta = thermo.theta
    if theta == 0:
        return [(0.0, 0.0)]

    def g(h1):
        return h1 - (k - 1) * f_theta(h1, theta) + f_theta(k * f_theta(h1, theta), theta)

    def dg(h1):
        d1 = f_theta_prime(h1, theta)
        return 1 - (k - 1) * d1 + f_theta_prime(k * f_theta(h1, theta), theta) * k * d1

    bound = k * math.atanh(abs(theta)) * 1.01
    h1s, _ = _odd_roots(g, dg, bound, cfg)
    return [(h1, k * f_theta(h1, theta)) for h1 in h1s]


def solve_weakly_periodic(k: int, A, thermo: Thermo, cfg: SolverConfig = SolverConfig(),
                          points_per_axis: int = 9) -> SolveReport:
    """Weakly periodic fields ``(h1, h2, h3, h4)`` for the subgroup ``H_A``.

    The full system is solved by vectorised Newton from a uniform grid of
    starts.  For ``|A| = 1`` the invariant-set solutions are found by a scalar
    scan and stored in ``extra['invariant']``; for ``k = 4`` the count is
    compared with the classification by ``alpha`` and a mismatch is flagged in
    ``extra['consistent']``.
    """
    sub = A if isinstance(A, SubgroupSpec) else SubgroupSpec(A)
    j = sub.j
    if not 1 <= j <= k:
        raise DomainError(f"|A| must lie in 1..k, got {j}")
    theta = thermo.theta
    if theta == 0:
        return SolveReport([(0.0,) * 4], 0.0, None, 0, 0, extra={"invariant": [(0.0, 0.0)]})
    bound = k * math.atanh(abs(theta)) * 1.01
    sols = _newton_multistart(k, j, theta, bound, points_per_axis, cfg.tol)
    if not any(max(abs(x) for x in s) < 1e-9 for s in sols):
        raise ConvergenceError("multi-start Newton missed the zero solution")
    res = float(np.max(np.abs(wp_residual(np.array(sols), k, j, theta)))) if sols else 0.0
    report = SolveReport(sols, res, (-bound, bound), points_per_axis**4, 100)
    if j == 1:
        inv = reduced_wp_roots(k, thermo, cfg)
        report.extra["invariant"] = inv
        found = all(
            any(max(abs(s[0] - h1), abs(s[1] - h2), abs(s[2] + h2), abs(s[3] + h1)) < 1e-6
                for s in sols)
            for h1, h2 in inv
        )
        report.extra["invariant_in_full"] = found
        if k == 4:
            expected = wp_state_count(thermo.alpha)
            report.extra["classified_states"] = expected
            report.extra["consistent"] = expected == len(inv) and found
    return report


# --- the cubic in xi -------------------------------------------------------

def _cubic(alpha):
    return lambda x: alpha * alpha * x**3 - alpha * x * x - 2 * alpha * alpha * x + alpha + 1


@dataclass
class CubicRoots:
    alpha: float
    real: list[float]
    admissible: list[float]
    double: bool


def xi_to_fields(xi: float, thermo: Thermo, k: int = 4) -> tuple[float, float]:
    """``(h1, h2)`` with ``h2 = 2 arccosh(xi/2)`` and ``h2 = k f(h1)``."""
    if xi < 2:
        raise DomainError(f"xi = {xi:.6g} < 2 has no real h2")
    h2 = 2 * math.acosh(xi / 2)
    h1 = f_theta_inverse(h2 / k, thermo.theta)
    return h1, h2


def _xi_admissible(xi: float, alpha: float, tol: float = 1e-8) -> bool:
    from ..thermo import free_energy_wp, free_energy_wp_xi

    thermo = Thermo.from_alpha(alpha)
    try:
        h1, h2 = xi_to_fields(xi, thermo)
    except DomainError:
        return False
    # Both evaluations share the factor -1/(2 beta); compare without it.
    scale = -2 * thermo.beta
    a = free_energy_wp(thermo, h1, h2) * scale
    b = free_energy_wp_xi(thermo, xi) * scale
    return abs(a - b) <= tol * max(1.0, abs(a))


def cubic_rrx_roots(alpha: float, tol: float = 1e-13) -> CubicRoots:
    """Real roots of ``a^2 x^3 - a x^2 - 2 a^2 x + a + 1`` and the admissible ones.

    The real line is split at the two critical points ``(1 -+ sqrt(1+6a^2)) / (3a)``;
    each monotone piece is bisected if it brackets a sign change, and a
    critical point where the cubic vanishes is reported as a double root.  A
    root is admissible when it corresponds to a weakly periodic solution,
    checked by evaluating the free energy through both parametrisations.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    p = _cubic(alpha)
    s = math.sqrt(1 + 6 * alpha * alpha)
    c1, c2 = (1 - s) / (3 * alpha), (1 + s) / (3 * alpha)
    bound = 1 + max(1 / alpha, 2.0, (alpha + 1) / alpha**2)
    knots = [-bound, c1, c2, bound]
    scale = max(1.0, alpha + 1)
    roots: list[float] = []
    double = False
    for c in (c1, c2):
        if abs(p(c)) <= 1e-12 * scale:
            roots.append(c)
            double = True
    for a, b in zip(knots, knots[1:]):
        pa, pb = p(a), p(b)
        if (pa < 0) == (pb < 0):
            continue
        lo, hi, plo = a, b, pa
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            pm = p(mid)
            if (pm < 0) == (plo < 0):
                lo, plo = mid, pm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    roots.sort()
    # A tangent root may also be bracketed by round-off on either side.
    merged: list[float] = []
    for x in roots:
        if merged and abs(x - merged[-1]) <= 1e-6 * max(1.0, abs(x)):
            continue
        merged.append(x)
    roots = merged
    admissible = [x for x in roots if _xi_admissible(x, alpha)]
    return CubicRoots(alpha, roots, admissible, double)


def wp_state_count(alpha: float) -> int:
    """Number of weakly periodic states on the invariant set (``k = 4``, ``|A| = 1``)."""
    return 1 + 2 * len(cubic_rrx_roots(alpha).admissible)


def find_alpha_cr(lo: float = 0.05, hi: float = 0.5, tol: float = 1e-12) -> float:
    """``alpha`` at which the two admissible roots of the cubic merge.

    Bisection on the predicate "at least one admissible root", which holds
    below the critical value and fails above it.
    """
    def has_root(a):
        return bool(cubic_rrx_roots(a).admissible)

    if not has_root(lo) or has_root(hi):
        raise DomainError("bracket does not straddle the critical alpha")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_root(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- Zachary ----------------------------------------------------------------

def zachary_sequence(t0: float, k: int, thermo: Thermo, N: int,
                     cfg: SolverConfig = SolverConfig()) -> list[float]:
    """``t_0 .. t_N`` with ``t_n = k f(t_{n+1})``, i.e. ``t_{n+1} = f^{-1}(t_n / k)``."""
    if N < 0:
        raise DomainError("N must be >= 0")
    if t0 == 0:
        return [0.0] * (N + 1)
    hs = h_star(k, thermo, cfg)
    if abs(t0) >= hs:
        raise DomainError(f"|t0| = {abs(t0):.6g} must be below h* = {hs:.6g}")
    ts = [float(t0)]
    for _ in range(N):
        ts.append(f_theta_inverse(ts[-1] / k, thermo.theta))
    return ts
