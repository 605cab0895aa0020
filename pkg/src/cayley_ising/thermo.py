"""Free energies and entropies for compatible boundary fields.

For a compatible field the free energy per site is
``F = -lim (1/|V_n|) sum_{x in V_n} a(h_x)`` with
``a(h) = (1/2 beta) ln[4 cosh(h - beta J) cosh(h + beta J)]``.  This module
evaluates that limit numerically for any field family and provides every
closed form for the translation-invariant and weakly periodic cases.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import DomainError
from .fields.core import SolverConfig, Thermo, f_theta
from .fields.families import BoundaryField
from .fields.solve import cubic_rrx_roots, h_star, solve_ti
from .tree import Ball, TreeGeometry, sphere_size, vertex_count


def _log_cosh(x: float) -> float:
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x)) - math.log(2)


def log_b_term(h: float, beta_j: float) -> float:
    """``ln[4 cosh(h - beta J) cosh(h + beta J)]``, stable for large arguments."""
    # Exactly even in both arguments.
    h, beta_j = abs(h), abs(beta_j)
    return 2 * math.log(2) + _log_cosh(h - beta_j) + _log_cosh(h + beta_j)


def local_term_a(h: float, thermo: Thermo) -> float:
    return log_b_term(h, thermo.beta_j) / (2 * thermo.beta)


def free_energy_ti(thermo: Thermo, h: float = 0.0) -> float:
    """Free energy of the constant field ``h`` (any TI solution)."""
    return -local_term_a(h, thermo)


def free_energy_k2_closed(thermo: Thermo) -> float:
    """``-(1/beta)(ln(e^{2bJ} - 1) + (1/2) ln(e^{-2bJ} + 1))`` for ``k = 2``."""
    bj = thermo.beta_j
    if math.exp(2 * bj) <= 3:
        raise DomainError("closed form needs exp(2 beta J) > 3")
    return -(math.log(math.expm1(2 * bj)) + 0.5 * math.log1p(math.exp(-2 * bj))) / thermo.beta


def free_energy_bg(thermo: Thermo, k: int, cfg: SolverConfig = SolverConfig()) -> float:
    """Path fields differ from ``+-h*`` on one vertex per level, so F is ``F_TI(h*)``."""
    return free_energy_ti(thermo, h_star(k, thermo, cfg))


@dataclass
class LimitResult:
    partials: list[float]
    value: float
    extrapolated: float
    converged: bool
    n: int


def _aitken(x0: float, x1: float, x2: float) -> float | None:
    d1, d2 = x1 - x0, x2 - x1
    denom = d2 - d1
    if denom == 0 or abs(denom) < 1e-15 * max(1.0, abs(x2)):
        return None
    return x2 - d2 * d2 / denom


def free_energy_limit(field: BoundaryField, geom: TreeGeometry, thermo: Thermo,
                      n_max: int = 16, tol: float = 1e-9) -> LimitResult:
    """Partial values ``F_n = -(1/|V_n|) sum_{V_n} a(h_x)`` for n = 0..n_max.

    Stops early once ``|F_n - F_{n-1}| < tol``.  ``extrapolated`` applies one
    Aitken delta-squared step to the last three partials (the last partial is
    returned unchanged when converged or when the step is ill conditioned).
    """
    partials = []
    acc: list[float] = []
    converged = False
    for n in range(n_max + 1):
        acc.extend(c * local_term_a(v, thermo) for v, c in field.sphere_values(geom, n))
        partials.append(-math.fsum(acc) / vertex_count(geom, n))
        if n >= 1 and abs(partials[-1] - partials[-2]) < tol:
            converged = True
            break
    last = partials[-1]
    extrapolated = last
    if not converged and len(partials) >= 3:
        acc_val = _aitken(*partials[-3:])
        if acc_val is not None:
            extrapolated = acc_val
    return LimitResult(partials, last, extrapolated, converged, len(partials) - 1)


def sphere_averages(field: BoundaryField, geom: TreeGeometry, thermo: Thermo,
                    n0: int, n_max: int) -> list[float]:
    """``(1/|W_n|) sum_{W_n} a(h_x)`` for n = n0..n_max."""
    out = []
    for n in range(n0, n_max + 1):
        terms = [c * local_term_a(v, thermo) for v, c in field.sphere_values(geom, n)]
        out.append(math.fsum(terms) / sphere_size(geom, n))
    return out


def stolz_cesaro_average(values: Sequence[float], geom: TreeGeometry, thermo: Thermo) -> float:
    """``(1/|V_n|) sum_m |W_m| ln[4cosh(bJ - t_m)cosh(bJ + t_m)]`` for a level sequence."""
    n = len(values) - 1
    terms = [sphere_size(geom, m) * log_b_term(t, thermo.beta_j) for m, t in enumerate(values)]
    return math.fsum(terms) / vertex_count(geom, n)


@dataclass
class MonotonicityReport:
    averages: list[float]
    n0: int
    verdict: str
    hypothesis: bool | None = None

    @property
    def monotone(self) -> bool:
        return self.verdict != "non-monotone"


def _abs_monotone_along_paths(field: BoundaryField, geom: TreeGeometry, n0: int,
                              depth: int) -> bool | None:
    try:
        ball = Ball(geom, depth, max_vertices=200_000)
    except Exception:
        return None
    vals = [abs(v) for v in field.values_on(ball)]
    up = down = True
    for i in range(ball.levels[n0 + 1][0] if n0 + 1 <= depth else len(ball), len(ball)):
        p = int(ball.parent[i])
        up &= vals[i] >= vals[p] - 1e-15
        down &= vals[i] <= vals[p] + 1e-15
    return bool(up or down)


def an_monotonicity(field: BoundaryField, geom: TreeGeometry, thermo: Thermo,
                    n0: int = 1, n_max: int = 20) -> MonotonicityReport:
    """Sphere averages and whether their successive differences keep one sign."""
    avgs = sphere_averages(field, geom, thermo, n0, n_max)
    diffs = [b - a for a, b in zip(avgs, avgs[1:])]
    eps = 1e-14 * max(1.0, max(abs(a) for a in avgs))
    pos = any(d > eps for d in diffs)
    neg = any(d < -eps for d in diffs)
    if pos and neg:
        verdict = "non-monotone"
    elif pos:
        verdict = "non-decreasing"
    elif neg:
        verdict = "non-increasing"
    else:
        verdict = "constant"
    depth = min(n_max, 8)
    hyp = _abs_monotone_along_paths(field, geom, n0, depth) if depth > n0 else None
    return MonotonicityReport(avgs, n0, verdict, hyp)


# --- weakly periodic -------------------------------------------------------

def free_energy_wp(thermo: Thermo, h1: float, h2: float, k: int = 4, j: int = 1) -> float:
    """Density-weighted free energy on the invariant set ``|h4| = |h1|, |h3| = |h2|``.

    The weights are the limiting edge densities ``(k-j+1)/(k+1)`` for the
    same-class colours and ``j/(k+1)`` for the mixed ones (4/5 and 1/5 when
    k = 4, j = 1).
    """
    bj = thermo.beta_j
    w_same = (k - j + 1) / (k + 1)
    w_cross = j / (k + 1)
    return -(w_same * log_b_term(h1, bj) + w_cross * log_b_term(h2, bj)) / (2 * thermo.beta)


def free_energy_wp_xi(thermo: Thermo, xi: float) -> float:
    bj = thermo.beta_j
    c2 = 2 * math.cosh(2 * bj)
    first = c2 + (xi * c2 - 4) / (c2 - xi)
    second = c2 + xi**4 - 4 * xi**2 + 2
    if first <= 0 or second <= 0:
        raise DomainError(f"xi = {xi:.6g} gives a non-positive logarithm argument")
    return -(4 * math.log(first) + math.log(second)) / (10 * thermo.beta)


def _xi1_parts(beta: float) -> tuple[complex, complex]:
    e2 = math.exp(2 * beta)
    rad = -96 - 39 * e2**2 + 54 * e2**3 + 69 * e2**4 - 12 * e2**5
    U = (-9 * e2 - 27 * e2**2 + 2 * e2**3 + 3 * cmath.sqrt(rad)) ** (1 / 3)
    return complex(e2), U


def xi1_closed_form(beta: float, imag_tol: float = 1e-9) -> float:
    """Cardano expression for the larger admissible root (``J = 1``).

    Intermediates are complex on the principal branch; the imaginary part of
    the result must cancel to ``imag_tol``.
    """
    e2, U = _xi1_parts(beta)
    xi = (e2 + 2 ** (1 / 3) * (6 + e2**2) / U + 2 ** (-1 / 3) * U) / 3
    if abs(xi.imag) > imag_tol * max(1.0, abs(xi.real)):
        raise ArithmeticError(f"xi1 keeps imaginary part {xi.imag:g}")
    return xi.real


def free_energy_wp_closed(beta: float, imag_tol: float = 1e-9) -> float:
    """Weakly periodic free energy in terms of ``W`` (``J = 1``, ``e^{4b} W / 6 = xi_1``)."""
    e2, U = _xi1_parts(beta)
    em2 = 1 / e2
    V = 2 ** (4 / 3) * em2**2 * (6 + e2**2)
    W = 2 * em2 + V / U + 2 ** (2 / 3) * em2**2 * U
    x = e2**2 * W / 6
    num = (e2 - em2) ** 8 * (2 + em2 + e2 - 4 * x**2 + x**4)
    den = (em2 + e2 - x) ** 4
    val = num / den
    if abs(val.imag) > imag_tol * abs(val):
        raise ArithmeticError(f"free energy argument keeps imaginary part {val.imag:g}")
    return -math.log(val.real) / (10 * beta)


def wp_branches(thermo: Thermo) -> list[float]:
    """Admissible roots of the cubic at this temperature, largest first."""
    return sorted(cubic_rrx_roots(thermo.alpha).admissible, reverse=True)


# --- parametric curve and entropies ------------------------------------------

def beta_of_h(h: float, k: int, J: float = 1.0) -> float:
    """Inverse temperature at which ``h > 0`` solves ``h = k f(h, theta)``."""
    if J == 0:
        raise DomainError("J must be nonzero")
    if h <= 0:
        raise DomainError(
            f"h must be positive; the h -> 0+ limit is atanh(1/k)/J = {math.atanh(1 / k) / J:.15g}"
        )
    num = math.expm1((1 + 1 / k) * 2 * h)
    den = math.exp(2 * h) - math.exp(2 * h / k)
    beta = math.log(num / den) / (2 * J)
    if beta <= 0:
        raise DomainError("no positive beta for this h and J")
    return beta


def dh_dbeta(h: float, k: int, J: float = 1.0) -> float:
    """Slope of the TI branch, ``J k (cosh 2h - cosh(2h/k)) / (sinh 2h - k sinh(2h/k))``."""
    return J * k * (math.cosh(2 * h) - math.cosh(2 * h / k)) / (
        math.sinh(2 * h) - k * math.sinh(2 * h / k)
    )


def entropy_zero(thermo: Thermo) -> float:
    bj = thermo.beta_j
    return math.log(2 * math.cosh(bj)) - bj * math.tanh(bj)


def entropy_ti(thermo: Thermo, h: float, k: int, tol: float = 1e-9) -> float:
    """``-dF/dT`` along the translation-invariant branch through ``h``.

    ``S = (1/2) ln[2cosh 2h + 2cosh 2bJ] - bJ (sinh 2bJ + k sinh(2h) r) / (cosh 2h + cosh 2bJ)``
    with ``r = (cosh 2h - cosh(2h/k)) / (sinh 2h - k sinh(2h/k))``.
    """
    theta = thermo.theta
    if abs(h - k * f_theta(h, theta)) > tol * max(1.0, abs(h)):
        raise DomainError(f"h = {h!r} does not solve h = k f(h, theta) at this beta")
    if h == 0:
        return entropy_zero(thermo)
    bj = thermo.beta_j
    h = abs(h)
    r = (math.cosh(2 * h) - math.cosh(2 * h / k)) / (math.sinh(2 * h) - k * math.sinh(2 * h / k))
    denom = math.cosh(2 * h) + math.cosh(2 * bj)
    return 0.5 * log_b_term(h, bj) - bj * (math.sinh(2 * bj) + k * math.sinh(2 * h) * r) / denom


def entropy_k2_closed(thermo: Thermo) -> float:
    bj = thermo.beta_j
    if math.exp(2 * bj) <= 3:
        raise DomainError("closed form needs exp(2 beta J) > 3")
    return (
        math.log(2 * math.sinh(bj))
        + 0.5 * math.log(2 * math.cosh(bj))
        - bj * (3 * math.cosh(2 * bj) + 1) / (2 * math.sinh(2 * bj))
    )


def entropy_fd(free_energy: Callable[[float], float], beta: float, rel_step: float = 1e-4) -> float:
    """``-dF/dT`` by a central difference in ``T = 1/beta`` with step ``rel_step * T``."""
    T = 1 / beta
    d = rel_step * T
    return -(free_energy(1 / (T + d)) - free_energy(1 / (T - d))) / (2 * d)


# --- curves ------------------------------------------------------------------

CURVE_FAMILIES = ("ti-zero", "ti-star", "wp", "k2-closed")


@dataclass
class ThermoPoint:
    beta: float
    theta: float
    alpha: float
    F: float | None
    S: float | None = None
    flag: str = "ok"
    param: float | None = None


@dataclass
class CurveSpec:
    family: str
    k: int
    J: float = 1.0
    grid: Sequence[float] = ()
    param: str = "beta"
    branch: int = 1
    cfg: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.family not in CURVE_FAMILIES:
            raise DomainError(f"unknown curve family {self.family!r}")
        if self.param not in ("beta", "alpha", "h"):
            raise DomainError(f"unknown grid parameter {self.param!r}")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise DomainError("grid must be strictly increasing")


def _point(thermo: Thermo, F=None, S=None, flag="ok", param=None) -> ThermoPoint:
    return ThermoPoint(thermo.beta, thermo.theta, thermo.alpha, F, S, flag, param)


def curve_point(spec: CurveSpec, x: float) -> ThermoPoint:
    k, J = spec.k, spec.J
    if spec.param == "h":
        if spec.family != "ti-star":
            raise DomainError("the h parametrisation applies to the ti-star family")
        try:
            thermo = Thermo(J, beta_of_h(x, k, J))
        except DomainError:
            return ThermoPoint(math.nan, math.nan, math.nan, None, None, "domain", x)
        return _point(thermo, free_energy_ti(thermo, x), entropy_ti(thermo, x, k), param=x)
    if spec.param == "alpha":
        if x <= 0:
            return ThermoPoint(math.nan, math.nan, x, None, None, "domain", x)
        thermo = Thermo(J, -math.log(x) / (2 * J))
    else:
        thermo = Thermo(J, x)
    if spec.family == "ti-zero":
        return _point(thermo, free_energy_ti(thermo, 0.0), entropy_zero(thermo), param=x)
    if spec.family == "ti-star":
        roots = [r for r in solve_ti(k, thermo, spec.cfg).roots if r > 0]
        if not roots:
            return _point(thermo, flag="below-threshold", param=x)
        hs = roots[-1]
        return _point(thermo, free_energy_ti(thermo, hs), entropy_ti(thermo, hs, k), param=x)
    if spec.family == "k2-closed":
        if k != 2:
            raise DomainError("the k2-closed family needs k = 2")
        if math.exp(2 * thermo.beta_j) <= 3:
            return _point(thermo, flag="below-threshold", param=x)
        return _point(thermo, free_energy_k2_closed(thermo), entropy_k2_closed(thermo), param=x)
    # wp
    if k != 4:
        raise DomainError("the wp family is available for k = 4, |A| = 1")
    branches = wp_branches(thermo)
    if len(branches) < spec.branch:
        return _point(thermo, flag="no-wp-solution", param=x)
    xi = branches[spec.branch - 1]
    return _point(thermo, free_energy_wp_xi(thermo, xi), param=x)


def emit_curve(spec: CurveSpec) -> list[ThermoPoint]:
    """One point per grid value, in grid order; out-of-domain rows are flagged."""
    return [curve_point(spec, x) for x in spec.grid]
