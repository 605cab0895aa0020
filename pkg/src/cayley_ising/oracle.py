"""Ground truth: exact partition functions by enumeration and by the product identity.

The finite-volume measure on ``V_n`` is
``mu_n(sigma) ~ exp(beta J sum_{<x,y>} sigma_x sigma_y + sum_{x in W_n} h_x sigma_x)``
with the field acting on the outer sphere only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, CompatibilityError
from .fields.core import Thermo, f_theta
from .fields.families import BoundaryField
from .thermo import local_term_a, log_b_term
from .tree import Ball, TreeGeometry, vertex_count

MAX_BRUTE_VERTICES = 24
MAX_MARGINAL_VERTICES = 22
_CHUNK_BITS = 16


@dataclass
class ExactZ:
    value: float
    log_value: float
    n: int
    k: int
    thermo: Thermo
    tag: str = ""
    method: str = ""


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + math.log(math.fsum(np.exp(x - m)))


def _normalise(log_w: np.ndarray) -> np.ndarray:
    w = np.exp(log_w - np.max(log_w))
    return w / math.fsum(w)


def _combine_logs(parts: list[float]) -> float:
    m = max(parts)
    return m + math.log(math.fsum(math.exp(p - m) for p in parts))


def _make_z(log_z: float, n: int, geom: TreeGeometry, thermo: Thermo, tag: str, method: str) -> ExactZ:
    value = math.exp(log_z) if log_z < 709 else math.inf
    return ExactZ(value, log_z, n, geom.k, thermo, tag, method)


def _guard(geom: TreeGeometry, n: int, cap: int) -> int:
    size = vertex_count(geom, n)
    if size > cap:
        raise CapacityError(f"|V_{n}| = {size} exceeds the enumeration limit {cap}")
    return size


def _spin_chunks(size: int):
    """Yield ``(chunk, size)`` arrays of +-1 spins covering all ``2**size`` states."""
    low = min(size, _CHUNK_BITS)
    low_idx = np.arange(1 << low, dtype=np.int64)
    low_bits = ((low_idx[:, None] >> np.arange(low)) & 1).astype(np.int8)
    for hi in range(1 << (size - low)):
        hi_bits = ((hi >> np.arange(size - low)) & 1).astype(np.int8)
        bits = np.concatenate([low_bits, np.broadcast_to(hi_bits, (len(low_idx), size - low))], axis=1)
        yield (1 - 2 * bits).astype(float)


def _outer_field(ball: Ball, field: BoundaryField) -> np.ndarray:
    """Field vector on ``V_n`` that is zero except on ``W_n``."""
    h = np.zeros(len(ball))
    start, stop = ball.levels[ball.n]
    h[start:stop] = field.values_on(ball)[start:stop]
    return h


def brute_force_Z(geom: TreeGeometry, n: int, thermo: Thermo, field: BoundaryField,
                  tag: str = "") -> ExactZ:
    """Sum over all ``2^{|V_n|}`` configurations in the log domain."""
    size = _guard(geom, n, MAX_BRUTE_VERTICES)
    ball = Ball(geom, n)
    h = _outer_field(ball, field)
    child, par = ball.edges().T
    parts = []
    for s in _spin_chunks(size):
        energy = thermo.beta_j * np.sum(s[:, child] * s[:, par], axis=1) + s @ h
        parts.append(_logsumexp(energy))
    return _make_z(_combine_logs(parts), n, geom, thermo, tag, "brute-force")


def push_inward(ball: Ball, outer: np.ndarray, theta: float) -> np.ndarray:
    """Fields on ``V_n`` generated from those on ``W_n`` by ``h_x = sum_{y in S(x)} f(h_y)``."""
    h = np.zeros(len(ball))
    start, stop = ball.levels[ball.n]
    h[start:stop] = outer[start:stop]
    for m in range(ball.n - 1, -1, -1):
        cs, ce = ball.levels[m + 1]
        np.add.at(h, ball.parent[cs:ce], f_theta(h[cs:ce], theta))
    return h


def product_Z(geom: TreeGeometry, n: int, thermo: Thermo, field: BoundaryField,
              tol: float = 1e-9, tag: str = "") -> ExactZ:
    """``Z_n = prod_{x in V_{n-1}} b(x) * 2cosh(h_root)`` with inward-generated fields.

    Refuses with ``CompatibilityError`` when the field's own inner values differ
    from the inward-generated ones by more than ``tol``.
    """
    ball = Ball(geom, n)
    own = field.values_on(ball)
    pushed = push_inward(ball, own, thermo.theta)
    inner = ball.levels[n][0]
    residual = float(np.max(np.abs(pushed[:inner] - own[:inner]))) if inner else 0.0
    if residual > tol:
        raise CompatibilityError(
            f"field is not compatible on V_{n - 1} (residual {residual:.3g} > {tol:g})", residual
        )
    bj = thermo.beta_j
    terms = [0.5 * log_b_term(float(v), bj) for v in pushed[1:]]
    terms.append(math.log(2) + math.log(math.cosh(pushed[0])) if abs(pushed[0]) < 300
                 else abs(pushed[0]))
    return _make_z(math.fsum(terms), n, geom, thermo, tag, "product")


def marginalization_check(geom: TreeGeometry, n: int, thermo: Thermo, field: BoundaryField) -> float:
    """Largest deviation between the ``W_n``-marginal of ``mu_n`` and ``mu_{n-1}``.

    ``mu_{n-1}`` uses the field's own values on ``W_{n-1}``, so an incompatible
    family shows a positive deviation.
    """
    if n < 1:
        raise ValueError("marginalization needs n >= 1")
    _guard(geom, n, MAX_MARGINAL_VERTICES)
    ball = Ball(geom, n)
    vals = field.values_on(ball)
    inner = ball.levels[n][0]
    bj = thermo.beta_j
    child, par = ball.edges().T
    inner_edges = child < inner
    ic, ip = child[inner_edges], par[inner_edges]
    ws, we = ball.levels[n]
    outer_h = vals[ws:we]
    outer_par = ball.parent[ws:we]
    ls, le = ball.levels[n - 1]
    h_prev = vals[ls:le]

    log_marg, log_prev = [], []
    for s in _spin_chunks(inner):
        bond = bj * np.sum(s[:, ic] * s[:, ip], axis=1) if len(ic) else np.zeros(len(s))
        # Summing out W_n factorises over its vertices.
        outer = np.sum(np.log(2 * np.cosh(bj * s[:, outer_par] + outer_h)), axis=1)
        log_marg.append(bond + outer)
        log_prev.append(bond + s[:, ls:le] @ h_prev)
    lm = np.concatenate(log_marg)
    lp = np.concatenate(log_prev)
    pm, pp = _normalise(lm), _normalise(lp)
    return float(np.max(np.abs(pm - pp)))


def free_energy_direct(geom: TreeGeometry, thermo: Thermo, field: BoundaryField, n: int,
                       method: str = "product", tol: float = 1e-9) -> float:
    """``-ln Z_n / (beta |V_n|)`` from the product identity or from enumeration."""
    if method == "product":
        z = product_Z(geom, n, thermo, field, tol)
    elif method == "brute":
        z = brute_force_Z(geom, n, thermo, field)
    else:
        raise ValueError(f"unknown method {method!r}")
    return -z.log_value / (thermo.beta * vertex_count(geom, n))


def z0_correction(thermo: Thermo, root_field: float) -> float:
    """``a(h_root) - ln(2cosh h_root)/beta``: ``|V_n|`` times (direct minus partial free energy)."""
    return local_term_a(root_field, thermo) - math.log(2 * math.cosh(root_field)) / thermo.beta
