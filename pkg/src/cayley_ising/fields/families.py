"""Boundary-field families and the compatibility check.

A field assigns ``h_x`` to every vertex.  Each family answers two queries:
``value(word)`` for a single vertex and ``sphere_values(geom, n)``, the
multiset of values on ``W_n`` as ``(value, multiplicity)`` pairs.  The latter
lets free energies be summed over balls far larger than can be enumerated.

Structured families hold their non-root values explicitly.  The root value is
stored separately; the factories set it from the compatibility equation so
that the root (which has ``k+1`` successors on the full tree) is consistent.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..census import census_recurrence
from ..errors import ConvergenceError, DomainError
from ..tree import (
    Ball,
    SubgroupSpec,
    TreeGeometry,
    classify_vertex,
    enumerate_sphere,
    sphere_size,
)
from .core import SolverConfig, Thermo, f_theta


class BoundaryField:
    """Base class; subclasses are frozen dataclasses with a ``root`` field."""

    root: float | None

    def _root_default(self) -> float:
        raise NotImplementedError

    @property
    def root_value(self) -> float:
        return self._root_default() if self.root is None else self.root

    def value(self, word: Sequence[int]) -> float:
        raise NotImplementedError

    def sphere_values(self, geom: TreeGeometry, n: int) -> list[tuple[float, int]]:
        if n == 0:
            return [(self.root_value, 1)]
        vals: dict[float, int] = {}
        for w in enumerate_sphere(geom, n):
            v = self.value(w)
            vals[v] = vals.get(v, 0) + 1
        return list(vals.items())

    def values_on(self, ball: Ball) -> np.ndarray:
        return np.array([self.value(w) for w in ball.words], dtype=float)


def with_compatible_root(field: BoundaryField, geom: TreeGeometry, theta: float) -> BoundaryField:
    """Copy of ``field`` whose root value solves the compatibility equation."""
    root = sum(c * f_theta(v, theta) for v, c in field.sphere_values(geom, 1))
    return dataclasses.replace(field, root=float(root))


@dataclass(frozen=True)
class ConstantField(BoundaryField):
    h: float
    root: float | None = None

    def _root_default(self):
        return self.h

    def value(self, word):
        return self.root_value if len(word) == 0 else self.h

    def sphere_values(self, geom, n):
        if n == 0:
            return [(self.root_value, 1)]
        return [(self.h, sphere_size(geom, n))]

    def values_on(self, ball):
        vals = np.full(len(ball), self.h, dtype=float)
        vals[0] = self.root_value
        return vals


@dataclass(frozen=True)
class LevelSequenceField(BoundaryField):
    """``h_x = values[n]`` on ``W_n``; ``values[0]`` is the root unless overridden."""

    values: tuple
    root: float | None = None

    def _root_default(self):
        return self.values[0]

    def _level(self, n):
        if n == 0:
            return self.root_value
        if n >= len(self.values):
            raise DomainError(f"level {n} beyond the stored depth {len(self.values) - 1}")
        return self.values[n]

    def value(self, word):
        return self._level(len(word))

    def sphere_values(self, geom, n):
        return [(self._level(n), sphere_size(geom, n))]

    def values_on(self, ball):
        table = np.array([self._level(m) for m in range(ball.n + 1)], dtype=float)
        return table[ball.level]


@dataclass(frozen=True)
class ParityPeriodicField(BoundaryField):
    """Periodic with respect to the even-length subgroup: ``even`` on even levels."""

    even: float
    odd: float
    root: float | None = None

    def _root_default(self):
        return self.even

    def _level(self, n):
        if n == 0:
            return self.root_value
        return self.even if n % 2 == 0 else self.odd

    def value(self, word):
        return self._level(len(word))

    def sphere_values(self, geom, n):
        return [(self._level(n), sphere_size(geom, n))]

    def values_on(self, ball):
        table = np.array([self._level(m) for m in range(ball.n + 1)], dtype=float)
        return table[ball.level]


@dataclass(frozen=True)
class WeaklyPeriodicField(BoundaryField):
    """``h_x`` indexed by (class(x), class(x_down)): AA->h1, AB->h2, BA->h3, BB->h4."""

    h1: float
    h2: float
    h3: float
    h4: float
    sub: SubgroupSpec
    root: float | None = None

    def _root_default(self):
        return self.h1

    def _table(self):
        return {(0, 0): self.h1, (0, 1): self.h2, (1, 0): self.h3, (1, 1): self.h4}

    def value(self, word):
        if len(word) == 0:
            return self.root_value
        child = int(classify_vertex(word, self.sub))
        parent = int(classify_vertex(word[:-1], self.sub))
        return self._table()[(child, parent)]

    def sphere_values(self, geom, n):
        if n == 0:
            return [(self.root_value, 1)]
        if geom.half:
            raise DomainError("weakly periodic fields are defined on the full tree")
        if max(self.sub.A) > geom.k + 1:
            raise DomainError("subgroup letters exceed the generator range")
        row = census_recurrence(geom.k, self.sub.j, n)[-1]
        return [(self.h1, row.c_AA), (self.h2, row.c_AB), (self.h3, row.c_BA), (self.h4, row.c_BB)]

    def values_on(self, ball):
        cls = ball.classes(self.sub)
        vals = np.empty(len(ball), dtype=float)
        vals[0] = self.root_value
        table = self._table()
        for i in range(1, len(ball)):
            vals[i] = table[(int(cls[i]), int(cls[ball.parent[i]]))]
        return vals


@dataclass(frozen=True)
class BGField(BoundaryField):
    """Half-tree field: ``-h*`` left of an infinite path, ``+h*`` right of it.

    ``path`` holds the path words of levels ``0..depth`` and ``path_values`` the
    field on them.  Left/right is lexicographic order within a sphere.
    """

    k: int
    h_star: float
    path: tuple
    path_values: tuple
    positions: tuple
    root: float | None = None

    def _root_default(self):
        return self.path_values[0]

    @property
    def depth(self) -> int:
        return len(self.path) - 1

    def value(self, word):
        n = len(word)
        if n == 0:
            return self.root_value
        if n > self.depth:
            raise DomainError(f"level {n} beyond the path depth {self.depth}")
        word = tuple(word)
        if word == self.path[n]:
            return self.path_values[n]
        return -self.h_star if word < self.path[n] else self.h_star

    def sphere_values(self, geom, n):
        if not geom.half or geom.k != self.k:
            raise DomainError("BG fields live on the half tree of the same order")
        if n == 0:
            return [(self.root_value, 1)]
        if n > self.depth:
            raise DomainError(f"level {n} beyond the path depth {self.depth}")
        left = self.positions[n]
        right = self.k**n - 1 - left
        return [(-self.h_star, left), (self.path_values[n], 1), (self.h_star, right)]


@dataclass(frozen=True)
class ARTField(BoundaryField):
    """A field on the order-``k0`` tree embedded in the order-``k`` tree, zero elsewhere.

    The embedded copy consists of the words over the letters ``1..k0+1``.
    """

    inner: BoundaryField
    k0: int
    k: int
    root: float | None = None

    def _root_default(self):
        return self.inner.root_value

    def value(self, word):
        if len(word) == 0:
            return self.root_value
        if max(word) <= self.k0 + 1:
            return self.inner.value(word)
        return 0.0

    def sphere_values(self, geom, n):
        if geom.half or geom.k != self.k:
            raise DomainError("ART field is defined on the full order-k tree")
        if n == 0:
            return [(self.root_value, 1)]
        inner_geom = TreeGeometry(self.k0)
        inner = self.inner.sphere_values(inner_geom, n)
        rest = sphere_size(geom, n) - sphere_size(inner_geom, n)
        return list(inner) + [(0.0, rest)]


@dataclass(frozen=True)
class ExplicitField(BoundaryField):
    """Per-vertex values keyed by word; missing words take ``default`` if set."""

    mapping: Mapping
    default: float | None = None
    root: float | None = None

    def _root_default(self):
        return self.value_of(())

    def value_of(self, word):
        word = tuple(word)
        if word in self.mapping:
            return float(self.mapping[word])
        if self.default is None:
            raise DomainError(f"no value for vertex {word}")
        return self.default

    def value(self, word):
        if len(word) == 0:
            return self.root_value
        return self.value_of(word)


# --- factories -------------------------------------------------------------

def ti_field(h: float, k: int, thermo: Thermo) -> ConstantField:
    return with_compatible_root(ConstantField(h), TreeGeometry(k), thermo.theta)


def periodic_field(u: float, v: float, k: int, thermo: Thermo) -> ParityPeriodicField:
    """``u`` on even levels, ``v`` on odd ones."""
    return with_compatible_root(ParityPeriodicField(u, v), TreeGeometry(k), thermo.theta)


def wp_field(h: Sequence[float], sub: SubgroupSpec, k: int, thermo: Thermo) -> WeaklyPeriodicField:
    h1, h2, h3, h4 = h
    field = WeaklyPeriodicField(h1, h2, h3, h4, sub)
    return with_compatible_root(field, TreeGeometry(k), thermo.theta)


def zachary_field(t0: float, k: int, thermo: Thermo, N: int, half: bool = False) -> LevelSequenceField:
    """Level field ``t_n``; on the full tree the root value is re-derived."""
    from .solve import zachary_sequence

    ts = tuple(zachary_sequence(t0, k, thermo, N))
    field = LevelSequenceField(ts)
    if half:
        return field
    return with_compatible_root(field, TreeGeometry(k), thermo.theta)


def art_field(inner: BoundaryField, k0: int, k: int) -> ARTField:
    if k <= k0:
        raise DomainError(f"outer order k={k} must exceed inner order k0={k0}")
    return ARTField(inner, k0, k)


def _turn_at(turns, n: int) -> int:
    if isinstance(turns, int):
        return turns
    return turns[n % len(turns)]


def bg_field(turns, k: int, thermo: Thermo, depth: int, cfg: SolverConfig = SolverConfig(),
             terminal: float | None = None) -> BGField:
    """Path field on the half tree.

    ``turns`` picks, at each level, which child (0-based, ascending letter)
    the path follows; an int is a constant rule and a sequence is repeated.
    Path values satisfy ``h_n = f(h_{n+1}) + f(h*)(k-1-2c_n)`` where ``c_n``
    children lie left of the path.  They are obtained by backward iteration
    from ``terminal`` (default ``h*``) placed deeper and deeper until levels
    ``0..depth`` move by less than ``cfg.tol``.
    """
    from .solve import h_star

    theta = thermo.theta
    hs = h_star(k, thermo, cfg)
    geom = TreeGeometry(k, half=True)
    if isinstance(turns, int):
        turns = (turns,)
    turns = tuple(int(c) for c in turns)
    if not turns or any(not 0 <= c < k for c in turns):
        raise DomainError(f"turn indices must lie in 0..{k - 1}")
    term = hs if terminal is None else terminal
    fs = f_theta(hs, theta)

    def backward(levels: int) -> list[float]:
        h = term
        out = [0.0] * (levels + 1)
        out[levels] = h
        for n in range(levels - 1, -1, -1):
            c = _turn_at(turns, n)
            h = f_theta(h, theta) + fs * (k - 1 - 2 * c)
            out[n] = h
        return out

    extra = max(8, depth)
    prev = backward(depth + extra)[: depth + 1]
    change = float("inf")
    for _ in range(max(1, cfg.max_iter)):
        extra *= 2
        cur = backward(depth + extra)[: depth + 1]
        change = max(abs(a - b) for a, b in zip(cur, prev))
        prev = cur
        if change < cfg.tol:
            break
        if extra > 1_000_000:
            break
    if change >= cfg.tol:
        raise ConvergenceError(f"path values did not settle (last change {change:g})")

    path = [()]
    positions = [0]
    for n in range(depth):
        c = _turn_at(turns, n)
        path.append(path[-1] + (geom.child_letters(path[-1])[c],))
        positions.append(k * positions[-1] + c)
    return BGField(k, hs, tuple(path), tuple(prev), tuple(positions))


# --- compatibility ---------------------------------------------------------

@dataclass
class CompatibilityReport:
    sup: float
    worst_vertex: tuple
    n: int
    vertices_checked: int


def check_compatibility(field: BoundaryField, geom: TreeGeometry, thermo: Thermo, n: int,
                        max_vertices: int = 2_000_000) -> CompatibilityReport:
    """``sup_{x in V_{n-1}} |h_x - sum_{y in S(x)} f(h_y, theta)|``."""
    if n < 1:
        raise DomainError("depth must be >= 1")
    ball = Ball(geom, n, max_vertices=max_vertices)
    vals = field.values_on(ball)
    fy = f_theta(vals, thermo.theta)
    sums = np.zeros(len(ball))
    np.add.at(sums, ball.parent[1:], fy[1:])
    inner = ball.levels[n][0]
    res = np.abs(vals[:inner] - sums[:inner])
    i = int(np.argmax(res))
    return CompatibilityReport(float(res[i]), ball.words[i], n, inner)


def oscillating_field(levels: int, high: float = 1.0, low: float = 0.0) -> LevelSequenceField:
    """``|h| = high, low, high, ...`` by level; not compatible, used as a counterexample."""
    if levels < 0:
        raise DomainError("levels must be >= 0")
    return LevelSequenceField(tuple(high if m % 2 == 0 else low for m in range(levels + 1)))
