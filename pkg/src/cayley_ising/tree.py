"""Cayley tree geometry, reduced-word vertex addressing and parity classes.

Vertices of the order-``k`` Cayley tree are identified with reduced words over
the generators ``1..k+1`` of the free product of ``k+1`` copies of Z/2.  The
root is the empty word and the ancestor of a word is obtained by dropping its
last letter.  The half tree used by path constructions is the full tree with
the branch starting at letter ``k+1`` removed, so that the root has ``k``
successors and every other vertex still has ``k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, DomainError

# Exact counts are kept within the signed 64-bit range so that tables stay
# interoperable with fixed-width consumers.
MAX_COUNT = 2**63 - 1
DEFAULT_MAX_VERTICES = 2_000_000

Word = tuple


class Coset(enum.IntEnum):
    H0 = 0
    H1 = 1


class EdgeColor(enum.Enum):
    """Colour of the edge from a vertex to its ancestor: (class(child), class(parent))."""

    AA = (0, 0)
    AB = (0, 1)
    BA = (1, 0)
    BB = (1, 1)

    @classmethod
    def from_classes(cls, child: int, parent: int) -> "EdgeColor":
        return cls((int(child), int(parent)))


@dataclass(frozen=True)
class TreeGeometry:
    k: int
    half: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise DomainError(f"order k must be an integer >= 2, got {self.k!r}")

    @property
    def root_degree(self) -> int:
        return self.k if self.half else self.k + 1

    def root_letters(self) -> range:
        return range(1, self.root_degree + 1)

    def child_letters(self, word: Sequence[int]) -> list[int]:
        if not word:
            return list(self.root_letters())
        last = word[-1]
        return [i for i in range(1, self.k + 2) if i != last]


@dataclass(frozen=True)
class SubgroupSpec:
    """Index-two subgroup H_A: words with an even number of letters from ``A``."""

    A: frozenset

    def __init__(self, A):
        letters = frozenset(int(a) for a in A)
        if not letters or min(letters) < 1:
            raise DomainError("A must be a nonempty set of generator indices >= 1")
        object.__setattr__(self, "A", letters)

    @classmethod
    def first(cls, j: int) -> "SubgroupSpec":
        return cls(range(1, j + 1))

    @property
    def j(self) -> int:
        return len(self.A)


def _check_level(n: int) -> None:
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")


def sphere_size(geom: TreeGeometry, n: int) -> int:
    """Number of vertices at distance ``n`` from the root."""
    _check_level(n)
    if n == 0:
        return 1
    size = geom.root_degree * geom.k ** (n - 1)
    if size > MAX_COUNT:
        raise CapacityError(f"|W_{n}| = {size} exceeds the integer capacity")
    return size


def ball_size(geom: TreeGeometry, n: int) -> int:
    """``|V_n| = ((k+1) k^n - 2) / (k - 1)`` for the full tree."""
    if geom.half:
        raise DomainError("ball_size is defined for the full tree; use vertex_count")
    _check_level(n)
    k = geom.k
    num = (k + 1) * k**n - 2
    if num // (k - 1) > MAX_COUNT:
        raise CapacityError(f"|V_{n}| exceeds the integer capacity")
    return num // (k - 1)


def vertex_count(geom: TreeGeometry, n: int) -> int:
    """Ball size for either geometry."""
    if not geom.half:
        return ball_size(geom, n)
    _check_level(n)
    return (geom.k ** (n + 1) - 1) // (geom.k - 1)


def is_reduced(word: Sequence[int]) -> bool:
    return all(a != b for a, b in zip(word, word[1:]))


def word_in_geometry(word: Sequence[int], geom: TreeGeometry) -> bool:
    if not is_reduced(word) or any(not 1 <= a <= geom.k + 1 for a in word):
        return False
    return not (word and word[0] > geom.root_degree)


def classify_vertex(word: Sequence[int], sub: SubgroupSpec) -> Coset:
    """H0 iff the total count of letters from ``A`` in ``word`` is even."""
    return Coset(sum(1 for a in word if a in sub.A) % 2)


def edge_color(word: Sequence[int], sub: SubgroupSpec) -> EdgeColor:
    if not word:
        raise DomainError("the root has no edge towards an ancestor")
    child = classify_vertex(word, sub)
    parent = classify_vertex(word[:-1], sub)
    return EdgeColor.from_classes(child, parent)


def enumerate_sphere(
    geom: TreeGeometry, n: int, max_vertices: int = DEFAULT_MAX_VERTICES
) -> Iterator[Word]:
    """Yield the words of ``W_n`` in lexicographic order."""
    if sphere_size(geom, n) > max_vertices:
        raise CapacityError(
            f"|W_{n}| = {sphere_size(geom, n)} exceeds max_vertices={max_vertices}"
        )

    def walk(prefix: tuple) -> Iterator[Word]:
        if len(prefix) == n:
            yield prefix
            return
        for letter in geom.child_letters(prefix):
            yield from walk(prefix + (letter,))

    yield from walk(())


class Ball:
    """Explicit enumeration of ``V_n``, level by level in lexicographic order.

    ``parent[i]`` is the index of the ancestor of vertex ``i`` (-1 for the root)
    and the vertices of level ``m`` occupy ``range(*self.levels[m])``.  Children
    of a vertex are contiguous and start at ``child_start[i]``.
    """

    def __init__(self, geom: TreeGeometry, n: int, max_vertices: int = DEFAULT_MAX_VERTICES):
        _check_level(n)
        total = vertex_count(geom, n)
        if total > max_vertices:
            raise CapacityError(f"|V_{n}| = {total} exceeds max_vertices={max_vertices}")
        self.geom = geom
        self.n = n
        words: list[Word] = [()]
        parent = [-1]
        levels = [(0, 1)]
        child_start = []
        for m in range(n):
            start, stop = levels[-1]
            for i in range(start, stop):
                child_start.append(len(words))
                w = words[i]
                for letter in geom.child_letters(w):
                    words.append(w + (letter,))
                    parent.append(i)
            levels.append((stop, len(words)))
        child_start.extend([len(words)] * (len(words) - len(child_start)))
        self.words = words
        self.parent = np.asarray(parent, dtype=np.int64)
        self.levels = levels
        self.child_start = np.asarray(child_start, dtype=np.int64)
        self.level = np.empty(len(words), dtype=np.int64)
        for m, (start, stop) in enumerate(levels):
            self.level[start:stop] = m

    def __len__(self) -> int:
        return len(self.words)

    def edges(self) -> np.ndarray:
        """Array of (child, parent) index pairs, one row per edge of ``V_n``."""
        child = np.arange(1, len(self.words))
        return np.stack([child, self.parent[1:]], axis=1)

    def sphere(self, m: int) -> range:
        return range(*self.levels[m])

    def classes(self, sub: SubgroupSpec) -> np.ndarray:
        cls = np.zeros(len(self.words), dtype=np.int8)
        for i in range(1, len(self.words)):
            flip = self.words[i][-1] in sub.A
            cls[i] = cls[self.parent[i]] ^ flip
        return cls
