"""Edge-colour census of the ball for an index-two subgroup H_A with |A| = j.

Per-level counts ``c_AA .. c_BB`` of edges ``(x, x_down)`` between ``W_n`` and
``W_{n-1}`` are produced three ways: the exact integer recurrence, an explicit
level-by-level walk over all vertices, and the closed form built from the
roots of the characteristic polynomial.  Colours are named by
(class(child), class(parent)) with A = H0 and B = H1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapacityError, DomainError
from .tree import MAX_COUNT, TreeGeometry, ball_size, sphere_size

DEFAULT_MAX_TRAVERSAL = 5_000_000


@dataclass(frozen=True)
class CensusRow:
    n: int
    c_AA: int
    c_AB: int
    c_BA: int
    c_BB: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.c_AA, self.c_AB, self.c_BA, self.c_BB)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


@dataclass(frozen=True)
class CumulativeRow:
    n: int
    A: int
    B: int
    C: int
    D: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.A, self.B, self.C, self.D)


@dataclass(frozen=True)
class ClosedFormCoeffs:
    """Roots and coefficients of ``p_n = sum_i A_i n^{m_i} lambda_i^n``.

    ``powers[i]`` is 0 for a simple root and 1 for the second basis function of
    a double root.  ``lambdas[0]`` is always ``-1/k``; the remaining two follow
    the ordering ``(k-2j+1 -+ sqrt(disc)) / (2k)``.
    """

    k: int
    j: int
    lambdas: tuple[complex, complex, complex]
    coeffs: tuple[complex, complex, complex]
    powers: tuple[int, int, int] = (0, 0, 0)


def _check_kj(k: int, j: int) -> None:
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if not 1 <= j <= k + 1:
        raise DomainError(f"j must lie in 1..k+1, got {j}")


def _check_capacity(k: int, N: int) -> None:
    # Cumulative totals are bounded by |V_N|.
    if N >= 1 and ball_size(TreeGeometry(k), N) > MAX_COUNT:
        raise CapacityError(f"level {N} exceeds the integer capacity for k={k}")


def census_recurrence(k: int, j: int, N: int) -> list[CensusRow]:
    """Rows 1..N from the four-term linear recurrence with exact integers."""
    _check_kj(k, j)
    _check_capacity(k, N)
    rows = []
    aa, ab, ba, bb = k - j + 1, 0, j, 0
    for n in range(1, N + 1):
        rows.append(CensusRow(n, aa, ab, ba, bb))
        aa, ab, ba, bb = (
            (k - j) * aa + (k - j + 1) * ab,
            (j - 1) * ba + j * bb,
            (j - 1) * ab + j * aa,
            (k - j) * bb + (k - j + 1) * ba,
        )
    return rows


def census_traversal(
    k: int, j: int, N: int, root_class: int = 0, max_vertices: int = DEFAULT_MAX_TRAVERSAL
) -> list[CensusRow]:
    """Count colours by visiting every vertex of ``V_N`` with ``A = {1..j}``.

    Each vertex carries its parity class and last letter; children take every
    letter but the last one and flip class when the letter lies in ``A``.
    """
    _check_kj(k, j)
    geom = TreeGeometry(k)
    for n in range(1, N + 1):
        if sphere_size(geom, n) > max_vertices:
            raise CapacityError(f"|W_{n}| exceeds traversal capacity {max_vertices}")
    letters = np.arange(1, k + 2)
    in_a = letters <= j
    cls = np.array([root_class], dtype=np.int8)
    last = np.array([0], dtype=np.int64)
    rows = []
    for n in range(1, N + 1):
        keep = letters[None, :] != last[:, None]
        parent_cls = np.broadcast_to(cls[:, None], keep.shape)[keep]
        child_last = np.broadcast_to(letters[None, :], keep.shape)[keep]
        child_cls = parent_cls ^ np.broadcast_to(in_a[None, :], keep.shape)[keep].astype(np.int8)
        code = 2 * child_cls.astype(np.int64) + parent_cls
        counts = np.bincount(code, minlength=4)
        rows.append(CensusRow(n, *(int(c) for c in counts)))
        cls, last = child_cls, child_last
    return rows


def alternating_row(k: int, n: int) -> CensusRow:
    """Explicit counts for ``j = k+1``: every edge joins the two classes."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n % 2 == 0:
        m = n // 2
        return CensusRow(n, 0, (k + 1) * k ** (2 * m - 1), 0, 0)
    m = (n + 1) // 2
    return CensusRow(n, 0, 0, (k + 1) * k ** (2 * (m - 1)), 0)


def _initial_p(k: int, j: int) -> tuple[Fraction, Fraction, Fraction]:
    p1 = Fraction(k * (k - j + 1), 2)
    p2 = Fraction((k - 2 * j) * (k - j + 1), 2)
    # c_AA(3) = (k-j+1)((k-j)^2 + j(j-1)) as produced by the recurrence.
    p3 = Fraction((k * k - 4 * k * j + 4 * j * j - 2 * j) * (k - j + 1), 2 * k)
    return p1, p2, p3


def characteristic_roots(k: int, j: int) -> tuple[complex, complex, complex]:
    """``-1/k`` and ``(k-2j+1 -+ sqrt((k-2j)^2 - 2(k+2j) + 1)) / (2k)``."""
    disc = (k - 2 * j) ** 2 - 2 * (k + 2 * j) + 1
    root = np.sqrt(complex(disc))
    lam1 = -1.0 / k
    lam2 = (k - 2 * j + 1 - root) / (2 * k)
    lam3 = (k - 2 * j + 1 + root) / (2 * k)
    return complex(lam1), complex(lam2), complex(lam3)


def closed_form_coeffs(k: int, j: int) -> ClosedFormCoeffs:
    """Fit the coefficients to the three initial values in complex arithmetic."""
    _check_kj(k, j)
    if j == k + 1:
        raise DomainError("j = k+1 has no closed form here; use alternating_row")
    lams = list(characteristic_roots(k, j))
    powers = [0, 0, 0]
    # Repeated roots get the n * lambda^n basis function.
    for a in range(3):
        for b in range(a):
            if abs(lams[a] - lams[b]) < 1e-12 and powers[a] == powers[b]:
                powers[a] = powers[b] + 1
    rhs = np.array([complex(p) for p in _initial_p(k, j)])
    mat = np.array(
        [[n ** powers[i] * lams[i] ** n for i in range(3)] for n in (1, 2, 3)], dtype=complex
    )
    coeffs = np.linalg.solve(mat, rhs)
    return ClosedFormCoeffs(
        k, j, tuple(lams), tuple(complex(c) for c in coeffs), tuple(powers)
    )


def _p_closed(cf: ClosedFormCoeffs, n: int) -> complex:
    return sum(a * n**m * lam**n for a, lam, m in zip(cf.coeffs, cf.lambdas, cf.powers))


def closed_form_aa(k: int, j: int, n: int, coeffs: ClosedFormCoeffs | None = None) -> float:
    """``c_AA(n) = k^{n-2} (p_n + k(k-j+1)/2)``; the imaginary residue is checked."""
    cf = coeffs or closed_form_coeffs(k, j)
    if n == 0:
        return 0.0
    value = k ** (n - 2) * (_p_closed(cf, n) + k * (k - j + 1) / 2)
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"closed form left imaginary residue {value.imag:g}")
    return value.real


def census_closed_form(k: int, j: int, n: int, coeffs: ClosedFormCoeffs | None = None) -> tuple[float, float, float, float]:
    """Floating row ``(c_AA, c_AB, c_BA, c_BB)`` at level ``n``.

    The other colours follow from the first-order relations
    ``c_AB(n) = (c_AA(n+1) - (k-j) c_AA(n)) / (k-j+1)``,
    ``c_BA(n) = (j-1)/(k-j+1) (c_AA(n) - (k-j) c_AA(n-1)) + j c_AA(n-1)`` for n >= 2
    (``c_BA(1) = j``) and ``c_BB(n) = (c_AB(n+1) - (j-1) c_BA(n)) / j``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    cf = coeffs or closed_form_coeffs(k, j)
    aa = [closed_form_aa(k, j, m, cf) for m in (n - 1, n, n + 1, n + 2)]

    def ab(i):
        return (aa[i + 1] - (k - j) * aa[i]) / (k - j + 1)

    def ba(i, m):
        if m == 1:
            return float(j)
        return (j - 1) / (k - j + 1) * (aa[i] - (k - j) * aa[i - 1]) + j * aa[i - 1]

    c_ab = ab(1)
    c_ba = ba(1, n)
    c_bb = (ab(2) - (j - 1) * c_ba) / j
    return aa[1], c_ab, c_ba, c_bb


def cumulative_aa_closed(k: int, j: int, n: int, coeffs: ClosedFormCoeffs | None = None) -> float:
    """Closed-form partial sum of ``c_AA`` over levels 1..n (geometric series per root)."""
    cf = coeffs or closed_form_coeffs(k, j)
    if any(m for m in cf.powers):
        return float(sum(closed_form_aa(k, j, m, cf) for m in range(1, n + 1)))
    total = (k - j + 1) / (2 * (k - 1)) * (k**n - 1)
    for a, lam in zip(cf.coeffs, cf.lambdas):
        r = k * lam
        total += a * r * (r**n - 1) / (k * k * (r - 1))
    total = complex(total)
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"cumulative closed form left imaginary residue {total.imag:g}")
    return total.real


def _exact_div(num: int, den: int) -> int:
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"{num}/{den} is not an integer")
    return q


def cumulative(k: int, j: int, N: int) -> list[CumulativeRow]:
    """Cumulative totals over the edges of ``V_n`` for n = 1..N.

    Computed by direct summation of per-level rows and independently from
    ``A_n`` through the summed first-order relations; both must agree.
    """
    rows = census_recurrence(k, j, N + 1)
    sums = []
    acc = [0, 0, 0, 0]
    for row in rows:
        acc = [a + c for a, c in zip(acc, row.as_tuple())]
        sums.append(CumulativeRow(row.n, *acc))
    out = sums[:N]
    if j <= k:
        aa = [0] + [r.c_AA for r in rows]
        ab = [0] + [r.c_AB for r in rows]
        A = [0] + [s.A for s in sums]
        for n in range(1, N + 1):
            B = _exact_div(A[n] - aa[1] + aa[n + 1] - (k - j) * A[n], k - j + 1)
            # The summed relation for c_BA lacks the n = 1 term; c_BA(1) = j
            # exceeds the formula's (j-1) by one.
            C = _exact_div((j - 1) * (A[n] - (k - j) * A[n - 1]), k - j + 1) + j * A[n - 1] + 1
            D = _exact_div(B - ab[1] + ab[n + 1] - (j - 1) * C, j)
            if (A[n], B, C, D) != out[n - 1].as_tuple():
                raise ArithmeticError(
                    f"cumulative identities disagree at n={n}: {(A[n], B, C, D)} vs {out[n - 1]}"
                )
    return out


@dataclass(frozen=True)
class DensityLimits:
    per_level: tuple[float, float, float, float]
    cumulative: tuple[float, float, float, float]


def density_limits(k: int, j: int, q: int = 0) -> DensityLimits:
    """Limits of ``c(n-q)/|V_n|`` and ``cum(n-q)/|V_n|`` as n grows.

    For ``j = k+1`` the per-level limits do not exist; use
    :func:`alternating_density_limits` instead.
    """
    _check_kj(k, j)
    if j == k + 1:
        raise DomainError("j = k+1 alternates with parity; use alternating_density_limits")
    same = (k - 1) * (k - j + 1) / (2 * (k + 1) * k ** (q + 1))
    cross = (k - 1) * j / (2 * (k + 1) * k ** (q + 1))
    cum_same = (k - j + 1) / (2 * (k + 1) * k**q)
    cum_cross = j / (2 * (k + 1) * k**q)
    return DensityLimits((same, cross, cross, same), (cum_same, cum_cross, cum_cross, cum_same))


def alternating_density_limits(k: int) -> dict[str, DensityLimits]:
    """Parity-dependent limits for ``j = k+1``, keyed by 'even' and 'odd' n."""
    even = DensityLimits((0.0, (k - 1) / k, 0.0, 0.0), (0.0, k / (k + 1), 1 / (k + 1), 0.0))
    odd = DensityLimits((0.0, 0.0, (k - 1) / k, 0.0), (0.0, 1 / (k + 1), k / (k + 1), 0.0))
    return {"even": even, "odd": odd}


def census_table(k: int, j: int, N: int) -> list[dict]:
    """Rows for tabular output: per-level counts, cumulative totals, densities."""
    rows = census_recurrence(k, j, N)
    cums = cumulative(k, j, N)
    geom = TreeGeometry(k)
    table = []
    for row, cum in zip(rows, cums):
        vn = ball_size(geom, row.n)
        table.append(
            {
                "n": row.n,
                "c_AA": row.c_AA,
                "c_AB": row.c_AB,
                "c_BA": row.c_BA,
                "c_BB": row.c_BB,
                "A": cum.A,
                "B": cum.B,
                "C": cum.C,
                "D": cum.D,
                "V_n": vn,
                "d_AA": row.c_AA / vn,
                "d_AB": row.c_AB / vn,
                "d_BA": row.c_BA / vn,
                "d_BB": row.c_BB / vn,
                "D_A": cum.A / vn,
                "D_B": cum.B / vn,
                "D_C": cum.C / vn,
                "D_D": cum.D / vn,
            }
        )
    return table
