"""Exact integer lattice toolkit.

Bases are row-major: every row is one basis (or generating) vector.  All
arithmetic on the certified path is exact: LLL runs on the integral
Gram-Schmidt data (``d_i`` and ``lambda_ij``) so no rational or floating
point value is ever rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

IntMatrix = list[list[int]]

DEFAULT_DELTA = Fraction(99, 100)


class LatticeError(ValueError):
    """Raised for malformed or rank-deficient lattice input."""


@dataclass(frozen=True)
class LatticeBasis:
    """Linearly independent integer rows spanning a lattice."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.rows:
            raise LatticeError("a basis needs at least one row")
        width = len(self.rows[0])
        if width == 0 or any(len(r) != width for r in self.rows):
            raise LatticeError("basis rows must be non-empty and of equal length")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], check: bool = True) -> "LatticeBasis":
        basis = cls(tuple(tuple(int(x) for x in r) for r in rows))
        if check and rank(basis.rows) != len(basis.rows):
            raise LatticeError("rows are linearly dependent")
        return basis

    @property
    def ambient_dim(self) -> int:
        return len(self.rows[0])

    @property
    def rank(self) -> int:
        return len(self.rows)

    def matrix(self) -> IntMatrix:
        return [list(r) for r in self.rows]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def _as_rows(basis) -> IntMatrix:
    if isinstance(basis, LatticeBasis):
        return basis.matrix()
    rows = [[int(x) for x in r] for r in basis]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise LatticeError("matrix must be rectangular and non-empty")
    return rows


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def norm2(v: Sequence[int]) -> int:
    return sum(a * a for a in v)


def gram_schmidt(basis) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact Gram-Schmidt data ``(mu, B)`` with ``B[i] = |b*_i|^2``."""
    rows = _as_rows(basis)
    k = len(rows)
    mu = [[Fraction(0)] * k for _ in range(k)]
    bstar: list[list[Fraction]] = []
    B: list[Fraction] = []
    for i, b in enumerate(rows):
        v = [Fraction(x) for x in b]
        for j in range(i):
            if B[j] == 0:
                continue
            mu[i][j] = sum((Fraction(x) * y for x, y in zip(b, bstar[j])), Fraction(0)) / B[j]
            v = [a - mu[i][j] * c for a, c in zip(v, bstar[j])]
        mu[i][i] = Fraction(1)
        bstar.append(v)
        B.append(sum((a * a for a in v), Fraction(0)))
    return mu, B


def rank(matrix) -> int:
    """Rank over the rationals, by fraction-free elimination."""
    rows = _as_rows(matrix)
    A = [r[:] for r in rows]
    ncols = len(A[0])
    r = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        for i in range(r + 1, len(A)):
            a = A[i][c]
            A[i] = [(p * x - a * y) // prev for x, y in zip(A[i], A[r])]
        prev = p
        r += 1
        if r == len(A):
            break
    return r


# ---------------------------------------------------------------------------
# LLL
# ---------------------------------------------------------------------------

def lll_reduce(basis, delta: Fraction | float = DEFAULT_DELTA) -> LatticeBasis:
    """LLL-reduce ``basis`` with exact integer arithmetic.

    The output spans the same lattice, is size-reduced (``|mu_ij| <= 1/2``)
    and satisfies the Lovász condition at ``delta``.

    Args:
        basis: linearly independent integer rows.
        delta: Lovász parameter in ``(1/4, 1)``.

    Raises:
        LatticeError: if the rows are linearly dependent.
    """
    delta = Fraction(delta).limit_denominator(10**6) if isinstance(delta, float) else Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise LatticeError(f"delta must lie in (1/4, 1), got {delta}")
    rows = _as_rows(basis)
    return LatticeBasis(tuple(tuple(r) for r in _integral_lll(rows, delta.numerator, delta.denominator)))


def _integral_lll(b: IntMatrix, p: int, q: int) -> IntMatrix:
    # Integral LLL after Cohen, Alg. 2.6.7; Lovász test is
    # q*(d_k*d_{k-2} + lam^2) >= p*d_{k-1}^2 with 1-based Gram determinants.
    n = len(b)
    if n == 1:
        if not any(b[0]):
            raise LatticeError("rows are linearly dependent")
        return [b[0][:]]
    b = [r[:] for r in b]
    # dd[i+1] = d_i (Gram determinant of the first i+1 rows); dd[0] = 1
    dd = [1] + [0] * n
    lam = [[0] * n for _ in range(n)]

    def add_row(k: int) -> None:
        bk = b[k]
        lk = lam[k]
        for j in range(k + 1):
            u = dot(bk, b[j])
            lj = lam[j]
            for i in range(j):
                u = (dd[i + 1] * u - lk[i] * lj[i]) // dd[i]
            if j < k:
                lk[j] = u
            else:
                if u == 0:
                    raise LatticeError("rows are linearly dependent")
                dd[k + 1] = u

    def red(k: int, l: int) -> None:
        lkl = lam[k][l]
        dl = dd[l + 1]
        if 2 * abs(lkl) > dl:
            r = (2 * lkl + dl) // (2 * dl)
            bk, bl = b[k], b[l]
            for i in range(len(bk)):
                bk[i] -= r * bl[i]
            lk, ll = lam[k], lam[l]
            lk[l] = lkl - r * dl
            for i in range(l):
                lk[i] -= r * ll[i]

    def swap(k: int, kmax: int) -> None:
        b[k], b[k - 1] = b[k - 1], b[k]
        lk, lk1 = lam[k], lam[k - 1]
        for j in range(k - 1):
            lk[j], lk1[j] = lk1[j], lk[j]
        lmb = lk[k - 1]
        dkm1 = dd[k]
        dkm2 = dd[k - 1]
        dk = dd[k + 1]
        Bn = (dkm2 * dk + lmb * lmb) // dkm1
        for i in range(k + 1, kmax + 1):
            li = lam[i]
            t = li[k]
            li[k] = (dk * li[k - 1] - lmb * t) // dkm1
            li[k - 1] = (Bn * t + lmb * li[k]) // dk
        dd[k] = Bn

    add_row(0)
    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            add_row(k)
        red(k, k - 1)
        lmb = lam[k][k - 1]
        if q * (dd[k + 1] * dd[k - 1] + lmb * lmb) < p * dd[k] * dd[k]:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b


def is_lll_reduced(basis, delta: Fraction = DEFAULT_DELTA) -> bool:
    """Exact check of size reduction and the Lovász condition."""
    mu, B = gram_schmidt(basis)
    k = len(B)
    for i in range(k):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    for i in range(1, k):
        if B[i] < (Fraction(delta) - mu[i][i - 1] ** 2) * B[i - 1]:
            return False
    return True


def short_generating_set(basis, T: float, delta: Fraction = DEFAULT_DELTA, *,
                         T_squared: int | Fraction | None = None) -> list[tuple[int, ...]]:
    """Short vectors whose integer span contains every lattice vector of norm <= T.

    Runs LLL and keeps the prefix ``b_1..b_l`` where ``l`` is the last index
    with ``|b*_l| <= T``: a vector of norm at most T has a last non-zero
    coefficient at some index j with ``|b*_j| <= T``.  For ``delta >= 3/4``
    every kept vector has norm at most ``2^(k/2) * sqrt(k) * T``.  Pass
    ``T_squared`` to give the bound exactly instead of as a float.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    red = lll_reduce(basis, delta)
    _, B = gram_schmidt(red)
    T2 = Fraction(T_squared) if T_squared is not None else Fraction(T) ** 2
    last = -1
    for i, Bi in enumerate(B):
        if Bi <= T2:
            last = i
    return list(red.rows[: last + 1])


def claim_bound(k: int, T: float) -> float:
    """``2^(k/2) * sqrt(k) * T``."""
    return 2 ** (k / 2) * math.sqrt(k) * T


# ---------------------------------------------------------------------------
# Hermite normal form, determinant, membership
# ---------------------------------------------------------------------------

def hnf(generators) -> LatticeBasis:
    """Row-style Hermite normal form of the lattice spanned by ``generators``.

    Output rows are in echelon form with strictly increasing pivot columns,
    positive pivots, and every entry above a pivot reduced into
    ``[0, pivot)``.  Zero rows are dropped.
    """
    A = [r for r in _as_rows(generators) if any(r)]
    if not A:
        raise LatticeError("generators span the zero lattice")
    return LatticeBasis(tuple(tuple(r) for r in _hnf_rows(A)))


def _hnf_rows(A: IntMatrix) -> IntMatrix:
    A = [r[:] for r in A]
    ncols = len(A[0])
    top = 0
    for col in range(ncols):
        if top == len(A):
            break
        while True:
            live = [i for i in range(top, len(A)) if A[i][col] != 0]
            if not live:
                break
            piv = min(live, key=lambda i: abs(A[i][col]))
            A[top], A[piv] = A[piv], A[top]
            prow = A[top]
            p = prow[col]
            done = True
            for i in range(top + 1, len(A)):
                a = A[i][col]
                if a:
                    qt = a // p
                    row = A[i]
                    for c in range(col, ncols):
                        row[c] -= qt * prow[c]
                    if row[col]:
                        done = False
            if done:
                break
        if all(A[i][col] == 0 for i in range(top, len(A))):
            continue
        if A[top][col] < 0:
            A[top] = [-x for x in A[top]]
        prow = A[top]
        p = prow[col]
        for i in range(top):
            a = A[i][col]
            qt = a // p
            if qt:
                row = A[i]
                for c in range(col, ncols):
                    row[c] -= qt * prow[c]
        top += 1
        # zero rows sink to the bottom so they never become pivots
        A = A[:top] + [r for r in A[top:] if any(r)]
    return A[:top]


def pivots(basis) -> list[int]:
    """Pivot column of each row of an echelon-form basis."""
    return [next(j for j, x in enumerate(r) if x) for r in _as_rows(basis)]


def determinant(basis) -> int:
    """``|det|`` of a square integer matrix (Bareiss elimination)."""
    A = _as_rows(basis)
    n = len(A)
    if any(len(r) != n for r in A):
        raise LatticeError("determinant needs a square matrix")
    A = [r[:] for r in A]
    sign = 1
    prev = 1
    for c in range(n - 1):
        piv = next((i for i in range(c, n) if A[i][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            sign = -sign
        p = A[c][c]
        for i in range(c + 1, n):
            Ai = A[i]
            a = Ai[c]
            for j in range(c + 1, n):
                Ai[j] = (p * Ai[j] - a * A[c][j]) // prev
            Ai[c] = 0
        prev = p
    return abs(sign * A[n - 1][n - 1])


def lattice_volume_squared(basis) -> int:
    """Gram determinant ``det(B B^T)``; equals ``det(L)^2`` for any rank."""
    rows = _as_rows(basis)
    gram = [[dot(u, v) for v in rows] for u in rows]
    return determinant(gram)


def membership(basis, v: Sequence[int]) -> bool:
    """True iff ``v`` is an integer combination of the rows of ``basis``."""
    H = hnf(basis).matrix()
    v = [int(x) for x in v]
    if len(v) != len(H[0]):
        raise LatticeError("vector and basis dimensions differ")
    for row, c in zip(H, pivots(H)):
        # entries left of c are already zero by echelon order
        if v[c] % row[c]:
            return False
        t = v[c] // row[c]
        if t:
            v = [x - t * y for x, y in zip(v, row)]
    return not any(v)


def same_lattice(a, b) -> bool:
    return hnf(a).rows == hnf(b).rows


def nearest_plane(basis, target: Sequence[int]) -> list[int]:
    """Babai nearest-plane reduction of ``target`` modulo the lattice (exact)."""
    rows = _as_rows(basis)
    mu, B = gram_schmidt(rows)
    # recover b* from mu so the projection coefficients are exact
    bstar: list[list[Fraction]] = []
    for i, r in enumerate(rows):
        v = [Fraction(x) for x in r]
        for j in range(i):
            v = [a - mu[i][j] * c for a, c in zip(v, bstar[j])]
        bstar.append(v)
    t = [int(x) for x in target]
    for i in range(len(rows) - 1, -1, -1):
        c = sum((x * y for x, y in zip(t, bstar[i])), Fraction(0)) / B[i]
        r = math.floor(c + Fraction(1, 2))
        if r:
            t = [x - r * y for x, y in zip(t, rows[i])]
    return t
