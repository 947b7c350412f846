"""Turning recovered relation lattices into answers.

Element layouts expected by the lattice solvers:

* integrated dlog: ``(g_1, ..., g_{d-2}, x, g)``
* multiple dlogs: ``(g_1, ..., g_{d-k-1}, x_1, ..., x_k, g)``
* order finding: ``(g_1, ..., g_{d-1}, g)``

With this ordering the Hermite normal form of the relation lattice ends in
the rows ``(0, ..., 0, 1, -e)`` (one per target) and ``(0, ..., 0, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import lattice
from .numtheory import Instance, factor_from_exponent_multiple, is_prime, refine

# lcm(1..j) for growing j, deduplicated
ORDER_MULTIPLIERS = (1, 2, 6, 12, 60, 420, 840, 2520, 27720)


class SolverError(RuntimeError):
    pass


@dataclass
class DlogAnswer:
    e: int
    r: int | None
    method: str
    witness: list = field(default_factory=list)
    verified: bool = False

    def to_json(self) -> dict:
        return {"method": self.method, "e": str(self.e), "r": None if self.r is None else str(self.r),
                "verified": self.verified, "witness": [[str(x) for x in w] for w in self.witness]}


@dataclass
class FactorAnswer:
    N: int
    factors: dict[int, int]
    complete: bool
    route: str

    def to_json(self) -> dict:
        return {"route": self.route, "factors": [[str(p), k] for p, k in sorted(self.factors.items())],
                "complete": self.complete}


def _verify(group, g, x, e) -> bool:
    return group is None or group.pow(g, e) == x % _group_mod(group)


def _group_mod(group):
    return group.r if group.synthetic else group.N


# ---------------------------------------------------------------------------
# Factoring
# ---------------------------------------------------------------------------

def _parts_answer(N: int, parts: dict[int, int], route: str) -> FactorAnswer:
    return FactorAnswer(N, dict(sorted(parts.items())), all(is_prime(p) for p in parts), route)


def solve_factor_regev(instance: Instance, relation_vectors: Sequence[Sequence[int]],
                       bases: Sequence[int] | None = None) -> FactorAnswer:
    """Split ``N`` from relations of the squares ``b_i^2``.

    For a relation ``z`` of the squares, ``y = prod b_i^z_i`` squares to 1;
    unless ``y = +-1`` the gcd of ``y - 1`` and ``N`` is a proper divisor.
    """
    N = instance.modulus
    if N is None:
        raise SolverError("factoring needs a concrete modulus")
    bases = list(instance.generators if bases is None else bases)
    parts = {N: 1}
    useful = 0
    for z in relation_vectors:
        y = 1
        for b, e in zip(bases, z):
            if e:
                y = y * pow(b, e, N) % N
        if y in (1, N - 1):
            continue
        if y * y % N != 1:
            raise SolverError("vector is not a relation of the squared bases")
        useful += 1
        parts = refine(parts, math.gcd(y - 1, N))
        parts = refine(parts, math.gcd(y + 1, N))
    if not useful:
        raise SolverError("all vectors trivial")
    return _parts_answer(N, parts, "regev-split")


def factor_via_order(instance: Instance, r: int, seed: int, trials: int = 16) -> FactorAnswer:
    """Miller-style splitting with ``r`` times a growing smooth multiplier."""
    N = instance.modulus
    if is_prime(N):
        return FactorAnswer(N, {N: 1}, True, "via-order")
    res = None
    for j, mult in enumerate(ORDER_MULTIPLIERS):
        res = factor_from_exponent_multiple(N, r * mult, trials, seed + j)
        if res.complete:
            break
    return _parts_answer(N, res.parts, "via-order")


def factor_via_phi(instance: Instance, phi: int, seed: int, trials: int = 32) -> FactorAnswer:
    N = instance.modulus
    res = factor_from_exponent_multiple(N, phi, trials, seed)
    return _parts_answer(N, res.parts, "via-phi")


# ---------------------------------------------------------------------------
# Discrete logarithms
# ---------------------------------------------------------------------------

def solve_dlog_precomputed(z: Sequence[int], e_list: Sequence[int], r: int, group=None,
                           g: int | None = None, x: int | None = None) -> DlogAnswer:
    """``e = -(e_1 z_1 + ... + e_{d-1} z_{d-1}) / z_d  (mod r)``.

    ``e_list`` holds the known logarithms of the small generators to base
    ``g``; the last coordinate of ``z`` belongs to the target ``x``.
    """
    *head, zd = [int(t) for t in z]
    if len(head) != len(e_list):
        raise ValueError("need one known logarithm per small generator")
    if math.gcd(zd, r) != 1:
        raise SolverError("in L_x^0: last coordinate not invertible modulo r")
    s = sum(a * b for a, b in zip(e_list, head))
    e = -s * pow(zd, -1, r) % r
    ans = DlogAnswer(e, r, "precomputed", [list(z)])
    if group is not None and g is not None and x is not None:
        if not _verify(group, g, x, e):
            raise SolverError("verification failed")
        ans.verified = True
    return ans


def smallest_last_coordinate(basis) -> tuple[int, ...]:
    """The lattice vector whose last coordinate is the positive generator of all last coordinates.

    Useful when no single basis row has ``z_d`` invertible modulo ``r`` but an
    integer combination does.
    """
    rows = lattice._as_rows(basis)
    H = lattice.hnf([list(reversed(r)) for r in rows])
    top = H.rows[0]
    if lattice.pivots(H)[0] != 0:
        raise SolverError("no relation involves the target")
    return tuple(reversed(top))


def _tail_rows(basis, k: int):
    H = lattice.hnf(basis)
    d = H.ambient_dim
    if H.rank != d:
        raise SolverError("recovered lattice is not full rank")
    rows = H.rows
    last = rows[-1]
    r = last[-1]
    out = []
    for i in range(k):
        row = rows[d - 1 - k + i]
        col = d - 1 - k + i
        if row[col] != 1:
            raise SolverError("pivot h != 1: recovered lattice is a proper sublattice")
        if any(row[col + 1:-1]):
            raise SolverError("unexpected entries between target pivots")
        out.append(row)
    return r, out


def solve_dlog_integrated(basis, r_known: int | None = None, group=None, elements: Sequence[int] | None = None
                          ) -> DlogAnswer:
    """Read ``e`` and ``r`` off the last two HNF rows of the recovered lattice."""
    return solve_multi_dlog(basis, 1, r_known, group, elements, method="integrated")[0]


def solve_multi_dlog(basis, k: int, r_known: int | None = None, group=None,
                     elements: Sequence[int] | None = None, method: str = "multi") -> list[DlogAnswer]:
    """One answer per target ``x_i``, each checked when ``group`` is given."""
    if k < 1:
        raise ValueError("need at least one target")
    r, rows = _tail_rows(basis, k)
    if r_known is not None:
        if r % r_known:
            raise SolverError("recovered order is not a multiple of the known order")
        r = r_known
    if group is not None and elements is not None and not group.is_identity(group.pow(elements[-1], r)):
        raise SolverError("verification failed: g^r != 1")
    answers = []
    for i, row in enumerate(rows):
        e = -row[-1] % r
        ans = DlogAnswer(e, r, method, [list(row), list(lattice.hnf(basis).rows[-1])])
        if group is not None and elements is not None:
            g, x = elements[-1], elements[len(elements) - 1 - k + i]
            if not _verify(group, g, x, e):
                raise SolverError("verification failed")
            ans.verified = True
        answers.append(ans)
    return answers


def combine_two_stage(e_g: int, e_x: int, r_small: int) -> tuple[int, int]:
    """Given ``g = h^e_g``, ``x = h^e_x`` and ``ord(h) = r_small``, return ``(log_g x, ord g)``."""
    G = math.gcd(e_g, r_small)
    r_g = r_small // G
    if e_x % G:
        raise SolverError("e_g not invertible: x is not in the subgroup generated by g")
    if r_g == 1:
        return 0, 1
    return (e_x // G) * pow(e_g // G, -1, r_g) % r_g, r_g


def dlog_via_small_generator(instance: Instance, g: int, x: int, solve_against) -> DlogAnswer:
    """``log_g x`` from two logarithms to a small base ``h``.

    ``solve_against(target)`` must return a verified ``DlogAnswer`` for
    ``h^e = target`` with ``r = ord(h)``; it is called for ``g`` then ``x``.
    """
    ag = solve_against(g)
    ax = solve_against(x)
    if ag.r != ax.r:
        raise SolverError("the two runs disagree on the order of the small base")
    e, r_g = combine_two_stage(ag.e, ax.e, ag.r)
    group = instance.group
    if group.pow(g, e) != x % _group_mod(group):
        raise SolverError("verification failed")
    return DlogAnswer(e, r_g, "two-stage", ag.witness + ax.witness, True)


# ---------------------------------------------------------------------------
# Order and group order
# ---------------------------------------------------------------------------

def solve_order(basis, group=None, g: int | None = None, referee_order: int | None = None) -> int:
    """Last HNF pivot of the relation lattice whose final element is ``g``."""
    H = lattice.hnf(basis)
    if H.rank != H.ambient_dim:
        raise SolverError("recovered lattice is not full rank")
    r = H.rows[-1][-1]
    if group is not None and g is not None and not group.is_identity(group.pow(g, r)):
        raise SolverError("verification failed: g^r != 1")
    if referee_order is not None and r != referee_order:
        raise SolverError(f"recovered order {r} differs from the true order {referee_order}")
    return r


def solve_phi(basis, referee: int | None = None) -> int:
    """``|det|`` of the recovered relation lattice of the prime generators."""
    rows = lattice._as_rows(basis)
    if len(rows) != len(rows[0]) or lattice.rank(rows) != len(rows):
        raise SolverError("rank deficiency: recovered lattice is not full rank")
    det = lattice.determinant(rows)
    if referee is not None and det != referee:
        raise SolverError(f"determinant {det} differs from the referee value {referee}")
    return det
