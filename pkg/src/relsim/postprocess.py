"""Classical recovery of relation vectors from simulated runs.

The ``m`` grid points are stacked into a ``(d+m)``-dimensional embedding
lattice.  Its LLL-reduced vectors whose first ``d`` coordinates form a
relation (checked publicly in the group) are kept, and their integer span is
returned in Hermite normal form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import lattice
from .lattice import DEFAULT_DELTA, LatticeBasis, LatticeError
from .simulate import RunRecord, SimParams


class RecoveryError(RuntimeError):
    pass


@dataclass(frozen=True)
class PostprocessParams:
    """Scaling and reduction parameters for the embedding lattice.

    ``S`` defaults to the grid size ``D`` so that every ``S * w`` is an
    integer.  ``T_claim`` is the assumed norm bound on a generating set of
    the relation lattice; it is only used for diagnostics.
    """

    d: int
    m: int
    D: int
    S: int
    C: float = 0.0
    delta: float = 0.0
    lll_delta: Fraction = DEFAULT_DELTA
    T_claim: float | None = None

    def __post_init__(self):
        if self.S % self.D:
            raise ValueError("S must be a multiple of D")
        if self.S & (self.S - 1):
            raise ValueError("S must be a power of two")

    @classmethod
    def from_sim(cls, sim: SimParams, m: int, S: int | None = None, **kw) -> "PostprocessParams":
        return cls(d=sim.d, m=m, D=sim.D, S=sim.D if S is None else S, C=sim.C, delta=sim.delta, **kw)

    @property
    def candidate_bound(self) -> float | None:
        """``2^((d+m)/2) sqrt(d+m) sqrt(m+1) T`` (needs ``T_claim``)."""
        if self.T_claim is None:
            return None
        k = self.d + self.m
        return 2 ** (k / 2) * math.sqrt(k) * math.sqrt(self.m + 1) * self.T_claim


def epsilon(det_L: int, m: int) -> float:
    """``(4 det L)^(-1/m) / 3``, computed in log space."""
    return math.exp(-(math.log(4) + math.log(det_L)) / m) / 3


def c_threshold(d: int, m: int, m2: int) -> Fraction:
    """Lower bound ``(5/2 + m/(2d)) (1 + m2/d)`` on ``C`` with ``m2`` bad runs."""
    if d < 1 or m < d + 4:
        raise ValueError("need d >= 1 and m >= d + 4")
    if not 0 <= m2 <= m - (d + 4):
        raise ValueError("need 0 <= m2 <= m - (d + 4)")
    return (Fraction(5, 2) + Fraction(m, 2 * d)) * (1 + Fraction(m2, d))


def _grid_vectors(w_list, S: int) -> list[tuple[int, ...]]:
    out = []
    for w in w_list:
        if isinstance(w, RunRecord):
            if S % w.D:
                raise ValueError("S must be a multiple of D")
            out.append(tuple(x * (S // w.D) for x in w.w_num))
            continue
        row = []
        for x in w:
            y = Fraction(x) * S
            if y.denominator != 1:
                raise ValueError("S must be a multiple of D")
            row.append(int(y))
        out.append(tuple(row))
    return out


def assemble_embedding_lattice(w_list: Sequence, d: int, S: int) -> LatticeBasis:
    """Rows ``[I_d | S w_1 ... S w_m]`` over ``[0 | S I_m]``.

    ``w_list`` holds run records or vectors of rationals on the grid.
    """
    cols = _grid_vectors(w_list, S)
    if any(len(c) != d for c in cols):
        raise ValueError("every w must have d coordinates")
    m = len(cols)
    rows = []
    for i in range(d):
        rows.append([int(i == j) for j in range(d)] + [c[i] for c in cols])
    for j in range(m):
        rows.append([0] * d + [S * int(j == t) for t in range(m)])
    return LatticeBasis.from_rows(rows, check=False)


def embed_relation(u: Sequence[int], w_list: Sequence, S: int) -> tuple[int, ...]:
    """The embedding-lattice vector over ``u`` with centred last coordinates.

    Coordinate ``d + j`` is ``S <u, w_j>`` reduced into ``(-S/2, S/2]``.
    """
    cols = _grid_vectors(w_list, S)
    tail = []
    for c in cols:
        t = sum(a * b for a, b in zip(u, c)) % S
        if 2 * t > S:
            t -= S
        tail.append(t)
    return tuple(int(a) for a in u) + tuple(tail)


def sign_normalize(z: Sequence[int]) -> tuple[int, ...]:
    for x in z:
        if x:
            return tuple(z) if x > 0 else tuple(-y for y in z)
    return tuple(z)


@dataclass
class RecoveredLattice:
    relation_vectors: list[tuple[int, ...]]
    basis: LatticeBasis
    diagnostics: dict = field(default_factory=dict)

    @property
    def full_rank(self) -> bool:
        return self.basis.rank == self.basis.ambient_dim

    @property
    def det(self) -> int | None:
        return lattice.determinant(self.basis) if self.full_rank else None

    def report(self) -> dict:
        return {
            "verified_count": self.diagnostics.get("verified", len(self.relation_vectors)),
            "candidate_count": self.diagnostics.get("candidates", 0),
            "hnf_basis": [[str(x) for x in r] for r in self.basis.rows],
            "det": None if self.det is None else str(self.det),
        }


def extract_relations(embedding_basis, group, elements: Sequence[int], params: PostprocessParams) -> RecoveredLattice:
    """Reduce the embedding lattice and keep the verified relations.

    ``group`` only needs ``evaluate`` and ``is_identity``; no ground truth is
    consulted.  Every reduced vector is a candidate; how many of them fall
    within the candidate bound is recorded in the diagnostics.
    """
    d = len(elements)
    red = lattice.lll_reduce(embedding_basis, params.lll_delta)
    bound = params.candidate_bound
    seen: dict[tuple[int, ...], None] = {}
    candidates = within = 0
    for b in red.rows:
        z = b[:d]
        if not any(z):
            continue
        candidates += 1
        if bound is not None and math.sqrt(lattice.norm2(b)) <= bound:
            within += 1
        if group.is_identity(group.evaluate(elements, z)):
            seen.setdefault(sign_normalize(z))
    vectors = list(seen)
    diag = {"candidates": candidates, "verified": len(vectors),
            "within_bound": within if bound is not None else None}
    if not vectors:
        raise RecoveryError("no relations recovered")
    return RecoveredLattice(vectors, recover_sublattice(vectors), diag)


def recover_sublattice(recovered) -> LatticeBasis:
    """HNF basis of the integer span of the recovered relation vectors."""
    vectors = recovered.relation_vectors if isinstance(recovered, RecoveredLattice) else list(recovered)
    if not vectors:
        raise RecoveryError("no relation vectors to span")
    try:
        return lattice.hnf(vectors)
    except LatticeError as exc:
        raise RecoveryError(str(exc)) from exc


def recover_from_runs(runs: Sequence[RunRecord], group, elements: Sequence[int],
                      params: PostprocessParams) -> RecoveredLattice:
    """Embedding lattice, reduction and verification in one call."""
    basis = assemble_embedding_lattice(runs, len(elements), params.S)
    return extract_relations(basis, group, elements, params)
