"""Relation lattices and simulated outputs of the quantum period-finding runs.

A good run returns a point on the ``1/D`` grid close to a uniformly random
coset of ``L*/Z^d``; a bad run returns a uniform grid point.  Only this
output guarantee is simulated, not the quantum state itself.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import lattice
from .lattice import LatticeBasis
from .numtheory import BudgetExceeded, Instance, NotInSubgroup, NumberTheoryError

NOISE_MODELS = ("none", "uniform-ball", "truncated-gaussian")
LOG2_GOLDEN_RATIO = math.log2((1 + math.sqrt(5)) / 2)


class GroundTruthUnavailable(NumberTheoryError):
    pass


def substream(seed: int, *labels) -> random.Random:
    """Independent RNG derived from ``seed`` and a tuple of labels."""
    key = json.dumps([int(seed), *[str(x) for x in labels]]).encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest(), "big"))


# ---------------------------------------------------------------------------
# Relation lattices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationLattice:
    """Basis of ``{z : prod elements[i]^z[i] = 1}``.

    The basis is stored in Hermite normal form.
    """

    basis: LatticeBasis
    elements: tuple[int, ...]
    instance: Instance = field(compare=False, repr=False)

    @property
    def d(self) -> int:
        return len(self.elements)

    @property
    def det(self) -> int:
        return lattice.determinant(self.basis)

    def is_relation(self, z: Sequence[int]) -> bool:
        group = self.instance.group
        return group.is_identity(group.evaluate(self.elements, z))


def _exponent_vectors(instance: Instance, elements: Sequence[int]) -> list[tuple[int, ...]]:
    known = {}
    if instance.ground_truth_dlogs is not None:
        for a, v in zip(instance.generators + instance.u_elements, instance.ground_truth_dlogs):
            known[a] = tuple(v)
    group = instance.group
    out = []
    for a in elements:
        if a in known:
            out.append(known[a])
            continue
        try:
            out.append(group.exponent_vector(a))
        except BudgetExceeded as exc:
            raise GroundTruthUnavailable(f"ground truth unavailable: {exc}") from exc
    return out


def kernel_basis(vectors: Sequence[Sequence[int]], moduli: Sequence[int]) -> list[list[int]]:
    """Basis of ``{z : sum z_i v_i = 0 mod moduli}`` (componentwise), in HNF.

    Built from the HNF of ``[[v_i | e_i], [n_j e_j | 0]]``: the rows whose
    first ``t`` entries vanish span the kernel.
    """
    d, t = len(vectors), len(moduli)
    rows = []
    for i, v in enumerate(vectors):
        rows.append([x % n if n else x for x, n in zip(v, moduli)] + [int(i == j) for j in range(d)])
    for j, n in enumerate(moduli):
        if n:
            rows.append([n * int(j == c) for c in range(t)] + [0] * d)
    H = lattice.hnf(rows).matrix()
    kern = [r[t:] for r in H if not any(r[:t])]
    return lattice.hnf(kern).matrix()


def build_relation_lattice(instance: Instance, elements: Sequence[int] | None = None,
                           method: str = "kernel", block_k: int | None = None) -> RelationLattice:
    """Ground-truth relation lattice for ``elements`` (default: all generators then u's).

    ``method="kernel"`` solves the exponent map directly.  ``method="block"``
    first builds the lattice of all but the last ``block_k`` elements
    (default: the number of u-elements), writes each of the last ``block_k``
    as a product of the others, and stacks the block basis
    ``[[B, 0], [z_u, -I]]``; this needs those elements to lie in the
    subgroup generated by the earlier ones.
    """
    if elements is None:
        elements = list(instance.generators) + list(instance.u_elements)
    elements = [int(a) for a in elements]
    if not elements:
        raise NumberTheoryError("need at least one element")
    group = instance.group
    vecs = _exponent_vectors(instance, elements)
    moduli = list(group.component_orders)
    if method == "kernel":
        rows = kernel_basis(vecs, moduli)
    elif method == "block":
        k = len(instance.u_elements) if block_k is None else block_k
        rows = _block_basis(vecs, moduli, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    return RelationLattice(LatticeBasis.from_rows(rows, check=False), tuple(elements), instance)


def _block_basis(vecs, moduli, k: int) -> list[list[int]]:
    d = len(vecs)
    small = d - k
    if small < 1:
        raise NumberTheoryError("block construction needs at least one small element")
    B = kernel_basis(vecs[:small], moduli)
    rows = [r + [0] * k for r in B]
    reduced = lattice.lll_reduce(B)
    for i in range(k):
        # ordering u_i first, the leading HNF pivot is the index of <g> in <g, u_i>
        K = kernel_basis([vecs[small + i]] + list(vecs[:small]), moduli)
        first = K[0]
        if first[0] != 1:
            raise NotInSubgroup("element is not in the subgroup generated by the small elements")
        z_u = lattice.nearest_plane(reduced, [-x for x in first[1:]])
        rows.append(z_u + [-int(j == i) for j in range(k)])
    return rows


# ---------------------------------------------------------------------------
# Parameters and run records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimParams:
    """Derived window and grid parameters.

    ``R = 2^(C sqrt n)``, ``D = 2^ceil(log2(2 sqrt(d) R))`` and the good-run
    radius ``delta = sqrt(d/2) / R``.  Pass ``D`` to override the grid.
    """

    n: int
    d: int
    C: float
    k: int = 0
    noise_model: str = "uniform-ball"
    D_override: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.C <= 0:
            raise ValueError("need n >= 1, d >= 1 and C > 0")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.noise_model!r}")
        if self.D_override is not None and (self.D_override < 1 or self.D_override & (self.D_override - 1)):
            raise ValueError("D must be a power of two")

    @property
    def log2_R(self) -> float:
        return self.C * math.sqrt(self.n)

    @property
    def R(self) -> float:
        return 2.0 ** self.log2_R

    @property
    def D_bits(self) -> int:
        if self.D_override is not None:
            return self.D_override.bit_length() - 1
        return math.ceil(math.log2(2 * math.sqrt(self.d)) + self.log2_R)

    @property
    def D(self) -> int:
        return 1 << self.D_bits

    @property
    def delta(self) -> float:
        """Good-run distance bound; 0 when noise is switched off."""
        if self.noise_model == "none":
            return 0.0
        return math.sqrt(self.d / 2) * 2.0 ** (-self.log2_R)

    @property
    def delta_grid(self) -> float:
        """``delta * D``: the noise radius measured in grid steps."""
        if self.noise_model == "none":
            return 0.0
        return math.sqrt(self.d / 2) * 2.0 ** (self.D_bits - self.log2_R)

    @property
    def delta_prime(self) -> float:
        """``delta + sqrt(d) / (2D)``, the bound after grid rounding."""
        return self.delta + math.sqrt(self.d) / (2 * self.D)


@dataclass(frozen=True)
class RunRecord:
    """One simulated run: the grid point ``w_num / D``.

    ``provenance`` and ``hidden_coset`` are never part of the solver view.
    """

    w_num: tuple[int, ...]
    D: int
    provenance: str = field(default="good", compare=False)
    trial: int = 0
    index: int = 0
    hidden_coset: tuple[Fraction, ...] | None = field(default=None, compare=False, repr=False)

    @property
    def w(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.D) for x in self.w_num)

    def to_json(self) -> dict:
        return {"trial": self.trial, "index": self.index,
                "w_num": [str(x) for x in self.w_num], "D": str(self.D)}

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        D = int(data["D"])
        w = tuple(int(x) for x in data["w_num"])
        if D < 1 or any(not 0 <= x < D for x in w):
            raise ValueError("w_num entries must lie in [0, D)")
        return cls(w, D, provenance="unknown", trial=int(data.get("trial", 0)), index=int(data.get("index", 0)))


def dual_coset(basis, c: Sequence[int]) -> tuple[Fraction, ...]:
    """``B^{-1} c mod 1`` for a square row basis ``B``: a point of ``L*``."""
    rows = lattice._as_rows(basis)
    d = len(rows)
    # solve B y = c exactly with Fractions
    A = [[Fraction(x) for x in r] + [Fraction(ci)] for r, ci in zip(rows, c)]
    for col in range(d):
        piv = next(i for i in range(col, d) if A[i][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for i in range(d):
            if i != col and A[i][col]:
                f = A[i][col]
                A[i] = [x - f * y for x, y in zip(A[i], A[col])]
    return tuple(r[d] - math.floor(r[d]) for r in A)


def _noise_grid(params: SimParams, rng: random.Random) -> list[float]:
    """Noise vector in grid units, strictly inside the ball of radius ``delta * D``."""
    d = params.d
    radius = params.delta_grid
    if params.noise_model == "none" or radius == 0:
        return [0.0] * d
    if params.noise_model == "uniform-ball":
        while True:
            g = [rng.gauss(0.0, 1.0) for _ in range(d)]
            nrm = math.sqrt(sum(x * x for x in g))
            if nrm == 0:
                continue
            rad = radius * rng.random() ** (1.0 / d)
            eta = [x / nrm * rad for x in g]
            if math.sqrt(sum(x * x for x in eta)) < radius:
                return eta
    # truncated gaussian: per-coordinate std 1/(sqrt 2 R), in grid units
    sigma = 2.0 ** (params.D_bits - params.log2_R) / math.sqrt(2)
    while True:
        eta = [rng.gauss(0.0, sigma) for _ in range(d)]
        if math.sqrt(sum(x * x for x in eta)) < radius:
            return eta


def sample_good_run(L: RelationLattice | LatticeBasis, params: SimParams, rng: random.Random,
                    trial: int = 0, index: int = 0) -> RunRecord:
    """A grid point within ``delta + sqrt(d)/(2D)`` of a uniform coset of ``L*/Z^d``."""
    basis = L.basis if isinstance(L, RelationLattice) else L
    d = basis.rank
    if d != basis.ambient_dim or d != params.d:
        raise ValueError("relation lattice must be full rank of dimension d")
    det = lattice.determinant(basis)
    c = [rng.randrange(det) for _ in range(d)]
    v = dual_coset(basis, c)
    eta = _noise_grid(params, rng)
    D = params.D
    w = []
    for vi, ei in zip(v, eta):
        scaled = vi * D  # exact rational
        whole = math.floor(scaled)
        frac = float(scaled - whole)
        w.append((whole + round(frac + ei)) % D)
    return RunRecord(tuple(w), D, "good", trial, index, v)


def sample_bad_run(params: SimParams, rng: random.Random, trial: int = 0, index: int = 0) -> RunRecord:
    """Uniform grid point."""
    D = params.D
    return RunRecord(tuple(rng.randrange(D) for _ in range(params.d)), D, "bad", trial, index)


def run_batch(L: RelationLattice | LatticeBasis, params: SimParams, m: int, m2: int,
              seed: int, trial: int = 0) -> list[RunRecord]:
    """``m - m2`` good and ``m2`` bad runs in random order.

    Each run draws from its own substream keyed by ``(seed, trial, index)``.
    """
    if not 0 <= m2 <= m:
        raise ValueError("need 0 <= m2 <= m")
    bad = set(substream(seed, trial, "bad-slots").sample(range(m), m2))
    out = []
    for i in range(m):
        rng = substream(seed, trial, "run", i)
        if i in bad:
            out.append(sample_bad_run(params, rng, trial, i))
        else:
            out.append(sample_good_run(L, params, rng, trial, i))
    return out


def write_runs(records: Iterable[RunRecord], path, provenance_path=None) -> None:
    records = list(records)
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json()) + "\n")
    if provenance_path is not None:
        with open(provenance_path, "w") as fh:
            for r in records:
                fh.write(json.dumps({"trial": r.trial, "index": r.index, "provenance": r.provenance}) + "\n")


def read_runs(path) -> list[RunRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(RunRecord.from_json(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Cost formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostEstimate:
    """Leading-order circuit cost; lower-order terms are dropped."""

    gates_order: float
    qubits: int
    qubits_exact: float
    note: str = "asymptotic leading order"


def cost_estimate(n: int, C: float, G: float = 0, S: int = 0) -> CostEstimate:
    """Gate count ``sqrt(n) G + n^(3/2)`` and qubits ``S + (C/log2(phi) + 8) n``.

    ``qubits`` truncates the real-valued count to an integer.
    """
    if n < 1 or C <= 0:
        raise ValueError("need n >= 1 and C > 0")
    q = S + (C / LOG2_GOLDEN_RATIO + 8) * n
    return CostEstimate(gates_order=math.sqrt(n) * G + n**1.5, qubits=math.floor(q), qubits_exact=q)
