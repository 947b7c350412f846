"""Modular arithmetic, groups, problem instances and ground-truth oracles.

Two kinds of group are supported.  ``UnitGroup`` is the concrete group of
units modulo ``N``; ``SyntheticCyclicGroup`` is an abstract cyclic group of
order ``r`` whose elements are stored as their exponents with respect to a
hidden generator, so that relation lattices of any size can be built without
solving hard discrete logarithms.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from sympy import factorint, isprime, nextprime, perfect_power, prime

DEFAULT_ORACLE_BITS = 64
BSGS_STEP_BOUND = 1 << 24

KINDS = ("rsa-semiprime", "safe-prime-group", "schnorr-group", "generic-modulus", "synthetic-cyclic")


class NumberTheoryError(ValueError):
    pass


class BudgetExceeded(NumberTheoryError):
    pass


class NotInSubgroup(NumberTheoryError):
    pass


def first_primes(k: int) -> list[int]:
    return [prime(i) for i in range(1, k + 1)]


def is_prime(n: int) -> bool:
    return isprime(n)


def crt(residues: Sequence[int], moduli: Sequence[int]) -> tuple[int, int]:
    """Combine pairwise coprime congruences into ``(x, M)``."""
    x, M = 0, 1
    for a, m in zip(residues, moduli):
        # x + M*t == a (mod m)
        t = ((a - x) * pow(M, -1, m)) % m if m > 1 else 0
        x += M * t
        M *= m
    return x % M, M


def _merge(fac: dict[int, int], more: dict[int, int]) -> dict[int, int]:
    out = dict(fac)
    for p, e in more.items():
        out[p] = out.get(p, 0) + e
    return out


# ---------------------------------------------------------------------------
# Discrete logarithms: Pohlig-Hellman with baby-step giant-step
# ---------------------------------------------------------------------------

def bsgs(g: int, x: int, q: int, modulus: int, step_bound: int = BSGS_STEP_BOUND) -> int:
    """Solve ``g^e = x`` for ``e`` in ``[0, q)`` where ``g`` has order dividing ``q``."""
    m = math.isqrt(q - 1) + 1 if q > 1 else 1
    if m > step_bound:
        raise BudgetExceeded(f"subgroup of order {q} needs {m} baby steps (bound {step_bound})")
    table = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * g % modulus
    giant = pow(g, -m, modulus)
    y = x % modulus
    for i in range(m + 1):
        j = table.get(y)
        if j is not None:
            e = i * m + j
            if e < q:
                return e
        y = y * giant % modulus
    raise NotInSubgroup(f"{x} is not a power of {g} modulo {modulus}")


def pohlig_hellman(g: int, x: int, order: int, order_factors: dict[int, int], modulus: int,
                   step_bound: int = BSGS_STEP_BOUND) -> int:
    """Discrete log of ``x`` to base ``g`` where ``g`` has exactly ``order``.

    ``order_factors`` may list extra primes; only those dividing ``order``
    are used.  The result is verified before it is returned.
    """
    residues, moduli = [], []
    for p, _ in sorted(order_factors.items()):
        e = 0
        t = order
        while t % p == 0:
            t //= p
            e += 1
        if e == 0:
            continue
        pe = p**e
        gp = pow(g, order // pe, modulus)
        xp = pow(x, order // pe, modulus)
        gamma = pow(gp, p ** (e - 1), modulus)  # order p
        digits = 0
        for k in range(e):
            h = pow(pow(gp, -digits, modulus) * xp % modulus, p ** (e - 1 - k), modulus)
            dk = bsgs(gamma, h, p, modulus, step_bound)
            digits += dk * p**k
        residues.append(digits)
        moduli.append(pe)
    e, _ = crt(residues, moduli)
    if pow(g, e, modulus) != x % modulus:
        raise NotInSubgroup(f"{x} is not in the subgroup generated by {g} modulo {modulus}")
    return e


def order_mod(g: int, modulus: int, group_order: int, group_factors: dict[int, int]) -> int:
    """Order of ``g`` in a group of known order (divide out primes)."""
    r = group_order
    for p in group_factors:
        while r % p == 0 and pow(g, r // p, modulus) == 1:
            r //= p
    return r


# ---------------------------------------------------------------------------
# Groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Component:
    """Cyclic factor ``<gen>`` of order ``order`` inside ``(Z/modulus)^*``."""

    modulus: int
    gen: int
    order: int
    factors: tuple[tuple[int, int], ...]
    sign_only: bool = False  # the {+-1} factor of (Z/2^e)^*, e >= 3


class UnitGroup:
    """The multiplicative group of units modulo ``N``.

    ``factorization`` of ``N`` must be known; it fixes a cyclic decomposition
    used to compute exponent vectors (ground truth only).
    """

    synthetic = False

    def __init__(self, N: int, factorization: dict[int, int] | None = None):
        if N < 2:
            raise NumberTheoryError("modulus must be at least 2")
        self.N = N
        self.identity = 1
        self._nfac = dict(factorization) if factorization is not None else None
        self._components: list[_Component] | None = None

    # public group operations -------------------------------------------------
    def mul(self, a: int, b: int) -> int:
        return a * b % self.N

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.N)

    def inverse(self, a: int) -> int:
        return pow(a, -1, self.N)

    def evaluate(self, elements: Sequence[int], z: Sequence[int]) -> int:
        acc = 1
        N = self.N
        for a, e in zip(elements, z):
            if e:
                acc = acc * pow(a, e, N) % N
        return acc

    def is_identity(self, a: int) -> bool:
        return a % self.N == 1

    def contains(self, a: int) -> bool:
        return math.gcd(a, self.N) == 1

    # ground truth -------------------------------------------------------------
    @property
    def modulus_factorization(self) -> dict[int, int]:
        if self._nfac is None:
            self._nfac = factor_oracle(self.N)
        return self._nfac

    @property
    def order(self) -> int:
        return phi_from_factorization(self.modulus_factorization)

    @property
    def order_factorization(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for p, e in self.modulus_factorization.items():
            if e > 1:
                out = _merge(out, {p: e - 1})
            out = _merge(out, factor_oracle(p - 1) if p > 2 else {})
        return out

    def element_order(self, g: int) -> int:
        return order_mod(g, self.N, self.order, self.order_factorization)

    def components(self) -> list[_Component]:
        if self._components is None:
            self._components = _cyclic_components(self.modulus_factorization)
        return self._components

    @property
    def component_orders(self) -> tuple[int, ...]:
        return tuple(c.order for c in self.components())

    def exponent_vector(self, a: int, step_bound: int = BSGS_STEP_BOUND) -> tuple[int, ...]:
        """Coordinates of ``a`` in the cyclic decomposition (oracle)."""
        if not self.contains(a):
            raise NotInSubgroup(f"{a} is not a unit modulo {self.N}")
        out = []
        for c in self.components():
            y = a % c.modulus
            if c.sign_only:
                out.append(0 if y % 4 == 1 else 1)
                continue
            if c.modulus % 2 == 0 and c.modulus >= 8:
                # strip the sign so that y lies in <5>
                if y % 4 == 3:
                    y = c.modulus - y
            out.append(pohlig_hellman(c.gen, y, c.order, dict(c.factors), c.modulus, step_bound))
        return tuple(out)

    def dlog(self, g: int, x: int, step_bound: int = BSGS_STEP_BOUND) -> int:
        r = self.element_order(g)
        return pohlig_hellman(g, x, r, self.order_factorization, self.N, step_bound)


def _primitive_root(p: int, pe: int, e: int) -> int:
    """Generator of ``(Z/p^e)^*`` for odd prime ``p``."""
    fac = factor_oracle(p - 1)
    g = 2
    while True:
        if all(pow(g, (p - 1) // q, p) != 1 for q in fac):
            break
        g += 1
    if e > 1 and pow(g, p - 1, p * p) == 1:
        g += p
    return g % pe


def _cyclic_components(nfac: dict[int, int]) -> list[_Component]:
    comps = []
    for p, e in sorted(nfac.items()):
        pe = p**e
        if p == 2:
            if e == 2:
                comps.append(_Component(4, 3, 2, ((2, 1),)))
            elif e >= 3:
                comps.append(_Component(pe, pe - 1, 2, ((2, 1),), sign_only=True))
                comps.append(_Component(pe, 5, 2 ** (e - 2), ((2, e - 2),)))
            continue
        fac = _merge(factor_oracle(p - 1), {p: e - 1} if e > 1 else {})
        comps.append(_Component(pe, _primitive_root(p, pe, e), pe // p * (p - 1), tuple(sorted(fac.items()))))
    return comps


class SyntheticCyclicGroup:
    """Cyclic group of order ``r``; elements are exponents in ``[0, r)``.

    The group law is addition of exponents, so ``evaluate`` is a public
    operation that never needs a discrete logarithm.
    """

    synthetic = True

    def __init__(self, r: int, order_factorization: dict[int, int] | None = None):
        if r < 1:
            raise NumberTheoryError("group order must be positive")
        self.r = r
        self.identity = 0
        self._ofac = order_factorization

    def mul(self, a: int, b: int) -> int:
        return (a + b) % self.r

    def pow(self, a: int, e: int) -> int:
        return a * e % self.r

    def inverse(self, a: int) -> int:
        return -a % self.r

    def evaluate(self, elements: Sequence[int], z: Sequence[int]) -> int:
        return sum(a * e for a, e in zip(elements, z)) % self.r

    def is_identity(self, a: int) -> bool:
        return a % self.r == 0

    def contains(self, a: int) -> bool:
        return True

    @property
    def order(self) -> int:
        return self.r

    @property
    def order_factorization(self) -> dict[int, int]:
        if self._ofac is None:
            self._ofac = factor_oracle(self.r)
        return self._ofac

    def element_order(self, g: int) -> int:
        return self.r // math.gcd(g, self.r)

    @property
    def component_orders(self) -> tuple[int, ...]:
        return (self.r,)

    def exponent_vector(self, a: int, step_bound: int = BSGS_STEP_BOUND) -> tuple[int, ...]:
        return (a % self.r,)

    def dlog(self, g: int, x: int, step_bound: int = BSGS_STEP_BOUND) -> int:
        # x == e*g (mod r)
        h = math.gcd(g, self.r)
        if x % h:
            raise NotInSubgroup(f"{x} is not in the subgroup generated by {g}")
        rg = self.r // h
        return (x // h) * pow(g // h, -1, rg) % rg if rg > 1 else 0


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

@dataclass
class Instance:
    """A problem instance with its sealed ground truth.

    ``generators`` are the small elements (primes in concrete mode) and
    ``u_elements`` the arbitrary ones.  By convention the last u-element is
    the base ``g`` and any earlier ones are targets ``x_i = g^(e_i)``.
    """

    kind: str
    modulus: int | None
    n: int
    generators: list[int]
    u_elements: list[int] = field(default_factory=list)
    order_factorization: dict[int, int] | None = None
    ground_truth_dlogs: list[list[int]] | None = None
    seed: int = 0
    order: int | None = None  # synthetic group order r; derived from modulus otherwise

    def __post_init__(self):
        if self.kind not in KINDS:
            raise NumberTheoryError(f"unknown instance kind {self.kind!r}")
        if self.kind == "synthetic-cyclic" and self.order is None:
            if self.order_factorization is None:
                raise NumberTheoryError("synthetic instance needs its order")
            self.order = math.prod(p**e for p, e in self.order_factorization.items())
        self._group = None

    @property
    def synthetic(self) -> bool:
        return self.kind == "synthetic-cyclic"

    @property
    def group(self):
        if self._group is None:
            if self.synthetic:
                self._group = SyntheticCyclicGroup(self.order, self.order_factorization)
            else:
                nfac = None
                if self.order_factorization is not None and self.kind != "generic-modulus":
                    nfac = _modulus_factorization_hint(self)
                self._group = UnitGroup(self.modulus, nfac)
        return self._group

    @property
    def d(self) -> int:
        return len(self.generators)

    @property
    def base(self) -> int:
        if not self.u_elements:
            raise NumberTheoryError("instance has no base element g")
        return self.u_elements[-1]

    @property
    def targets(self) -> list[int]:
        return self.u_elements[:-1]

    def to_json(self) -> dict:
        def s(x):
            return None if x is None else str(x)

        return {
            "kind": self.kind,
            "modulus": s(self.modulus),
            "n": self.n,
            "generators": [str(g) for g in self.generators],
            "u_elements": [str(u) for u in self.u_elements],
            "order_factorization": None
            if self.order_factorization is None
            else [[str(p), str(e)] for p, e in sorted(self.order_factorization.items())],
            "ground_truth_dlogs": None
            if self.ground_truth_dlogs is None
            else [[str(x) for x in v] for v in self.ground_truth_dlogs],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "Instance":
        if isinstance(data, str):
            data = json.loads(data)
        of = data.get("order_factorization")
        gt = data.get("ground_truth_dlogs")
        return cls(
            kind=data["kind"],
            modulus=None if data.get("modulus") is None else int(data["modulus"]),
            n=int(data["n"]),
            generators=[int(g) for g in data["generators"]],
            u_elements=[int(u) for u in data.get("u_elements", [])],
            order_factorization=None if of is None else {int(p): int(e) for p, e in of},
            ground_truth_dlogs=None if gt is None else [[int(x) for x in v] for v in gt],
            seed=int(data.get("seed", 0)),
        )


def _modulus_factorization_hint(inst: Instance) -> dict[int, int] | None:
    # prime moduli: the factorization of N is N itself
    if inst.kind in ("safe-prime-group", "schnorr-group"):
        return {inst.modulus: 1}
    return None


def synthetic_instance(r: int, generator_dlogs: Sequence[int], u_dlogs: Sequence[int] = (),
                       seed: int = 0, order_factorization: dict[int, int] | None = None) -> Instance:
    """Hand-built synthetic instance with the given exponents."""
    if order_factorization is None:
        order_factorization = _easy_factorization(r)
    gens = [a % r for a in generator_dlogs]
    us = [a % r for a in u_dlogs]
    return Instance(
        kind="synthetic-cyclic",
        modulus=None,
        n=max(1, r.bit_length()),
        generators=gens,
        u_elements=us,
        order_factorization=order_factorization,
        ground_truth_dlogs=[[a] for a in gens + us],
        seed=seed,
        order=r,
    )


def _easy_factorization(r: int) -> dict[int, int]:
    if r == 1:
        return {}
    if r & (r - 1) == 0:
        return {2: r.bit_length() - 1}
    if isprime(r):
        return {r: 1}
    return factor_oracle(r)


def _random_prime(rng: random.Random, lo: int, hi: int) -> int:
    """Uniform-ish random prime in ``[lo, hi]``."""
    for _ in range(10_000):
        p = nextprime(rng.randrange(lo - 1, hi))
        if lo <= p <= hi:
            return p
    raise NumberTheoryError(f"no prime found in [{lo}, {hi}]")


def _pick_generators(group, modulus: int | None, count: int, avoid: Sequence[int]) -> list[int]:
    """First ``count`` primes that are units and distinct from ``avoid`` as elements."""
    out: list[int] = []
    seen = {a % modulus for a in avoid} if modulus else set()
    p = 1
    while len(out) < count:
        p = nextprime(p)
        if modulus is not None and p >= modulus:
            raise NumberTheoryError("modulus too small to host the requested prime generators")
        if math.gcd(p, modulus) != 1:
            continue
        if p % modulus in seen:
            continue
        seen.add(p % modulus)
        out.append(p)
    return out


def gen_instance(kind: str, bits: int, d: int, seed: int, *, k: int = 0,
                 oracle_bits: int = DEFAULT_ORACLE_BITS) -> Instance:
    """Generate a seeded instance.

    Args:
        kind: one of ``KINDS``.
        bits: bit length of the modulus (or of the synthetic order ``r``).
        d: number of small generators to provide.
        seed: 64-bit RNG seed.
        k: number of arbitrary elements ``u_i``.  With ``k >= 1`` the last one
            is a base ``g`` and the others are targets ``g^(e_i)``.
        oracle_bits: largest concrete modulus for which ground truth is built.
    """
    if bits < 8:
        raise NumberTheoryError("bits must be at least 8")
    if d < 2:
        raise NumberTheoryError("d must be at least 2")
    if kind not in KINDS:
        raise NumberTheoryError(f"unknown instance kind {kind!r}")
    rng = random.Random(seed)
    if kind == "synthetic-cyclic":
        return _gen_synthetic(bits, d, seed, k, rng, oracle_bits)
    if bits > oracle_bits:
        raise BudgetExceeded(f"concrete {kind} instances are limited to {oracle_bits} bits")
    small = first_primes(d)
    if 2 ** (bits - 1) <= small[-1] ** 2:
        raise NumberTheoryError(f"{bits} bits is too small to host {d} prime generators")

    lo, hi = 1 << (bits - 1), (1 << bits) - 1
    for _ in range(100_000):
        if kind == "rsa-semiprime":
            half = (bits + 1) // 2
            p = _random_prime(rng, max(small[-1] + 1, 1 << (half - 1)), (1 << half) - 1)
            qlo, qhi = -(-lo // p), hi // p
            if qlo > qhi or qhi <= small[-1]:
                continue
            q = _random_prime(rng, max(qlo, small[-1] + 1), qhi)
            if q == p or not lo <= p * q <= hi:
                continue
            N, nfac = p * q, {p: 1, q: 1}
        elif kind == "safe-prime-group":
            q = _random_prime(rng, 1 << (bits - 2), (1 << (bits - 1)) - 1)
            N = 2 * q + 1
            if N.bit_length() != bits or not isprime(N):
                continue
            nfac = {N: 1}
        elif kind == "schnorr-group":
            rbits = max(2, bits // 2)
            rg = _random_prime(rng, 1 << (rbits - 1), (1 << rbits) - 1)
            kk = rng.randrange(max(1, lo // (2 * rg)), hi // (2 * rg) + 1)
            N = 2 * kk * rg + 1
            if N.bit_length() != bits or not isprime(N):
                continue
            nfac = {N: 1}
        else:  # generic-modulus
            N = rng.randrange(lo, hi + 1)
            if any(N % s == 0 for s in small):
                continue
            nfac = factor_oracle(N)
        if any(N % s == 0 for s in small):
            continue
        break
    else:  # pragma: no cover - astronomically unlikely
        raise NumberTheoryError(f"could not generate a {kind} instance of {bits} bits")

    group = UnitGroup(N, nfac)
    us = _random_u_elements(group, k, rng)
    gens = _pick_generators(group, N, d, us)
    inst = Instance(kind=kind, modulus=N, n=N.bit_length(), generators=gens, u_elements=us,
                    order_factorization=group.order_factorization, seed=seed)
    inst._group = group
    inst.ground_truth_dlogs = [list(group.exponent_vector(a)) for a in gens + us]
    return inst


def _random_u_elements(group, k: int, rng: random.Random) -> list[int]:
    if k == 0:
        return []
    while True:
        g = rng.randrange(2, group.N - 1) if not group.synthetic else rng.randrange(1, group.r)
        if group.contains(g) and (group.synthetic or g > 1):
            break
    if group.synthetic:
        # make g a generator so every element is a power of it
        while math.gcd(g, group.r) != 1:
            g = rng.randrange(1, group.r)
    rg = group.element_order(g)
    targets = [group.pow(g, rng.randrange(1, rg) if rg > 1 else 0) for _ in range(k - 1)]
    return targets + [g]


def _gen_synthetic(bits, d, seed, k, rng, oracle_bits) -> Instance:
    if bits <= oracle_bits:
        r = rng.randrange(1 << (bits - 1), 1 << bits)
        ofac = factor_oracle(r)
    else:
        r = _random_prime(rng, 1 << (bits - 1), (1 << bits) - 1)
        ofac = {r: 1}
    group = SyntheticCyclicGroup(r, ofac)
    us = _random_u_elements(group, k, rng)
    gens = [rng.randrange(r) for _ in range(d)]
    inst = Instance(kind="synthetic-cyclic", modulus=None, n=bits, generators=gens, u_elements=us,
                    order_factorization=ofac, ground_truth_dlogs=[[a] for a in gens + us],
                    seed=seed, order=r)
    inst._group = group
    return inst


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def dlog_oracle(g: int, x: int, instance: Instance, step_bound: int = BSGS_STEP_BOUND) -> int:
    """``e`` in ``[0, ord(g))`` with ``g^e = x`` (Pohlig-Hellman + BSGS)."""
    return instance.group.dlog(g, x, step_bound)


def element_order(g: int, instance: Instance) -> int:
    """Least ``r >= 1`` with ``g^r = 1``."""
    return instance.group.element_order(g)


def factor_oracle(N: int, max_bits: int = 2 * DEFAULT_ORACLE_BITS) -> dict[int, int]:
    """Complete factorization ``{prime: exponent}`` (trial division + Pollard rho)."""
    if N < 1:
        raise NumberTheoryError("cannot factor a non-positive integer")
    if N.bit_length() > max_bits:
        raise BudgetExceeded(f"{N.bit_length()}-bit integer exceeds the factoring budget")
    return {int(p): int(e) for p, e in factorint(N).items()}


def phi_from_factorization(fac: dict[int, int]) -> int:
    return math.prod(p ** (e - 1) * (p - 1) for p, e in fac.items())


def phi_oracle(N: int) -> int:
    """Euler's totient of ``N``."""
    return phi_from_factorization(factor_oracle(N))


# ---------------------------------------------------------------------------
# Factoring from a multiple of an exponent
# ---------------------------------------------------------------------------

@dataclass
class PartialFactorization:
    """Pairwise coprime parts of ``N`` with multiplicities."""

    N: int
    parts: dict[int, int]

    @property
    def complete(self) -> bool:
        return all(isprime(p) for p in self.parts)

    def primes(self) -> dict[int, int]:
        return {p: e for p, e in self.parts.items() if isprime(p)}


def _normalize_parts(parts: dict[int, int]) -> dict[int, int]:
    parts = {p: e for p, e in parts.items() if p > 1}
    changed = True
    while changed:
        changed = False
        keys = sorted(parts)
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                g = math.gcd(a, b)
                if g > 1:
                    ea, eb = parts.pop(a), parts.pop(b)
                    for base, ex in ((g, ea + eb), (a // g, ea), (b // g, eb)):
                        if base > 1:
                            parts[base] = parts.get(base, 0) + ex
                    changed = True
                    break
            if changed:
                break
    out: dict[int, int] = {}
    for p, e in parts.items():
        pp = perfect_power(p) if p > 3 else False
        if pp:
            base, k = pp
            out[base] = out.get(base, 0) + e * k
        else:
            out[p] = out.get(p, 0) + e
    return out if out == parts else _normalize_parts(out)


def refine(parts: dict[int, int], divisor: int) -> dict[int, int]:
    """Split every part that ``divisor`` divides non-trivially."""
    out: dict[int, int] = {}
    for f, e in parts.items():
        g = math.gcd(f, divisor)
        if 1 < g < f:
            out[g] = out.get(g, 0) + e
            out[f // g] = out.get(f // g, 0) + e
        else:
            out[f] = out.get(f, 0) + e
    return _normalize_parts(out)


def factor_from_exponent_multiple(N: int, M: int, trials: int, seed: int) -> PartialFactorization:
    """Split ``N`` given a multiple ``M`` of the order of random units.

    Writes ``M = 2^s * o``; for each random base ``a`` coprime to ``N``
    computes ``a^o`` and its ``s - 1`` successive squares, and refines the
    factorization with ``gcd(y - 1, N)`` and ``gcd(y + 1, N)`` for every
    value ``y`` that is squared again.  Odd ``M`` gives no such value.
    """
    if N < 2:
        raise NumberTheoryError("N must be at least 2")
    if M < 1:
        raise NumberTheoryError("M must be positive")
    parts = {N: 1}
    if N % 2 == 0:
        parts = refine(parts, 2 ** (N & -N).bit_length())
    parts = _normalize_parts(parts)
    if all(isprime(p) for p in parts):
        return PartialFactorization(N, parts)
    s, o = 0, M
    while o % 2 == 0:
        o //= 2
        s += 1
    rng = random.Random(seed)
    done = 0
    attempts = 0
    while done < trials and attempts < 50 * trials + 100:
        attempts += 1
        a = rng.randrange(2, N - 1) if N > 4 else 2
        if math.gcd(a, N) != 1:
            continue
        done += 1
        y = pow(a, o, N)
        for _ in range(s):
            for c in (y - 1, y + 1):
                g = math.gcd(c, N)
                if 1 < g < N:
                    parts = refine(parts, g)
            y = y * y % N
        if all(isprime(p) for p in parts):
            break
    return PartialFactorization(N, parts)
