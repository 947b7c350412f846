import math
import random
from collections import Counter
from fractions import Fraction

import pytest

from oracles import subgroup_order
from relsim import lattice
from relsim import numtheory as nt
from relsim import simulate as sim
from relsim.numtheory import Instance, synthetic_instance
from relsim.simulate import RunRecord, SimParams


def coset_distance(w, v):
    """Distance between two points of the torus R^d / Z^d."""
    tot = 0
    for a, b in zip(w, v):
        t = (Fraction(a) - Fraction(b)) % 1
        t = min(t, 1 - t)
        tot += t * t
    return math.sqrt(tot)


def test_synthetic_r10_lattice():
    inst = synthetic_instance(10, [1, 7])
    L = sim.build_relation_lattice(inst)
    # residue enumeration: z1 + 7 z2 = 0 mod 10
    members = {(a, b) for a in range(-10, 11) for b in range(-10, 11) if (a + 7 * b) % 10 == 0}
    for v in members:
        assert lattice.membership(L.basis, v)
    assert lattice.membership(L.basis, (10, 0)) and lattice.membership(L.basis, (7, -1))
    assert L.det == 10
    assert lattice.same_lattice(L.basis, [[10, 0], [7, -1]])


def test_identity_generator():
    inst = synthetic_instance(10, [0])
    L = sim.build_relation_lattice(inst)
    assert L.basis.rows == ((1,),) and L.det == 1


def test_mod11_lattice():
    inst = Instance(kind="safe-prime-group", modulus=11, n=4, generators=[2, 7])
    L = sim.build_relation_lattice(inst)
    assert L.det == 10 == subgroup_order(11, [2, 7])
    for row in L.basis.rows:
        assert L.is_relation(row)


def test_relations_hold_for_random_instances():
    for seed in range(100):
        kind = nt.KINDS[seed % len(nt.KINDS)]
        inst = nt.gen_instance(kind, 20, 4, seed, k=1)
        L = sim.build_relation_lattice(inst)
        for row in L.basis.rows:
            assert L.is_relation(row)
        if kind != "synthetic-cyclic":
            assert L.det == subgroup_order(inst.modulus, L.elements)
        else:
            # every element is a power of the generator g, so the span is <gcd>
            r = inst.order
            g = math.gcd(r, *L.elements)
            assert L.det == r // g


def test_block_construction_matches_kernel():
    rng = random.Random(2)
    for seed in range(20):
        inst = nt.gen_instance("generic-modulus", 20, 5, seed)
        N = inst.modulus
        gens = inst.generators
        u = [pow(gens[0], rng.randrange(50), N) * pow(gens[1], rng.randrange(50), N) % N for _ in range(2)]
        a = sim.build_relation_lattice(inst, gens + u)
        b = sim.build_relation_lattice(inst, gens + u, method="block", block_k=2)
        assert lattice.same_lattice(a.basis, b.basis)
    s = nt.gen_instance("synthetic-cyclic", 32, 4, 3, k=2)
    a = sim.build_relation_lattice(s)
    b = sim.build_relation_lattice(s, method="block")
    assert lattice.same_lattice(a.basis, b.basis)


def test_block_construction_rejects_outside_element():
    inst = Instance(kind="safe-prime-group", modulus=11, n=4, generators=[3], u_elements=[2])
    with pytest.raises(nt.NotInSubgroup):
        sim.build_relation_lattice(inst, method="block")


def test_ground_truth_unavailable(monkeypatch):
    inst = Instance(kind="safe-prime-group", modulus=1000003, n=20, generators=[2, 3])
    orig = nt.UnitGroup.exponent_vector
    monkeypatch.setattr(nt.UnitGroup, "exponent_vector", lambda self, a, step_bound=0: orig(self, a, 10))
    with pytest.raises(sim.GroundTruthUnavailable):
        sim.build_relation_lattice(inst)


def test_params_invariants():
    for n, d, C in ((64, 8, 4.0), (2048, 46, 2.0), (16, 3, 1.0), (36, 6, 6.39)):
        p = SimParams(n, d, C)
        assert p.D & (p.D - 1) == 0
        assert math.log2(p.D) >= math.log2(2 * math.sqrt(d)) + p.log2_R - 1e-9
        assert p.delta_grid >= math.sqrt(d / 2) * 2 * math.sqrt(d) - 1e-9
        assert p.delta_grid > 1
    with pytest.raises(ValueError):
        SimParams(64, 8, 0)
    with pytest.raises(ValueError):
        SimParams(64, 8, 1, noise_model="laplace")


def test_trivial_lattice_runs_are_near_zero():
    basis = lattice.LatticeBasis(((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    p = SimParams(16, 3, 1.0)
    rng = random.Random(0)
    for i in range(200):
        r = sim.sample_good_run(basis, p, rng)
        assert r.hidden_coset == (0, 0, 0)
        assert coset_distance(r.w, (0, 0, 0)) < p.delta + math.sqrt(3) / (2 * p.D)


def test_noise_free_runs_hit_the_ten_cosets():
    L = sim.build_relation_lattice(synthetic_instance(10, [1, 7]))
    p = SimParams(16, 2, 1.0, noise_model="none", D_override=2**10)
    # the dual cosets B^{-1} c mod 1 enumerated directly
    cosets = {sim.dual_coset(L.basis, (a, b)) for a in range(10) for b in range(10)}
    assert len(cosets) == 10
    grid = {tuple(round(x * 1024) % 1024 for x in v) for v in cosets}
    rng = random.Random(1)
    seen = set()
    for _ in range(300):
        r = sim.sample_good_run(L, p, rng)
        assert r.w_num in grid
        seen.add(r.w_num)
    assert seen == grid


@pytest.mark.parametrize("model", ["uniform-ball", "truncated-gaussian"])
def test_good_run_distance_bound(model):
    inst = nt.gen_instance("synthetic-cyclic", 40, 5, 4)
    L = sim.build_relation_lattice(inst)
    p = SimParams(40, 5, 1.5, noise_model=model)
    rng = random.Random(7)
    dists = []
    for _ in range(300):
        r = sim.sample_good_run(L, p, rng)
        assert all(0 <= x < p.D for x in r.w_num)
        # the hidden coset really is a dual vector
        for row in L.basis.rows:
            assert sum(Fraction(a) * b for a, b in zip(row, r.hidden_coset)).denominator == 1
        dist = coset_distance(r.w, r.hidden_coset)
        assert dist < p.delta_prime
        dists.append(dist)
    # the noise is actually used, not collapsed onto the grid
    assert max(dists) > 0.3 * p.delta


def test_cosets_are_uniform():
    L = sim.build_relation_lattice(synthetic_instance(6, [1, 2]))
    p = SimParams(16, 2, 1.0, noise_model="none", D_override=2**12)
    rng = random.Random(3)
    counts = Counter(sim.sample_good_run(L, p, rng).hidden_coset for _ in range(3000))
    assert len(counts) == 6
    assert all(abs(c - 500) < 100 for c in counts.values())


def test_bad_runs():
    p = SimParams(4, 2, 0.5, D_override=4)
    r = sim.sample_bad_run(p, random.Random(0))
    assert r.D == 4 and all(x in range(4) for x in r.w_num) and r.provenance == "bad"
    assert sim.sample_bad_run(p, random.Random(5)) == sim.sample_bad_run(p, random.Random(5))


def test_bad_runs_chi_square():
    # chi-square critical value for 7 degrees of freedom at 0.01
    p = SimParams(4, 1, 0.5, D_override=8)
    rng = random.Random(42)
    counts = Counter(sim.sample_bad_run(p, rng).w_num[0] for _ in range(10**4))
    exp = 10**4 / 8
    chi2 = sum((counts[i] - exp) ** 2 / exp for i in range(8))
    assert chi2 < 18.475


def test_run_batch():
    inst = nt.gen_instance("synthetic-cyclic", 32, 4, 1)
    L = sim.build_relation_lattice(inst)
    p = SimParams(32, 4, 2.0)
    assert [r.provenance for r in sim.run_batch(L, p, 5, 0, 1)] == ["good"] * 5
    assert [r.provenance for r in sim.run_batch(L, p, 5, 5, 1)] == ["bad"] * 5
    a = sim.run_batch(L, p, 50, 10, 9)
    b = sim.run_batch(L, p, 50, 10, 9)
    assert a == b and [x.provenance for x in a] == [x.provenance for x in b]
    assert Counter(x.provenance for x in a) == {"good": 40, "bad": 10}
    assert sim.run_batch(L, p, 50, 10, 10) != a
    with pytest.raises(ValueError):
        sim.run_batch(L, p, 5, 6, 0)


def test_run_records_hide_provenance(tmp_path):
    inst = nt.gen_instance("synthetic-cyclic", 32, 3, 1)
    L = sim.build_relation_lattice(inst)
    runs = sim.run_batch(L, SimParams(32, 3, 2.0), 6, 2, 4)
    path, side = tmp_path / "runs.jsonl", tmp_path / "prov.jsonl"
    sim.write_runs(runs, path)
    assert "provenance" not in path.read_text()
    back = sim.read_runs(path)
    assert [r.w_num for r in back] == [r.w_num for r in runs]
    sim.write_runs(runs, path, side)
    assert side.read_text().count("bad") == 2
    with pytest.raises(ValueError):
        RunRecord.from_json({"w_num": ["9"], "D": "8"})


def test_cost_estimate():
    est = sim.cost_estimate(2048, 2, 0, 0)
    assert est.qubits == 22283
    assert est.qubits_exact == pytest.approx((2 / 0.694242 + 8) * 2048, rel=1e-6)
    assert sim.cost_estimate(1, 1e-9).qubits_exact == pytest.approx(8)
    assert sim.cost_estimate(2048, 3).qubits > est.qubits
    assert sim.cost_estimate(2048, 2, 0, 100).qubits == 22383
    assert sim.cost_estimate(4, 1, 10).gates_order == 2 * 10 + 8
