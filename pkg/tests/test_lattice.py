import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_vectors, gram_schmidt, same_lattice_square, shortest_norm2
from relsim import lattice
from relsim.lattice import LatticeBasis, LatticeError


def random_basis(rng, k, lo=-9, hi=9):
    while True:
        rows = [[rng.randint(lo, hi) for _ in range(k)] for _ in range(k)]
        if lattice.determinant(rows):
            return rows


def test_lll_identity_unchanged():
    I3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert lattice.lll_reduce(I3, Fraction(3, 4)).matrix() == I3


def test_lll_two_dim_example():
    red = lattice.lll_reduce([[2, 0], [1, 1]])
    # enumeration oracle: coefficients in [-3, 3]^2
    best = min(sum(x * x for x in (2 * a + b, b)) for a in range(-3, 4) for b in range(-3, 4) if (a, b) != (0, 0))
    assert best == 2
    assert lattice.norm2(red.rows[0]) == 2
    assert same_lattice_square(red.matrix(), [[2, 0], [1, 1]])


def test_lll_rejects_dependent_rows():
    with pytest.raises(LatticeError):
        lattice.lll_reduce([[1, 2], [2, 4]])


@pytest.mark.parametrize("delta", [Fraction(1, 4), Fraction(1), 0.2])
def test_lll_rejects_bad_delta(delta):
    with pytest.raises(ValueError):
        lattice.lll_reduce([[1, 0], [0, 1]], delta)


def test_lll_handles_non_square_rows():
    rows = [[1, 0, 0, 1000], [0, 1, 0, 1001], [0, 0, 1, 999]]
    red = lattice.lll_reduce(rows)
    assert lattice.is_lll_reduced(red)
    assert lattice.same_lattice(red, rows)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32))
def test_lll_properties(k, seed):
    rnd = random.Random(seed)
    rows = random_basis(rnd, k, -20, 20)
    red = lattice.lll_reduce(rows)
    mu, B = gram_schmidt(red.matrix())
    for i in range(k):
        for j in range(i):
            assert abs(mu[i][j]) <= Fraction(1, 2)
    for i in range(1, k):
        assert B[i] >= (Fraction(99, 100) - mu[i][i - 1] ** 2) * B[i - 1]
    assert same_lattice_square(red.matrix(), rows)
    assert lattice.determinant(red) == lattice.determinant(rows)
    assert lattice.norm2(red.rows[0]) <= 2 ** (k - 1) * shortest_norm2(rows)


def test_hnf_examples():
    assert lattice.hnf([[2, 0], [0, 2], [1, 1]]).matrix() == [[1, 1], [0, 2]]
    I = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert lattice.hnf(I).matrix() == I
    assert lattice.hnf([[0, 0, 0]] + I).matrix() == I


def test_hnf_zero_lattice_rejected():
    with pytest.raises(LatticeError):
        lattice.hnf([[0, 0], [0, 0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**32))
def test_hnf_properties(k, extra, seed):
    rnd = random.Random(seed)
    rows = random_basis(rnd, k)
    gens = rows + [[rnd.randint(-9, 9) for _ in range(k)] for _ in range(extra)]
    H = lattice.hnf(gens)
    piv = lattice.pivots(H)
    assert piv == sorted(set(piv))
    for i, (r, c) in enumerate(zip(H.rows, piv)):
        assert r[c] > 0
        for above in H.rows[:i]:
            assert 0 <= above[c] < r[c]
    assert lattice.hnf(H).rows == H.rows
    for g in gens:
        assert lattice.membership(H, g)
    # the HNF generates nothing beyond the generators: its rows are integer combos of them
    assert same_lattice_square(lattice.hnf(rows).matrix(), lattice.lll_reduce(rows).matrix())
    if extra == 0:
        assert lattice.determinant(H) == lattice.determinant(rows)


def test_determinant_examples():
    assert lattice.determinant([[1 if i == j else 0 for j in range(5)] for i in range(5)]) == 1
    assert lattice.determinant([[1, 1], [0, 2]]) == 2
    H = lattice.hnf([[4, 6, 2], [2, 2, 8], [0, 3, 3]])
    assert lattice.determinant(H) == abs(H.rows[0][0] * H.rows[1][1] * H.rows[2][2])
    with pytest.raises(LatticeError):
        lattice.determinant([[1, 2, 3], [4, 5, 6]])


def test_determinant_against_cofactor():
    rng = random.Random(3)

    def cof(M):
        if len(M) == 1:
            return M[0][0]
        return sum((-1) ** j * M[0][j] * cof([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(len(M)))

    for _ in range(50):
        k = rng.randint(1, 5)
        M = [[rng.randint(-30, 30) for _ in range(k)] for _ in range(k)]
        assert lattice.determinant(M) == abs(cof(M))


def test_membership_examples():
    assert lattice.membership([[1, 0], [0, 1]], [5, -7])
    assert not lattice.membership([[1, 1], [0, 2]], [1, 0])
    assert lattice.membership([[1, 1], [0, 2]], [3, 5])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32))
def test_membership_matches_coefficient_search(k, seed):
    rnd = random.Random(seed)
    rows = random_basis(rnd, k, -4, 4)
    v = [rnd.randint(-6, 6) for _ in range(k)]
    from oracles import solve_rational

    expected = all(c.denominator == 1 for c in solve_rational(rows, v))
    assert lattice.membership(rows, v) == expected


def test_short_generating_set_examples():
    assert lattice.short_generating_set([[1, 0], [0, 1]], 1) == [(1, 0), (0, 1)]
    out = lattice.short_generating_set([[1, 0], [0, 1000]], 1)
    assert (1, 0) in out and all(lattice.norm2(v) <= 1000 ** 2 for v in out)
    assert lattice.claim_bound(2, 1) == pytest.approx(2 * 2 ** 0.5)


def test_short_generating_set_can_be_empty():
    assert lattice.short_generating_set([[5, 0], [0, 7]], 1) == []


def test_short_generating_set_dim4_enumeration():
    rng = random.Random(11)
    for _ in range(20):
        rows = random_basis(rng, 4)
        lam2 = shortest_norm2(rows)
        T = lam2 ** 0.5
        out = lattice.short_generating_set(rows, T, T_squared=lam2)
        for v in enumerate_vectors(rows, lam2):
            assert lattice.membership(out, v)
        for v in out:
            assert lattice.norm2(v) <= lattice.claim_bound(4, T) ** 2
            assert lattice.membership(rows, v)


def test_nearest_plane_reduces_into_fundamental_domain():
    rows = [[3, 1], [1, 4]]
    t = lattice.nearest_plane(rows, [100, -57])
    assert lattice.membership(rows, [100 - t[0], -57 - t[1]])
    assert lattice.norm2(t) <= 3 ** 2 + 4 ** 2


def test_basis_type_validation():
    with pytest.raises(LatticeError):
        LatticeBasis(())
    with pytest.raises(LatticeError):
        LatticeBasis(((1, 2), (3,)))
    with pytest.raises(LatticeError):
        LatticeBasis.from_rows([[1, 2], [2, 4]])
    b = LatticeBasis.from_rows([[1, 2], [0, 3]])
    assert b.rank == 2 and b.ambient_dim == 2 and len(b) == 2 and list(b) == [(1, 2), (0, 3)]
