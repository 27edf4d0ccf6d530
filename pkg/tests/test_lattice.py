import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from artifact.errors import SingularMatrix
from artifact.lattice import (det, diag, dual_star, identity, in_K_eps, shortest_vector, shortest_vector_sq,
                              successive_minima)
from oracles import minima_oracle, random_integer_basis, random_unimodular, svp_oracle


def test_shortest_vector_examples():
    assert shortest_vector(identity(2))[0] == 1
    length, c = shortest_vector(diag([F(2), F(1, 2)]))
    assert length == F(1, 2) and c in ((0, 1), (0, -1))


def test_random_3x3_matches_oracle():
    rng = random.Random(7)
    for _ in range(20):
        B = random_integer_basis(rng, 3)
        assert shortest_vector_sq(B)[0] == svp_oracle(B)


def test_in_K_eps_examples():
    assert in_K_eps(identity(2), 1)
    assert not in_K_eps(identity(2), F(101, 100))
    assert not in_K_eps(diag([F(2), F(1, 2)]), F(3, 5))


def test_successive_minima_examples():
    assert successive_minima(identity(3)).lam_sq == (1, 1, 1)
    assert successive_minima(diag([F(1, 2), F(1), F(2)])).lam_sq == (F(1, 4), 1, 4)
    rng = random.Random(11)
    for _ in range(20):
        B = random_integer_basis(rng, 3)
        assert list(successive_minima(B).lam_sq) == minima_oracle(B)


def test_dual_star_examples():
    assert dual_star(identity(3)) == identity(3)
    assert dual_star(diag([F(2), F(3), F(5)])) == diag([F(1, 5), F(1, 3), F(1, 2)])
    with pytest.raises(SingularMatrix):
        dual_star([[F(1), F(2)], [F(2), F(4)]])


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_dual_star_involution_and_det(seed, n):
    g = random_unimodular(random.Random(seed), n)
    g = [[F(x) for x in row] for row in g]
    gs = dual_star(g)
    assert dual_star(gs) == g
    assert abs(det(gs)) == 1
    assert det(gs) * det(g) in (1, -1)


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_minima_transference_bounds(seed, n):
    import math

    B = [[F(x) for x in row] for row in random_integer_basis(random.Random(seed), n, bound=3)]
    if abs(det(B)) != 1:
        s = F(1) / abs(det(B))
        B = [[x * s if i == 0 else x for x in row] for i, row in enumerate(B)]
    lam = successive_minima(B).lam
    lam_dual = successive_minima(dual_star(B)).lam
    for i in range(n):
        prod = lam[i] * lam_dual[n - 1 - i]
        assert 1 - 1e-9 <= prod <= math.factorial(n) + 1e-9


def test_primitive_short_vectors_match_filtered():
    import math
    from artifact.lattice import short_vectors
    rng = random.Random(19)
    for _ in range(30):
        n = rng.choice([2, 3])
        B = random_integer_basis(rng, n, 3)
        full = short_vectors(B, 40)
        prim = short_vectors(B, 40, primitive=True)
        assert prim == [(t, c) for t, c in full if math.gcd(*c) == 1]
