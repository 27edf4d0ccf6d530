import itertools
import random
from fractions import Fraction as F

import pytest
from mpmath import mp, mpf

from artifact.errors import PreconditionViolated, SingularMatrix
from artifact.lattice import identity, matmul, transpose
from artifact.transference import LinearSystem, iota, transpose_system, verify_transference


def test_identity_system_bounds():
    for n in (1, 2, 3):
        S = LinearSystem(identity(n + 1), (1,) * (n + 1))
        assert iota(S) is not None
        Sp = transpose_system(S)
        assert Sp.T == (n,) + (1,) * n


def test_seven_fifths_example():
    x = F(7, 5)
    S = LinearSystem(((1, 0), (x, -1)), (5, F(1, 5)))
    Sp = transpose_system(S)
    assert Sp.M == ((1, x), (0, -1))
    assert Sp.T == (F(1, 5), 5)
    I = matmul(transpose([list(r) for r in S.M]), [list(r) for r in Sp.M])
    assert I == identity(2)


def test_double_transpose():
    S = LinearSystem(((2, 1, 0), (F(1, 3), 1, 1), (0, -1, 4)), (3, 2, F(1, 2)))
    assert transpose_system(transpose_system(S)).M == S.M


def test_singular_rejected():
    with pytest.raises(SingularMatrix):
        LinearSystem(((1, 2), (2, 4)), (1, 1))


def test_identity_witness():
    S = LinearSystem(identity(3), (1, 1, 1))
    assert verify_transference(S, (1, 0, 0)) == (1, 0, 0)


def test_precondition_checked():
    S = LinearSystem(identity(2), (1, 1))
    with pytest.raises(PreconditionViolated):
        verify_transference(S, (2, 0))
    with pytest.raises(PreconditionViolated):
        verify_transference(S, (0, 0))


def exhaustive(Sp, R):
    return [v for v in itertools.product(range(-R, R + 1), repeat=Sp.n + 1) if any(v) and Sp.satisfied_by(v)]


def test_golden_system():
    with mp.workprec(200):
        phi = F(int(mp.floor((mp.sqrt(5) - 1) / 2 * 2 ** 200)), 2 ** 200)
    S = LinearSystem(((1, 0), (phi, -1)), (5, abs(5 * phi - 3)))
    assert S.satisfied_by((5, 3))
    v = verify_transference(S, (5, 3))
    Sp = transpose_system(S)
    assert Sp.satisfied_by(v)
    assert v in exhaustive(Sp, 20)


def test_random_planted_systems():
    rng = random.Random(17)
    for _ in range(100):
        while True:
            M = [[F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3)] for _ in range(3)]
            u = [rng.randint(-3, 3) for _ in range(3)]
            if any(u):
                try:
                    S0 = LinearSystem(M, (1, 1, 1))
                except SingularMatrix:
                    continue
                break
        T = [max(abs(L), F(1, 7)) for L in S0.forms(u)]
        S = LinearSystem(M, T)
        v = verify_transference(S, u)
        assert isinstance(v, tuple) and any(v)
        assert transpose_system(S).satisfied_by(v)
