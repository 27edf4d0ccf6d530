import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st
from mpmath import mp, mpf

from artifact.arith import Weight
from artifact.dynamics import (CurveFrame, FlowParams3, make_a, make_d, make_g_ck, make_g_t, make_u, make_u1,
                               make_u1_tilde, u1_star_expected)
from artifact.errors import ConfigError, DimensionMismatch
from artifact.lattice import det, diag, dual_star, identity, matmul



@pytest.fixture(autouse=True)
def high_precision():
    with mp.workprec(200):
        yield


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=20)


def to_mpf(x):
    return mpf(x.numerator) / x.denominator if isinstance(x, F) else mpf(x)


def close(A, B, tol=mpf(10) ** -25):
    return all(abs(to_mpf(a) - to_mpf(b)) < tol for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def test_make_a_examples():
    p1 = FlowParams3.from_weight(F(1, 4), Weight.of(1))  # b = 2
    assert make_a(0, p1) == identity(2)
    assert make_a(1, p1) == diag([F(2), F(1, 2)])
    p2 = FlowParams3.from_weight(F(1, 8), Weight.of(F(1, 2), F(1, 2)))  # b = 4
    assert p2.b() == 4
    assert make_a(1, p2) == diag([F(4), F(1, 2), F(1, 2)])


def test_make_d_examples():
    beta = F(1, 8)
    p1 = FlowParams3.from_weight(beta, Weight.of(1))
    assert make_d(0, p1) == identity(2)
    assert close(make_d(1, p1), diag([mp.sqrt(mpf(1) / 8), mp.sqrt(mpf(8))]))
    p2 = FlowParams3.from_weight(beta, Weight.of(F(2, 3), F(1, 3)))
    assert make_d(1, p2) == diag([F(1, 2), F(4), F(1, 2)])


def test_flow_params_validation():
    with pytest.raises(ConfigError):
        FlowParams3.from_weight(F(1), Weight.of(1))
    with pytest.raises(ConfigError):
        FlowParams3(F(1, 2), Weight.of(F(1, 3), F(2, 3)))


def test_make_u_examples_and_group_law():
    assert make_u([0, 0]) == identity(3)
    assert make_u([F(1, 3)]) == [[1, F(1, 3)], [0, 1]]
    x, y = [F(1, 3), F(-2, 7)], [F(5, 4), F(1, 9)]
    assert matmul(make_u(x), make_u(y)) == make_u([a + b for a, b in zip(x, y)])
    assert det(make_u(x)) == 1


def test_make_g_t_examples():
    assert make_g_t(0, Weight.of(1)) == identity(2)
    assert close(make_g_t(1, Weight.of(1)), diag([mp.e, 1 / mp.e]))
    assert close(make_g_t(2, Weight.of(F(1, 2), F(1, 2))), diag([mp.e, mp.e, mp.exp(-2)]))
    with pytest.raises(ValueError):
        make_g_t(-1, Weight.of(1))


def test_make_g_ck_example_and_precondition():
    g = make_g_ck(F(1, 2), 2, 1, 1)
    assert g == diag([F(4), F(1, 8), F(2)])
    assert det(g) == 1
    with pytest.raises(ValueError):
        make_g_ck(F(1, 2), 1, 1, 0)
    with pytest.raises(ValueError):
        make_g_ck(F(3, 2), 1, 1, 1)


def test_make_g_ck_determinant_random():
    rng = random.Random(5)
    for _ in range(100):
        c = F(rng.randint(1, 99), 100)
        k, d, m = rng.randint(1, 9), rng.randint(1, 3), rng.randint(1, 3)
        g = make_g_ck(c, k, d, m)
        prod = mpf(1)
        for i in range(d + m + 1):
            prod *= to_mpf(g[i][i])
        assert abs(prod - 1) < mpf(10) ** -20


def parabola_frame(x):
    return CurveFrame((x,), (x * x,), ((2 * x,),))


def test_u1_examples():
    assert dual_star(make_u1(parabola_frame(F(0)))) == identity(3)
    fr = parabola_frame(F(1, 2))
    expected = [[1, F(-1, 2), F(-1, 4)], [0, 1, 1], [0, 0, 1]]
    assert u1_star_expected(fr) == expected
    assert dual_star(make_u1(fr)) == expected


def test_u1_tilde_zeroes_shift_block():
    fr = CurveFrame((F(1, 3), F(2, 5)), (F(7, 9),), ((F(1, 2), F(-3, 4)),))
    t = make_u1_tilde(fr)
    assert t[0][3] == 0
    assert [r[:3] for r in t] == [r[:3] for r in make_u1(fr)]


def test_frame_shape_checked():
    with pytest.raises(DimensionMismatch):
        CurveFrame((F(1),), (F(1), F(2)), ((F(1),),))


def test_dual_identity_random_frames():
    rng = random.Random(13)
    for _ in range(50):
        d, m = rng.randint(1, 3), rng.randint(1, 3)
        r = lambda: F(rng.randint(-20, 20), rng.randint(1, 12))
        fr = CurveFrame(tuple(r() for _ in range(d)), tuple(r() for _ in range(m)),
                        tuple(tuple(r() for _ in range(d)) for _ in range(m)))
        assert dual_star(make_u1(fr)) == u1_star_expected(fr)
        assert det(make_u1(fr)) == 1


@given(rationals, rationals)
def test_flow_composition_a(y1, y2):
    p = FlowParams3.from_weight(F(1, 64), Weight.of(F(2, 3), F(1, 3)))
    A = matmul(make_a(y1, p), make_a(y2, p))
    assert close(A, make_a(y1 + y2, p))


@given(st.fractions(min_value=0, max_value=3, max_denominator=10), st.fractions(min_value=0, max_value=3, max_denominator=10))
def test_flow_composition_g_t(t1, t2):
    w = Weight.of(F(1, 2), F(1, 3), F(1, 6))
    assert close(matmul(make_g_t(t1, w), make_g_t(t2, w)), make_g_t(t1 + t2, w), tol=mpf(10) ** -20)


@given(rationals)
def test_dual_star_of_diagonal_flow(y):
    p = FlowParams3.from_weight(F(1, 64), Weight.of(F(1, 2), F(1, 2)))
    a = make_a(y, p)
    n = len(a)
    expected = diag([1 / a[n - 1 - i][n - 1 - i] for i in range(n)])
    assert close(dual_star(a), expected)
    if all(isinstance(a[i][i], F) for i in range(n)):
        assert det(a) == 1
