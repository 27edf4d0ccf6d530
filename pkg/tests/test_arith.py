import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from artifact.arith import (Real, Rectangle, Weight, as_fraction, dist_to_Z, dist_to_Z_interval, fmt_rational,
                            parse_rational, rational_pow, round_half_up, sort_weight)
from artifact.errors import ConfigError, PrecisionExhausted

rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6)


def test_dist_to_Z_examples():
    assert dist_to_Z(F(23, 10)) == F(3, 10)
    assert dist_to_Z(7) == 0
    assert dist_to_Z(F(-1, 2)) == F(1, 2)
    assert dist_to_Z(2.3) == pytest.approx(0.3)


@given(rationals, st.integers(-50, 50))
def test_dist_to_Z_periodic_and_even(x, k):
    assert dist_to_Z(x + k) == dist_to_Z(x)
    assert dist_to_Z(-x) == dist_to_Z(x)
    assert 0 <= dist_to_Z(x) <= F(1, 2)


@given(rationals, st.fractions(min_value=0, max_value=3, max_denominator=1000))
def test_dist_interval_is_minimum(lo, width):
    hi = lo + width
    got = dist_to_Z_interval(lo, hi)
    samples = [lo + width * F(k, 40) for k in range(41)]
    assert got <= min(dist_to_Z(s) for s in samples)
    assert got == 0 or got == min(dist_to_Z(lo), dist_to_Z(hi))


def test_sort_weight_examples():
    ws, perm, t = sort_weight(Weight.of(F(1, 3), F(2, 3)))
    assert tuple(ws) == (F(2, 3), F(1, 3)) and perm == (1, 0) and t == 1
    ws, perm, t = sort_weight(Weight.of(F(1, 2), F(1, 2)))
    assert tuple(ws) == (F(1, 2), F(1, 2)) and perm == (0, 1) and t == 2
    ws, perm, t = sort_weight(Weight.of(F(1, 5), F(1, 2), F(3, 10)))
    assert tuple(ws) == (F(1, 2), F(3, 10), F(1, 5)) and t == 1
    assert [F(1, 5), F(1, 2), F(3, 10)][perm[0]] == F(1, 2)


def test_weight_validation():
    with pytest.raises(ConfigError):
        Weight.of(F(1, 2), F(1, 3))
    with pytest.raises(ConfigError):
        Weight.of(F(3, 2), F(-1, 2))
    with pytest.raises(ConfigError):
        sort_weight(Weight.of(1, 0), strict=True)


@given(st.integers(1, 10 ** 6), st.integers(1, 10 ** 6))
def test_rational_normalization_roundtrip(p, q):
    a = F(p, q)
    b = F(p * 7, q * 7)
    assert a == b
    assert parse_rational(fmt_rational(a)) == a
    assert math.gcd(a.numerator, a.denominator) == 1


def test_rational_pow_and_real():
    assert rational_pow(F(1, 16), F(1, 2)) == F(1, 4)
    assert rational_pow(F(2), F(1, 2)) is None
    r = Real.pow(2, F(1, 2))
    lo, hi = r.bounds()
    assert lo < F(141422, 100000) < F(141421, 100000) + 1 and lo <= hi
    assert r > F(14142, 10000) and r < F(14143, 10000)
    with pytest.raises(PrecisionExhausted):
        (r * r).cmp(F(2))
    assert Real.of(F(1, 3)) < Real.pow(F(1, 2), F(1, 2))


def test_round_half_up_and_parse():
    assert round_half_up(F(1, 2)) == 1 and round_half_up(F(-1, 2)) == 0
    assert as_fraction("3/7") == F(3, 7)
    with pytest.raises(ConfigError):
        parse_rational("x/2")


def test_rectangle_scaling_about_center():
    R = Rectangle((F(0), F(2)), (F(2), F(4)))
    S = R.scaled(F(1, 2))
    assert S.center == R.center and S.half_sides == (F(1, 2), F(1, 2))
    assert R.contains(S) and R.intersects(S)
    assert not Rectangle.ball((F(0),), F(1, 4)).intersects(Rectangle.ball((F(1),), F(1, 4)))
    assert Rectangle.ball((F(0),), F(1, 2)).intersects(Rectangle.ball((F(1),), F(1, 2)))


def test_integer_root_large_inputs():
    from artifact.arith import integer_root
    n = 3 ** 700
    assert integer_root(n, 1) == n
    assert integer_root(n ** 2, 2) == n
    assert integer_root(n * n * n + 1, 3) is None
