"""Constructors for the diagonal flows and unipotent matrices used by the strategy and the nullity experiments.

Entries are exact Fractions whenever the value is rational and mpmath ``mpf``
numbers (at the current ``mp.prec``) otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from mpmath import mp, mpf

from .arith import Weight, as_fraction, rational_pow, sort_weight
from .errors import ConfigError, DimensionMismatch
from .lattice import diag, identity


def real_pow(base: Fraction, e: Fraction):
    """base**e, exact when rational, else an mpf at the working precision."""
    base, e = Fraction(base), Fraction(e)
    if e == 0:
        return Fraction(1)
    exact = rational_pow(base, e)
    if exact is not None:
        return exact
    return mp.power(mpf(base.numerator) / base.denominator, mpf(e.numerator) / e.denominator)


@dataclass(frozen=True)
class FlowParams3:
    """Flow data for the Cantor-game strategy: beta = b^{-(1+w_1)}."""

    beta: Fraction
    weight: Weight  # sorted nonincreasing

    def __post_init__(self):
        beta = as_fraction(self.beta)
        object.__setattr__(self, "beta", beta)
        if not 0 < beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        ws, _, _ = sort_weight(self.weight, strict=True)
        if ws != self.weight:
            raise ConfigError("FlowParams3 expects a sorted weight")

    @classmethod
    def from_weight(cls, beta, w: Weight) -> "FlowParams3":
        ws, _, _ = sort_weight(w, strict=True)
        return cls(as_fraction(beta), ws)

    @property
    def d(self) -> int:
        return self.weight.d

    @property
    def t(self) -> int:
        return sort_weight(self.weight)[2]

    @property
    def w1(self) -> Fraction:
        return self.weight[0]

    def b_exp(self) -> Fraction:
        """b = beta ** b_exp()."""
        return Fraction(-1) / (1 + self.w1)

    def b(self):
        return real_pow(self.beta, self.b_exp())

    def b_pow(self, y) -> object:
        """b**y as a power of beta."""
        return real_pow(self.beta, self.b_exp() * as_fraction(y))


def a_exponents(y, params: FlowParams3) -> list[Fraction]:
    """Exponents e with a_y = diag(beta**e)."""
    y = as_fraction(y)
    be = params.b_exp()
    return [be * y] + [-be * wi * y for wi in params.weight]


def d_exponents(y, params: FlowParams3) -> list[Fraction]:
    y = as_fraction(y)
    d, t = params.d, params.t
    first = Fraction(t) * y / (d + 1)
    mid = -Fraction(d + 1 - t) * y / (d + 1)
    return [first] + [mid] * t + [first] * (d - t)


def make_a(y, params: FlowParams3):
    """diag(b^y, b^{-w_1 y}, ..., b^{-w_d y})."""
    return diag([real_pow(params.beta, e) for e in a_exponents(y, params)])


def make_d(y, params: FlowParams3):
    """diag(beta^{ty/(d+1)}, beta^{-(d+1-t)y/(d+1)} (t times), beta^{ty/(d+1)} (d-t times))."""
    return diag([real_pow(params.beta, e) for e in d_exponents(y, params)])


def make_u(x: Sequence) -> list:
    """[[1, x^T], [0, I_d]]."""
    x = [as_fraction(v) if not isinstance(v, mpf) else v for v in x]
    d = len(x)
    M = identity(d + 1)
    for j, v in enumerate(x):
        M[0][j + 1] = v
    return M


def make_g_t(t, w: Weight | Sequence):
    """diag(e^{w_n t}, ..., e^{w_1 t}, e^{-t})."""
    entries = list(w)
    t = as_fraction(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return identity(len(entries) + 1)
    tm = mpf(t.numerator) / t.denominator
    diag_entries = [mp.exp(mpf(wi.numerator) / wi.denominator * tm) for wi in reversed(entries)]
    diag_entries.append(mp.exp(-tm))
    return diag(diag_entries)


def make_g_ck(c, k: int, d: int, m: int):
    """diag(c^{-1}k (m times), c^{(m+1)/d} k^{-m/d} (d times), c^{-1})."""
    c = as_fraction(c)
    if m < 1 or d < 1:
        raise ValueError("make_g_ck needs m >= 1 and d >= 1")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be a positive integer")
    mid_c = real_pow(c, Fraction(m + 1, d))
    mid_k = real_pow(Fraction(k), Fraction(-m, d))
    mid = mid_c * mid_k
    return diag([k / c] * m + [mid] * d + [1 / c])


@dataclass(frozen=True)
class CurveFrame:
    """Value, Jacobian and h = f - J x^T of a map x -> (x, f(x)) at one point."""

    x: tuple
    f: tuple
    J: tuple  # m rows of d entries

    def __post_init__(self):
        if len(self.J) != len(self.f) or any(len(r) != len(self.x) for r in self.J):
            raise DimensionMismatch("Jacobian shape does not match (m, d)")

    @property
    def d(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.f)

    @property
    def h(self) -> tuple:
        return tuple(fi - sum(Jij * xj for Jij, xj in zip(row, self.x)) for fi, row in zip(self.f, self.J))


def _u1_blocks(frame: CurveFrame, with_shift: bool):
    d, m = frame.d, frame.m
    n = d + m
    M = identity(n + 1)
    # top-middle block: -sigma_m J sigma_d
    for i in range(m):
        for j in range(d):
            M[i][m + j] = -frame.J[m - 1 - i][d - 1 - j]
    h = frame.h
    for i in range(m):
        M[i][n] = h[m - 1 - i] if with_shift else Fraction(0)
    for j in range(d):
        M[m + j][n] = frame.x[d - 1 - j]
    return M


def make_u1(frame: CurveFrame):
    return _u1_blocks(frame, True)


def make_u1_tilde(frame: CurveFrame):
    """u_1 with the top block of the last column set to zero."""
    M = _u1_blocks(frame, True)
    for i in range(frame.m):
        M[i][frame.d + frame.m] = Fraction(0)
    return M


def u1_star_expected(frame: CurveFrame):
    """[[1, -x, -f], [0, I_d, J], [0, 0, I_m]]."""
    d, m = frame.d, frame.m
    n = d + m
    M = identity(n + 1)
    for j in range(d):
        M[0][1 + j] = -frame.x[j]
    for i in range(m):
        M[0][1 + d + i] = -frame.f[i]
    for j in range(d):
        for i in range(m):
            M[1 + j][1 + d + i] = frame.J[i][j]
    return M
