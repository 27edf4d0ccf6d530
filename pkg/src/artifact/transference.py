"""Transposed systems of linear forms and an exhaustive witness search."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from mpmath import iv

from .arith import as_fraction, compare, decide, ipow, ival, upper
from .errors import PreconditionViolated, SearchBudgetExceeded, SingularMatrix
from .lattice import det, inverse, short_vectors, transpose


def _exact(x) -> Fraction:
    if isinstance(x, (int, Fraction, str, float)):
        return as_fraction(x)
    # mpf and friends: exact binary value
    from mpmath import mpf

    x = mpf(x)
    return Fraction(int(x.man)) * Fraction(2) ** int(x.exp) if x else Fraction(0)


@dataclass(frozen=True)
class LinearSystem:
    """Forms L_i(u) = sum_j M[i][j] u_j with bounds |L_i| <= T_i.

    Bounds are rationals or callables returning an interval at the current precision.
    """

    M: tuple
    T: tuple

    def __post_init__(self):
        M = tuple(tuple(_exact(x) for x in row) for row in self.M)
        object.__setattr__(self, "M", M)
        T = tuple(t if callable(t) else _exact(t) for t in self.T)
        object.__setattr__(self, "T", T)
        n1 = len(M)
        if n1 < 2 or any(len(r) != n1 for r in M) or len(T) != n1:
            raise ValueError("need a square system of at least two forms with matching bounds")
        if any(not callable(t) and t <= 0 for t in T):
            raise ValueError("bounds must be positive")
        if det([list(r) for r in M]) == 0:
            raise SingularMatrix("forms are linearly dependent")

    @property
    def n(self) -> int:
        return len(self.M) - 1

    @property
    def det(self) -> Fraction:
        return det([list(r) for r in self.M])

    def forms(self, u: Sequence[int]) -> list[Fraction]:
        return [sum((a * int(b) for a, b in zip(row, u)), Fraction(0)) for row in self.M]

    def bound(self, i: int):
        t = self.T[i]
        return t() if callable(t) else ival(t)

    def satisfied_by(self, u: Sequence[int]) -> bool:
        vals = self.forms(u)

        def step():
            out = True
            for i, v in enumerate(vals):
                t = self.T[i]
                if not callable(t):
                    if abs(v) > t:
                        return False
                    continue
                c = compare(ival(abs(v)), t())
                if c is None:
                    out = None
                elif c > 0:
                    return False
            return out

        return decide(step)


def iota(S: LinearSystem):
    """iota with iota^n = prod T_i / |det|; exact when rational, else an interval."""
    Ts = S.T
    if all(not callable(t) for t in Ts):
        prod = Fraction(1)
        for t in Ts:
            prod *= t
        return ipow(prod / abs(S.det), Fraction(1, S.n))
    prod = iv.mpf(1)
    for i in range(S.n + 1):
        prod = prod * S.bound(i)
    return iv.exp(iv.log(prod / abs(ival(S.det))) / S.n)


def _iota_exact(S: LinearSystem) -> Fraction | None:
    from .arith import rational_pow

    if any(callable(t) for t in S.T):
        return None
    prod = Fraction(1)
    for t in S.T:
        prod *= t
    return rational_pow(prod / abs(S.det), Fraction(1, S.n))


def transpose_system(S: LinearSystem) -> LinearSystem:
    """System with coefficient matrix M^{-T} and bounds (n iota/T_0, iota/T_1, ...)."""
    Mp = transpose(inverse([list(r) for r in S.M]))
    n = S.n
    ex = _iota_exact(S)
    if ex is not None:
        Tp = [n * ex / S.T[0]] + [ex / t for t in S.T[1:]]
    else:
        def mk(i):
            def f():
                io = iota(S)
                return (n * io if i == 0 else io) / S.bound(i)
            return f
        Tp = [mk(i) for i in range(n + 1)]
    return LinearSystem(tuple(tuple(r) for r in Mp), tuple(Tp))


@dataclass
class CounterexampleReport:
    system: LinearSystem
    u: tuple[int, ...]
    radius: tuple[int, ...]
    searched: int
    note: str = "no transposed witness inside the certified box"


def certified_radius(S: LinearSystem, Sp: LinearSystem) -> tuple[int, ...]:
    """Coefficient box that must contain every transposed witness.

    v = M^T L'(v), so |v_j| <= sum_i |M_ij| T'_i; the box is doubled for slack.
    """
    out = []
    for j in range(S.n + 1):
        tot = Fraction(0)
        for i in range(S.n + 1):
            tot += abs(S.M[i][j]) * upper(Sp.bound(i)) if callable(Sp.T[i]) else abs(S.M[i][j]) * Sp.T[i]
        out.append(math.floor(2 * tot))
    return tuple(out)


def verify_transference(S: LinearSystem, u: Sequence[int], radius: Sequence[int] | None = None,
                        max_candidates: int = 200_000):
    """Find a nonzero integer v meeting the transposed bounds, given u meeting the original ones."""
    u = tuple(int(x) for x in u)
    if not any(u):
        raise PreconditionViolated("u must be nonzero")
    if not S.satisfied_by(u):
        raise PreconditionViolated("u does not satisfy the original system")
    Sp = transpose_system(S)
    cert = certified_radius(S, Sp)
    rad = tuple(radius) if radius is not None else cert
    # enumerate lattice points of M' Z^{n+1} inside the scaled box via an enclosing ellipsoid
    scale = [1 / (upper(Sp.bound(i)) if callable(Sp.T[i]) else Sp.T[i]) for i in range(S.n + 1)]
    basis = [[scale[i] * x for x in row] for i, row in enumerate(Sp.M)]
    cands = short_vectors(basis, Fraction(S.n + 1))
    if len(cands) > max_candidates:
        raise SearchBudgetExceeded(f"{len(cands)} candidates exceed the budget {max_candidates}")
    good = []
    for _, v in cands:
        if any(abs(x) > r for x, r in zip(v, rad)):
            continue
        if Sp.satisfied_by(v):
            good.append(v)
    if good:
        good.sort(key=lambda v: (max(abs(x) for x in v), sum(abs(x) for x in v), tuple(-x for x in v)))
        return good[0]
    if any(r < c for r, c in zip(rad, cert)):
        raise SearchBudgetExceeded(f"no witness within radius {rad}; certified radius is {cert}")
    return CounterexampleReport(S, u, rad, len(cands))
