"""Lattices given by column bases: reduction, enumeration, minima, duals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from mpmath import mp, mpf

from .arith import DEFAULT_PREC, PREC_CAP, ival, lower, precision, upper
from .errors import DimensionTooLarge, PrecisionExhausted, SingularMatrix

Matrix = list  # list of rows

MAX_SVP_DIM = 12
MAX_MINIMA_DIM = 8


# ---------------------------------------------------------------------------
# small dense linear algebra over Fractions (or mpf)


def is_exact(M) -> bool:
    return all(isinstance(x, (int, Fraction)) for row in M for x in row)


def to_fraction_matrix(M) -> Matrix:
    return [[Fraction(x) for x in row] for row in M]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def diag(entries) -> Matrix:
    n = len(entries)
    zero = Fraction(0) if all(isinstance(e, (int, Fraction)) for e in entries) else mpf(0)
    return [[entries[i] if i == j else zero for j in range(n)] for i in range(n)]


def transpose(M) -> Matrix:
    return [list(col) for col in zip(*M)]


def matmul(A, B) -> Matrix:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A, v) -> list:
    return [sum((a * b for a, b in zip(row, v)), start=0) for row in A]


def det(M) -> Fraction:
    """Determinant by exact Gaussian elimination (or mpf for real input)."""
    A = [list(r) for r in M]
    n = len(A)
    sign, out = 1, 1
    for k in range(n):
        piv = next((i for i in range(k, n) if A[i][k] != 0), None)
        if piv is None:
            return A[0][0] * 0
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        out = out * A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            if f:
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    return sign * out


def inverse(M) -> Matrix:
    n = len(M)
    exact = is_exact(M)
    one = Fraction(1) if exact else mpf(1)
    zero = one * 0
    A = [list(map(Fraction, r)) if exact else [_to_mpf(x) for x in r] for r in M]
    I = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(A[i][k]))
        if A[piv][k] == 0:
            raise SingularMatrix("matrix is singular")
        A[k], A[piv] = A[piv], A[k]
        I[k], I[piv] = I[piv], I[k]
        p = A[k][k]
        A[k] = [a / p for a in A[k]]
        I[k] = [a / p for a in I[k]]
        for i in range(n):
            if i != k and A[i][k] != 0:
                f = A[i][k]
                A[i] = [a - f * b for a, b in zip(A[i], A[k])]
                I[i] = [a - f * b for a, b in zip(I[i], I[k])]
    return I


def _to_mpf(x):
    if isinstance(x, (int, Fraction)):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def antidiagonal(n: int) -> Matrix:
    return [[Fraction(int(i + j == n - 1)) for j in range(n)] for i in range(n)]


def dual_star(g) -> Matrix:
    """sigma (g^T)^{-1} sigma with sigma the antidiagonal permutation."""
    n = len(g)
    inv_t = transpose(inverse(g))
    # conjugating by the antidiagonal permutation reverses rows and columns
    return [[inv_t[n - 1 - i][n - 1 - j] for j in range(n)] for i in range(n)]


def dual_basis(B) -> Matrix:
    """Basis of the dual lattice {y : <y, x> in Z for x in L}."""
    return transpose(inverse(B))


def rank(vectors: Sequence[Sequence[int]]) -> int:
    rows = [list(map(Fraction, v)) for v in vectors]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


# ---------------------------------------------------------------------------
# reduction and enumeration


def _columns(B):
    return [list(col) for col in zip(*B)]


def _dot(u, v):
    s = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        s += a * b
    return s


def _gso(cols):
    n = len(cols)
    bstar, Bn = [], []
    mu = [[0] * n for _ in range(n)]
    for i in range(n):
        v = list(cols[i])
        for j in range(i):
            mu[i][j] = _dot(cols[i], bstar[j]) / Bn[j]
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        Bn.append(_dot(v, v))
    return bstar, Bn, mu


def lll_reduce(B, delta=Fraction(3, 4)):
    """LLL-reduce the column basis; returns (reduced columns, unimodular U) with B U = reduced."""
    cols = _columns(B)
    n = len(cols)
    U = [[int(i == j) for j in range(n)] for i in range(n)]  # U columns track coefficients
    Ucols = _columns(U)
    if not is_exact(B):
        delta = mpf(delta.numerator) / delta.denominator
    k = 1
    bstar, Bn, mu = _gso(cols)
    if any(b == 0 for b in Bn):
        raise SingularMatrix("basis is degenerate")
    while k < n:
        for j in range(k - 1, -1, -1):
            q = _round(mu[k][j])
            if q:
                cols[k] = [a - q * b for a, b in zip(cols[k], cols[j])]
                Ucols[k] = [a - q * b for a, b in zip(Ucols[k], Ucols[j])]
                bstar, Bn, mu = _gso(cols)
        if Bn[k] >= (delta - mu[k][k - 1] ** 2) * Bn[k - 1]:
            k += 1
        else:
            cols[k], cols[k - 1] = cols[k - 1], cols[k]
            Ucols[k], Ucols[k - 1] = Ucols[k - 1], Ucols[k]
            bstar, Bn, mu = _gso(cols)
            k = max(k - 1, 1)
    return cols, Ucols


def _round(x) -> int:
    if isinstance(x, (int, Fraction)):
        return math.floor(Fraction(x) + Fraction(1, 2))
    return int(mp.floor(x + mpf(0.5)))


def _floor(x) -> int:
    return math.floor(x) if isinstance(x, (int, Fraction)) else int(mp.floor(x))


def _enumerate(cols, R2, collect_all: bool, primitive: bool = False):
    """Fincke-Pohst enumeration of c != 0 with |sum c_i b_i|^2 <= R2.

    Returns list of (norm2, coeffs) when collect_all, otherwise shrinks R2 and
    keeps the shortest vectors only.  Sign convention: the last nonzero coefficient
    is positive (one representative of each +-pair).  With ``primitive`` only
    coefficient vectors with gcd 1 are kept.
    """
    n = len(cols)
    _, Bn, mu = _gso(cols)
    exact = all(isinstance(b, Fraction) for b in Bn)
    out = []
    best = [R2]
    c = [0] * n

    def rec(j, partial):
        bound = best[0] - partial
        if bound < 0:
            return
        center = -sum((mu[i][j] * c[i] for i in range(j + 1, n)), start=Fraction(0) if exact else mpf(0))
        radius = math.sqrt(max(float(bound / Bn[j]), 0.0))
        cf = float(center)
        lo, hi = math.floor(cf - radius) - 1, math.ceil(cf + radius) + 1
        # the top-level coefficient is taken nonnegative to skip -v
        top = all(x == 0 for x in c[j + 1:])
        if top:
            lo = max(lo, 0)
        if primitive and j == 0:
            if top:
                lo, hi = max(lo, 1), min(hi, 1)
            g = math.gcd(*c[1:])
        for v in range(lo, hi + 1):
            t = (v - center) ** 2 * Bn[j] + partial
            if t > best[0]:
                continue
            c[j] = v
            if j == 0:
                if any(c) and not (primitive and math.gcd(g, v) != 1):
                    if collect_all:
                        out.append((t, tuple(c)))
                    else:
                        if t < best[0]:
                            out.clear()
                            best[0] = t
                        out.append((t, tuple(c)))
            else:
                rec(j - 1, t)
        c[j] = 0

    rec(n - 1, Fraction(0) if exact else mpf(0))
    return out


def _norm2(cols, coeffs):
    v = None
    for ci, col in zip(coeffs, cols):
        if ci:
            term = [ci * x for x in col]
            v = term if v is None else [a + b for a, b in zip(v, term)]
    return _dot(v, v)


def _canon(coeffs):
    nz = next((x for x in coeffs if x != 0), 0)
    return tuple(-x for x in coeffs) if nz < 0 else tuple(coeffs)


def _prep(B, max_dim):
    n = len(B)
    if n > max_dim:
        raise DimensionTooLarge(f"dimension {n} exceeds {max_dim}")
    if any(len(r) != n for r in B):
        raise ValueError("basis must be square")
    if is_exact(B):
        B = to_fraction_matrix(B)
        if det(B) == 0:
            raise SingularMatrix("basis is singular")
    else:
        B = [[mpf(x) if not isinstance(x, Fraction) else mpf(x.numerator) / x.denominator for x in r] for r in B]
    return B


def _real_slack(R2):
    return R2 * (1 + mpf(2) ** (-(mp.prec // 2)))


def short_vectors(B, R2, primitive: bool = False) -> list[tuple[object, tuple[int, ...]]]:
    """All (norm^2, coeffs) with 0 < |B c|^2 <= R2, one per +-pair, coeffs in the input basis.

    ``primitive`` keeps only coefficient vectors with gcd 1 (unimodular changes
    of basis preserve this, so the filter is applied in the reduced basis).
    """
    B = _prep(B, MAX_SVP_DIM)
    red, U = lll_reduce(B)
    exact = is_exact(B)
    R2 = Fraction(R2) if exact else (_real_slack(mpf(R2)) if not isinstance(R2, Fraction) else _real_slack(mpf(R2.numerator) / R2.denominator))
    found = _enumerate(red, R2, collect_all=True, primitive=primitive)
    res = []
    for t, c in found:
        orig = tuple(sum(U[k][i] * c[k] for k in range(len(c))) for i in range(len(c)))
        res.append((t, _canon(orig)))
    res.sort(key=lambda p: (p[0], tuple(-x for x in p[1])))
    return res


def shortest_vector_sq(B):
    """(exact or mpf squared length, coefficient witness) of a shortest nonzero vector."""
    B = _prep(B, MAX_SVP_DIM)
    red, U = lll_reduce(B)
    R2 = min(_dot(c, c) for c in red)
    if not is_exact(B):
        R2 = _real_slack(R2)
    found = _enumerate(red, R2, collect_all=True)
    best = min(t for t, _ in found)
    if not is_exact(B):
        best_set = [(t, c) for t, c in found if t <= _real_slack(best)]
    else:
        best_set = [(t, c) for t, c in found if t == best]
    cands = []
    for t, c in best_set:
        orig = _canon(tuple(sum(U[k][i] * c[k] for k in range(len(c))) for i in range(len(c))))
        cands.append((t, orig))
    cands.sort(key=lambda p: (p[0] if is_exact(B) else 0, tuple(-x for x in p[1])))
    return best, cands[0][1]


def shortest_vector(B) -> tuple[float, tuple[int, ...]]:
    """(Euclidean length, integer coefficient witness) of a shortest nonzero vector."""
    sq, w = shortest_vector_sq(B)
    if isinstance(sq, Fraction):
        num, den = math.isqrt(sq.numerator), math.isqrt(sq.denominator)
        if num * num == sq.numerator and den * den == sq.denominator:
            return Fraction(num, den), w
        return math.sqrt(sq), w
    return mp.sqrt(sq), w


def in_K_eps(B, eps, prec: int = DEFAULT_PREC) -> bool:
    """True iff every nonzero vector of the lattice has length >= eps.

    ``B`` is a matrix or a callable ``prec -> matrix`` (for irrational entries);
    ``eps`` is a rational or a callable returning an interval at the current
    interval precision.
    """
    p = prec
    while p <= PREC_CAP:
        if callable(B):
            with mp.workprec(p):
                M = B(p)
        else:
            M = B
        exact = is_exact(M)
        if isinstance(eps, (int, Fraction)) and eps <= 0:
            raise ValueError("eps must be positive")
        if exact and isinstance(eps, (int, Fraction)):
            sq, _ = shortest_vector_sq(M)
            return sq >= Fraction(eps) ** 2
        with mp.workprec(p), precision(p):
            sq, _ = shortest_vector_sq(M)
            e2 = ival(Fraction(eps) ** 2) if isinstance(eps, (int, Fraction)) else eps() ** 2
            lo, hi = lower(e2), upper(e2)
            if lo <= 0 and isinstance(eps, (int, Fraction)):
                raise ValueError("eps must be positive")
        if exact:
            if sq >= hi:
                return True
            if sq < lo:
                return False
        else:
            s = _mpf_to_fraction(sq)
            guard = s / 2 ** (p // 2)
            if s - guard >= hi:
                return True
            if s + guard < lo:
                return False
        if not callable(B) and not exact:
            break
        p *= 2
    raise PrecisionExhausted("K_eps membership undecided")


def _mpf_to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    x = mpf(x)
    return Fraction(int(x.man)) * Fraction(2) ** int(x.exp)


@dataclass(frozen=True)
class MinimaProfile:
    lam_sq: tuple
    vectors: tuple[tuple[int, ...], ...]

    @property
    def lam(self) -> tuple[float, ...]:
        return tuple(math.sqrt(float(x)) for x in self.lam_sq)


def _enumerate_outside(cols, k: int, R2):
    """Shortest (norm2, coeffs) among vectors whose coefficients k..n-1 are not all zero.

    Branch and bound: the radius shrinks to the best value found, and the
    subtree with a zero tail (the span of the first k columns) is skipped.
    """
    n = len(cols)
    _, Bn, mu = _gso(cols)
    exact = all(isinstance(b, Fraction) for b in Bn)
    zero = Fraction(0) if exact else mpf(0)
    best = [R2, None]
    c = [0] * n

    def rec(j, partial):
        bound = best[0] - partial
        if bound < 0:
            return
        if j == k - 1 and not any(c[k:]):
            return
        center = -sum((mu[i][j] * c[i] for i in range(j + 1, n)), start=zero)
        radius = math.sqrt(max(float(bound / Bn[j]), 0.0))
        cf = float(center)
        lo, hi = math.floor(cf - radius) - 1, math.ceil(cf + radius) + 1
        if all(x == 0 for x in c[j + 1:]):
            lo = max(lo, 0)
        for v in sorted(range(lo, hi + 1), key=lambda v: abs(v - cf)):
            t = (v - center) ** 2 * Bn[j] + partial
            if t > best[0]:
                continue
            c[j] = v
            if j == 0:
                if any(c[k:]) and (best[1] is None or t < best[0]):
                    best[0], best[1] = t, tuple(c)
            else:
                rec(j - 1, t)
        c[j] = 0

    rec(n - 1, zero)
    return best[0], best[1]


def _complete_unimodular(p: Sequence[int]) -> list[list[int]]:
    """Integer matrix with determinant +-1 whose first column is the primitive vector p."""
    m = len(p)
    A = [[int(i == j) for j in range(m)] for i in range(m)]  # A p = (g, 0, ..., 0) at the end
    v = list(p)
    for i in range(1, m):
        if v[i] == 0:
            continue
        g, a, b = _xgcd(v[0], v[i])
        r0 = [a * x + b * y for x, y in zip(A[0], A[i])]
        ri = [-(v[i] // g) * x + (v[0] // g) * y for x, y in zip(A[0], A[i])]
        A[0], A[i] = r0, ri
        v[0], v[i] = g, 0
    if v[0] == -1:
        A[0] = [-x for x in A[0]]
    inv = inverse([[Fraction(x) for x in row] for row in A])
    return [[int(x) for x in row] for row in inv]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def successive_minima(B) -> MinimaProfile:
    """Successive minima w.r.t. the Euclidean unit ball.

    Greedy over an adapted basis: after i steps the first i columns span the
    chosen vectors, and the next minimum is the shortest vector with a nonzero
    coefficient on the remaining columns.
    """
    B = _prep(B, MAX_MINIMA_DIM)
    n = len(B)
    cols, U = lll_reduce(B)
    R2 = max(_dot(c, c) for c in cols)
    if not is_exact(B):
        R2 = _real_slack(R2)
    lam, vecs = [], []
    for k in range(n):
        t, c = _enumerate_outside(cols, k, R2)
        lam.append(t)
        vecs.append(_canon(tuple(sum(U[j][i] * c[j] for j in range(n)) for i in range(n))))
        tail = list(c[k:])
        g = math.gcd(*tail)
        W = _complete_unimodular([x // g for x in tail])
        m = n - k
        newc = [[sum(W[a][b] * cols[k + a][r] for a in range(m)) for r in range(n)] for b in range(m)]
        newu = [[sum(W[a][b] * U[k + a][r] for a in range(m)) for r in range(n)] for b in range(m)]
        cols = cols[:k] + newc
        U = U[:k] + newu
    return MinimaProfile(tuple(lam), tuple(vecs))
