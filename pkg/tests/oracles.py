"""Independent brute-force oracles used to derive and check expected values."""
import itertools
import math
import random
from fractions import Fraction

import numpy as np


def random_unimodular(rng: random.Random, n: int, bound: int = 5, steps: int = 12):
    """Integer matrix with determinant +-1 and entries bounded by ``bound``, from elementary moves."""
    while True:
        M = [[int(i == j) for j in range(n)] for i in range(n)]
        for _ in range(steps):
            i, j = rng.sample(range(n), 2)
            k = rng.choice((-2, -1, 1, 2))
            cand = [row[:] for row in M]
            for r in range(n):
                cand[r][i] += k * cand[r][j]
            if max(abs(x) for row in cand for x in row) <= bound:
                M = cand
        if rng.random() < 0.5:
            M[0] = [-x for x in M[0]]
        if any(M[i][j] != int(i == j) for i in range(n) for j in range(n)) or rng.random() < 0.1:
            return M


def random_integer_basis(rng: random.Random, n: int, bound: int = 5):
    while True:
        M = [[rng.randint(-bound, bound) for _ in range(n)] for _ in range(n)]
        if round(np.linalg.det(np.array(M, dtype=float))) != 0:
            return M


def _adjugate_det(B):
    """Integer adjugate and determinant of an integer matrix (via exact cofactors)."""
    n = len(B)

    def det(M):
        if len(M) == 1:
            return M[0][0]
        return sum((-1) ** j * M[0][j] * det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(len(M)))

    D = det(B)
    adj = [[(-1) ** (i + j) * det([r[:i] + r[i + 1:] for k, r in enumerate(B) if k != j]) if n > 1 else 1
            for j in range(n)] for i in range(n)]
    return np.array(adj, dtype=np.int64), D


def lattice_points(B, R2: int):
    """All nonzero v in B Z^n (columns of the integer row-matrix B) with |v|^2 <= R2, by scanning Z^n."""
    n = len(B)
    adj, D = _adjugate_det(B)
    R = math.isqrt(R2)
    grid = np.array(list(itertools.product(range(-R, R + 1), repeat=n)), dtype=np.int64)
    norms = (grid ** 2).sum(axis=1)
    grid = grid[(norms > 0) & (norms <= R2)]
    coeff = grid @ adj.T
    member = np.all(coeff % abs(D) == 0, axis=1)
    return grid[member]


def column_norms2(B):
    return [sum(B[i][j] ** 2 for i in range(len(B))) for j in range(len(B))]


def svp_oracle(B) -> int:
    pts = lattice_points(B, min(column_norms2(B)))
    return int((pts ** 2).sum(axis=1).min())


def minima_oracle(B) -> list[int]:
    """Squared successive minima by greedy independent extraction over all short lattice points."""
    pts = lattice_points(B, max(column_norms2(B)))
    norms = (pts ** 2).sum(axis=1)
    order = np.lexsort((np.arange(len(pts)), norms))
    chosen, out = [], []
    n = len(B)
    for idx in order:
        cand = chosen + [pts[idx].astype(float)]
        if np.linalg.matrix_rank(np.array(cand)) > len(chosen):
            chosen = cand
            out.append(int(norms[idx]))
            if len(out) == n:
                break
    return out


def cf_tail_infimum(a: float, Q: int) -> float:
    """min q |q a|_Z over q in (Q/2, Q] using floats (an independent check, for badly approximable a)."""
    qs = np.arange(Q // 2 + 1, Q + 1, dtype=np.float64)
    v = qs * a
    return float((np.abs(v - np.round(v)) * qs).min())


def golden_convergent_denominators(Q: int) -> list[int]:
    out, a, b = [], 1, 1
    while b <= Q:
        out.append(b)
        a, b = b, a + b
    return out


def simul_solutions(x, Qmax: float, k1d: float, w, slack: float = 1.001) -> list[int]:
    """m < Qmax with |m x_i - p_i| < slack (k1/d) m^{-w_i} for every i (float screen, a superset of exact hits)."""
    m = np.arange(1, max(2, math.ceil(Qmax)), dtype=np.float64)
    m = m[m < Qmax]
    ok = np.ones(len(m), dtype=bool)
    for xi, wi in zip(x, w):
        v = m * float(xi)
        ok &= np.abs(v - np.round(v)) < slack * k1d * m ** (-float(wi)) + 1e-12
    return [int(v) for v in m[ok]]


def dual_solutions(x, Hmax: float, k1: float, w, slack: float = 1.001) -> list[tuple[int, ...]]:
    """Nonzero z with max |z_i|^{1/w_i} < Hmax and |z0 + z.x| H <= slack k1 at H = max(1, |z_i|^{1/w_i})."""
    d = len(x)
    bounds = [math.floor(Hmax ** float(wi)) for wi in w]
    zs = np.array(list(itertools.product(*[range(-B, B + 1) for B in bounds])), dtype=np.float64).reshape(-1, d)
    zs = zs[np.any(zs != 0, axis=1)]
    H = np.ones(len(zs))
    for i, wi in enumerate(w):
        H = np.maximum(H, np.abs(zs[:, i]) ** (1 / float(wi)))
    keep = H < Hmax
    L = zs @ np.array([float(v) for v in x])
    dist = np.abs(L - np.round(L))
    hit = keep & (dist * H <= slack * k1 + 1e-12)
    return [tuple(int(v) for v in z) for z in zs[hit]]
