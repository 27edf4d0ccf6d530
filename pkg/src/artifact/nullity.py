"""Experiments on curves: the exceptional lattice set, shifted-rational approximation hits, the W_delta
sandwich and the fibering map."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from mpmath import mp, mpf

from .arith import Real, Rectangle, Weight, as_fraction, dist_to_Z, rational_pow, round_half_up
from .dynamics import CurveFrame, u1_star_expected
from .errors import PreconditionViolated, SandwichViolated, ZeroFiberCoordinate
from .lattice import in_K_eps

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class Poly:
    """Polynomial in d variables with rational coefficients, {exponents: coefficient}."""

    terms: tuple[tuple[Monomial, Fraction], ...]
    d: int

    @classmethod
    def of(cls, d: int, terms: dict) -> "Poly":
        clean = tuple(sorted((tuple(e), as_fraction(c)) for e, c in terms.items() if c))
        return cls(clean, d)

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms:
            v = c
            for xi, ei in zip(x, e):
                v *= xi ** ei
            total += v
        return total

    def eval_float(self, x: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; x has shape (..., d)."""
        total = np.zeros(x.shape[:-1])
        for e, c in self.terms:
            v = np.full(x.shape[:-1], float(c))
            for i, ei in enumerate(e):
                if ei:
                    v = v * x[..., i] ** ei
            total = total + v
        return total

    def partial(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms:
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = out.get(tuple(ne), Fraction(0)) + c * e[i]
        return Poly.of(self.d, out)

    def to_json(self) -> list:
        return [[list(e), f"{c.numerator}/{c.denominator}"] for e, c in self.terms]


@dataclass(frozen=True)
class Curve:
    """The map x -> (x, f_1(x), ..., f_m(x)) on a box U, with a derivative bound M."""

    fs: tuple[Poly, ...]
    U: Rectangle
    M: Fraction
    l: int = 2

    def __post_init__(self):
        if any(f.d != self.U.dim for f in self.fs):
            raise PreconditionViolated("coordinate functions must take d variables")
        if not self.fs:
            raise PreconditionViolated("need at least one coordinate function")

    @classmethod
    def parabola(cls, lo=0, hi=1) -> "Curve":
        lo, hi = as_fraction(lo), as_fraction(hi)
        M = max(Fraction(2), 2 * abs(lo), 2 * abs(hi))
        return cls((Poly.of(1, {(2,): 1}),), Rectangle((lo,), (hi,)), M, 2)

    @classmethod
    def moment(cls, m: int, lo=0, hi=1) -> "Curve":
        """(x, x^2, ..., x^{m+1})."""
        lo, hi = as_fraction(lo), as_fraction(hi)
        R = max(abs(lo), abs(hi), Fraction(1))
        fs = tuple(Poly.of(1, {(k,): 1}) for k in range(2, m + 2))
        M = max(Fraction(k * (k - 1)) * R ** max(k - 2, 0) for k in range(2, m + 2)) * max(R, 1)
        return cls(fs, Rectangle((lo,), (hi,)), M, m + 1)

    @property
    def d(self) -> int:
        return self.U.dim

    @property
    def m(self) -> int:
        return len(self.fs)

    @property
    def n(self) -> int:
        return self.d + self.m

    def point(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        x = tuple(as_fraction(v) for v in x)
        return x + tuple(f(x) for f in self.fs)

    def jacobian(self, x: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(f.partial(i)(x) for i in range(self.d)) for f in self.fs)

    def frame(self, x: Sequence[Fraction]) -> CurveFrame:
        x = tuple(as_fraction(v) for v in x)
        return CurveFrame(x, tuple(f(x) for f in self.fs), self.jacobian(x))

    def check_bound(self, samples: int = 64) -> bool:
        """Sampled check of max |d_i f_k|, |d_ij f_k| <= M on U."""
        grid = [self.U.lo[0] + (self.U.hi[0] - self.U.lo[0]) * Fraction(k, samples - 1) for k in range(samples)]
        pts = [(g,) + tuple(self.U.center[1:]) for g in grid]
        for f in self.fs:
            ders = [f.partial(i) for i in range(self.d)]
            ders += [f.partial(i).partial(j) for i in range(self.d) for j in range(self.d)]
            if any(abs(p(x)) > self.M for p in ders for x in pts):
                return False
        return True

    def to_json(self) -> dict:
        return {"fs": [f.to_json() for f in self.fs], "U": [[str(v) for v in self.U.lo], [str(v) for v in self.U.hi]],
                "M": str(self.M), "l": self.l}


def check_weight(curve: Curve, w: Weight) -> None:
    """w has n entries and its first d entries equal max w."""
    if w.d != curve.n:
        raise PreconditionViolated(f"weight must have {curve.n} entries")
    wmax = max(w)
    if any(w[i] != wmax for i in range(curve.d)):
        raise PreconditionViolated("the first d weights must all equal the largest weight")


# ---------------------------------------------------------------------------
# exceptional set


def e_set_basis(x, t, k: int, c, curve: Curve, w: Weight):
    """Columns of g*_{c,k} g*_t u_1(x)* at the current mpmath precision."""
    d, m, n = curve.d, curve.m, curve.n
    c, t = as_fraction(c), as_fraction(t)
    U = u1_star_expected(curve.frame(x))
    cf = mpf(c.numerator) / c.denominator
    tf = mpf(t.numerator) / t.denominator
    mid = cf ** (-mpf(m + 1) / d) * mpf(k) ** (mpf(m) / d)
    gck = [cf] + [mid] * d + [cf / k] * m
    gt = [mp.exp(tf)] + [mp.exp(-mpf(wi.numerator) / wi.denominator * tf) for wi in w]
    rows = []
    for i in range(n + 1):
        s = gck[i] * gt[i]
        rows.append([s * (mpf(v.numerator) / v.denominator) for v in U[i]])
    return rows


def in_E(x, t, k: int, c, curve: Curve, w: Weight) -> bool:
    """lambda_1(g*_{c,k} g*_t u_1(x)* Z^{n+1}) < c, decided with growing precision."""
    check_weight(curve, w)
    c = as_fraction(c)
    if not 0 < c < 1:
        raise PreconditionViolated("c must lie in (0, 1)")
    if k < 1:
        raise PreconditionViolated("k must be a positive integer")
    x = tuple(as_fraction(v) for v in x)
    exact = _exact_basis(x, t, k, c, curve)
    if exact is not None:
        return not in_K_eps(exact, c)
    return not in_K_eps(lambda p: e_set_basis(x, t, k, c, curve, w), c)


def _exact_basis(x, t, k: int, c: Fraction, curve: Curve):
    """The rational matrix at t = 0 when c^{-(m+1)/d} k^{m/d} is rational, else None."""
    if as_fraction(t) != 0:
        return None
    d, m = curve.d, curve.m
    a = rational_pow(c, Fraction(-(m + 1), d))
    b = rational_pow(Fraction(k), Fraction(m, d))
    if a is None or b is None:
        return None
    g = [c] + [a * b] * d + [c / k] * m
    U = u1_star_expected(curve.frame(x))
    return [[g[i] * Fraction(v) for v in U[i]] for i in range(curve.n + 1)]


@dataclass
class MeasureEstimate:
    fraction: float
    lo: float
    hi: float
    samples: int
    hits: int

    def to_json(self) -> dict:
        return {"fraction": self.fraction, "ci95": [self.lo, self.hi], "samples": self.samples, "hits": self.hits}


def wilson(hits: int, n: int, z: float = 1.96) -> tuple[float, float]:
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def sample_box(rng: random.Random, box: Rectangle, bits: int = 40) -> tuple[Fraction, ...]:
    return tuple(lo + (hi - lo) * Fraction(rng.getrandbits(bits), 2 ** bits) for lo, hi in zip(box.lo, box.hi))


def estimate_E_measure(curve: Curve, k: int, c, t, sample_count: int, w: Weight, seed: int = 0,
                       box: Rectangle | None = None) -> MeasureEstimate:
    """Monte Carlo fraction of x in the box with in_E true, with a Wilson 95% interval."""
    if sample_count < 100:
        raise PreconditionViolated("sample_count must be at least 100")
    rng = random.Random(seed)
    box = curve.U if box is None else box
    hits = sum(in_E(sample_box(rng, box), t, k, c, curve, w) for _ in range(sample_count))
    lo, hi = wilson(hits, sample_count)
    return MeasureEstimate(hits / sample_count, lo, hi, sample_count, hits)


def e_set_exponent(curve: Curve) -> Fraction:
    """The power of c in the measure bound: ((n+1)/d) * alpha/(n+1) with alpha = 1/(d(2l-1))."""
    alpha = Fraction(1, curve.d * (2 * curve.l - 1))
    return Fraction(curve.n + 1, curve.d) * alpha / (curve.n + 1)


# ---------------------------------------------------------------------------
# approximation hits


@dataclass(frozen=True)
class ApproximationHit:
    q: int
    p: tuple[int, ...]
    residual_x: tuple[Fraction, ...]   # q^{w_i+1} |x_i - (p_i+theta_i)/q|
    residual_f: tuple[Fraction, ...]   # q^{w_{d+j}+1} |f_j(y) - (p_{d+j}+theta_{d+j})/q|

    def to_json(self) -> dict:
        return {"q": self.q, "p": list(self.p), "residual_x": [float(v) for v in self.residual_x],
                "residual_f": [float(v) for v in self.residual_f]}


def _qpow(q: int, e: Fraction) -> Real:
    return Real.pow(q, e)


def _exact_hit(x, curve: Curve, theta, w: Weight, d1, d2, q: int, p_head) -> ApproximationHit | None:
    d = curve.d
    y = tuple((pi + ti) / q for pi, ti in zip(p_head, theta[:d]))
    if not curve.U.contains_point(y):
        return None
    rx = []
    for i in range(d):
        r = abs(x[i] - y[i]) * _qpow(q, w[i] + 1)
        if r > d1:
            return None
        rx.append(Fraction(r.bounds()[1]) if not r.is_exact else r.exact)
    p_tail, rf = [], []
    for j, f in enumerate(curve.fs):
        fy = f(y)
        th = theta[d + j]
        pj = round_half_up(q * fy - th)
        r = abs(fy - (pj + th) / q) * _qpow(q, w[d + j] + 1)
        if r > d2:
            return None
        p_tail.append(pj)
        rf.append(r.exact if r.is_exact else Fraction(r.bounds()[1]))
    return ApproximationHit(q, tuple(p_head) + tuple(p_tail), tuple(rx), tuple(rf))


def search_hits(x, curve: Curve, theta, w: Weight, delta1, delta2, Q_max: int,
                slack=1) -> list[ApproximationHit]:
    """Every q <= Q_max (with p by rounding) meeting both inequality groups; float screen, exact confirmation.

    ``slack`` multiplies both delta1 and delta2.
    """
    d1, d2 = as_fraction(delta1) * as_fraction(slack), as_fraction(delta2) * as_fraction(slack)
    if d1 <= 0 or d2 <= 0:
        raise PreconditionViolated("delta1 and delta2 must be positive")
    check_weight(curve, w)
    x = tuple(as_fraction(v) for v in x)
    theta = tuple(as_fraction(v) for v in theta)
    d = curve.d
    q = np.arange(1, Q_max + 1, dtype=np.float64)
    wf = [float(v) for v in w]
    slack = 1 + 1e-9
    ok = np.ones(Q_max, dtype=bool)
    P = []
    Y = []
    for i in range(d):
        xi, ti = float(x[i]), float(theta[i])
        p = np.floor(q * xi - ti + 0.5)
        y = (p + ti) / q
        ok &= np.abs(xi - y) * q ** (wf[i] + 1) <= float(d1) * slack + 1e-12
        ok &= (y >= float(curve.U.lo[i]) - 1e-12) & (y <= float(curve.U.hi[i]) + 1e-12)
        P.append(p)
        Y.append(y)
    Yarr = np.stack(Y, axis=-1)
    for j, f in enumerate(curve.fs):
        fy = f.eval_float(Yarr)
        th = float(theta[d + j])
        pj = np.floor(q * fy - th + 0.5)
        ok &= np.abs(fy - (pj + th) / q) * q ** (wf[d + j] + 1) <= float(d2) * slack + 1e-9
    hits = []
    for idx in np.nonzero(ok)[0]:
        qi = int(idx) + 1
        head = tuple(round_half_up(qi * x[i] - theta[i]) for i in range(d))
        h = _exact_hit(x, curve, theta, w, d1, d2, qi, head)
        if h is not None:
            hits.append(h)
    return hits


# ---------------------------------------------------------------------------
# W_delta sandwich


def sandwich_constant(curve: Curve) -> Fraction:
    M, m, d = curve.M, curve.m, curve.d
    return max(2 * (M * m + 1) + 1, M * d * (1 + d) + 1)


@dataclass
class SandwichResult:
    verdict: str          # deepest set with a witness: "inner", "middle", "outer" or "none"
    inner: int
    middle: int
    outer: int
    boundary_skips: int

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "inner": self.inner, "middle": self.middle, "outer": self.outer,
                "boundary_skips": self.boundary_skips}


def _box_ok(x, y, q: int, w, d, bound: Fraction, strict: bool) -> bool:
    for i in range(d):
        r = Real.of(abs(x[i] - y[i])) * _qpow(q, w[i] + 1)
        if (r >= bound) if strict else (r > bound):
            return False
    return True


def _graph_ok(curve: Curve, pts, p_tail, theta, q: int, w, bound: Fraction, strict: bool) -> bool:
    d = curve.d
    for j, f in enumerate(curve.fs):
        r = Real.of(abs(pts[j] - (p_tail[j] + theta[d + j]) / q)) * _qpow(q, w[d + j] + 1)
        if (r >= bound) if strict else (r > bound):
            return False
    return True


def sandwich_check(x, curve: Curve, theta, w: Weight, delta, Q_max: int) -> SandwichResult:
    """Per (p, q) with q <= Q_max: inner witness => W_delta witness => outer witness.

    Inner: (p, q) in S(delta/2) and |x_i - y_i| < C^-1 (delta/2)/q^{w_i+1};
    middle: |x_i - y_i| < delta/q^{w_i+1} and |f_j(x) - y_{d+j}| <= delta/q^{w_{d+j}+1};
    outer: (p, q) in S(C delta) and |x_i - y_i| < delta/q^{w_i+1}, with y = (p + theta)/q.
    The middle-to-outer step needs y in U; pairs with y outside U are counted as skips.
    """
    check_weight(curve, w)
    delta = as_fraction(delta)
    x = tuple(as_fraction(v) for v in x)
    theta = tuple(as_fraction(v) for v in theta)
    C = sandwich_constant(curve)
    d = curve.d
    fx = tuple(f(x) for f in curve.fs)
    counts = {"inner": 0, "middle": 0, "outer": 0}
    skips = 0
    for q in range(1, Q_max + 1):
        head = tuple(round_half_up(q * x[i] - theta[i]) for i in range(d))
        y = tuple((pi + ti) / q for pi, ti in zip(head, theta[:d]))
        in_U = curve.U.contains_point(y)
        fy = tuple(f(y) for f in curve.fs) if in_U else None
        # the integer p_{d+j} nearest to the relevant value
        tail_mid = tuple(round_half_up(q * fx[j] - theta[d + j]) for j in range(curve.m))
        tail_y = tuple(round_half_up(q * fy[j] - theta[d + j]) for j in range(curve.m)) if in_U else None
        inner = (in_U and _box_ok(x, y, q, w, d, delta / 2 / C, True)
                 and _graph_ok(curve, fy, tail_y, theta, q, w, delta / 2, False))
        middle = _box_ok(x, y, q, w, d, delta, True) and _graph_ok(curve, fx, tail_mid, theta, q, w, delta, False)
        if inner:
            # the same integers must witness the middle set
            if not (_box_ok(x, y, q, w, d, delta, True) and _graph_ok(curve, fx, tail_y, theta, q, w, delta, False)):
                raise SandwichViolated(f"inner witness at q={q} is not a W_delta witness")
        if middle and not in_U:
            skips += 1
            middle_counted = True
        else:
            middle_counted = middle
        outer = in_U and _box_ok(x, y, q, w, d, delta, True) and _graph_ok(curve, fy, tail_mid, theta, q, w,
                                                                          C * delta, False)
        if middle and in_U and not outer:
            raise SandwichViolated(f"W_delta witness at q={q} is not an outer witness")
        counts["inner"] += inner
        counts["middle"] += middle_counted
        counts["outer"] += outer
    verdict = next((k for k in ("inner", "middle", "outer") if counts[k]), "none")
    return SandwichResult(verdict, counts["inner"], counts["middle"], counts["outer"], skips)


# ---------------------------------------------------------------------------
# fibering map


def fiber_map(t, u: Sequence, s: int) -> tuple[Fraction, ...]:
    """phi(t, u) = (t^{1+s^d}, u_2 t^{s+s^d}, ..., u_d t^{s^{d-1}+s^d})."""
    t = as_fraction(t)
    u = tuple(as_fraction(v) for v in u)
    if s < 1:
        raise PreconditionViolated("s must be a positive integer")
    if t == 0 or any(v == 0 for v in u):
        raise ZeroFiberCoordinate("fibering map needs t and every u_i nonzero")
    d = len(u) + 1
    sd = s ** d
    return (t ** (1 + sd),) + tuple(ui * t ** (s ** (i + 1) + sd) for i, ui in enumerate(u))


def fiber_map_inverse(x: Sequence, s: int, negative_t: bool = False):
    """(t, u) with fiber_map(t, u, s) = x, for x with every coordinate nonzero.

    When 1 + s^d is even, t and -t share an image; ``negative_t`` picks the sign.
    Returns Fractions when the root is rational, otherwise a Real for t.
    """
    x = tuple(as_fraction(v) for v in x)
    if any(v == 0 for v in x):
        raise ZeroFiberCoordinate("inverse defined only where every coordinate is nonzero")
    d = len(x)
    sd = s ** d
    e = 1 + sd
    if e % 2 == 0 and x[0] < 0:
        raise PreconditionViolated("first coordinate must be positive when 1 + s^d is even")
    sign = -1 if (x[0] < 0 or (negative_t and e % 2 == 0)) else 1
    root = rational_pow(abs(x[0]), Fraction(1, e))
    if root is not None:
        t = sign * root
        u = tuple(x[i] / t ** (s ** i + sd) for i in range(1, d))
        return t, u
    t = Real.pow(abs(x[0]), Fraction(1, e)) * sign
    u = tuple(Real.of(x[i]) / (t ** (s ** i + sd)) for i in range(1, d))
    return t, u
