"""Self-similar supports with regularity and decay constants, plus exact ball queries.

All supports live in [0, 1]^d and balls are max-norm balls (axis-parallel boxes).
A one-dimensional self-similar set with base B and digit set D is
K = {sum_k d_k B^{-k} : d_k in D}; the products below use the same K on every axis.
The digit sets always contain 0 and B-1, so every level-k interval has its two
endpoints in K.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import iv

from .arith import Rectangle, as_fraction
from .errors import UnsupportedKind

KINDS = ("full-cube", "cantor-product", "missing-digit-product")


@dataclass(frozen=True)
class Constants:
    """Regularity exponent/constant and decay exponent/constant, valid for radii <= r0."""

    alpha: float
    A: Fraction
    delta: Fraction
    D: Fraction
    r0: Fraction

    def as_tuple(self):
        return (self.alpha, self.A, self.delta, self.D, self.r0)


@dataclass(frozen=True)
class Support:
    kind: str
    d: int
    base: int = 1
    digits: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKind(f"unknown support kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.kind != "full-cube":
            if self.base < 2 or not self.digits or 0 not in self.digits or self.base - 1 not in self.digits:
                raise ValueError("digit set must contain 0 and base-1")

    @classmethod
    def full_cube(cls, d: int) -> "Support":
        return cls("full-cube", d)

    @classmethod
    def cantor(cls, d: int) -> "Support":
        return cls("cantor-product", d, 3, (0, 2))

    @classmethod
    def missing_digit(cls, d: int, base: int = 5, digits=(0, 2, 4)) -> "Support":
        return cls("missing-digit-product", d, base, tuple(digits))

    @classmethod
    def from_json(cls, obj: dict) -> "Support":
        kind, d = obj["kind"], int(obj["d"])
        if kind == "full-cube":
            return cls.full_cube(d)
        if kind == "cantor-product":
            return cls.cantor(d)
        if kind == "missing-digit-product":
            return cls.missing_digit(d, int(obj.get("base", 5)), tuple(obj.get("digits", (0, 2, 4))))
        raise UnsupportedKind(f"unknown support kind {kind!r}")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "d": self.d}
        if self.kind == "missing-digit-product":
            out.update(base=self.base, digits=list(self.digits))
        return out

    # -- exponents -------------------------------------------------------

    @property
    def self_similar(self) -> bool:
        return self.kind != "full-cube"

    @property
    def alpha1(self) -> float:
        if not self.self_similar:
            return 1.0
        return math.log(len(self.digits)) / math.log(self.base)

    @property
    def alpha(self) -> float:
        return self.d * self.alpha1

    def alpha1_interval(self):
        if not self.self_similar:
            return iv.mpf(1)
        return iv.log(iv.mpf(len(self.digits))) / iv.log(iv.mpf(self.base))

    def alpha_interval(self):
        return self.d * self.alpha1_interval()

    # -- one-dimensional queries -------------------------------------------

    def _meets_1d(self, a: Fraction, b: Fraction, a_open: bool = False, b_open: bool = False) -> Fraction | None:
        """A point of K in the interval from a to b (either end may be open), or None."""

        def inside(y):
            return (a < y or (y == a and not a_open)) and (y < b or (y == b and not b_open))

        if b < a or (a == b and (a_open or b_open)):
            return None
        if b < 0 or a > 1:
            return None
        if not self.self_similar:
            lo, hi = max(a, Fraction(0)), min(b, Fraction(1))
            if lo > hi:
                return None
            mid = (lo + hi) / 2
            return mid if inside(mid) else (lo if inside(lo) else None)
        if a == b:
            return a if self._contains_1d(a) else None
        stack = [(Fraction(0), Fraction(1))]
        while stack:
            lo, size = stack.pop()
            hi = lo + size
            # skip cells that meet the interval in at most an excluded endpoint
            if hi < a or (hi == a and a_open) or lo > b or (lo == b and b_open):
                continue
            if inside(lo):
                return lo
            if inside(hi):
                return hi
            sub = size / self.base
            for dg in sorted(self.digits, reverse=True):
                stack.append((lo + dg * sub, sub))
        return None

    def _contains_1d(self, x: Fraction) -> bool:
        if x < 0 or x > 1:
            return False
        if not self.self_similar:
            return True
        # x is in K iff some base-B expansion uses only allowed digits.  The
        # shifts of a rational form a finite graph; keep the nodes that admit an
        # infinite path (0 and 1 loop on themselves).
        succ: dict[Fraction, list[Fraction]] = {}
        stack = [x]
        while stack:
            y = stack.pop()
            if y in succ:
                continue
            z = y * self.base
            k = math.floor(z)
            opts = [k] if z != k else [k, k - 1]
            succ[y] = [z - dg for dg in opts if dg in self.digits and 0 <= z - dg <= 1]
            stack.extend(succ[y])
        alive = set(succ)
        changed = True
        while changed:
            changed = False
            for y in list(alive):
                if not any(n in alive for n in succ[y]):
                    alive.discard(y)
                    changed = True
        return x in alive

    def contains_point(self, x: Sequence) -> bool:
        return all(self._contains_1d(as_fraction(v)) for v in x)

    def witness_point(self, box: Rectangle) -> tuple[Fraction, ...] | None:
        """A point of the support inside the closed box, or None."""
        out = []
        for a, b in zip(box.lo, box.hi):
            p = self._meets_1d(a, b)
            if p is None:
                return None
            out.append(p)
        return tuple(out)

    def intersects_box(self, box: Rectangle) -> bool:
        return self.witness_point(box) is not None

    def intersects_ball(self, center: Sequence, r) -> bool:
        r = as_fraction(r)
        if r <= 0:
            raise ValueError("radius must be positive")
        return self.intersects_box(Rectangle.ball(center, r))

    # -- nets and sampling -----------------------------------------------

    def net_1d(self, a: Fraction, b: Fraction, h: Fraction) -> list[Fraction]:
        """Points of K in [a, b] on the support's grid at pitch <= h."""
        if b < a:
            return []
        if not self.self_similar:
            lo, hi = max(a, Fraction(0)), min(b, Fraction(1))
            if lo > hi:
                return []
            k = math.floor((hi - lo) / h)
            return [lo + j * h for j in range(k + 1)]
        level = 0
        size = Fraction(1)
        while size > h:
            size /= self.base
            level += 1
        pts = set()
        stack = [(Fraction(0), Fraction(1))]
        while stack:
            lo, sz = stack.pop()
            hi = lo + sz
            if hi < a or lo > b:
                continue
            if sz <= size:
                for p in (lo, hi):
                    if a <= p <= b:
                        pts.add(p)
                continue
            sub = sz / self.base
            for dg in self.digits:
                stack.append((lo + dg * sub, sub))
        return sorted(pts)

    def sample_point(self, rng: random.Random, depth: int = 40) -> tuple[Fraction, ...]:
        """A random point of the support, distributed by the natural measure to the given depth."""
        out = []
        for _ in range(self.d):
            if not self.self_similar:
                out.append(Fraction(rng.getrandbits(depth), 1 << depth))
                continue
            x = Fraction(0)
            scale = Fraction(1)
            for _ in range(depth):
                scale /= self.base
                x += rng.choice(self.digits) * scale
            out.append(x)
        return tuple(out)

    def sample_in_box(self, rng: random.Random, box: Rectangle, depth: int = 40) -> tuple[Fraction, ...] | None:
        """A random point of the support inside the box, or None if they are disjoint."""
        out = []
        for a, b in zip(box.lo, box.hi):
            if self._meets_1d(a, b) is None:
                return None
            if not self.self_similar:
                lo, hi = max(a, Fraction(0)), min(b, Fraction(1))
                out.append(lo + (hi - lo) * Fraction(rng.getrandbits(depth), 1 << depth))
                continue
            lo, size = Fraction(0), Fraction(1)
            for _ in range(depth):
                sub = size / self.base
                kids = [lo + dg * sub for dg in self.digits
                        if self._meets_1d(max(a, lo + dg * sub), min(b, lo + dg * sub + sub)) is not None]
                if not kids:
                    break
                lo, size = rng.choice(kids), sub
            p = self._meets_1d(max(a, lo), min(b, lo + size))
            out.append(p)
        return tuple(out)

    def measure_interval(self, a: Fraction, b: Fraction, depth: int = 30) -> tuple[Fraction, Fraction]:
        """Lower/upper bounds on the natural measure of [a, b] (one axis)."""
        if not self.self_similar:
            lo, hi = max(a, Fraction(0)), min(b, Fraction(1))
            m = max(hi - lo, Fraction(0))
            return m, m
        N = len(self.digits)
        lo_sum, hi_sum = Fraction(0), Fraction(0)
        stack = [(Fraction(0), Fraction(1), Fraction(1), 0)]
        while stack:
            lo, sz, mass, lev = stack.pop()
            hi = lo + sz
            if hi < a or lo > b:
                continue
            if a <= lo and hi <= b:
                lo_sum += mass
                hi_sum += mass
                continue
            if lev >= depth:
                hi_sum += mass
                continue
            sub = sz / self.base
            for dg in self.digits:
                stack.append((lo + dg * sub, sub, mass / N, lev + 1))
        return lo_sum, hi_sum

    def measure_box(self, box: Rectangle, depth: int = 30) -> tuple[Fraction, Fraction]:
        lo, hi = Fraction(1), Fraction(1)
        for a, b in zip(box.lo, box.hi):
            l1, h1 = self.measure_interval(a, b, depth)
            lo *= l1
            hi *= h1
        return lo, hi


def _round_up(x: float, den: int = 10**6) -> Fraction:
    return Fraction(math.ceil(x * den) + 1, den)


def _round_down(x: float, den: int = 10**6) -> Fraction:
    return Fraction(math.floor(x * den) - 1, den)


def builtin_constants(kind: str, d: int = 1) -> Constants:
    """(alpha, A, delta, D, r0) for the natural measure on a built-in support.

    Balls are max-norm balls of radius rho <= r0 = 1/2 centred on the support.
    Cube: rho^d <= mu <= (2 rho)^d; a slab of half-width r' meets a box of side
    2r in volume <= sqrt(2) 2r' (2r)^{d-1} (maximal cube sections have area
    sqrt(2)), so D = 2^{d+1} with delta = 1.
    Self-similar axis (base B, N digits, a1 = log N / log B): a ball contains
    the level-k cell with B^{-k} <= rho, and an interval of length <= B^{-j}
    meets at most two level-j cells, so mu lies in [rho^a1 / N, 2 (2B)^a1 rho^a1].
    Products multiply the constants.  The decay bound for a hyperplane normal to
    a coordinate axis follows from the one-dimensional bound with delta = a1
    and D = A1^2; for oblique hyperplanes the shipped D = A1^(2d) 2^d is only
    spot-checked by sampling.  A and D are rounded up and delta is rounded down
    to rationals, which keeps both inequalities valid.
    """
    if kind == "full-cube":
        return Constants(float(d), Fraction(2 ** d), Fraction(1), Fraction(2 ** (d + 1)), Fraction(1, 2))
    if kind == "cantor-product":
        sup = Support.cantor(d)
    elif kind == "missing-digit-product":
        sup = Support.missing_digit(d)
    else:
        raise UnsupportedKind(f"unknown support kind {kind!r}")
    return support_constants(sup)


def support_constants(sup: Support) -> Constants:
    if not sup.self_similar:
        return builtin_constants("full-cube", sup.d)
    a1 = sup.alpha1
    N, B = len(sup.digits), sup.base
    A1 = max(float(N), 2.0 * (2 * B) ** a1)
    d = sup.d
    D = A1 ** 2 if d == 1 else A1 ** (2 * d) * 2 ** d
    return Constants(d * a1, _round_up(A1 ** d), _round_down(a1), _round_up(D), Fraction(1, 2))


def box_count_dimension(sup: Support, levels: Iterable[int] = range(2, 8)) -> float:
    """Least-squares slope of log N(eps) against log(1/eps) on one axis (an independent check of alpha1)."""
    import numpy as np

    xs, ys = [], []
    for k in levels:
        eps = Fraction(1, sup.base ** k) if sup.self_similar else Fraction(1, 2 ** k)
        n_boxes = 0
        cells = int(1 / eps)
        for j in range(cells):
            if sup._meets_1d(j * eps + eps / 4, (j + 1) * eps - eps / 4) is not None:
                n_boxes += 1
        xs.append(math.log(1 / float(eps)))
        ys.append(math.log(n_boxes))
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)
