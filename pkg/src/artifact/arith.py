"""Exact rational helpers, certified interval comparisons and weight handling."""
from __future__ import annotations

import contextlib
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from mpmath import iv, libmp

from .errors import ConfigError, PrecisionExhausted

DEFAULT_PREC = 128
PREC_CAP = 1024

Number = "int | Fraction | float"

_prec_lock = threading.RLock()


# ---------------------------------------------------------------------------
# rationals


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions, "p/q" strings and decimal strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ConfigError(f"non-finite value {x!r}")
        return Fraction(x)
    raise ConfigError(f"cannot interpret {x!r} as a rational")


def parse_rational(s: str) -> Fraction:
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad rational {s!r}") from exc


def fmt_rational(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def round_half_up(x: Fraction) -> int:
    """Nearest integer, ties rounded up (deterministic for exact input)."""
    return math.floor(x + Fraction(1, 2))


def dist_to_Z(x):
    """Distance from x to the nearest integer, in [0, 1/2]."""
    if isinstance(x, (int, Fraction)):
        r = Fraction(x) - math.floor(x)
        return min(r, 1 - r)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("dist_to_Z needs a finite input")
        r = x - math.floor(x)
        return min(r, 1.0 - r)
    # mpmath scalars
    from mpmath import mp

    r = x - mp.floor(x)
    return min(r, 1 - r)


def dist_to_Z_interval(lo: Fraction, hi: Fraction) -> Fraction:
    """min over y in [lo, hi] of |y|_Z, exact."""
    if hi - lo >= 1 or math.floor(hi) > math.floor(lo) or lo == math.floor(lo):
        return Fraction(0)
    return min(dist_to_Z(lo), dist_to_Z(hi))


def integer_root(n: int, k: int) -> int | None:
    """Exact k-th root of a nonnegative integer, or None."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    if k == 1:
        return n
    # floats are only trusted while the root is well inside the 53-bit mantissa
    r = int(round(n ** (1.0 / k))) if n.bit_length() < 50 else None
    if r is None:
        lo, hi = 0, 1 << (n.bit_length() // k + 1)
        while lo < hi:
            mid = (lo + hi) // 2
            if mid ** k < n:
                lo = mid + 1
            else:
                hi = mid
        r = lo
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def rational_pow(base: Fraction, e: Fraction) -> Fraction | None:
    """base**e when the result is rational (base > 0), else None."""
    base, e = Fraction(base), Fraction(e)
    if base <= 0:
        raise ValueError("rational_pow needs a positive base")
    k = e.denominator
    num = integer_root(base.numerator, k)
    den = integer_root(base.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** e.numerator


# ---------------------------------------------------------------------------
# intervals


@contextlib.contextmanager
def precision(bits: int):
    """Temporarily set the interval working precision (serialized by a lock)."""
    with _prec_lock:
        old = iv.prec
        iv.prec = bits
        try:
            yield
        finally:
            iv.prec = old


def ival(x):
    """Interval enclosing x (int, Fraction, float, or an existing interval)."""
    if isinstance(x, int):
        return iv.mpf(x)
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / x.denominator
    if isinstance(x, float):
        return iv.mpf(x)
    return x


def ipow(base, e):
    """Interval enclosure of base**e for base > 0 and rational or interval e."""
    if isinstance(base, Fraction) and isinstance(e, (int, Fraction)):
        exact = rational_pow(base, Fraction(e))
        if exact is not None:
            return ival(exact)
    if isinstance(e, int):
        return ival(base) ** e
    return iv.exp(ival(e) * iv.log(ival(base)))


def lower(x) -> Fraction:
    """Exact rational lower endpoint of an interval or number."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    p, q = libmp.to_rational(x._mpi_[0])
    return Fraction(int(p), int(q))


def upper(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    p, q = libmp.to_rational(x._mpi_[1])
    return Fraction(int(p), int(q))


def mid_float(x) -> float:
    if isinstance(x, (int, Fraction, float)):
        return float(x)
    return float((lower(x) + upper(x)) / 2)


def compare(a, b) -> int | None:
    """-1, 0, +1 when decided (0 only for exact equal rationals), else None."""
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return (a > b) - (a < b)
    alo, ahi = lower(a), upper(a)
    blo, bhi = lower(b), upper(b)
    if ahi < blo:
        return -1
    if alo > bhi:
        return 1
    return None


def decide(fn: Callable[[], bool | None], prec: int = DEFAULT_PREC, cap: int = PREC_CAP) -> bool:
    """Evaluate fn at doubling precision until it returns a definite bool."""
    p = prec
    while p <= cap:
        with precision(p):
            out = fn()
        if out is not None:
            return bool(out)
        p *= 2
    raise PrecisionExhausted(f"undecided at {cap} bits")


def certified_lt(fa: Callable, fb: Callable, prec: int = DEFAULT_PREC, cap: int = PREC_CAP) -> bool:
    """a < b where fa, fb produce enclosures at the current precision."""

    def step():
        c = compare(fa(), fb())
        if c is None:
            return None
        return c < 0

    return decide(step, prec, cap)


def certified_ceil(fx: Callable, prec: int = DEFAULT_PREC, cap: int = PREC_CAP) -> int:
    def step():
        x = fx()
        lo, hi = lower(x), upper(x)
        a, b = math.ceil(lo), math.ceil(hi)
        return a if a == b else None

    p = prec
    while p <= cap:
        with precision(p):
            out = step()
        if out is not None:
            return out
        p *= 2
    raise PrecisionExhausted(f"ceil undecided at {cap} bits")


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weight:
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        ent = tuple(as_fraction(e) for e in self.entries)
        object.__setattr__(self, "entries", ent)
        if not ent:
            raise ConfigError("empty weight")
        if any(e < 0 for e in ent):
            raise ConfigError(f"negative weight entry in {ent}")
        if sum(ent) != 1:
            raise ConfigError(f"weight entries sum to {sum(ent)}, not 1")

    @classmethod
    def of(cls, *xs) -> "Weight":
        if len(xs) == 1 and isinstance(xs[0], (list, tuple)):
            xs = tuple(xs[0])
        return cls(tuple(as_fraction(x) for x in xs))

    @property
    def d(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> Fraction:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> list[str]:
        return [fmt_rational(e) for e in self.entries]


def sort_weight(w: Weight, strict: bool = False) -> tuple[Weight, tuple[int, ...], int]:
    """Nonincreasing rearrangement, the permutation used, and multiplicity of the max.

    ``perm[k]`` is the original index of the k-th sorted entry.
    """
    if strict and any(e <= 0 for e in w):
        raise ConfigError("weight entries must be strictly positive here")
    perm = tuple(sorted(range(w.d), key=lambda i: (-w[i], i)))
    ws = Weight(tuple(w[i] for i in perm))
    t = sum(1 for e in ws if e == ws[0])
    return ws, perm, t


# ---------------------------------------------------------------------------
# rectangles (max-norm balls)


@dataclass(frozen=True)
class Rectangle:
    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("dimension mismatch")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("empty rectangle")

    @classmethod
    def ball(cls, center: Sequence, r) -> "Rectangle":
        r = Fraction(r)
        c = tuple(Fraction(x) for x in center)
        return cls(tuple(x - r for x in c), tuple(x + r for x in c))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> tuple[Fraction, ...]:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def half_sides(self) -> tuple[Fraction, ...]:
        return tuple((b - a) / 2 for a, b in zip(self.lo, self.hi))

    def scaled(self, k) -> "Rectangle":
        """Scale every side by k about the center."""
        k = Fraction(k)
        c, h = self.center, self.half_sides
        return Rectangle(tuple(x - k * y for x, y in zip(c, h)), tuple(x + k * y for x, y in zip(c, h)))

    def contains_point(self, x: Iterable) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, x, self.hi))

    def contains(self, other: "Rectangle") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: "Rectangle") -> bool:
        """Closed rectangles share at least one point."""
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersection(self, other: "Rectangle") -> "Rectangle | None":
        if not self.intersects(other):
            return None
        return Rectangle(tuple(max(a, c) for a, c in zip(self.lo, other.lo)),
                         tuple(min(b, d) for b, d in zip(self.hi, other.hi)))

    def corners(self):
        import itertools

        for bits in itertools.product((0, 1), repeat=self.dim):
            yield tuple(self.hi[i] if b else self.lo[i] for i, b in enumerate(bits))


def sup_dist(a: Sequence, b: Sequence) -> Fraction:
    return max(abs(Fraction(x) - Fraction(y)) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# certified reals


class Real:
    """An exact rational, or a positive-width quantity known through interval enclosures.

    ``fn`` is called under ``precision(bits)`` and must return an mpmath interval.
    Values restored from JSON keep their stored bounds and cannot be refined.
    """

    __slots__ = ("exact", "fn", "_fixed")

    def __init__(self, exact: Fraction | None = None, fn: Callable | None = None, fixed=None):
        self.exact = None if exact is None else Fraction(exact)
        self.fn = fn
        self._fixed = fixed
        if self.exact is None and fn is None and fixed is None:
            raise ValueError("Real needs a value")

    @classmethod
    def of(cls, x) -> "Real":
        if isinstance(x, Real):
            return x
        return cls(exact=as_fraction(x))

    @classmethod
    def pow(cls, base, e) -> "Real":
        """base**e for rational base > 0 and rational e; exact when possible."""
        base, e = as_fraction(base), as_fraction(e)
        ex = rational_pow(base, e)
        if ex is not None:
            return cls(exact=ex)
        return cls(fn=lambda: ipow(base, e))

    @classmethod
    def from_fn(cls, fn: Callable) -> "Real":
        return cls(fn=fn)

    def iv(self):
        if self.exact is not None:
            return ival(self.exact)
        if self.fn is not None:
            return self.fn()
        lo, hi = self._fixed
        return iv.mpf([ival(lo).a, ival(hi).b])

    def bounds(self, prec: int = DEFAULT_PREC) -> tuple[Fraction, Fraction]:
        if self.exact is not None:
            return self.exact, self.exact
        if self._fixed is not None:
            return self._fixed
        with precision(prec):
            x = self.fn()
        return lower(x), upper(x)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def __float__(self) -> float:
        lo, hi = self.bounds()
        return float((lo + hi) / 2)

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"Real({fmt_rational(self.exact)})"
        return f"Real(~{float(self):.6g})"

    # arithmetic builds new lazily evaluated enclosures
    def _combine(self, other, op) -> "Real":
        other = Real.of(other)
        if self.exact is not None and other.exact is not None:
            return Real(exact=op(self.exact, other.exact))
        a, b = self, other
        return Real(fn=lambda: op(a.iv(), b.iv()))

    def __mul__(self, other):
        return self._combine(other, lambda x, y: x * y)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda x, y: x / y)

    def __rtruediv__(self, other):
        return Real.of(other)._combine(self, lambda x, y: x / y)

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __rsub__(self, other):
        return Real.of(other)._combine(self, lambda x, y: x - y)

    def __pow__(self, e):
        e = as_fraction(e)
        if self.exact is not None:
            if self.exact > 0:
                return Real.pow(self.exact, e)
            if e.denominator == 1:
                return Real(exact=self.exact ** int(e))
        a = self
        if e.denominator == 1:
            return Real(fn=lambda: a.iv() ** int(e))
        return Real(fn=lambda: iv.exp(ival(e) * iv.log(a.iv())))

    def cmp(self, other) -> int:
        """Certified sign of self - other (0 only for exactly equal rationals)."""
        other = Real.of(other)
        if self.exact is not None and other.exact is not None:
            return (self.exact > other.exact) - (self.exact < other.exact)
        a, b = self, other

        def step():
            return compare(a.iv(), b.iv())

        p = DEFAULT_PREC
        while p <= PREC_CAP:
            with precision(p):
                c = step()
            if c is not None:
                return c
            if a.fn is None and b.fn is None:
                break
            p *= 2
        raise PrecisionExhausted("comparison undecided")

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def to_json(self):
        if self.exact is not None:
            return fmt_rational(self.exact)
        lo, hi = self.bounds()
        return {"lo": fmt_rational(lo), "hi": fmt_rational(hi)}

    @classmethod
    def from_json(cls, obj) -> "Real":
        if isinstance(obj, dict):
            return cls(fixed=(parse_rational(obj["lo"]), parse_rational(obj["hi"])))
        return cls(exact=parse_rational(str(obj)))
