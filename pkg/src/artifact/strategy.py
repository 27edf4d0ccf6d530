"""Alice's strategy: constants ledger, lattice-test removals and dangerous-rectangle removals.

Geometry is kept in the caller's coordinate order; lattice matrices use the
nonincreasing rearrangement of the weight, so a point x enters u_x through
``ledger.perm``.  Removal sets are covered by cells of a grid of side
2 beta^{n+1+i} r0 anchored at the lower corner of B_n; a cell is kept when the
removal set (or a certified superset of it) meets the cell inside B_n and the
cell meets the support.  Only cells meeting Bob's current ball are materialized.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from mpmath import iv

from .arith import (DEFAULT_PREC, PREC_CAP, Real, Rectangle, Weight, as_fraction, compare, fmt_rational, ival,
                    lower, parse_rational, precision, rational_pow, round_half_up, sort_weight, upper)
from .dynamics import a_exponents, d_exponents, FlowParams3
from .errors import (BetaTooLarge, CellBudgetViolated, ConfigError, LedgerInconsistent, PrecisionExhausted,
                     SandwichViolated, SearchBudgetExceeded, UniquenessViolated)
from .game import AliceMove, GameConfig, GameState
from .lattice import short_vectors
from .measures import Support, support_constants


def _dyadic_up(x: Fraction, bits: int = 64) -> Fraction:
    """Smallest multiple of 2^-k above x with about ``bits`` significant bits."""
    if x <= 0:
        return Fraction(0)
    scale = Fraction(2) ** (bits - math.floor(math.log2(x)))
    return math.ceil(x * scale) / scale


def _dyadic_down(x: Fraction, bits: int = 64) -> Fraction:
    if x <= 0:
        return Fraction(0)
    scale = Fraction(2) ** (bits - math.floor(math.log2(x)))
    return math.floor(x * scale) / scale


def _log_ratio(x: Fraction, y: Fraction) -> Fraction | None:
    """log x / log y when it is rational (x, y > 0, y != 1), else None."""
    if x == 1:
        return Fraction(0)
    f = math.log(float(x)) / math.log(float(y))
    r = Fraction(f).limit_denominator(1000)
    if r.numerator == 0:
        return None
    a, b = r.numerator, r.denominator
    # x^b == y^a
    lhs = x ** b
    rhs = y ** a
    return r if lhs == rhs else None


# ---------------------------------------------------------------------------
# shifts


@dataclass(frozen=True)
class Theta:
    """Coordinatewise shift theta_i(x_i): constant, affine or sinusoid, with Lipschitz bound ``lip``.

    sinusoid: theta_i(x) = offset_i + amp_i sin(2 pi freq_i x).
    """

    kind: str
    offset: tuple[Fraction, ...]
    slope: tuple[Fraction, ...] = ()
    amp: tuple[Fraction, ...] = ()
    freq: tuple[Fraction, ...] = ()
    lip: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "offset", tuple(as_fraction(x) for x in self.offset))
        object.__setattr__(self, "slope", tuple(as_fraction(x) for x in self.slope))
        object.__setattr__(self, "amp", tuple(as_fraction(x) for x in self.amp))
        object.__setattr__(self, "freq", tuple(as_fraction(x) for x in self.freq))
        object.__setattr__(self, "lip", as_fraction(self.lip))
        d = len(self.offset)
        if self.kind == "constant":
            pass
        elif self.kind == "affine":
            if len(self.slope) != d:
                raise ConfigError("affine shift needs one slope per coordinate")
            if any(abs(b) > self.lip for b in self.slope):
                raise ConfigError("Lipschitz bound smaller than an affine slope")
        elif self.kind == "sinusoid":
            if len(self.amp) != d or len(self.freq) != d:
                raise ConfigError("sinusoid needs amp and freq per coordinate")
            for a, f in zip(self.amp, self.freq):
                need = Real.from_fn(lambda a=a, f=f: 2 * iv.pi * ival(abs(a) * abs(f)))
                if need > self.lip:
                    raise ConfigError("Lipschitz bound smaller than 2 pi |amp freq|")
        else:
            raise ConfigError(f"unknown shift kind {self.kind!r}")
        if self.lip < 0:
            raise ConfigError("Lipschitz bound must be nonnegative")

    @classmethod
    def constant(cls, values: Sequence) -> "Theta":
        return cls("constant", tuple(values))

    @classmethod
    def zero(cls, d: int) -> "Theta":
        return cls("constant", (Fraction(0),) * d)

    @classmethod
    def affine(cls, offset: Sequence, slope: Sequence, lip=None) -> "Theta":
        slope = tuple(as_fraction(s) for s in slope)
        return cls("affine", tuple(offset), slope, lip=max(abs(s) for s in slope) if lip is None else lip)

    @property
    def d(self) -> int:
        return len(self.offset)

    @property
    def is_zero(self) -> bool:
        return self.kind == "constant" and not any(self.offset)

    @property
    def is_exact(self) -> bool:
        return self.kind != "sinusoid"

    def value(self, i: int, x: Fraction) -> Real:
        x = as_fraction(x)
        if self.kind == "constant":
            return Real.of(self.offset[i])
        if self.kind == "affine":
            return Real.of(self.offset[i] + self.slope[i] * x)
        a, f, o = self.amp[i], self.freq[i], self.offset[i]
        return Real.from_fn(lambda: ival(o) + ival(a) * iv.sin(2 * iv.pi * ival(f) * ival(x)))

    def values(self, x: Sequence) -> tuple[Real, ...]:
        return tuple(self.value(i, xi) for i, xi in enumerate(x))

    def range_on(self, i: int, lo: Fraction, hi: Fraction, prec: int = DEFAULT_PREC) -> tuple[Fraction, Fraction]:
        """Rational enclosure of theta_i over [lo, hi] (inclusion isotone)."""
        if self.kind == "constant":
            return self.offset[i], self.offset[i]
        if self.kind == "affine":
            u, v = self.offset[i] + self.slope[i] * lo, self.offset[i] + self.slope[i] * hi
            return min(u, v), max(u, v)
        a, f, o = self.amp[i], self.freq[i], self.offset[i]
        with precision(prec):
            y = ival(o) + ival(a) * iv.sin(2 * iv.pi * ival(f) * iv.mpf([ival(lo).a, ival(hi).b]))
        return lower(y), upper(y)

    def preimage(self, i: int, p: int, m: int, h: tuple[Fraction, Fraction],
                 prec: int = DEFAULT_PREC) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        """Outer and inner open intervals around {x : |m x - p - theta_i(x)| < h}.

        ``h`` is given by rational bounds (h_lo, h_hi); requires m > lip so the
        map x -> m x - theta_i(x) is increasing.
        """
        h_lo, h_hi = h
        if self.kind in ("constant", "affine"):
            a = self.offset[i]
            b = self.slope[i] if self.kind == "affine" else Fraction(0)
            den = m - b
            if den <= 0:
                raise ConfigError("denominator must exceed the shift's Lipschitz bound")
            outer = ((p + a - h_hi) / den, (p + a + h_hi) / den)
            inner = ((p + a - h_lo) / den, (p + a + h_lo) / den)
            return outer, inner
        if m <= self.lip:
            raise ConfigError("denominator must exceed the shift's Lipschitz bound")
        r1 = self._root(i, p, m, -h_hi, prec)
        r2 = self._root(i, p, m, h_hi, prec)
        s1 = self._root(i, p, m, -h_lo, prec)
        s2 = self._root(i, p, m, h_lo, prec)
        return (r1[0], r2[1]), (s1[1], s2[0])

    def _root(self, i, p, m, target: Fraction, prec) -> tuple[Fraction, Fraction]:
        """Bracket of the solution of m x - theta_i(x) - p = target."""
        a, o = abs(self.amp[i]), self.offset[i]
        lo = (p + target + o - a) / m
        hi = (p + target + o + a) / m
        f, amp = self.freq[i], self.amp[i]
        with precision(prec):
            for _ in range(prec):
                mid = (lo + hi) / 2
                g = ival(m) * ival(mid) - (ival(o) + ival(amp) * iv.sin(2 * iv.pi * ival(f) * ival(mid))) - ival(p + target)
                c = compare(g, ival(0))
                if c is None:
                    break
                if c < 0:
                    lo = mid
                else:
                    hi = mid
                lo, hi = _dyadic_down(lo, prec) if lo > 0 else lo, _dyadic_up(hi, prec) if hi > 0 else hi
        return lo, hi

    def to_json(self) -> dict:
        out = {"kind": self.kind, "offset": [fmt_rational(x) for x in self.offset], "lip": fmt_rational(self.lip)}
        if self.kind == "affine":
            out["slope"] = [fmt_rational(x) for x in self.slope]
        if self.kind == "sinusoid":
            out["amp"] = [fmt_rational(x) for x in self.amp]
            out["freq"] = [fmt_rational(x) for x in self.freq]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Theta":
        conv = lambda key: tuple(parse_rational(str(x)) for x in obj.get(key, []))
        return cls(obj["kind"], conv("offset"), conv("slope"), conv("amp"), conv("freq"),
                   parse_rational(str(obj.get("lip", "0"))))


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True, eq=False)
class ConstantsLedger:
    weight: Weight
    perm: tuple[int, ...]
    t: int
    beta: Fraction
    r0: Fraction
    lip: Fraction
    alpha: Real
    A: Fraction
    delta: Fraction
    D: Fraction
    s: int
    eta: Fraction
    i0: int
    q: Real
    xi: Real
    xi_capped: bool
    lambda1: int
    k1: Real
    c: Real
    gamma_inh: Real
    checks: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.weight.d

    @property
    def sorted_weight(self) -> Weight:
        return Weight(tuple(self.weight[i] for i in self.perm))

    @property
    def w1(self) -> Fraction:
        return max(self.weight)

    @property
    def b(self) -> Real:
        return Real.pow(self.beta, Fraction(-1) / (1 + self.w1))

    def b_pow(self, y) -> Real:
        """b**y written as a power of beta."""
        return Real.pow(self.beta, -as_fraction(y) / (1 + self.w1))

    def flow(self) -> FlowParams3:
        return FlowParams3(self.beta, self.sorted_weight)

    def to_json(self) -> dict:
        return {
            "weight": self.weight.to_json(),
            "perm": list(self.perm),
            "t": self.t,
            "beta": fmt_rational(self.beta),
            "b": self.b.to_json(),
            "r0": fmt_rational(self.r0),
            "lip": fmt_rational(self.lip),
            "alpha": self.alpha.to_json(),
            "A": fmt_rational(self.A),
            "delta": fmt_rational(self.delta),
            "D": fmt_rational(self.D),
            "s": self.s,
            "eta": fmt_rational(self.eta),
            "i0": self.i0,
            "q": self.q.to_json(),
            "xi": self.xi.to_json(),
            "xi_capped": self.xi_capped,
            "lambda1": self.lambda1,
            "k1": self.k1.to_json(),
            "c": self.c.to_json(),
            "gamma_inh": self.gamma_inh.to_json(),
            "checks": dict(sorted(self.checks.items())),
            "norm": "max",
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConstantsLedger":
        R = Real.from_json
        return cls(
            Weight.of([parse_rational(x) for x in obj["weight"]]),
            tuple(obj["perm"]),
            int(obj["t"]),
            parse_rational(obj["beta"]),
            parse_rational(obj["r0"]),
            parse_rational(obj["lip"]),
            R(obj["alpha"]),
            parse_rational(obj["A"]),
            parse_rational(obj["delta"]),
            parse_rational(obj["D"]),
            int(obj["s"]),
            parse_rational(obj["eta"]),
            int(obj["i0"]),
            R(obj["q"]),
            R(obj["xi"]),
            bool(obj["xi_capped"]),
            int(obj["lambda1"]),
            R(obj["k1"]),
            R(obj["c"]),
            R(obj["gamma_inh"]),
            dict(obj.get("checks", {})),
        )


def _ceil_fraction(x: Fraction) -> int:
    return math.ceil(x)


def compute_s(ws: Weight, t: int) -> int:
    w1 = ws[0]
    w_next = ws[t] if t < ws.d else Fraction(0)
    return max(5, math.ceil((1 + w1) / (w1 - w_next)), math.ceil((2 * (1 + w1) + 1) / w1))


def compute_eta(ws: Weight, s: int) -> Fraction:
    d, w1, wd = ws.d, ws[0], ws[-1 if False else ws.d - 1]
    return min(Fraction(1, 4 * (d + 1)), wd * s / (2 * d * (1 + w1)), (w1 * s - 2 * (1 + w1)) / (2 * d * (1 + w1)))


def compute_constants(w: Weight, support: Support, beta, r0, lip=0, *, verify: bool = True) -> ConstantsLedger:
    """Populate every constant of the strategy and re-verify the derived inequalities."""
    beta, r0, lip = as_fraction(beta), as_fraction(r0), as_fraction(lip)
    ws, perm, t = sort_weight(w, strict=True)
    d = ws.d
    if not 0 < beta < 1:
        raise ConfigError("beta must lie in (0, 1)")
    if not (beta < r0 and beta < 1 / (1 + lip)):
        raise BetaTooLarge(f"beta={beta} must be below min(r0={r0}, 1/(1+lip)={1 / (1 + lip)})")
    cst = support_constants(support)
    A, D, delta = cst.A, cst.D, cst.delta
    alpha = Real.of(support.d) if not support.self_similar else Real.from_fn(support.alpha_interval)
    w1, wd = ws[0], ws[d - 1]
    s = compute_s(ws, t)
    eta = compute_eta(ws, s)

    # i0: beta^{(i0+1)/2} <= (A^2 D 6^{2 delta + alpha})^{-1/delta}, (s-1) does not divide i0
    base_i0 = Real.from_fn(lambda: iv.exp(-iv.log(ival(A * A * D) * iv.exp((2 * ival(delta) + alpha.iv()) * iv.log(6)))
                                          / ival(delta)))

    def i0_ok(i):
        try:
            return Real.pow(beta, Fraction(i + 1, 2)) <= base_i0
        except PrecisionExhausted:
            return True

    i0 = 1
    while not (i0_ok(i0) and i0 % (s - 1) != 0):
        i0 += 1
        if i0 > 10_000:
            raise LedgerInconsistent("i0 search did not terminate")

    q = Real.pow(beta, Fraction(i0 + 1, 2)) * Real.from_fn(
        lambda: iv.exp(-iv.log(ival(A * A * D) * iv.exp((2 * ival(delta) + alpha.iv() + d) * iv.log(2))
                               * iv.exp(alpha.iv() * iv.log(3))) / ival(delta)))

    b = Real.pow(beta, Fraction(-1) / (1 + w1))
    xi_exp = eta + Fraction(s) / (1 + w1) + Fraction(d + 1 - t, d + 1)
    xi0 = Real.pow(beta, xi_exp)
    cap = Real.of(d + 1) / (b * (1 + lip))
    if xi0 < cap:
        xi, capped = xi0, False
    else:
        xi, capped = cap * Fraction(1, 2), True

    # lambda1 = ceil((1/w_d) log_b((d+1)/xi)), written in powers of beta when possible
    lam_arg = None
    inv_beta = 1 / beta
    if not capped:
        lr = _log_ratio(Fraction(d + 1), inv_beta)
        if lr is not None:
            lam_arg = (1 + w1) / wd * (lr + xi_exp)
    else:
        lr = _log_ratio(2 * (1 + lip), inv_beta)
        if lr is not None:
            lam_arg = 1 / wd * (1 + (1 + w1) * lr)
    if lam_arg is not None:
        lambda1 = math.ceil(lam_arg)
    else:
        from .arith import certified_ceil

        lambda1 = certified_ceil(lambda: (1 + ival(w1)) * iv.log(ival(d + 1) / xi.iv())
                                 / (ival(wd) * iv.log(ival(inv_beta))))
    k1 = xi / (d + 1) * Real.pow(beta, Fraction(lambda1) / (1 + w1))
    c = (k1 ** (1 + w1)) * Real.of(beta ** 4 / (200 * d))
    gamma_inh = Real.from_fn(lambda: iv.mpf(0) if upper(alpha.iv() - ival(delta) / 2) <= 0
                             else alpha.iv() - ival(delta) / 2)

    led = ConstantsLedger(w, perm, t, beta, r0, lip, alpha, A, delta, D, s, eta, i0, q, xi, capped,
                          lambda1, k1, c, gamma_inh)
    if verify:
        checks = verify_ledger(led)
        object.__setattr__(led, "checks", checks)
        bad = [k for k, v in checks.items() if not v]
        if bad:
            raise LedgerInconsistent(f"failed checks: {', '.join(bad)}")
    return led


def verify_ledger(led: ConstantsLedger) -> dict[str, bool]:
    """Re-check every derived inequality; returns name -> verdict."""
    d, beta, w1 = led.d, led.beta, led.w1
    out = {}
    out["A>1"] = led.A > 1
    out["D>1"] = led.D > 1
    out["beta<r0"] = beta < led.r0
    out["beta<1/(1+lip)"] = beta < 1 / (1 + led.lip)
    out["q<1"] = led.q < 1
    out["c<beta^3"] = led.c < beta ** 3
    out["xi<(d+1)/(b(1+lip))"] = led.xi < Real.of(d + 1) / (led.b * (1 + led.lip))
    out["k1^(1+w1)<beta^lambda1"] = (led.k1 ** (1 + w1)) < Real.of(beta ** led.lambda1)
    out["b^(-lambda1 w_i)<xi/(d+1)"] = all(led.b_pow(-led.lambda1 * wi) < led.xi / (d + 1) for wi in led.weight)
    out["V_s empty for s<=lambda1+1"] = all(vn_m_range(led, s_) is None for s_ in range(0, led.lambda1 + 2))
    out["i0 not divisible by s-1"] = led.i0 % (led.s - 1) != 0
    return out


# ---------------------------------------------------------------------------
# rational shells


def _smallest_m(L: Real, e: Fraction, strict: bool) -> int:
    """Smallest integer m >= 1 with m^e >= L (or > L when strict)."""

    def ok(m):
        c = Real.pow(m, e).cmp(L)
        return c > 0 or (c == 0 and not strict)

    if L <= 1 and ok(1):
        return 1
    root = L ** (1 / e)
    lo_b, hi_b = root.bounds()
    if hi_b > 2 ** 40:
        # enough bits to bracket m within a few units, so the bisection below stays short
        lo_b, hi_b = root.bounds(min(PREC_CAP, DEFAULT_PREC + math.ceil(hi_b).bit_length() + 16))
    lo, hi = max(1, math.floor(lo_b) - 1), math.ceil(hi_b) + 1
    while ok(lo) and lo > 1:
        lo = max(1, lo // 2)
    while not ok(hi):
        hi *= 2
    # invariant: ok(hi) and (lo == 1 or not ok(lo))
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def vn_m_range(led: ConstantsLedger, n: int) -> tuple[int, int] | None:
    """Inclusive denominator range of V_n, or None when V_n is empty."""
    e = 1 + led.w1
    L = led.c / led.r0 * Real.of(led.beta ** -(n + 1))
    U = L * Real.of(1 / led.beta)
    m_lo = _smallest_m(L, e, strict=False)
    third = Real.of(3) / (led.c * led.beta * led.r0)
    lo3, hi3 = third.bounds()
    m3 = math.ceil(lo3) if math.ceil(lo3) == math.ceil(hi3) else None
    if m3 is None:
        m3 = _smallest_m(third, Fraction(1), strict=False)
    m_lo = max(m_lo, m3)
    m_hi = _smallest_m(U, e, strict=False) - 1
    if m_hi < m_lo:
        return None
    return m_lo, m_hi


def half_width(led: ConstantsLedger, m: int, axis: int, k=1, prec: int = DEFAULT_PREC) -> tuple[Fraction, Fraction]:
    """Bounds on k q c / m^{w_axis}, the half-width of a dangerous interval in units of m x."""
    r = Real.of(k) * led.q * led.c / Real.pow(m, led.weight[axis])
    return r.bounds(prec)


@dataclass(frozen=True)
class ShellMember:
    p: tuple[int, ...]
    m: int

    @property
    def v(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(pi, self.m) for pi in self.p)

    def to_json(self):
        return {"p": list(self.p), "m": self.m}


def delta_box(led: ConstantsLedger, theta: Theta, mem: ShellMember, k=1, prec: int = DEFAULT_PREC):
    """Per-axis (outer, inner) open intervals of the dangerous rectangle k*Delta_theta(v), before clipping to B0."""
    out = []
    for i in range(led.d):
        h = half_width(led, mem.m, i, k, prec)
        out.append(theta.preimage(i, mem.p[i], mem.m, h, prec))
    return out


def vn_members(led: ConstantsLedger, n: int, region: Rectangle, theta: Theta, limit: int = 200_000,
               prec: int = DEFAULT_PREC) -> list[ShellMember]:
    """Members of V_n whose dangerous rectangle (outer enclosure) meets the closed region."""
    rng = vn_m_range(led, n)
    if rng is None:
        return []
    m_lo, m_hi = rng
    if m_hi - m_lo + 1 > limit:
        raise SearchBudgetExceeded(f"V_{n} has {m_hi - m_lo + 1} denominators")
    members = []
    work = 0
    for m in range(m_lo, m_hi + 1):
        axes = []
        for i in range(led.d):
            h_lo, h_hi = half_width(led, m, i, 1, prec)
            t_lo, t_hi = theta.range_on(i, region.lo[i], region.hi[i], prec)
            p_lo = math.floor(m * region.lo[i] - t_hi - h_hi) - 1
            p_hi = math.ceil(m * region.hi[i] - t_lo + h_hi) + 1
            ps = []
            for p in range(p_lo, p_hi + 1):
                (olo, ohi), _ = theta.preimage(i, p, m, (h_lo, h_hi), prec)
                if olo < region.hi[i] and ohi > region.lo[i]:
                    ps.append(p)
            axes.append(ps)
            work += p_hi - p_lo + 1
        for p in itertools.product(*axes):
            members.append(ShellMember(tuple(p), m))
        if work > limit or len(members) > limit:
            raise SearchBudgetExceeded(f"V_{n} enumeration exceeds {limit}")
    return members


# ---------------------------------------------------------------------------
# partition cells and dangerous rectangles


def cell_sides(led: ConstantsLedger, n: int) -> tuple[Fraction, ...] | None:
    """Rational lower bounds of the partition side lengths; None means a single cell (lip = 0)."""
    if led.lip == 0:
        return None
    out = []
    for wi in led.weight:
        side = led.r0 * led.c * led.q * Real.pow(led.beta, Fraction(n + 2) * wi / (1 + led.w1)) / led.lip
        lo, _ = side.bounds()
        out.append(_dyadic_down(lo, 64))
    return tuple(out)


def cell_interval(b0: Rectangle, sides, axis: int, j: int) -> tuple[Fraction, Fraction]:
    if sides is None:
        return b0.lo[axis], b0.hi[axis]
    lo = b0.lo[axis] + j * sides[axis]
    return max(lo, b0.lo[axis]), min(lo + sides[axis], b0.hi[axis])


def cells_meeting(b0: Rectangle, sides, axis: int, a: Fraction, b: Fraction) -> range:
    """Cell indices along an axis whose closed interval meets the open interval (a, b)."""
    if sides is None:
        ok = a < b0.hi[axis] and b > b0.lo[axis]
        return range(0, 1) if ok else range(0)
    s = sides[axis]
    n_cells = math.ceil((b0.hi[axis] - b0.lo[axis]) / s)
    lo = max(0, math.floor((a - b0.lo[axis]) / s))
    hi = min(n_cells - 1, math.ceil((b - b0.lo[axis]) / s))
    out = [j for j in range(lo, hi + 1)
           if cell_interval(b0, sides, axis, j)[0] < b and cell_interval(b0, sides, axis, j)[1] > a]
    return range(out[0], out[-1] + 1) if out else range(0)


@dataclass(frozen=True)
class DangerousRectangle:
    member: ShellMember
    n: int
    j: tuple[int, ...]
    cell: Rectangle
    anchor: tuple[Fraction, ...]

    def to_json(self):
        return {"v": self.member.to_json(), "n": self.n, "j": list(self.j)}


def _clip(iv_pair, lo, hi):
    """Open interval (a, b) intersected with closed [lo, hi]: (left, right, left_open, right_open) or None."""
    a, b = iv_pair
    left, lopen = (a, True) if a >= lo else (lo, False)
    right, ropen = (b, True) if b <= hi else (hi, False)
    if left > right or (left == right and (lopen or ropen)):
        return None
    return left, right, lopen, ropen


def _contained(inner, outer) -> bool:
    """Clipped interval ``inner`` lies inside clipped interval ``outer``."""
    if inner is None:
        return True
    if outer is None:
        return False
    a1, b1, ao1, bo1 = inner
    a2, b2, ao2, bo2 = outer
    left = a2 < a1 or (a2 == a1 and (not ao2 or ao1))
    right = b1 < b2 or (b1 == b2 and (not bo2 or bo1))
    return left and right


def frozen_interval(led, theta, mem, axis, anchor_x: Fraction, k=1, prec=DEFAULT_PREC):
    """Outer/inner open intervals of the frozen-shift rectangle along an axis."""
    h_lo, h_hi = half_width(led, mem.m, axis, k, prec)
    t_lo, t_hi = theta.value(axis, anchor_x).bounds(prec)
    p, m = mem.p[axis], mem.m
    outer = ((p + t_lo - h_hi) / m, (p + t_hi + h_hi) / m)
    inner = ((p + t_hi - h_lo) / m, (p + t_lo + h_lo) / m)
    return outer, inner


def dangerous_rectangles(led: ConstantsLedger, theta: Theta, mem: ShellMember, n: int, b0: Rectangle,
                         prec: int = DEFAULT_PREC, definite: bool = False) -> list[DangerousRectangle]:
    """Cells j with Delta^{j,n}(v) nonempty (outer enclosure; ``definite`` uses the inner one)."""
    sides = cell_sides(led, n)
    box = delta_box(led, theta, mem, 1, prec)
    per_axis = []
    for i, (outer, inner) in enumerate(box):
        a, b = inner if definite else outer
        per_axis.append(list(cells_meeting(b0, sides, i, a, b)))
    out = []
    for j in itertools.product(*per_axis):
        ivs = [cell_interval(b0, sides, i, ji) for i, ji in enumerate(j)]
        cell = Rectangle(tuple(x[0] for x in ivs), tuple(x[1] for x in ivs))
        out.append(DangerousRectangle(mem, n, tuple(j), cell, cell.center))
    return out


def sandwich_ok(led: ConstantsLedger, theta: Theta, rect: DangerousRectangle, prec: int = DEFAULT_PREC) -> bool:
    """Frozen(q) inside Delta(2q) inside frozen(4q), per axis within the cell."""
    for i in range(led.d):
        lo, hi = rect.cell.lo[i], rect.cell.hi[i]
        f1_out, _ = frozen_interval(led, theta, rect.member, i, rect.anchor[i], 1, prec)
        _, d2_in = theta.preimage(i, rect.member.p[i], rect.member.m, half_width(led, rect.member.m, i, 2, prec), prec)
        d2_out, _ = theta.preimage(i, rect.member.p[i], rect.member.m, half_width(led, rect.member.m, i, 2, prec), prec)
        _, f4_in = frozen_interval(led, theta, rect.member, i, rect.anchor[i], 4, prec)
        if not _contained(_clip(f1_out, lo, hi), _clip(d2_in, lo, hi)):
            return False
        if not _contained(_clip(d2_out, lo, hi), _clip(f4_in, lo, hi)):
            return False
    return True


def check_sandwich(led, theta, rects: Iterable[DangerousRectangle]) -> int:
    count = 0
    for r in rects:
        if not sandwich_ok(led, theta, r):
            raise SandwichViolated(f"sandwich fails for v={r.member.to_json()} cell={r.j} level={r.n}")
        count += 1
    return count


def rectangle_hits(led: ConstantsLedger, theta: Theta, support: Support, n: int, ball: Rectangle, b0: Rectangle,
                   limit: int = 200_000) -> list[tuple[ShellMember, tuple[int, ...], tuple[Fraction, ...]]]:
    """(v, j, witness) for every dangerous rectangle at level n containing a support point of the ball.

    Decided exactly: a hit needs a support point inside the inner enclosure,
    and no hit needs the outer enclosure to miss; otherwise precision doubles.
    """
    region = ball.intersection(b0)
    if region is None:
        return []
    prec = DEFAULT_PREC
    while prec <= PREC_CAP:
        hits, undecided = [], False
        for mem in vn_members(led, n, region, theta, limit, prec):
            box = delta_box(led, theta, mem, 1, prec)
            inner_pts, outer_hit = [], True
            for i, (outer, inner) in enumerate(box):
                o = _clip(outer, region.lo[i], region.hi[i])
                if o is None or support._meets_1d(o[0], o[1], o[2], o[3]) is None:
                    outer_hit = False
                    break
                c = _clip(inner, region.lo[i], region.hi[i])
                inner_pts.append(None if c is None else support._meets_1d(c[0], c[1], c[2], c[3]))
            if not outer_hit:
                continue
            if any(pt is None for pt in inner_pts):
                undecided = True
                continue
            sides = cell_sides(led, n)
            j = tuple(0 if sides is None else min(math.floor((x - b0.lo[i]) / sides[i]),
                                                  math.ceil((b0.hi[i] - b0.lo[i]) / sides[i]) - 1)
                      for i, x in enumerate(inner_pts))
            hits.append((mem, j, tuple(inner_pts)))
        if not undecided:
            return hits
        prec *= 2
    raise PrecisionExhausted("rectangle hit undecided at the precision cap")


# ---------------------------------------------------------------------------
# lattice tests


def homogeneous_specs(led: ConstantsLedger, n: int, i: int) -> list[tuple[int, int]]:
    """(l, T) pairs whose failure d_l a_T u_x Z^{d+1} notin K_{beta^{eta l}} defines A_{n+1,i}."""
    s = led.s
    out = []
    if n == 0:
        l = 1
        while (s - 1) * l <= i:
            n1 = i - (s - 1) * l
            if s * l >= n1 + 1:
                out.append((l, n1 + 1 + s * l))
            l += 1
    elif i % (s - 1) == 0 and i > 0:
        l = i // (s - 1)
        if s * l < n + 1:
            out.append((l, n + 1 + s * l))
    return out


class LatticeCondition:
    """The test ||g u_x z|| < eps for some nonzero integer z, with g = d_l a_T (sorted coordinates)."""

    def __init__(self, led: ConstantsLedger, l: int, T: int):
        self.led, self.l, self.T = led, l, T
        flow = led.flow()
        exps = [a + b for a, b in zip(d_exponents(l, flow), a_exponents(T, flow))]
        g_sorted = [Real.pow(led.beta, e) for e in exps]
        d = led.d
        # g for the original axis perm[k] is g_sorted[k+1]
        self.g0 = g_sorted[0]
        gi = [None] * d
        for k in range(d):
            gi[led.perm[k]] = g_sorted[k + 1]
        self.g = gi
        self.eps = Real.pow(led.beta, led.eta * l)

    def candidates(self, region: Rectangle) -> list[tuple[int, ...]]:
        """Superset of integer z = (z0, z_1..z_d) (original axis order) that can be short over the region."""
        eps, g0 = self.eps, self.g0
        c = region.center
        R = max(region.half_sides) if region.dim else Fraction(0)
        Fi = [_dyadic_up((eps / gi).bounds()[1]) for gi in self.g]
        inv_sum = sum((Real.of(1) / gi for gi in self.g), Real.of(0))
        F0 = _dyadic_up((eps / g0 + eps * R * inv_sum).bounds()[1])
        d = len(Fi)
        M = [[Fraction(0)] * (d + 1) for _ in range(d + 1)]
        M[0][0] = 1 / F0
        for i in range(d):
            M[0][i + 1] = c[i] / F0
            M[i + 1][i + 1] = 1 / Fi[i]
        # a multiple k z is short only if z is, so primitive vectors suffice
        return [z for _, z in short_vectors(M, Fraction(d + 1), primitive=True)]

    def slab(self, z: Sequence[int], prec: int = DEFAULT_PREC) -> tuple[Fraction, Fraction] | None:
        """Bounds on h with ||g u_x z|| < eps iff |z0 + z.x| < h; None when impossible."""
        with precision(prec):
            Q = self.eps.iv() ** 2
            for gi, zi in zip(self.g, z[1:]):
                if zi:
                    Q = Q - (gi.iv() * zi) ** 2
            if upper(Q) <= 0:
                return None
            qlo = lower(Q)
            hi = upper(iv.sqrt(iv.mpf([0, Q.b])) / self.g0.iv())
            lo = lower(iv.sqrt(iv.mpf([Q.a, Q.b])) / self.g0.iv()) if qlo > 0 else Fraction(0)
        return lo, hi

    @staticmethod
    def _form_range(z, box: Rectangle) -> tuple[Fraction, Fraction]:
        lo = hi = Fraction(z[0])
        for zi, a, b in zip(z[1:], box.lo, box.hi):
            u, v = zi * a, zi * b
            lo += min(u, v)
            hi += max(u, v)
        return lo, hi

    def possibly_fails(self, box: Rectangle, zs: Sequence[tuple[int, ...]]) -> bool:
        """Conservative: True unless every point of the box is certified to pass."""
        for z in zs:
            h = self.slab(z)
            if h is None:
                continue
            lo, hi = self._form_range(z, box)
            dist = Fraction(0) if lo <= 0 <= hi else min(abs(lo), abs(hi))
            if dist < h[1]:
                return True
        return False

    def fails_at(self, x: Sequence[Fraction]) -> bool:
        """Exact decision: some nonzero lattice vector of g u_x Z^{d+1} is shorter than eps."""
        pt = Rectangle(tuple(x), tuple(x))
        for z in self.candidates(pt):
            val = z[0] + sum(zi * xi for zi, xi in zip(z[1:], x))
            prec = DEFAULT_PREC
            while True:
                h = self.slab(z, prec)
                if h is None:
                    break
                if abs(val) < h[0]:
                    return True
                if abs(val) >= h[1]:
                    break
                prec *= 2
                if prec > PREC_CAP:
                    raise PrecisionExhausted("lattice test undecided")
        return False

    def basis_at(self, x: Sequence[Fraction], prec: int = DEFAULT_PREC):
        """The matrix g u_x in sorted coordinates (columns generate the lattice), as intervals."""
        led = self.led
        xs = [as_fraction(x[led.perm[k]]) for k in range(led.d)]
        gs = [self.g0] + [self.g[led.perm[k]] for k in range(led.d)]
        d = led.d
        M = [[Fraction(0)] * (d + 1) for _ in range(d + 1)]
        M[0][0] = 1
        for k in range(d):
            M[0][k + 1] = xs[k]
            M[k + 1][k + 1] = 1
        return gs, M


def grid_cells(anchor: Rectangle, rho: Fraction, restrict: Rectangle) -> list[Rectangle]:
    """Cells of side 2 rho anchored at anchor.lo whose closed box meets ``restrict``."""
    side = 2 * rho
    ranges = []
    for i in range(anchor.dim):
        a = anchor.lo[i]
        lo = math.floor((restrict.lo[i] - a) / side)
        hi = math.floor((restrict.hi[i] - a) / side)
        lo = max(lo, 0)
        hi = min(hi, math.ceil((anchor.hi[i] - a) / side) - 1)
        ranges.append(range(lo, hi + 1))
    out = []
    for j in itertools.product(*ranges):
        lo = tuple(anchor.lo[i] + j[i] * side for i in range(anchor.dim))
        out.append(Rectangle(lo, tuple(x + side for x in lo)))
    return [c for c in out if c.intersects(restrict)]


def homogeneous_removal(led: ConstantsLedger, n: int, i: int, b_n: Rectangle, support: Support,
                        restrict: Rectangle | None = None) -> list[Rectangle]:
    """Cells (balls of radius beta^{n+1+i} r0) covering A_{n+1,i} inside ``restrict``."""
    specs = homogeneous_specs(led, n, i)
    if not specs:
        return []
    restrict = b_n if restrict is None else restrict
    rho = led.beta ** (n + 1 + i) * led.r0
    region = restrict.intersection(b_n)
    if region is None:
        return []
    conds = [(cond, cond.candidates(region)) for cond in (LatticeCondition(led, l, T) for l, T in specs)]
    out = []
    for cell in grid_cells(b_n, rho, restrict):
        box = cell.intersection(b_n)
        if box is None or not support.intersects_box(box):
            continue
        if any(cond.possibly_fails(box, zs) for cond, zs in conds):
            out.append(cell)
    return out


def in_removed_set(led: ConstantsLedger, x: Sequence[Fraction], n: int, i: int) -> bool:
    """Pointwise membership in the lattice-defined A_{n+1,i} (ignoring the ball restriction)."""
    return any(LatticeCondition(led, l, T).fails_at(x) for l, T in homogeneous_specs(led, n, i))


def prior_removed(led: ConstantsLedger, x: Sequence[Fraction], n: int, horizon: int) -> bool:
    """x lies in some A_{n'+1,i'} with n' < n and n'+1+i' <= horizon."""
    for n1 in range(n):
        for i1 in range(0, max(0, horizon - n1)):
            if in_removed_set(led, x, n1, i1):
                return True
    return False


# ---------------------------------------------------------------------------
# inhomogeneous removal


@dataclass
class InhomogeneousReport:
    n: int
    members: list[ShellMember]
    survivors: list[ShellMember]
    cells_per_survivor: dict
    sandwich_checked: int
    cover: list[Rectangle]


def _probe_points(support: Support, box_axes, per_axis: int = 4) -> list[tuple[Fraction, ...]]:
    axes = []
    for a, b, ao, bo in box_axes:
        pts = set()
        if b > a:
            step = (b - a) / per_axis
            for k in range(per_axis + 1):
                lo = a + k * step
                hi = min(b, lo + step)
                p = support._meets_1d(lo, hi, ao and k == 0, bo and hi == b)
                if p is not None:
                    pts.add(p)
        else:
            p = support._meets_1d(a, b, ao, bo)
            if p is not None:
                pts.add(p)
        if not pts:
            return []
        axes.append(sorted(pts))
    return [tuple(p) for p in itertools.product(*axes)]


def inhomogeneous_removal(led: ConstantsLedger, n: int, bob: Sequence[Rectangle], theta: Theta, support: Support,
                          restrict: Rectangle | None = None, horizon: int | None = None,
                          limit: int = 200_000) -> InhomogeneousReport:
    """Cover of the dangerous rectangles of level n inside B_n, with the uniqueness and cell-count checks."""
    b0, b_n = bob[0], bob[n]
    restrict = b_n if restrict is None else restrict
    horizon = n + 1 + led.i0 if horizon is None else horizon
    region = b_n.intersection(b0)
    if region is None or vn_m_range(led, n) is None:
        return InhomogeneousReport(n, [], [], {}, 0, [])
    members = vn_members(led, n, region, theta, limit)
    survivors = []
    for mem in members:
        box = delta_box(led, theta, mem)
        clipped = [_clip(inner, region.lo[i], region.hi[i]) for i, (_, inner) in enumerate(box)]
        if any(c is None for c in clipped):
            continue
        for x in _probe_points(support, clipped):
            if not prior_removed(led, x, n, horizon):
                survivors.append(mem)
                break
    if len(survivors) > 1:
        raise UniquenessViolated(f"level {n}: {len(survivors)} shell members survive: "
                                 f"{[m.to_json() for m in survivors[:4]]}")
    cells_per = {}
    checked = 0
    for mem in survivors:
        rects = dangerous_rectangles(led, theta, mem, n, b0, definite=True)
        cells_per[(mem.p, mem.m)] = len(rects)
        if len(rects) > 2 ** led.d:
            raise CellBudgetViolated(f"level {n}: v={mem.to_json()} meets {len(rects)} cells")
        checked += check_sandwich(led, theta, rects)
    rho = led.beta ** (n + 1 + led.i0) * led.r0
    boxes = [delta_box(led, theta, mem) for mem in members]
    cover = []
    for cell in grid_cells(b_n, rho, restrict):
        box = cell.intersection(region)
        if box is None:
            continue
        for db in boxes:
            ok = True
            for i, (outer, _) in enumerate(db):
                c = _clip(outer, box.lo[i], box.hi[i])
                if c is None or support._meets_1d(*c) is None:
                    ok = False
                    break
            if ok:
                cover.append(cell)
                break
    return InhomogeneousReport(n, members, survivors, cells_per, checked, cover)


# ---------------------------------------------------------------------------
# policy


@dataclass
class AlicePolicy:
    """Assembles Alice's collections for the ply at level k = state.n.

    Collections (j, i) with j + i = k + 1 constrain Bob's next ball; j - 1 is
    the level at which Alice commits to them.  With ``M > 1`` the ledger is
    built for beta^M and Alice plays the strategy of that coarser game: its
    collection (n'+1, i') is submitted as (M n' + 1, M(i'+1) - 1), which has
    the same radius and budget, and every other collection is left empty.
    """

    ledger: ConstantsLedger
    theta: Theta
    support: Support
    M: int = 1
    horizon: int | None = None
    reports: list = field(default_factory=list)

    def effective_index(self, j: int, i: int) -> tuple[int, int] | None:
        """Coarse-game (n', i') behind the real collection (j, i), or None when Alice plays nothing."""
        n, M = j - 1, self.M
        if n % M or (i + 1) % M:
            return None
        return n // M, (i + 1) // M - 1

    def move(self, state: GameState) -> tuple[AliceMove, list[dict]]:
        cfg = state.config
        if cfg.beta ** self.M != self.ledger.beta:
            raise ConfigError("ledger beta must equal the game's beta to the power M")
        k = state.n
        horizon = cfg.max_depth // self.M if self.horizon is None else self.horizon
        coarse = state.bob[::self.M]
        cols, events = {}, []
        for n in range(0, k + 1):
            key = (n + 1, k - n)
            eff = self.effective_index(*key)
            if eff is None:
                continue
            n1, i1 = eff
            if n1 >= 1 and i1 == self.ledger.i0:
                rep = inhomogeneous_removal(self.ledger, n1, coarse[:n1 + 1], self.theta, self.support,
                                            restrict=state.bob[k], horizon=horizon)
                self.reports.append(rep)
                balls = rep.cover
                if rep.members:
                    events.append({"type": "inhomogeneous", "key": list(key), "members": len(rep.members),
                                   "survivors": len(rep.survivors), "cells": len(balls)})
            else:
                balls = homogeneous_removal(self.ledger, n1, i1, coarse[n1], self.support, restrict=state.bob[k])
            if not balls:
                continue
            cap = cfg.budget_floor(key[1])
            if len(balls) > cap:
                events.append({"type": "budget-truncation", "key": list(key), "count": len(balls), "budget": cap})
                balls = balls[:cap]
            cols[key] = balls
        return AliceMove(k, cols), events


def alice_policy(state: GameState, ledger: ConstantsLedger, theta: Theta, support: Support | None = None,
                 M: int = 1) -> AliceMove:
    return AlicePolicy(ledger, theta, support or state.config.support, M).move(state)[0]


# ---------------------------------------------------------------------------
# survivors, D_n and the no-solution checks


def sample_survivors(led: ConstantsLedger, bob: Sequence[Rectangle], n: int, support: Support, rng: random.Random,
                     count: int = 20, horizon: int | None = None, max_tries: int = 400) -> list[tuple[Fraction, ...]]:
    """Support points of B_n outside every enforced lattice-defined A_{n'+1,i'} with n' < n."""
    horizon = len(bob) - 1 if horizon is None else horizon
    out, tries = [], 0
    while len(out) < count and tries < max_tries:
        tries += 1
        x = support.sample_in_box(rng, bob[n], depth=48)
        if x is None:
            break
        if not prior_removed(led, x, n, horizon):
            out.append(x)
    return out


def dn_failures(led: ConstantsLedger, x: Sequence[Fraction], n: int) -> list[int]:
    """n' in 1..n-1 with d_1 a_{n'+s} u_x Z^{d+1} outside K_{beta^eta}."""
    return [n1 for n1 in range(1, n) if LatticeCondition(led, 1, n1 + led.s).fails_at(x)]


def dual_system_solution(led: ConstantsLedger, x: Sequence[Fraction], n: int) -> tuple[int, ...] | None:
    """A nonzero z with |z0 + z.x| <= k1/H and |z_i| <= H^{w_i} for some 1 <= H < b^{n - lambda1}."""
    if n <= led.lambda1:
        return None
    Hmax = led.b_pow(n - led.lambda1)
    bounds = []
    for wi in led.weight:
        lo, hi = (Hmax ** wi).bounds()
        bounds.append(math.floor(hi))
    k1f = float(led.k1)
    Hf = float(Hmax.bounds()[1])
    xf = [float(v) for v in x]
    inv_w = [1 / float(wi) if wi else math.inf for wi in led.weight]
    for zs in itertools.product(*[range(-B, B + 1) for B in bounds]):
        if not any(zs):
            continue
        # float screen with generous margins; survivors are decided exactly below
        hf = max([1.0] + [abs(zi) ** e for zi, e in zip(zs, inv_w) if zi])
        if hf > Hf * (1 + 1e-9):
            continue
        lf = sum(zi * xi for zi, xi in zip(zs, xf))
        if (abs(lf - round(lf)) - 1e-9) * hf > 2 * k1f:
            continue
        # the smallest admissible H gives the weakest constraint
        Hmin = max([Real.of(1)] + [Real.pow(abs(zi), 1 / wi) for zi, wi in zip(zs, led.weight) if zi])
        if not Hmin < Hmax:
            continue
        L = sum(zi * xi for zi, xi in zip(zs, x))
        for z0 in {-math.floor(L), -math.ceil(L)}:
            val = abs(z0 + L)
            if float(val) * float(Hmin) > 2 * k1f + 1e-300:
                continue
            if Real.of(val) * Hmin <= led.k1:
                return (z0,) + tuple(zs)
    return None


def simul_system_solution(led: ConstantsLedger, x: Sequence[Fraction], n: int) -> tuple[int, tuple[int, ...]] | None:
    """(m, p) with 1 <= m <= Q < b^{n - lambda1} and |m x_i - p_i| < (k1/d) Q^{-w_i}; Q = m is optimal."""
    if n <= led.lambda1:
        return None
    Qmax = led.b_pow(n - led.lambda1)
    lo, hi = Qmax.bounds()
    m_top = math.ceil(hi)
    while m_top >= 1 and not Real.of(m_top) < Qmax:
        m_top -= 1
    k1d = led.k1 / led.d
    k1f = float(k1d)
    x = tuple(as_fraction(v) for v in x)
    den = math.lcm(*(v.denominator for v in x))
    nums = [int(v * den) for v in x]
    for m in range(1, m_top + 1):
        # m x_i - p_i = r_i / den with p_i = floor(m x_i + 1/2)
        p = tuple((2 * m * a + den) // (2 * den) for a in nums)
        rs = [abs(m * a - pi * den) for a, pi in zip(nums, p)]
        if any(r / den > 2 * k1f for r in rs):
            continue
        if all(Real.of(Fraction(r, den)) * Real.pow(m, wi) < k1d for r, wi in zip(rs, led.weight)):
            return m, p
    return None
