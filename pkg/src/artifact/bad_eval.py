"""Finite-resolution evidence for badly approximable points and certification of game outcomes."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .arith import Real, Rectangle, Weight, as_fraction, fmt_rational
from .errors import PreconditionViolated, RectangleHit
from .game import GameState, replay
from .measures import Support
from .strategy import ConstantsLedger, Theta, rectangle_hits, vn_m_range

Q_CAP = 2 ** 16


def _exact(x) -> Fraction:
    """Rational stand-in for x: exact for rationals, 2^-120-accurate for Real values."""
    if isinstance(x, Real):
        if x.is_exact:
            return x.exact
        lo, hi = x.bounds(160)
        return (lo + hi) / 2
    return as_fraction(x)


@dataclass
class BadnessReport:
    """Per-scale records (q or height, best integer data, quality) and the running infimum."""

    kind: str
    x: tuple
    theta: tuple
    w: Weight
    Q_max: int
    records: list = field(default_factory=list)
    curve: list = field(default_factory=list)

    def tail_infimum(self, Q: int | None = None) -> float:
        """Minimum quality over the window (Q/2, Q]."""
        Q = self.Q_max if Q is None else Q
        vals = [r[2] for r in self.records if Q / 2 < abs(r[0]) <= Q]
        return min(vals) if vals else math.inf

    @property
    def infimum(self) -> float:
        return self.curve[-1] if self.curve else math.inf

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["q", "quality", "running_inf"])
        for (q, _, qual), inf in zip(self.records, self.curve):
            wr.writerow([q, repr(qual), repr(inf)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "x": [fmt_rational(v) for v in self.x],
            "theta": [fmt_rational(v) for v in self.theta],
            "w": self.w.to_json(),
            "Q_max": self.Q_max,
            "infimum": self.infimum,
            "tail_infimum": self.tail_infimum(),
            "tail_window": [self.Q_max // 2 + 1, self.Q_max],
        }


def _quality(dists: Sequence[Fraction], w: Weight, q: int) -> float:
    return max(float(dz) ** (1 / float(wi)) for dz, wi in zip(dists, w)) * abs(q)


def _nearest(v: int, den: int) -> tuple[int, int]:
    """Nearest integer p to v/den (ties to even, as round does) and |v - p den|."""
    p, r = divmod(v, den)
    if 2 * r > den or (2 * r == den and p % 2):
        p += 1
    return p, abs(v - p * den)


def _interval_dist(a: int, b: int, den: int) -> int:
    """den times the minimum of |y|_Z over y in [a/den, b/den]."""
    if b - a >= den or b // den > a // den or a % den == 0:
        return 0
    ra, rb = a % den, b % den
    return min(ra, den - ra, rb, den - rb)


def _running_min(records) -> list[float]:
    out, cur = [], math.inf
    for r in records:
        cur = min(cur, r[2])
        out.append(cur)
    return out


def simul_quality(x: Sequence, theta: Sequence, w: Weight, Q_max: int) -> BadnessReport:
    """max_i |q x_i - theta_i|_Z^{1/w_i} |q| for every 0 < |q| <= Q_max.

    Records are keyed by q > 0 and hold the worse (smaller) of q and -q.
    """
    if Q_max < 1:
        raise PreconditionViolated("Q_max must be at least 1")
    xs = tuple(_exact(v) for v in x)
    th = tuple(_exact(v) for v in theta)
    if not (len(xs) == len(th) == w.d):
        raise PreconditionViolated("x, theta and w must share a dimension")
    # integer arithmetic over a common denominator keeps large Q_max affordable
    den = math.lcm(*(v.denominator for v in xs + th))
    nums = [int(v * den) for v in xs]
    tns = [int(v * den) for v in th]
    records = []
    for q in range(1, Q_max + 1):
        best = None
        for sq in (q, -q):
            near = [_nearest(sq * a - t, den) for a, t in zip(nums, tns)]
            qual = _quality([r / den for _, r in near], w, sq)
            if best is None or qual < best[2]:
                best = (q, (sq,) + tuple(pi for pi, _ in near), qual)
        records.append(best)
    return BadnessReport("simul", xs, th, w, Q_max, records, _running_min(records))


def simul_quality_ball(ball: Rectangle, theta_bounds: Sequence[tuple[Fraction, Fraction]], w: Weight,
                       Q_max: int) -> BadnessReport:
    """Lower bounds of the quality over every x in the ball (theta given by enclosures)."""
    axes = []
    for lo, hi, (tlo, thi) in zip(ball.lo, ball.hi, theta_bounds):
        den = math.lcm(lo.denominator, hi.denominator, tlo.denominator, thi.denominator)
        axes.append((int(lo * den), int(hi * den), int(tlo * den), int(thi * den), den))
    records = []
    for q in range(1, Q_max + 1):
        best = None
        for sq in (q, -q):
            dists = []
            for lo, hi, tlo, thi, den in axes:
                a, b = sorted((sq * lo, sq * hi))
                dists.append(_interval_dist(a - thi, b - tlo, den) / den)
            qual = _quality(dists, w, sq)
            if best is None or qual < best[2]:
                best = (q, (sq,), qual)
        records.append(best)
    c = ball.center
    return BadnessReport("simul-ball", c, tuple(t[0] for t in theta_bounds), w, Q_max, records,
                         _running_min(records))


def dual_quality(x: Sequence, theta, w: Weight, Q_max: int) -> BadnessReport:
    """|q.x - theta|_Z max_i |q_i|^{1/w_i} over 0 < ||q||_inf <= Q_max, recorded per height."""
    if Q_max < 1:
        raise PreconditionViolated("Q_max must be at least 1")
    xs = tuple(_exact(v) for v in x)
    th = _exact(theta)
    d = len(xs)
    den = math.lcm(*(v.denominator for v in xs), th.denominator)
    nums = [int(v * den) for v in xs]
    tn = int(th * den)
    inv_w = [1 / float(wi) for wi in w]
    best = {}
    for q in itertools.product(range(-Q_max, Q_max + 1), repeat=d):
        H = max(abs(v) for v in q)
        if H == 0:
            continue
        r = (sum(a * b for a, b in zip(q, nums)) - tn) % den
        dz = min(r, den - r) / den
        qual = dz * max(abs(qi) ** e for qi, e in zip(q, inv_w))
        if H not in best or qual < best[H][2]:
            best[H] = (H, q, qual)
    records = [best[H] for H in range(1, Q_max + 1)]
    return BadnessReport("dual", xs, (th,), w, Q_max, records, _running_min(records))


# ---------------------------------------------------------------------------
# certification of game traces


def reach_Q(radius: Fraction, w1: Fraction, cap: int = Q_CAP) -> int:
    """Largest Q with Q^{1+w1} radius <= 1/16, capped."""
    Q = max(1, math.floor((1 / (16 * float(radius))) ** (1 / (1 + float(w1)))))
    limit = Fraction(1, 16) / radius
    while Q > 1 and Real.pow(Q, 1 + w1) > limit:
        Q -= 1
    while Q < cap and Real.pow(Q + 1, 1 + w1) <= limit:
        Q += 1
    return min(Q, cap)


@dataclass
class CertificationReport:
    depth: int
    default_win: bool
    replay_ok: bool
    levels_checked: list
    enforced_hits: list
    pending_hits: list
    Q_max: int
    tail_infimum: float
    tail_lower_bound: float
    shifted_rational: bool
    quality: BadnessReport | None = None

    @property
    def passed(self) -> bool:
        return self.replay_ok and not self.enforced_hits and not self.shifted_rational

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "depth": self.depth,
            "default_win": self.default_win,
            "replay_ok": self.replay_ok,
            "levels_checked": self.levels_checked,
            "enforced_hits": self.enforced_hits,
            "pending_hits": self.pending_hits,
            "Q_max": self.Q_max,
            "tail_infimum": self.tail_infimum,
            "tail_lower_bound": self.tail_lower_bound,
            "shifted_rational": self.shifted_rational,
        }


def _theta_bounds(theta: Theta, ball: Rectangle):
    return [theta.range_on(i, ball.lo[i], ball.hi[i]) for i in range(ball.dim)]


def certify_outcome(header: dict, records: Sequence[dict], Q_max: int | None = None,
                    raise_on_hit: bool = True) -> CertificationReport:
    """Replay the trace, re-enumerate every dangerous rectangle against Bob's last ball and measure its quality.

    Levels whose removal was due before the last ball (n + 1 + i0 within the
    depth reached, in units of the ledger's game) are enforced: a support
    point of the last ball inside one of their rectangles raises RectangleHit.
    Later levels are reported as pending.
    """
    rep = replay(header, records)
    state: GameState = rep.state
    led = ConstantsLedger.from_json(header["ledger"])
    theta = Theta.from_json(header["theta"])
    M = int(header.get("M", 1))
    support = state.config.support
    bob = state.bob
    last = bob[-1]
    depth = len(bob) - 1
    n_eff = depth // M
    checked, enforced, pending = [], [], []
    for n in range(0, n_eff + 1):
        if vn_m_range(led, n) is None:
            continue
        checked.append(n)
        for mem, j, pt in rectangle_hits(led, theta, support, n, last, bob[0]):
            item = {"v": mem.to_json(), "j": list(j), "n": n, "witness": [fmt_rational(v) for v in pt]}
            if n + 1 + led.i0 <= n_eff:
                enforced.append(item)
                if raise_on_hit:
                    raise RectangleHit(mem.to_json(), j, n, f"witness={item['witness']}")
            else:
                pending.append(item)
    radius = last.half_sides[0]
    Q = reach_Q(radius, led.w1) if Q_max is None else Q_max
    x = last.center
    th = tuple(theta.value(i, xi) for i, xi in enumerate(x))
    qual = simul_quality(x, th, led.weight, Q)
    lower = simul_quality_ball(last, _theta_bounds(theta, last), led.weight, Q)
    shifted = any(r[2] == 0 for r in qual.records)
    return CertificationReport(depth, state.default_win is not None, rep.ok, checked, enforced, pending, Q,
                               qual.tail_infimum(), lower.tail_infimum(), shifted, qual)
