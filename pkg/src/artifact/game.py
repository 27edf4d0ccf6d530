"""Referee for the Cantor potential game played with max-norm balls.

Plies alternate per level k = 0, 1, ...: Alice submits every collection that
constrains Bob's next ball, keyed by (j, i) with j + i = k + 1 and j >= 1 (the
collection chosen after Bob's ball B_{j-1}); every ball in it has radius
beta^{k+1} r0.  Bob then picks B_{k+1}.  Collections may be restricted to the
current ball B_k: balls that miss B_k cannot constrain Bob, so the restriction
is equivalent for play, and the budget is checked on what is submitted.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import Rectangle, as_fraction, fmt_rational, parse_rational
from .errors import ConfigError, IllegalMove, MalformedMove
from .measures import Support

CLAUSE_RADIUS = "radius-schedule"
CLAUSE_BUDGET = "cardinality-budget"
CLAUSE_CONTAIN = "containment"
CLAUSE_DISJOINT = "disjointness"
CLAUSE_SUPPORT = "center-on-support"
CLAUSE_INDEX = "collection-index"


@dataclass(frozen=True)
class GameConfig:
    gamma: Fraction
    beta: Fraction
    center: tuple[Fraction, ...]
    r0: Fraction
    support: Support
    max_depth: int

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        object.__setattr__(self, "beta", as_fraction(self.beta))
        object.__setattr__(self, "r0", as_fraction(self.r0))
        object.__setattr__(self, "center", tuple(as_fraction(x) for x in self.center))
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if not 0 < self.r0 < 1:
            raise ConfigError("r0 must lie in (0, 1)")
        if self.gamma < 0 or not self.gamma < self.support.alpha:
            raise ConfigError(f"gamma must lie in [0, alpha={self.support.alpha:.6g})")
        if len(self.center) != self.support.d:
            raise ConfigError("center dimension does not match the support")
        if not self.support.contains_point(self.center):
            raise ConfigError("B0 must be centred on the support")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be nonnegative")

    @property
    def d(self) -> int:
        return self.support.d

    def radius(self, n: int) -> Fraction:
        return self.beta ** n * self.r0

    def budget_ok(self, count: int, i: int) -> bool:
        """count <= beta^{-gamma (i+1)}, decided exactly as count^q beta^{p(i+1)} <= 1."""
        if count == 0:
            return True
        p, q = self.gamma.numerator, self.gamma.denominator
        return Fraction(count) ** q * self.beta ** (p * (i + 1)) <= 1

    def budget_floor(self, i: int) -> int:
        """Largest admissible collection size at index i."""
        k = 0
        step = 1
        while self.budget_ok(k + step, i):
            k += step
            step *= 2
        while step > 1:
            step //= 2
            if self.budget_ok(k + step, i):
                k += step
        return k

    def to_json(self) -> dict:
        return {
            "gamma": fmt_rational(self.gamma),
            "beta": fmt_rational(self.beta),
            "center": [fmt_rational(x) for x in self.center],
            "r0": fmt_rational(self.r0),
            "support": self.support.to_json(),
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GameConfig":
        return cls(
            parse_rational(obj["gamma"]),
            parse_rational(obj["beta"]),
            tuple(parse_rational(x) for x in obj["center"]),
            parse_rational(obj["r0"]),
            Support.from_json(obj["support"]),
            int(obj["max_depth"]),
        )


@dataclass(frozen=True)
class AliceMove:
    """Collections in force for Bob's next ball, keyed by (j, i)."""

    k: int
    collections: dict = field(default_factory=dict)

    def balls(self) -> list[Rectangle]:
        return [b for key in sorted(self.collections) for b in self.collections[key]]


@dataclass(frozen=True)
class AliceDefaultWin:
    level: int
    reason: str = "no legal ball for Bob in the candidate net"


@dataclass(frozen=True)
class Outcome:
    center: tuple[Fraction, ...]
    radius: Fraction
    ball: Rectangle


@dataclass
class GameState:
    config: GameConfig
    bob: list[Rectangle] = field(default_factory=list)
    alice: list[AliceMove] = field(default_factory=list)
    default_win: AliceDefaultWin | None = None

    @classmethod
    def start(cls, config: GameConfig) -> "GameState":
        return cls(config, [Rectangle.ball(config.center, config.r0)])

    @property
    def n(self) -> int:
        """Index of Bob's latest ball."""
        return len(self.bob) - 1

    @property
    def finished(self) -> bool:
        return self.default_win is not None or self.n >= self.config.max_depth

    def current(self) -> Rectangle:
        return self.bob[-1]


def _is_ball(b) -> bool:
    return isinstance(b, Rectangle) and len(set(b.half_sides)) == 1


def check_alice(state: GameState, move: AliceMove) -> None:
    """Raise IllegalMove or MalformedMove if Alice's move breaks a rule."""
    cfg = state.config
    k = state.n
    if move.k != k:
        raise MalformedMove(f"move for level {move.k} submitted at level {k}")
    rad = cfg.radius(k + 1)
    for key, balls in move.collections.items():
        if not (isinstance(key, tuple) and len(key) == 2):
            raise MalformedMove(f"bad collection key {key!r}")
        j, i = key
        if j < 1 or i < 0 or j + i != k + 1:
            raise IllegalMove(CLAUSE_INDEX, f"collection {key} does not constrain B_{k + 1}")
        for b in balls:
            if not _is_ball(b) or b.dim != cfg.d:
                raise MalformedMove(f"collection {key} holds a non-ball")
            if b.half_sides[0] != rad:
                raise IllegalMove(CLAUSE_RADIUS, f"ball radius {b.half_sides[0]} != {rad}")
        if not cfg.budget_ok(len(balls), i):
            raise IllegalMove(CLAUSE_BUDGET, f"{len(balls)} balls exceed the budget at i={i}")


def check_bob(state: GameState, move: AliceMove, ball: Rectangle) -> None:
    cfg = state.config
    k = state.n
    if not _is_ball(ball) or ball.dim != cfg.d:
        raise MalformedMove("Bob must play a ball")
    if ball.half_sides[0] != cfg.radius(k + 1):
        raise IllegalMove(CLAUSE_RADIUS, f"radius {ball.half_sides[0]} != {cfg.radius(k + 1)}")
    if not cfg.support.contains_point(ball.center):
        raise IllegalMove(CLAUSE_SUPPORT, "ball is not centred on the support")
    if not state.current().contains(ball):
        raise IllegalMove(CLAUSE_CONTAIN, f"ball is not contained in B_{k}")
    for key in sorted(move.collections):
        for a in move.collections[key]:
            if a.intersects(ball):
                raise IllegalMove(CLAUSE_DISJOINT, f"ball meets a removed ball of collection {key}")


def legal_alice(state: GameState, move: AliceMove) -> bool:
    try:
        check_alice(state, move)
    except IllegalMove:
        return False
    return True


def legal_bob(state: GameState, move: AliceMove, ball: Rectangle) -> bool:
    try:
        check_bob(state, move, ball)
    except IllegalMove:
        return False
    return True


def candidate_centers(state: GameState) -> list[tuple[Fraction, ...]]:
    """Bob's candidate net: support points at pitch r_{k+1}/4 keeping the ball inside B_k.

    The current centre is always included, so the concentric ball is a candidate.
    """
    cfg = state.config
    r = cfg.radius(state.n + 1)
    cur = state.current()
    axes = []
    for a, b, c in zip(cur.lo, cur.hi, cur.center):
        pts = set(cfg.support.net_1d(a + r, b - r, r / 4))
        pts.add(c)
        axes.append(sorted(pts))
    return [tuple(p) for p in itertools.product(*axes)]


def legal_candidates(state: GameState, move: AliceMove) -> list[Rectangle]:
    """Every legal ball of the candidate net, in a fixed order."""
    r = state.config.radius(state.n + 1)
    blocked = move.balls()
    out = []
    for c in candidate_centers(state):
        ball = Rectangle.ball(c, r)
        if not state.current().contains(ball):
            continue
        # float prefilter before the exact test
        if any(_float_overlap(a, ball) and a.intersects(ball) for a in blocked):
            continue
        out.append(ball)
    return out


def _float_overlap(a: Rectangle, b: Rectangle, margin: float = 1e-9) -> bool:
    for lo1, hi1, lo2, hi2 in zip(a.lo, a.hi, b.lo, b.hi):
        if float(hi1) < float(lo2) - margin or float(hi2) < float(lo1) - margin:
            return False
    return True


def step(state: GameState, alice: AliceMove, ball: Rectangle | None) -> GameState:
    """Validate both moves and return the successor state.

    ``ball=None`` claims that Bob has no legal ball; the claim is verified on the
    candidate net and yields a default win for Alice.
    """
    if state.finished:
        raise MalformedMove("game already finished")
    check_alice(state, alice)
    new = GameState(state.config, list(state.bob), list(state.alice) + [alice], None)
    if ball is None:
        if legal_candidates(state, alice):
            raise IllegalMove(CLAUSE_DISJOINT, "Bob passed but a legal ball exists")
        new.default_win = AliceDefaultWin(state.n)
        return new
    check_bob(state, alice, ball)
    new.bob.append(ball)
    return new


def outcome(state: GameState) -> Outcome | AliceDefaultWin:
    if state.default_win is not None:
        return state.default_win
    b = state.current()
    return Outcome(b.center, b.half_sides[0], b)


# ---------------------------------------------------------------------------
# traces


def ball_to_json(b: Rectangle, tag=None) -> dict:
    out = {"center": [fmt_rational(x) for x in b.center], "radius": fmt_rational(b.half_sides[0])}
    if tag is not None:
        out["tag"] = list(tag)
    return out


def ball_from_json(obj: dict) -> Rectangle:
    return Rectangle.ball([parse_rational(x) for x in obj["center"]], parse_rational(obj["radius"]))


def alice_record(move: AliceMove, verdict: str, events: Sequence[dict] = ()) -> dict:
    balls = [ball_to_json(b, key) for key in sorted(move.collections) for b in move.collections[key]]
    rec = {"n": move.k, "player": "alice", "balls": balls, "verdict": verdict,
           "keys": [list(k) for k in sorted(move.collections)]}
    if events:
        rec["events"] = list(events)
    return rec


def bob_record(k: int, ball: Rectangle | None, verdict: str) -> dict:
    return {"n": k, "player": "bob", "balls": [] if ball is None else [ball_to_json(ball)], "verdict": verdict}


def alice_move_from_record(rec: dict) -> AliceMove:
    cols: dict = {tuple(k): [] for k in rec.get("keys", [])}
    for b in rec["balls"]:
        cols.setdefault(tuple(b["tag"]), []).append(ball_from_json(b))
    return AliceMove(rec["n"], cols)


def dumps(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_trace(path, header: dict, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(dict(header, player="header")) + "\n")
        for r in records:
            fh.write(dumps(r) + "\n")


def read_trace(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("player") != "header":
        raise MalformedMove("trace has no header record")
    return lines[0], lines[1:]


@dataclass
class ReplayReport:
    state: GameState
    verdicts: list[str]
    mismatches: list[int]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay(header: dict, records: Sequence[dict]) -> ReplayReport:
    """Re-run the referee over stored plies and compare verdicts record by record."""
    cfg = GameConfig.from_json(header["config"])
    state = GameState.start(cfg)
    verdicts, bad = [], []
    pending: AliceMove | None = None
    for idx, rec in enumerate(records):
        if rec["player"] == "alice":
            pending = alice_move_from_record(rec)
            try:
                check_alice(state, pending)
                v = "legal"
            except (IllegalMove, MalformedMove) as exc:
                v = f"illegal:{getattr(exc, 'clause', 'malformed')}"
        elif rec["player"] == "bob":
            if pending is None:
                raise MalformedMove("Bob record without a preceding Alice record")
            ball = ball_from_json(rec["balls"][0]) if rec["balls"] else None
            try:
                state = step(state, pending, ball)
                v = "default-win" if ball is None else "legal"
            except (IllegalMove, MalformedMove) as exc:
                v = f"illegal:{getattr(exc, 'clause', 'malformed')}"
                if ball is not None:
                    # keep following the stored line of play
                    state = GameState(state.config, state.bob + [ball], state.alice + [pending])
            pending = None
        else:
            continue
        verdicts.append(v)
        if v != rec["verdict"]:
            bad.append(idx)
    return ReplayReport(state, verdicts, bad)
