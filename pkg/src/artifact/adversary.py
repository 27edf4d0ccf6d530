"""Bob policies used to exercise Alice's strategy."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .arith import Rectangle
from .errors import ConfigError, NoLegalBall
from .game import AliceMove, GameState, ball_from_json, legal_candidates

KINDS = ("random-legal", "rational-seeker", "replay")


@dataclass
class BobPolicy:
    """A Bob policy with private RNG state.

    ``max_denominator`` bounds the shifted rationals (p + theta)/m that the
    rational seeker aims at; ``balls`` holds Bob's stored balls B_1, B_2, ...
    for replay.
    """

    kind: str
    seed: int = 0
    theta: object = None
    max_denominator: int = 64
    balls: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown Bob policy {self.kind!r}")
        self.rng = random.Random(self.seed)

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "BobPolicy":
        balls = [ball_from_json(r["balls"][0]) if r["balls"] else None for r in records if r["player"] == "bob"]
        return cls("replay", balls=balls)

    def to_json(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "max_denominator": self.max_denominator}


def _theta_at(theta, i: int, x: Fraction) -> float:
    if theta is None:
        return 0.0
    return float(theta.value(i, x))


def seek_target(state: GameState, theta, max_denominator: int) -> tuple[float, ...] | None:
    """Shifted rational (p_i + theta_i)/m inside the current ball with the smallest m, nearest the centre."""
    cur = state.current()
    c = cur.center
    for m in range(1, max_denominator + 1):
        target = []
        for i, (lo, hi) in enumerate(zip(cur.lo, cur.hi)):
            t = _theta_at(theta, i, c[i])
            lo_f, hi_f = float(lo), float(hi)
            p_lo, p_hi = math.ceil(m * lo_f - t), math.floor(m * hi_f - t)
            best = None
            for p in range(p_lo, p_hi + 1):
                y = (p + t) / m
                if lo_f <= y <= hi_f and (best is None or abs(y - float(c[i])) < abs(best - float(c[i]))):
                    best = y
            if best is None:
                break
            target.append(best)
        else:
            return tuple(target)
    return None


def bob_move(policy: BobPolicy, state: GameState, move: AliceMove) -> Rectangle:
    """Bob's next ball; raises NoLegalBall when the candidate net is exhausted."""
    if policy.kind == "replay":
        k = state.n
        if k >= len(policy.balls) or policy.balls[k] is None:
            raise NoLegalBall(f"stored trace has no ball for level {k + 1}")
        return policy.balls[k]
    legal = legal_candidates(state, move)
    if not legal:
        raise NoLegalBall(f"no legal ball at level {state.n + 1}")
    if policy.kind == "rational-seeker":
        target = seek_target(state, policy.theta, policy.max_denominator)
        if target is not None:
            def dist(b):
                return max(abs(float(x) - t) for x, t in zip(b.center, target))
            return min(legal, key=dist)
    return policy.rng.choice(legal)
