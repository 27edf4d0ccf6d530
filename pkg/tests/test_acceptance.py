"""End-to-end acceptance runs; each test records a PASS or FAIL line with its measurements."""
import json
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction as F
from pathlib import Path

from artifact.arith import Rectangle, Weight
from artifact.bad_eval import certify_outcome
from artifact.cli import game_setup, loglog_slope, main, play_game, random_theta
from artifact.errors import InvariantViolation, SandwichViolated, SearchBudgetExceeded, SingularMatrix
from artifact.lattice import shortest_vector_sq, successive_minima
from artifact.measures import Support
from artifact.nullity import Curve, e_set_exponent, estimate_E_measure, sample_box, sandwich_check, search_hits
from artifact.strategy import (Theta, compute_constants, dual_system_solution, sample_survivors,
                               simul_system_solution, verify_ledger, vn_members)
from artifact.transference import LinearSystem, certified_radius, transpose_system, verify_transference
from oracles import minima_oracle, random_unimodular, svp_oracle


# ---------------------------------------------------------------------------
# lattice, transference and ledger


def test_c1_lattice_oracle_equivalence(verdict):
    rng = random.Random(1)
    bases = [random_unimodular(rng, rng.choice((2, 3, 4))) for _ in range(500)]
    mismatches, elapsed = 0, 0.0
    for B in bases:
        t0 = time.perf_counter()
        sq, _ = shortest_vector_sq(B)
        lam = list(successive_minima(B).lam_sq)
        elapsed += time.perf_counter() - t0
        if sq != svp_oracle(B) or lam != minima_oracle(B):
            mismatches += 1
    ok = mismatches == 0 and elapsed < 60
    verdict(1, ok, f"500 bases, {mismatches} mismatches, library time {elapsed:.1f}s")
    assert ok


def planted_system(rng: random.Random, n: int):
    while True:
        M = [[F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(n + 1)] for _ in range(n + 1)]
        u = [rng.randint(-3, 3) for _ in range(n + 1)]
        if not any(u):
            continue
        try:
            S0 = LinearSystem(M, (1,) * (n + 1))
        except SingularMatrix:
            continue
        T = [max(abs(L), F(1, 7)) for L in S0.forms(u)]
        return LinearSystem(M, T), u


def test_c2_transference_soundness(verdict):
    rng = random.Random(2)
    found = budget = outside = 0
    for k in range(200):
        S, u = planted_system(rng, 1 + k % 3)
        try:
            v = verify_transference(S, u)
        except SearchBudgetExceeded:
            budget += 1
            continue
        if isinstance(v, tuple) and any(v) and transpose_system(S).satisfied_by(v):
            found += 1
            rad = certified_radius(S, transpose_system(S))
            outside += any(abs(x) > r for x, r in zip(v, rad))
    ok = found == 200 and budget == 0 and outside == 0
    verdict(2, ok, f"{found}/200 witnesses, {budget} budget errors, {outside} outside the box")
    assert ok


def random_ledger_inputs(rng: random.Random):
    d = rng.randint(1, 3)
    parts = [rng.randint(1, 5) for _ in range(d)]
    w = Weight.of([F(p, sum(parts)) for p in parts])
    lip = rng.choice((F(0), F(1, 10), F(1, 2)))
    while True:
        beta = rng.choice((F(1, rng.randint(3, 200)), F(rng.randint(1, 4), rng.randint(10, 100))))
        if beta < F(49, 100) and beta < 1 / (1 + lip):
            break
    sup = rng.choice((Support.full_cube(d), Support.cantor(d)))
    return w, sup, beta, lip


def test_c3_ledger_integrity(verdict):
    rng = random.Random(3)
    failures, nonempty = [], 0
    for _ in range(50):
        w, sup, beta, lip = random_ledger_inputs(rng)
        led = compute_constants(w, sup, beta, F(49, 100), lip)
        bad = [k for k, v in verify_ledger(led).items() if not v]
        if bad:
            failures.append((w.to_json(), str(beta), bad))
        b0 = Rectangle.ball((F(1, 2),) * w.d, F(49, 100))
        theta = Theta.constant((F(1, 3),) * w.d)
        nonempty += sum(bool(vn_members(led, s, b0, theta)) for s in range(led.lambda1 + 2))
    ok = not failures and nonempty == 0
    verdict(3, ok, f"50 ledgers, {len(failures)} with failed checks, {nonempty} nonempty early shells")
    assert ok, failures


# ---------------------------------------------------------------------------
# games


def theta_spec(kind: str, d: int):
    if kind == "zero":
        return None
    if kind == "constant":
        return ["1/2"] * d
    return {"kind": "affine", "offset": ["1/3"] * d, "slope": ["1/10"] + ["0"] * (d - 1), "lip": "1/10"}


def game_config(d: int, theta: str, support: str, bob: str, N: int) -> dict:
    base = {"w": ["1"], "beta": "1/16", "M": 2} if d == 1 else {"w": ["1/2", "1/2"], "beta": "1/8", "M": 1}
    return dict(base, N=N, theta=theta_spec(theta, d), support={"kind": support, "d": d}, bob={"kind": bob})


GRID = [(d, th, sup, bob) for d in (1, 2) for th in ("zero", "constant", "affine")
        for sup in ("full-cube", "cantor-product") for bob in ("random-legal", "rational-seeker")]
SEEDS = range(25)
C5_SEEDS = range(3)


@dataclass
class GameResult:
    depth: int = 0
    default_win: bool = False
    enforced: int = 0
    passed: bool = False
    shifted: bool = False
    tail: float = 0.0
    Q: int = 0
    seconds: float = 0.0
    invariant: str = ""


GAMES: dict = {}


def run_game(key, seed: int, N: int) -> GameResult:
    if (key, seed, N) in GAMES:
        return GAMES[key, seed, N]
    t0 = time.perf_counter()
    try:
        header, records, state = play_game(game_setup(game_config(*key, N), seed))
        rep = certify_outcome(header, records, raise_on_hit=False)
        res = GameResult(rep.depth, rep.default_win, len(rep.enforced_hits), rep.passed, rep.shifted_rational,
                         rep.tail_infimum, rep.Q_max)
    except InvariantViolation as exc:
        res = GameResult(invariant=type(exc).__name__)
    res.seconds = time.perf_counter() - t0
    GAMES[key, seed, N] = res
    return res


def test_c4_game_soundness(verdict):
    results = [run_game(key, seed, 14) for key in GRID for seed in SEEDS]
    hits = sum(r.enforced for r in results)
    invariants = sum(bool(r.invariant) for r in results)
    slowest = max(r.seconds for r in results)
    wins = sum(r.default_win for r in results)
    ok = hits == 0 and invariants == 0 and slowest < 300
    verdict(4, ok, f"{len(results)} games at N=14, {hits} rectangle hits, {invariants} invariant events, "
                   f"{wins} default wins, slowest {slowest:.1f}s")
    assert ok


def test_c5_badness_evidence(verdict):
    thresholds, uncertified = {}, 0
    for N in (10, 12, 14):
        tails = []
        for key in GRID:
            for seed in C5_SEEDS:
                r = run_game(key, seed, N)
                if r.passed:
                    tails.append(r.tail)
                else:
                    uncertified += 1
        thresholds[N] = min(tails)
    values = [thresholds[N] for N in (10, 12, 14)]
    ok = all(v > 0 for v in values) and all(a <= b for a, b in zip(values, values[1:]))
    shown = ", ".join(f"N={N}: {thresholds[N]:.3g}" for N in thresholds)
    verdict(5, ok, f"thresholds {shown}; {uncertified} uncertified outcomes (shifted-rational centres) excluded")
    assert ok


def test_c6_no_solution_checks(verdict):
    # one-step play (M = 1) so that levels beyond lambda_1 are reached within 14 rounds
    games = [("full-cube", th, 0) for th in ("zero", "constant", "affine")]
    games += [("cantor-product", th, 3) for th in ("zero", "constant", "affine")]
    levels = points = violations = 0
    for sup, th, seed in games:
        cfg = dict(game_config(1, th, sup, "random-legal", 14), M=1)
        setup = game_setup(cfg, seed)
        _, _, state = play_game(setup)
        led = setup.ledger
        rng = random.Random(seed)
        for n in range(led.lambda1 + 1, len(state.bob)):
            pts = sample_survivors(led, state.bob, n, setup.config.support, rng, 20)
            levels += 1
            points += len(pts)
            violations += sum(dual_system_solution(led, x, n) is not None
                              or simul_system_solution(led, x, n) is not None for x in pts)
    ok = violations == 0 and levels > 0
    verdict(6, ok, f"{len(games)} games, {levels} levels beyond lambda_1, {points} survivors, {violations} violations")
    assert ok


# ---------------------------------------------------------------------------
# curves


def test_c7_nullity_shadow(verdict):
    rng = random.Random(7)
    curve = Curve.parabola()
    thetas = [random_theta(rng, 2) for _ in range(3)]
    xs = [sample_box(rng, curve.U) for _ in range(500)]
    grid = (2500, 5000, 10 ** 4)
    t0 = time.perf_counter()
    lines, ok = [], True
    for w in (Weight.of(F(1, 2), F(1, 2)), Weight.of(F(3, 5), F(2, 5))):
        for th in thetas:
            qs = [[h.q for h in search_hits(x, curve, th, w, 1, 1, 10 ** 4)] for x in xs]
            rate = sum(bool(q) for q in qs) / len(xs)
            counts = [sum(1 for h in qs for q in h if q <= g) for g in grid]
            ok &= rate >= 0.95 and counts[0] < counts[1] < counts[2]
            lines.append(f"{rate:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    verdict(7, ok, f"hit rates {' '.join(lines)} over 3 shifts x 2 weights, {elapsed:.0f}s")
    assert ok


def test_c8_e_set_scaling(verdict):
    curve = Curve.parabola()
    w = Weight.of(F(1, 2), F(1, 2))
    cs = [F(1, 2 ** j) for j in range(1, 6)]
    fracs = [estimate_E_measure(curve, 1, c, 12, 400, w, seed=3).fraction for c in cs]
    slope = loglog_slope(cs, fracs)
    # along the grid c decreases, and the bound's positive power of c makes the fraction shrink
    ok = all(a >= b for a, b in zip(fracs, fracs[1:])) and slope is not None and slope > 0 < e_set_exponent(curve)
    verdict(8, ok, f"fractions {[round(f, 4) for f in fracs]} for c = 1/2..1/32, log-log slope {slope}")
    assert ok


def test_c9_sandwich(verdict):
    rng = random.Random(9)
    curve = Curve.parabola()
    weights = (Weight.of(F(1, 2), F(1, 2)), Weight.of(F(3, 5), F(2, 5)))
    violations, verdicts = 0, {}
    for k in range(1000):
        x = sample_box(rng, curve.U)
        th = random_theta(rng, 2)
        delta = rng.choice((F(1, 4), F(1, 2), F(1)))
        try:
            res = sandwich_check(x, curve, th, weights[k % 2], delta, 120)
            verdicts[res.verdict] = verdicts.get(res.verdict, 0) + 1
        except SandwichViolated:
            violations += 1
    ok = violations == 0
    verdict(9, ok, f"1000 instances, {violations} violations, verdicts {dict(sorted(verdicts.items()))}")
    assert ok


# ---------------------------------------------------------------------------
# determinism


def cli_outputs(tmp: Path, command: str, cfg: dict, name: str, seed: int = 5) -> dict:
    path = tmp / f"{name}.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp / name
    code = main([command, "--config", str(path), "--seed", str(seed), "--out", str(out)])
    return {"code": code, **{f.name: f.read_bytes() for f in sorted(out.iterdir())}}


def test_c10_determinism(verdict, tmp_path):
    commands = {
        "play": game_config(1, "affine", "cantor-product", "rational-seeker", 12),
        "eval": {"x": ["5/13", "2/7"], "w": ["1/2", "1/2"], "theta": ["1/3", "0"], "Q_max": 500},
        "nullity": {"search": {"samples": 30, "Q_max": 1000}, "E": {"samples": 100, "t": 6},
                    "sandwich": {"instances": 10, "Q_max": 60}},
        "transfer": {"M": [["1", "7/5"], ["0", "-1"]], "T": ["1/5", "5"], "u": [1, 1]},
        "constants": {"w": ["2/3", "1/3"], "beta": "1/8"},
    }
    differing = []
    for name, cfg in commands.items():
        if cli_outputs(tmp_path, name, cfg, f"{name}-a") != cli_outputs(tmp_path, name, cfg, f"{name}-b"):
            differing.append(name)
    original = tmp_path / "play-a"
    replayed = cli_outputs(tmp_path, "play", {"replay": str(original / "trace.ndjson")}, "replay")
    for f in ("trace.ndjson", "report.json", "curves.csv"):
        if replayed[f] != (original / f).read_bytes():
            differing.append(f"replay {f}")
    ok = not differing
    verdict(10, ok, f"{len(commands)} commands rerun and one replay, differing outputs: {differing or 'none'}")
    assert ok
