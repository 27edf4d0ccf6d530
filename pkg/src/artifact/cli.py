"""Command-line entry points: play, eval, nullity, transfer and constants."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .arith import Rectangle, Weight, fmt_rational, parse_rational
from .adversary import BobPolicy, bob_move
from .bad_eval import certify_outcome, dual_quality, simul_quality
from .errors import ArtifactError, ConfigError, InvariantViolation, NoLegalBall, RectangleHit
from .game import (GameConfig, GameState, alice_record, bob_record, dumps, read_trace, step,
                   write_trace)
from .measures import Support
from .nullity import (Curve, Poly, e_set_exponent, estimate_E_measure, sample_box, sandwich_check,
                      search_hits)
from .strategy import AlicePolicy, ConstantsLedger, Theta, compute_constants
from .transference import CounterexampleReport, LinearSystem, verify_transference

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_INVARIANT = 0, 2, 3, 4


class CertificationFailed(ArtifactError):
    pass


def _q(x) -> Fraction:
    try:
        return parse_rational(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational: {x!r}") from exc


def _qs(xs) -> tuple[Fraction, ...]:
    return tuple(_q(x) for x in xs)


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------------------
# play


@dataclass
class GameSetup:
    config: GameConfig
    ledger: ConstantsLedger
    theta: Theta
    M: int
    bob: BobPolicy


def parse_theta(spec, d: int) -> Theta:
    if spec is None:
        return Theta.zero(d)
    if isinstance(spec, list):
        return Theta.constant(_qs(spec))
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("theta must be a list of rationals or a {kind: ...} object")
    th = Theta.from_json(spec)
    if th.d != d:
        raise ConfigError("theta dimension does not match the support")
    return th


def default_gamma(support: Support) -> Fraction:
    """Largest p/100 strictly below the support dimension."""
    return Fraction(math.ceil(support.alpha * 100) - 1, 100)


def game_setup(cfg: dict, seed: int) -> GameSetup:
    w = Weight.of(list(_qs(_need(cfg, "w"))))
    support = Support.from_json(cfg.get("support", {"kind": "full-cube", "d": w.d}))
    if support.d != w.d:
        raise ConfigError("support dimension does not match the weight")
    theta = parse_theta(cfg.get("theta"), w.d)
    beta = _q(_need(cfg, "beta"))
    M = int(cfg.get("M", 1))
    if M < 1:
        raise ConfigError("M must be a positive integer")
    r0 = _q(cfg.get("r0", "49/100"))
    gamma = _q(cfg["gamma"]) if "gamma" in cfg else default_gamma(support)
    if "center" in cfg:
        center = _qs(cfg["center"])
    elif support.kind == "full-cube":
        center = (Fraction(1, 2),) * w.d
    else:
        center = support.sample_point(random.Random(0), 30)
    N = int(_need(cfg, "N"))
    ledger = compute_constants(w, support, beta ** M, r0, theta.lip)
    config = GameConfig(gamma, beta, center, r0, support, N)
    bcfg = cfg.get("bob", {"kind": "random-legal"})
    bob = BobPolicy(bcfg.get("kind", "random-legal"), seed, theta, int(bcfg.get("max_denominator", 64)))
    return GameSetup(config, ledger, theta, M, bob)


def play_game(setup: GameSetup) -> tuple[dict, list[dict], GameState]:
    """Alice's strategy against the configured Bob; a Bob with no legal ball passes."""
    state = GameState.start(setup.config)
    alice = AlicePolicy(setup.ledger, setup.theta, setup.config.support, setup.M)
    records = []
    while not state.finished:
        move, events = alice.move(state)
        records.append(alice_record(move, "legal", events))
        try:
            ball = bob_move(setup.bob, state, move)
        except NoLegalBall:
            ball = None
        state = step(state, move, ball)
        records.append(bob_record(state.n if ball is not None else state.n + 1, ball,
                                  "legal" if ball is not None else "default-win"))
    header = {"config": setup.config.to_json(), "ledger": setup.ledger.to_json(), "theta": setup.theta.to_json(),
              "M": setup.M, "bob": setup.bob.to_json()}
    return header, records, state


def certify(header: dict, records: list[dict], out: Path, Q_max: int | None) -> int:
    try:
        rep = certify_outcome(header, records, Q_max=Q_max, raise_on_hit=False)
    except RectangleHit as exc:  # pragma: no cover - raise_on_hit is off
        raise CertificationFailed(str(exc)) from exc
    report = dict(rep.to_json(), command="play")
    write_json(out / "report.json", report)
    q = rep.quality
    write_csv(out / "curves.csv", ["q", "quality", "running_inf"],
              ([r[0], repr(r[2]), repr(i)] for r, i in zip(q.records, q.curve)))
    return EXIT_OK if rep.passed else EXIT_CERT


def cmd_play(cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    if "replay" in cfg:
        header, records = read_trace(cfg["replay"])
        (out / "trace.ndjson").write_text(
            "".join(dumps(r) + "\n" for r in [dict(header, player="header")] + records), encoding="utf-8")
        return certify(header, records, out, cfg.get("Q_max"))
    setup = game_setup(cfg, seed)
    header, records, _ = play_game(setup)
    header["seed"] = seed
    write_trace(out / "trace.ndjson", header, records)
    return certify(header, records, out, cfg.get("Q_max"))


# ---------------------------------------------------------------------------
# eval


def cmd_eval(cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    x = _qs(_need(cfg, "x"))
    w = Weight.of(list(_qs(cfg.get("w", [1] * len(x) if len(x) == 1 else _need(cfg, "w")))))
    Q = int(cfg.get("Q_max", 1000))
    kind = cfg.get("kind", "simul")
    if kind == "simul":
        theta = _qs(cfg.get("theta", [0] * len(x)))
        rep = simul_quality(x, theta, w, Q)
    elif kind == "dual":
        rep = dual_quality(x, _q(cfg.get("theta", 0)), w, Q)
    else:
        raise ConfigError(f"unknown eval kind {kind!r}")
    summary = rep.summary()
    summary["verdict"] = "not bad" if rep.infimum == 0 else "no evidence against badness"
    summary["command"] = "eval"
    write_json(out / "report.json", summary)
    write_csv(out / "curves.csv", ["q", "quality", "running_inf"],
              ([r[0], repr(r[2]), repr(i)] for r, i in zip(rep.records, rep.curve)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# nullity


def parse_curve(spec) -> Curve:
    if spec in (None, "parabola"):
        return Curve.parabola()
    if isinstance(spec, dict):
        kind = spec.get("kind")
        U = spec.get("U", [["0"], ["1"]])
        if kind == "parabola":
            return Curve.parabola(_q(U[0][0]), _q(U[1][0]))
        if kind == "moment":
            return Curve.moment(int(spec["m"]), _q(U[0][0]), _q(U[1][0]))
        if kind == "polynomial":
            d = len(U[0])
            fs = tuple(Poly.of(d, {tuple(e): _q(c) for e, c in f}) for f in spec["fs"])
            return Curve(fs, Rectangle(_qs(U[0]), _qs(U[1])), _q(spec["M"]), int(spec.get("l", 2)))
    raise ConfigError(f"unknown curve {spec!r}")


def random_theta(rng: random.Random, n: int, den: int = 997) -> tuple[Fraction, ...]:
    """Nonzero shift with coordinates in (0, 1) of denominator den."""
    return tuple(Fraction(rng.randrange(1, den), den) for _ in range(n))


def _hits_job(args):
    x, curve, theta, w, d1, d2, Q, slack = args
    return [h.q for h in search_hits(x, curve, theta, w, d1, d2, Q, slack)]


def run_search(curve, w, thetas, xs, d1, d2, Q, slack, threads):
    jobs = [(x, curve, th, w, d1, d2, Q, slack) for th in thetas for x in xs]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(_hits_job, jobs, chunksize=16))
    return [_hits_job(j) for j in jobs]


def loglog_slope(cs, fractions) -> float | None:
    pts = [(math.log(float(c)), math.log(f)) for c, f in zip(cs, fractions) if f > 0]
    if len(pts) < 2:
        return None
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    num = sum((a - mx) * (b - my) for a, b in pts)
    den = sum((a - mx) ** 2 for a, _ in pts)
    return num / den


def cmd_nullity(cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    curve = parse_curve(cfg.get("curve"))
    rng = random.Random(seed)
    weights = cfg.get("weights", [["1/2", "1/2"]])
    report: dict = {"command": "nullity", "curve": curve.to_json(), "seed": seed, "runs": []}
    rows = []
    s = cfg.get("search", {})
    samples = int(s.get("samples", 100))
    Q = int(s.get("Q_max", 1000))
    grid = [int(v) for v in s.get("Q_grid", [Q // 4, Q // 2, Q])]
    d1, d2 = _q(s.get("delta1", 1)), _q(s.get("delta2", 1))
    slack = _q(s.get("slack", 1))
    n_theta = int(s.get("thetas", 1))
    thetas = [_qs(t) for t in s["theta"]] if "theta" in s else [random_theta(rng, curve.n) for _ in range(n_theta)]
    xs = [sample_box(rng, curve.U) for _ in range(samples)]
    for wspec in weights:
        w = Weight.of(list(_qs(wspec)))
        hits = run_search(curve, w, thetas, xs, d1, d2, Q, slack, threads)
        nonempty = sum(bool(h) for h in hits)
        counts = [sum(sum(1 for q in h if q <= g) for h in hits) for g in grid]
        report["runs"].append({
            "w": w.to_json(), "thetas": [[fmt_rational(v) for v in t] for t in thetas],
            "theta_zero": any(all(v == 0 for v in t) for t in thetas),
            "instances": len(hits), "nonempty": nonempty, "hit_rate": nonempty / len(hits),
            "Q_grid": grid, "hit_counts": counts,
            "growing": all(a < b for a, b in zip(counts, counts[1:])),
            "delta1": fmt_rational(d1), "delta2": fmt_rational(d2), "slack": fmt_rational(slack),
        })
        rows += [[",".join(w.to_json()), g, c] for g, c in zip(grid, counts)]
    report["hit_rate"] = min(r["hit_rate"] for r in report["runs"])
    if "E" in cfg:
        e = cfg["E"]
        w = Weight.of(list(_qs(e.get("w", weights[0]))))
        cs = [_q(c) for c in e.get("c_grid", ["1/2", "1/4", "1/8", "1/16", "1/32"])]
        ests = [estimate_E_measure(curve, int(e.get("k", 1)), c, _q(e.get("t", 12)), int(e.get("samples", 400)), w,
                                   seed) for c in cs]
        fr = [m.fraction for m in ests]
        report["E"] = {"c_grid": [fmt_rational(c) for c in cs], "estimates": [m.to_json() for m in ests],
                       "slope": loglog_slope(cs, fr), "exponent": fmt_rational(e_set_exponent(curve))}
    if "sandwich" in cfg:
        sw = cfg["sandwich"]
        w = Weight.of(list(_qs(sw.get("w", weights[0]))))
        verdicts: dict = {}
        for _ in range(int(sw.get("instances", 100))):
            x = sample_box(rng, curve.U)
            th = random_theta(rng, curve.n)
            r = sandwich_check(x, curve, th, w, _q(sw.get("delta", "1/2")), int(sw.get("Q_max", 200)))
            verdicts[r.verdict] = verdicts.get(r.verdict, 0) + 1
        report["sandwich"] = {"verdicts": dict(sorted(verdicts.items())), "violations": 0}
    write_json(out / "report.json", report)
    write_csv(out / "curves.csv", ["w", "Q_max", "hits"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# transfer and constants


def cmd_transfer(cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    S = LinearSystem(tuple(_qs(r) for r in _need(cfg, "M")), _qs(_need(cfg, "T")))
    u = [int(v) for v in _need(cfg, "u")]
    res = verify_transference(S, u)
    if isinstance(res, CounterexampleReport):
        report = {"command": "transfer", "witness": None, "radius": list(res.radius), "searched": res.searched,
                  "note": res.note}
        code = EXIT_CERT
    else:
        report = {"command": "transfer", "witness": list(res)}
        code = EXIT_OK
    write_json(out / "report.json", report)
    return code


def cmd_constants(cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    setup = game_setup(dict(cfg, N=cfg.get("N", 0)), seed)
    write_json(out / "report.json", {"command": "constants", "ledger": setup.ledger.to_json(), "M": setup.M})
    return EXIT_OK


COMMANDS = {"play": cmd_play, "eval": cmd_eval, "nullity": cmd_nullity, "transfer": cmd_transfer,
            "constants": cmd_constants}


def run(command: str, cfg: dict, seed: int, out: Path, threads: int = 1) -> int:
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[command](cfg, seed, out, threads)
    except (ConfigError, KeyError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CertificationFailed, RectangleHit) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except InvariantViolation as exc:
        print(f"invariant violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ArtifactError as exc:
        print(f"could not complete: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="artifact")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON file; rationals as \"p/q\" strings")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="out")
    a = ap.parse_args(argv)
    try:
        cfg = json.loads(Path(a.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return EXIT_CONFIG
    seed = a.seed if a.seed is not None else int(cfg.get("seed", 0))
    if not 0 <= seed < 2 ** 64:
        print("config error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    return run(a.command, cfg, seed, Path(a.out), max(1, a.threads))


if __name__ == "__main__":
    sys.exit(main())
