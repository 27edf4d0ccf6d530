import json
from pathlib import Path

import pytest

from artifact.cli import EXIT_CERT, EXIT_CONFIG, EXIT_OK, main
from artifact.game import write_trace
from planted import planted_fault

PLAY_D1 = {"w": ["1"], "beta": "1/16", "M": 2, "N": 12, "theta": ["1/3"], "Q_max": 2000}


def run_cli(tmp_path: Path, command: str, cfg: dict, name: str = "out", seed: int = 1) -> tuple[int, Path]:
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / name
    code = main([command, "--config", str(cfg_path), "--seed", str(seed), "--out", str(out)])
    return code, out


def report(out: Path) -> dict:
    return json.loads((out / "report.json").read_text(encoding="utf-8"))


def test_play_passes_and_is_deterministic(tmp_path):
    code, out = run_cli(tmp_path, "play", PLAY_D1, "a")
    assert code == EXIT_OK
    rep = report(out)
    assert rep["command"] == "play"
    code2, out2 = run_cli(tmp_path, "play", PLAY_D1, "b")
    assert code2 == EXIT_OK
    for f in ("trace.ndjson", "report.json", "curves.csv"):
        assert (out / f).read_bytes() == (out2 / f).read_bytes()


def test_play_zero_shift_fixture(tmp_path):
    cfg = {"w": ["1"], "beta": "1/16", "M": 2, "N": 12}
    code, out = run_cli(tmp_path, "play", cfg, seed=1)
    assert code == EXIT_OK
    assert report(out)["passed"]


def test_play_bad_weight_is_config_error(tmp_path):
    code, _ = run_cli(tmp_path, "play", dict(PLAY_D1, w=["1/2", "1/3"]))
    assert code == EXIT_CONFIG


def test_play_missing_key_is_config_error(tmp_path):
    cfg = dict(PLAY_D1)
    del cfg["beta"]
    code, _ = run_cli(tmp_path, "play", cfg)
    assert code == EXIT_CONFIG


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["eval", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_replay_of_planted_fault_fails_certification(tmp_path):
    header, records, _ = planted_fault()
    trace = tmp_path / "planted.ndjson"
    write_trace(trace, header, records)
    code, out = run_cli(tmp_path, "play", {"replay": str(trace)})
    assert code == EXIT_CERT
    assert not report(out)["passed"]


def test_eval_rational_not_bad(tmp_path):
    code, out = run_cli(tmp_path, "eval", {"x": ["1/2"], "Q_max": 50})
    assert code == EXIT_OK
    rep = report(out)
    assert rep["verdict"] == "not bad"
    assert (out / "curves.csv").read_text().startswith("q,quality,running_inf\n")


def test_eval_unknown_kind(tmp_path):
    code, _ = run_cli(tmp_path, "eval", {"x": ["1/2"], "kind": "mixed"})
    assert code == EXIT_CONFIG


def test_nullity_smoke(tmp_path):
    cfg = {"search": {"samples": 20, "Q_max": 400},
           "E": {"c_grid": ["1/2", "1/4"], "samples": 100, "t": 4},
           "sandwich": {"instances": 5, "Q_max": 50}}
    code, out = run_cli(tmp_path, "nullity", cfg)
    assert code == EXIT_OK
    rep = report(out)
    assert 0 <= rep["hit_rate"] <= 1
    assert rep["runs"][0]["instances"] == 20
    assert len(rep["E"]["estimates"]) == 2
    assert sum(rep["sandwich"]["verdicts"].values()) == 5


def test_transfer_identity(tmp_path):
    cfg = {"M": [["1", "0"], ["0", "1"]], "T": ["1", "1"], "u": [1, 0]}
    code, out = run_cli(tmp_path, "transfer", cfg)
    assert code == EXIT_OK
    assert report(out)["witness"] is not None


def test_constants(tmp_path):
    code, out = run_cli(tmp_path, "constants", {"w": ["1"], "beta": "1/16"})
    assert code == EXIT_OK
    led = report(out)["ledger"]
    assert led["i0"] == 5 and led["lambda1"] == 7


@pytest.mark.parametrize("seed", ["-1", str(2 ** 64)])
def test_seed_range(tmp_path, seed):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"w": ["1"], "beta": "1/16"}), encoding="utf-8")
    assert main(["constants", "--config", str(cfg_path), "--seed", seed, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
