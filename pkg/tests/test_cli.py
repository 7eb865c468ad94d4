from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from gialab.app import main
from gialab.core import read_csv
from gialab.db import q_all
from gialab.evaluation.report import load_reports
from gialab.graph.injection import load_injection, validate_injection
from gialab.paths import attack_dir, parse_attack_dir

TINY = {
    "dataset": {"sbm": {"blocks": 3, "nodes": 90, "p_in": 0.1, "p_out": 0.01, "feature_dim": 6}},
    "surrogate": {
        "name": "surrogate_gcn",
        "model": {"architecture": "gcn", "hidden_dims": [8], "use_layernorm": False},
        "train": {"epochs": 40, "eval_interval": 10},
    },
    "defenses": [
        {"name": "gcn_ln", "model": {"architecture": "gcn", "hidden_dims": [8], "use_layernorm": True}},
        {"name": "sgc", "model": {"architecture": "sgc", "hidden_dims": []}},
        {"name": "sage_mean", "model": {"architecture": "sage_mean", "hidden_dims": [8]}},
    ],
    "budget": {"nodes": 4, "degree": 2},
    "attack": {"opt_epochs": 5},
    "seeds": [0],
}


def _config(tmp_path: Path, **over) -> Path:
    tree = {**TINY, **over}
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(tree), encoding="utf-8")
    return path


def _pipeline(cfg: Path, out: Path, *methods: str) -> None:
    common = ["--config", str(cfg), "--out", str(out)]
    assert main(["synth", *common]) == 0
    assert main(["train", *common]) == 0
    for method in methods:
        assert main(["attack", *common, "--method", method]) == 0
    assert main(["evaluate", *common]) == 0


def test_full_pipeline(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "run"
    _pipeline(cfg, out, "tdgia", "ablation:uniform")

    for name in ("edges.csv", "features.csv", "labels.csv", "train.csv", "val.csv", "test.csv", "config.yaml"):
        assert (out / "dataset" / name).exists()
    for name in ("surrogate_gcn", "gcn_ln", "sgc", "sage_mean"):
        assert (out / "models" / f"{name}.json").exists()
    header, rows = read_csv(out / "models" / "clean_accuracy.csv")
    assert header[0] == "model" and len(rows) == 4

    d = attack_dir(out, "tdgia", 0)
    injection, budget = load_injection(d / "injection.json")
    assert injection.n_injected == 4
    assert validate_injection(injection, budget, 90) == []
    assert (d / "attack_log.csv").exists() and (d / "config.yaml").exists()

    reports = load_reports(out / "eval" / "report.json")
    assert [r.method for r in reports] == ["clean", "ablation:uniform", "tdgia"]
    assert reports[2].seed == 0
    assert reports[0].reduction == 0.0
    assert (out / "eval" / "metrics.csv").exists()
    assert not (out / "eval" / "curve.csv").exists()

    commands = [row["command"] for row in q_all(out / "ledger.sqlite", "SELECT command FROM runs ORDER BY id")]
    assert commands[:4] == ["synth", "train", "attack", "attack"]
    assert commands.count("evaluate") == 3
    metric_rows = q_all(out / "ledger.sqlite", "SELECT COUNT(*) AS n FROM metrics")
    assert metric_rows[0]["n"] == 4 + 3 * 3


def test_pipeline_is_deterministic(tmp_path):
    cfg = _config(tmp_path)
    _pipeline(cfg, tmp_path / "a", "tdgia")
    _pipeline(cfg, tmp_path / "b", "tdgia")
    for rel in ("attacks/tdgia/seed_0/injection.json", "eval/metrics.csv", "models/sgc.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_synth_rerun_is_identical(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "run"
    assert main(["synth", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    first = {p.name: p.read_bytes() for p in (out / "dataset").glob("*.csv")}
    assert main(["synth", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    assert {p.name: p.read_bytes() for p in (out / "dataset").glob("*.csv")} == first


def test_sweep_and_transfer(tmp_path):
    cfg = _config(
        tmp_path,
        sweep_budgets=[0, 2, 4],
        transfer_surrogates=[{"name": "surrogate_sgc", "model": {"architecture": "sgc", "hidden_dims": []}}],
    )
    out = tmp_path / "run"
    _pipeline(cfg, out)
    header, rows = read_csv(out / "eval" / "transfer_matrix.csv")
    assert header == ["surrogate", "gcn_ln", "sgc", "sage_mean"]
    assert [r[0] for r in rows] == ["surrogate_gcn", "surrogate_sgc"]
    _, rows = read_csv(out / "eval" / "curve.csv")
    assert sorted({int(r[2]) for r in rows}) == [0, 2, 4]
    assert len(rows) == 3 * (3 + 3)
    assert {r[0] for r in rows} == {"tdgia"}
    assert all(float(r[7]) == 0.0 for r in rows if int(r[2]) == 0)


def test_sweep_over_several_methods(tmp_path):
    cfg = _config(tmp_path, sweep_budgets=[0, 4], sweep_methods=["tdgia", "fgsm", "ablation:uniform"])
    out = tmp_path / "run"
    _pipeline(cfg, out)
    _, rows = read_csv(out / "eval" / "curve.csv")
    assert list(dict.fromkeys(r[0] for r in rows)) == ["tdgia", "fgsm", "ablation:uniform"]
    for method in ("tdgia", "fgsm", "ablation:uniform"):
        mine = [r for r in rows if r[0] == method]
        assert len(mine) == 2 * (3 + 3)
        assert {r[4] for r in mine if r[3] == "model"} == {"gcn_ln", "sgc", "sage_mean"}


def test_unknown_sweep_method_exits_2(tmp_path):
    cfg = _config(tmp_path, sweep_budgets=[2], sweep_methods=["tdgia", "nettack"])
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 2


def test_explicit_injection_path(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "run"
    _pipeline(cfg, out, "fgsm", "afgsm")
    common = ["--config", str(cfg), "--out", str(out)]
    assert main(["evaluate", *common, str(attack_dir(out, "afgsm", 0))]) == 0
    assert [r.method for r in load_reports(out / "eval" / "report.json")] == ["clean", "afgsm"]


def test_unknown_method_exits_2(tmp_path):
    assert main(["attack", "--config", str(_config(tmp_path)), "--out", str(tmp_path), "--method", "nettack"]) == 2


def test_budget_flags_may_only_tighten(tmp_path):
    cfg = _config(tmp_path)
    common = ["--config", str(cfg), "--out", str(tmp_path / "run")]
    assert main(["attack", *common, "--budget-nodes", "50"]) == 2
    assert main(["attack", *common, "--budget-degree", "3"]) == 2


def test_weight_count_mismatch_exits_2(tmp_path):
    cfg = _config(tmp_path, metric_weights=[0.6, 0.4])
    out = tmp_path / "run"
    common = ["--config", str(cfg), "--out", str(out)]
    assert main(["synth", *common]) == 0
    assert main(["train", *common]) == 0
    assert main(["evaluate", *common]) == 2


@pytest.mark.parametrize(
    "over",
    [
        {"metric_weights": [0.2, 0.3, 0.5]},
        {"top3_mode": "median"},
        {"seeds": []},
        {"sweep_budgets": [10]},
        {"attack": {"alpha": 2.0}},
        {"budget": {"nodes": 4, "degree": 2, "feature_bounds": [1.0, -1.0]}},
    ],
)
def test_bad_config_exits_2(tmp_path, over):
    assert main(["synth", "--config", str(_config(tmp_path, **over)), "--out", str(tmp_path)]) == 2


def test_missing_inputs_exit_2(tmp_path):
    assert main(["synth", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert main(["train", "--config", str(_config(tmp_path)), "--out", str(tmp_path / "empty")]) == 2


def test_undecodable_inputs_exit_2(tmp_path):
    bad_cfg = tmp_path / "bad.yaml"
    bad_cfg.write_bytes(b"seeds: [0]\n# \xff\xfe\n")
    assert main(["synth", "--config", str(bad_cfg), "--out", str(tmp_path)]) == 2

    cfg = _config(tmp_path)
    out = tmp_path / "run"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "dataset" / "labels.csv", "ab") as f:
        f.write(b"\xc3\n")
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 2


def test_parse_attack_dir():
    assert parse_attack_dir(Path("runs/attacks/ablation_random/seed_3")) == ("ablation:random", 3)
    assert parse_attack_dir(Path("runs/attacks/tdgia/seed_0")) == ("tdgia", 0)
    assert parse_attack_dir(Path("elsewhere/seed_2")) == (None, 2)
    assert parse_attack_dir(Path("elsewhere/mine")) == (None, None)
