from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from gialab.attacks.baselines import (
    afgsm_attack,
    edge_policy_ablation,
    fgsm_attack,
    optimization_ablation,
    reoptimize_features,
    run_afgsm,
    run_fgsm,
)
from gialab.attacks.config import AttackConfig
from gialab.attacks.optimize import optimize_features
from gialab.attacks.registry import method_by_key, method_keys
from gialab.attacks.tdgia import ATTACK_LOG_HEADER, correct_probability, run_tdgia, tdgia_attack, write_attack_log
from gialab.core import read_csv
from gialab.errors import ConfigError, ConstructionError
from gialab.graph.dataset import make_dataset
from gialab.graph.graph import Graph
from gialab.graph.injection import Budget, Injection, apply_injection, save_injection, validate_injection
from gialab.gnn.grad import FeatureLayout, LossSpec
from gialab.gnn.model import Model, init_model, predict_labels
from gialab.gnn.spec import ModelSpec, TrainConfig
from gialab.gnn.train import train
from gialab.graph.synth import SBMParams, synth_sbm
from gialab.evaluation.harness import evaluate_attack
from gialab.evaluation.metrics import MetricWeights, accuracy


def brute_force_admissible(inj: Injection, budget: Budget, n: int) -> bool:
    if inj.n_injected > budget.b or inj.features.shape != (inj.n_injected, inj.dim):
        return False
    deg = {j: 0 for j in range(inj.n_injected)}
    seen = set()
    for t, j in inj.cross_edges.tolist():
        if not (0 <= t < n and 0 <= j < inj.n_injected) or (t, j) in seen:
            return False
        seen.add((t, j))
        deg[j] += 1
    for i, j in inj.injected_edges.tolist():
        deg[i] += 1
        deg[j] += 1
    lo, hi = budget.feature_bounds
    in_range = all(lo <= x <= hi for row in inj.features.tolist() for x in row)
    return in_range and all(v <= budget.d for v in deg.values())


def test_zero_budget_gives_empty_injection(small_sbm, small_surrogate, fast_attack):
    result = run_tdgia(small_surrogate, small_sbm, Budget(b=0, d=3), fast_attack)
    assert result.injection.n_injected == 0
    assert result.log == []
    assert fgsm_attack(small_surrogate, small_sbm, Budget(b=0, d=3), fast_attack).n_injected == 0


def test_tdgia_batches_and_budget(small_sbm, small_surrogate, fast_attack):
    budget = Budget(b=10, d=3)
    result = run_tdgia(small_surrogate, small_sbm, budget, fast_attack)
    assert [e.nodes_injected for e in result.log] == [2, 4, 6, 8, 10]
    assert validate_injection(result.injection, budget, small_sbm.n) == []
    assert (result.injection.injected_degrees() == 3).all()


def test_batch_sizes_follow_config(small_sbm, small_surrogate, fast_attack):
    config = replace(fast_attack, batch_fraction=0.3)
    budget = Budget(b=7, d=2)
    assert config.batch_size(budget.b) == 3
    result = run_tdgia(small_surrogate, small_sbm, budget, config)
    assert [e.nodes_injected for e in result.log] == [3, 6, 7]


def test_tdgia_is_deterministic(tmp_path, small_sbm, small_surrogate, fast_attack, small_budget):
    a = tdgia_attack(small_surrogate, small_sbm, small_budget, fast_attack)
    b = tdgia_attack(small_surrogate, small_sbm, small_budget, fast_attack)
    assert save_injection(tmp_path / "a.json", a).read_bytes() == save_injection(tmp_path / "b.json", b).read_bytes()


def test_tdgia_lowers_surrogate_accuracy(small_sbm, small_surrogate):
    inj = tdgia_attack(small_surrogate, small_sbm, Budget(b=12, d=4), AttackConfig(opt_epochs=60, opt_lr=0.5))
    clean = accuracy(predict_labels(small_surrogate, small_sbm).labels, small_sbm.labels, small_sbm.test)
    attacked = apply_injection(small_sbm, inj)
    hit = accuracy(predict_labels(small_surrogate, attacked).labels, small_sbm.labels, small_sbm.test)
    assert hit < clean


@pytest.mark.parametrize("fmap", ["smoothmap", "clamp"])
def test_features_respect_bounds(fmap, small_sbm, small_surrogate, fast_attack):
    budget = Budget(b=4, d=2, feature_bounds=(-0.3, 0.6))
    inj = tdgia_attack(small_surrogate, small_sbm, budget, replace(fast_attack, feature_map=fmap, init_sigma=5.0))
    assert inj.features.min() >= -0.3 and inj.features.max() <= 0.6


def test_effective_degree_cap(small_sbm, small_surrogate, fast_attack):
    inj = tdgia_attack(small_surrogate, small_sbm, Budget(b=4, d=5), replace(fast_attack, effective_degree_cap=2))
    assert (inj.injected_degrees() == 2).all()
    with pytest.raises(ConfigError):
        tdgia_attack(small_surrogate, small_sbm, Budget(b=4, d=1), replace(fast_attack, effective_degree_cap=2))


def test_alpha_zero_selection_ignores_predictions(small_sbm, small_surrogate):
    other = init_model(small_surrogate.spec, small_sbm.dim, small_sbm.num_classes, seed=42).frozen()
    cfg = AttackConfig(alpha=0.0, opt_epochs=0)
    budget = Budget(b=6, d=3)
    a = tdgia_attack(small_surrogate, small_sbm, budget, cfg)
    b = tdgia_attack(other, small_sbm, budget, cfg)
    np.testing.assert_array_equal(a.cross_edges, b.cross_edges)


def test_correct_probability_of_uniform_model(small_sbm):
    c = small_sbm.num_classes
    model = init_model(ModelSpec(architecture="sgc", hidden_dims=()), small_sbm.dim, c, seed=0)
    flat = Model(model.spec, {k: np.zeros_like(v) for k, v in model.params.items()}, model.in_dim, c)
    targets = small_sbm.test
    p = correct_probability(flat, small_sbm, np.zeros(targets.size, dtype=np.int64), targets)
    np.testing.assert_allclose(p, 1.0 / c)


def test_correct_probability_on_clean_graph(small_sbm, small_surrogate):
    targets = small_sbm.test
    labels = predict_labels(small_surrogate, small_sbm).labels[targets]
    p = correct_probability(small_surrogate, small_sbm, labels, targets)
    assert (p > 1.0 / small_sbm.num_classes).all()


def test_optimize_zero_epochs_returns_mapped_init(small_sbm, small_surrogate):
    raw = np.random.default_rng(0).normal(size=(2, small_sbm.dim))
    placed = apply_injection(small_sbm, Injection.build(2, [(0, 0), (1, 1)], np.zeros((2, small_sbm.dim))))
    targets = small_sbm.test
    labels = predict_labels(small_surrogate, small_sbm).labels[targets]
    out = optimize_features(
        small_surrogate, placed, targets, labels, raw,
        layout=FeatureLayout(small_sbm.n), loss=LossSpec(), lr=1.0, epochs=0,
    )
    np.testing.assert_allclose(out.features, np.sin(raw))
    assert out.loss_after == out.loss_before


def test_optimization_lowers_loss(small_sbm, small_surrogate):
    wins = 0
    for seed in range(5):
        result = run_tdgia(small_surrogate, small_sbm, Budget(b=4, d=3), AttackConfig(opt_epochs=30, opt_lr=0.1, seed=seed))
        wins += int(np.mean([e.loss_after for e in result.log]) <= np.mean([e.loss_before for e in result.log]))
    assert wins == 5


def test_empty_target_set_rejected(small_sbm, small_surrogate, fast_attack):
    ds = make_dataset(small_sbm.graph, small_sbm.features, small_sbm.labels,
                      {"train": small_sbm.train, "val": small_sbm.val}, small_sbm.num_classes)
    with pytest.raises(ConstructionError):
        tdgia_attack(small_surrogate, ds, Budget(b=2, d=2), fast_attack)


def test_fgsm_is_one_shot(small_sbm, small_surrogate, fast_attack, small_budget):
    result = run_fgsm(small_surrogate, small_sbm, small_budget, fast_attack)
    assert len(result.log) == 1
    assert result.log[0].nodes_injected == small_budget.b
    assert validate_injection(result.injection, small_budget, small_sbm.n) == []


def test_afgsm_full_batch_matches_fgsm_topology(small_sbm, small_surrogate, fast_attack, small_budget):
    one_shot = replace(fast_attack, batch_fraction=1.0)
    a = afgsm_attack(small_surrogate, small_sbm, small_budget, one_shot)
    b = fgsm_attack(small_surrogate, small_sbm, small_budget, one_shot)
    np.testing.assert_array_equal(a.cross_edges, b.cross_edges)


def test_afgsm_draws_from_still_correct_targets(small_sbm, small_surrogate, fast_attack):
    result = run_afgsm(small_surrogate, small_sbm, Budget(b=10, d=3), replace(fast_attack, opt_epochs=40))
    considered = [e.targets_considered for e in result.log]
    assert considered[0] == small_sbm.test.size
    assert all(c <= small_sbm.test.size for c in considered)


def test_afgsm_freezes_earlier_batches(small_sbm, small_surrogate, fast_attack):
    two_batches = run_afgsm(small_surrogate, small_sbm, Budget(b=4, d=2), replace(fast_attack, batch_fraction=0.5))
    first_only = run_afgsm(small_surrogate, small_sbm, Budget(b=2, d=2), replace(fast_attack, batch_fraction=1.0))
    np.testing.assert_array_equal(two_batches.injection.features[:2], first_only.injection.features)


@pytest.mark.parametrize("policy", ["defective", "uniform", "random"])
def test_edge_policies_are_admissible(policy, small_sbm, small_surrogate, fast_attack, small_budget):
    inj = edge_policy_ablation(policy, small_surrogate, small_sbm, small_budget, fast_attack)
    assert validate_injection(inj, small_budget, small_sbm.n) == []
    again = edge_policy_ablation(policy, small_surrogate, small_sbm, small_budget, fast_attack)
    np.testing.assert_array_equal(inj.cross_edges, again.cross_edges)


def test_uniform_policy_spreads_links_evenly(small_sbm, small_surrogate, fast_attack):
    t = small_sbm.test.size
    budget = Budget(b=t // 3, d=3)
    inj = edge_policy_ablation("uniform", small_surrogate, small_sbm, budget, replace(fast_attack, opt_epochs=0))
    counts = np.bincount(inj.cross_edges[:, 0], minlength=small_sbm.n)[small_sbm.test]
    assert counts.max() - counts.min() <= 1


def test_unknown_edge_policy(small_sbm, small_surrogate, fast_attack, small_budget):
    with pytest.raises(ValueError):
        edge_policy_ablation("greedy", small_surrogate, small_sbm, small_budget, fast_attack)


def test_reoptimize_keeps_topology(small_sbm, small_surrogate, fast_attack, small_budget):
    base = tdgia_attack(small_surrogate, small_sbm, small_budget, fast_attack)
    out = reoptimize_features(small_surrogate, small_sbm, base, small_budget, fast_attack, loss_mode="inverse_kl")
    np.testing.assert_array_equal(out.cross_edges, base.cross_edges)
    assert validate_injection(out, small_budget, small_sbm.n) == []


def test_optimization_ablation_shares_edges(small_sbm, small_surrogate, fast_attack, small_budget):
    pair = optimization_ablation(small_surrogate, small_sbm, small_budget, fast_attack)
    assert set(pair) == {"smooth", "inverse_kl"}
    np.testing.assert_array_equal(pair["smooth"].cross_edges, pair["inverse_kl"].cross_edges)
    assert not np.array_equal(pair["smooth"].features, pair["inverse_kl"].features)


def test_registry():
    assert method_keys() == ["tdgia", "fgsm", "afgsm", "ablation:defective", "ablation:uniform", "ablation:random"]
    assert method_by_key("ablation:uniform").key == "ablation:uniform"
    with pytest.raises(KeyError):
        method_by_key("nettack")


def test_registry_runs_ablation(small_sbm, small_surrogate, fast_attack, small_budget):
    result = method_by_key("ablation:random").run(small_surrogate, small_sbm, small_budget, fast_attack)
    assert result.method == "ablation:random"
    assert result.injection.n_injected == small_budget.b


def test_attack_log_file(tmp_path, small_sbm, small_surrogate, fast_attack, small_budget):
    result = run_tdgia(small_surrogate, small_sbm, small_budget, fast_attack)
    header, rows = read_csv(write_attack_log(tmp_path / "attack_log.csv", result.log))
    assert header == ATTACK_LOG_HEADER
    assert [r[0] for r in rows] == ["tdgia"] * len(result.log)
    assert [int(r[1]) for r in rows] == list(range(len(result.log)))


def _fuzz_case(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 16))
    dim = int(rng.integers(1, 4))
    classes = int(rng.integers(2, 4))
    edges = rng.integers(0, n, size=(int(rng.integers(0, 2 * n)), 2))
    order = rng.permutation(n)
    n_test = int(rng.integers(1, n - 1))
    ds = make_dataset(
        Graph.from_edges(n, edges),
        rng.uniform(-1, 1, (n, dim)),
        rng.integers(0, classes, n),
        {"train": order[n_test:], "test": order[:n_test]},
        classes,
    )
    spec = [ModelSpec(hidden_dims=(4,)), ModelSpec(architecture="sgc", hidden_dims=()),
            ModelSpec(architecture="sage_mean", hidden_dims=(4,))][seed % 3]
    model = init_model(spec, dim, classes, seed=seed).frozen()
    lo = float(rng.uniform(-2, 0))
    budget = Budget(b=int(rng.integers(0, 8)), d=int(rng.integers(1, 6)), feature_bounds=(lo, lo + float(rng.uniform(0.1, 2))))
    cfg = AttackConfig(
        batch_fraction=float(rng.choice([0.2, 0.5, 1.0])),
        opt_epochs=int(rng.integers(0, 3)),
        init_sigma=float(rng.uniform(0.5, 4)),
        seed=seed,
    )
    method = method_keys()[seed % len(method_keys())]
    return method, model, ds, budget, cfg


def _fuzz(count: int):
    for seed in range(count):
        method, model, ds, budget, cfg = _fuzz_case(seed)
        inj = method_by_key(method).run(model, ds, budget, cfg).injection
        assert validate_injection(inj, budget, ds.n) == [], (seed, method)
        assert brute_force_admissible(inj, budget, ds.n), (seed, method)


def test_fuzzed_attacks_stay_admissible():
    _fuzz(100)


@pytest.mark.slow
def test_fuzzed_attacks_stay_admissible_full():
    _fuzz(1000)


# ---- desk-scale benchmarks ----

BENCH_SEEDS = range(5)
BENCH_BUDGET = Budget(b=20, d=5)


@pytest.fixture(scope="module")
def bench():
    ds = synth_sbm(SBMParams(), seed=0)
    surrogate = train(ModelSpec(), ds, TrainConfig(lr=0.01, epochs=300, seed=0))
    defenses = [
        (name, train(spec, ds, TrainConfig(lr=0.01, epochs=300, seed=1000 * (i + 1))))
        for i, (name, spec) in enumerate(
            [
                ("gcn_ln", ModelSpec(architecture="gcn", use_layernorm=True)),
                ("sgc", ModelSpec(architecture="sgc", hidden_dims=())),
                ("sage_mean", ModelSpec(architecture="sage_mean", hidden_dims=(32,), use_layernorm=False)),
            ]
        )
    ]
    return ds, surrogate, defenses


def _reduction(bench, inj: Injection) -> float:
    ds, _, defenses = bench
    return evaluate_attack(defenses, ds, inj, MetricWeights.of([0.5, 0.3, 0.2])).reduction


@pytest.mark.slow
def test_method_ordering(bench):
    ds, surrogate, _ = bench
    red = {m: [] for m in ("tdgia", "afgsm", "fgsm")}
    for seed in BENCH_SEEDS:
        cfg = AttackConfig(opt_epochs=300, seed=seed)
        for m in red:
            red[m].append(_reduction(bench, method_by_key(m).run(surrogate, ds, BENCH_BUDGET, cfg).injection))
    med = {m: float(np.median(v)) for m, v in red.items()}
    assert med["tdgia"] > med["afgsm"] >= med["fgsm"]
    assert sum(t >= 1.5 * f for t, f in zip(red["tdgia"], red["fgsm"])) >= 3


@pytest.mark.slow
def test_defective_edges_beat_uniform(bench):
    ds, surrogate, _ = bench
    wins = 0
    for seed in BENCH_SEEDS:
        cfg = AttackConfig(opt_epochs=300, seed=seed)
        defective = _reduction(bench, edge_policy_ablation("defective", surrogate, ds, BENCH_BUDGET, cfg))
        uniform = _reduction(bench, edge_policy_ablation("uniform", surrogate, ds, BENCH_BUDGET, cfg))
        wins += int(defective > uniform)
    assert wins >= 4


@pytest.mark.slow
def test_smooth_loss_not_worse_than_inverse_kl(bench):
    ds, surrogate, _ = bench
    smooth, ikl = [], []
    for seed in BENCH_SEEDS:
        pair = optimization_ablation(surrogate, ds, BENCH_BUDGET, AttackConfig(opt_epochs=300, seed=seed))
        smooth.append(_reduction(bench, pair["smooth"]))
        ikl.append(_reduction(bench, pair["inverse_kl"]))
    assert np.median(smooth) >= np.median(ikl)


@pytest.fixture(scope="module")
def tdgia_runs(bench):
    ds, surrogate, _ = bench
    return [run_tdgia(surrogate, ds, BENCH_BUDGET, AttackConfig(opt_epochs=300, seed=s)) for s in BENCH_SEEDS]


@pytest.mark.slow
def test_tdgia_drops_surrogate_accuracy(bench, tdgia_runs):
    ds, surrogate, _ = bench
    clean = accuracy(predict_labels(surrogate, ds).labels, ds.labels, ds.test)
    drops = [
        clean - accuracy(predict_labels(surrogate, apply_injection(ds, run.injection)).labels, ds.labels, ds.test)
        for run in tdgia_runs
    ]
    assert np.median(drops) >= 0.10


@pytest.mark.slow
def test_mean_correct_probability_falls_across_batches(tdgia_runs):
    per_batch = np.array([[entry.mean_p for entry in run.log] for run in tdgia_runs])
    assert per_batch.shape == (len(BENCH_SEEDS), 5)
    median = np.median(per_batch, axis=0)
    assert (np.diff(median) <= 1e-12).all()
