"""Baseline and ablation attacks on the sequential injection plumbing.

FGSM and AFGSM here are the graph-injection adaptations: random wiring with
inverse-KL feature optimization, one shot or in batches.
"""
from __future__ import annotations

import numpy as np

from ..errors import BudgetError, ConstructionError
from ..graph.dataset import Dataset
from ..graph.injection import Budget, Injection, apply_injection, validate_injection
from ..gnn.grad import FeatureLayout, LossSpec
from ..gnn.model import Model, predict_labels
from ..gnn.objectives import apply_feature_map
from .config import AttackConfig
from .optimize import optimize_features
from .selection import random_edges, uniform_edges
from .tdgia import (
    AttackResult,
    BatchContext,
    defective_policy,
    sequential_injection,
    surrogate_labels_for,
)

EDGE_POLICIES = ("defective", "uniform", "random")


def random_policy(ctx: BatchContext) -> tuple[np.ndarray, int]:
    return random_edges(ctx.targets, ctx.b_seq, ctx.d_eff, ctx.rng), int(ctx.targets.size)


def afgsm_policy(ctx: BatchContext) -> tuple[np.ndarray, int]:
    """Random wiring restricted to targets the surrogate still gets right."""
    predicted = predict_labels(ctx.surrogate, ctx.current).labels[ctx.targets]
    candidates = ctx.targets[predicted == ctx.surrogate_labels]
    if candidates.size == 0:
        candidates = ctx.targets
    return random_edges(candidates, ctx.b_seq, ctx.d_eff, ctx.rng), int(candidates.size)


class UniformPolicy:
    """Round-robin over targets by node id; the cursor carries across batches."""

    def __init__(self) -> None:
        self.cursor = 0

    def __call__(self, ctx: BatchContext) -> tuple[np.ndarray, int]:
        edges, self.cursor = uniform_edges(ctx.targets, ctx.b_seq, ctx.d_eff, self.cursor)
        return edges, int(ctx.targets.size)


def run_fgsm(
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    progress: bool = False,
) -> AttackResult:
    return sequential_injection(
        "fgsm",
        surrogate,
        dataset,
        budget,
        config,
        edge_policy=random_policy,
        loss_mode=config.loss_mode or "inverse_kl",
        feature_map=config.feature_map or "clamp",
        batch_fraction=1.0,
        progress=progress,
    )


def run_afgsm(
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    progress: bool = False,
) -> AttackResult:
    return sequential_injection(
        "afgsm",
        surrogate,
        dataset,
        budget,
        config,
        edge_policy=afgsm_policy,
        loss_mode=config.loss_mode or "inverse_kl",
        feature_map=config.feature_map or "clamp",
        newest_only=True,
        progress=progress,
    )


def fgsm_attack(surrogate: Model, dataset: Dataset, budget: Budget, config: AttackConfig) -> Injection:
    return run_fgsm(surrogate, dataset, budget, config).injection


def afgsm_attack(surrogate: Model, dataset: Dataset, budget: Budget, config: AttackConfig) -> Injection:
    return run_afgsm(surrogate, dataset, budget, config).injection


def run_edge_policy_ablation(
    policy: str,
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    progress: bool = False,
) -> AttackResult:
    """TDGIA batches with the edge policy swapped; features always smooth + smoothmap."""
    if policy == "defective":
        edge_policy = defective_policy
    elif policy == "uniform":
        edge_policy = UniformPolicy()
    elif policy == "random":
        edge_policy = random_policy
    else:
        raise ValueError(f"unknown edge policy {policy!r}; expected one of {EDGE_POLICIES}")
    return sequential_injection(
        f"ablation:{policy}",
        surrogate,
        dataset,
        budget,
        config,
        edge_policy=edge_policy,
        loss_mode="smooth",
        feature_map="smoothmap",
        progress=progress,
    )


def edge_policy_ablation(
    policy: str,
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
) -> Injection:
    return run_edge_policy_ablation(policy, surrogate, dataset, budget, config).injection


def reoptimize_features(
    surrogate: Model,
    dataset: Dataset,
    injection: Injection,
    budget: Budget,
    config: AttackConfig,
    *,
    loss_mode: str,
    feature_map: str = "smoothmap",
    progress: bool = False,
) -> Injection:
    """Fresh features for a fixed injected topology; edges come back untouched."""
    if injection.n_injected == 0:
        return injection
    targets = np.asarray(dataset.test, dtype=np.int64)
    if targets.size == 0:
        raise ConstructionError("target set (test split) is empty")
    labels = surrogate_labels_for(surrogate, dataset, targets)
    rng = np.random.default_rng([config.seed, 2])
    raw = rng.normal(0.0, config.init_sigma, size=(injection.n_injected, dataset.dim))
    mapped, _ = apply_feature_map(feature_map, raw, budget.feature_bounds)
    placed = Injection.build(
        injection.n_injected,
        injection.cross_edges,
        np.clip(mapped, *budget.feature_bounds),
        injection.injected_edges,
    )
    result = optimize_features(
        surrogate,
        apply_injection(dataset, placed),
        targets,
        labels,
        raw,
        layout=FeatureLayout(n_original=dataset.n, feature_map=feature_map, bounds=budget.feature_bounds),
        loss=LossSpec(mode=loss_mode, r=config.r),
        lr=config.opt_lr,
        epochs=config.opt_epochs,
        progress=progress,
    )
    out = Injection.build(injection.n_injected, injection.cross_edges, result.features, injection.injected_edges)
    violations = validate_injection(out, budget, dataset.n)
    if violations:
        raise BudgetError(violations)
    return out


def optimization_ablation(
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    progress: bool = False,
) -> dict[str, Injection]:
    """Smooth vs inverse-KL features on one TDGIA topology.

    Only the loss differs between the two; edges and the feature map are shared.
    """
    topology = run_edge_policy_ablation("defective", surrogate, dataset, budget, config, progress=progress).injection
    feature_map = config.feature_map or "smoothmap"
    return {
        mode: reoptimize_features(
            surrogate, dataset, topology, budget, config, loss_mode=mode, feature_map=feature_map, progress=progress
        )
        for mode in ("smooth", "inverse_kl")
    }
