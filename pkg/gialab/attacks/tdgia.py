"""Sequential injection driver and the TDGIA attack built on it.

Each batch: score targets on the current attacked graph, wire b_seq new
injected nodes by the edge policy, optimize injected features, check the
budget, then rebuild the attacked graph for the next batch.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from tqdm import tqdm

from ..core import write_csv
from ..errors import BudgetError, ConfigError, ConstructionError
from ..graph.dataset import Dataset
from ..graph.graph import degrees
from ..graph.injection import Budget, Injection, apply_injection, validate_injection
from ..gnn.grad import FeatureLayout, LossSpec
from ..gnn.model import Model, forward, predict_labels
from ..gnn.objectives import apply_feature_map
from .config import AttackConfig
from .functional import defective_factor, defective_score
from .optimize import optimize_features
from .selection import select_defective_edges

log = logging.getLogger(__name__)

ATTACK_LOG_HEADER = [
    "method",
    "batch",
    "mean_p",
    "loss_before",
    "loss_after",
    "nodes_injected",
    "targets_considered",
    "wall_time",
]


@dataclass(frozen=True, eq=False)
class NodeScores:
    p: np.ndarray
    lam: np.ndarray
    mu: np.ndarray


@dataclass(frozen=True)
class BatchLog:
    method: str
    batch: int
    mean_p: float
    loss_before: float
    loss_after: float
    nodes_injected: int
    targets_considered: int
    wall_time: float

    def row(self) -> list:
        return [
            self.method,
            self.batch,
            self.mean_p,
            self.loss_before,
            self.loss_after,
            self.nodes_injected,
            self.targets_considered,
            self.wall_time,
        ]


@dataclass(frozen=True, eq=False)
class AttackResult:
    method: str
    injection: Injection
    budget: Budget
    surrogate_labels: np.ndarray
    log: list[BatchLog] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class BatchContext:
    """What an edge policy may look at when wiring one batch."""

    surrogate: Model
    current: Dataset
    targets: np.ndarray
    surrogate_labels: np.ndarray
    p: np.ndarray
    budget: Budget
    config: AttackConfig
    b_seq: int
    d_eff: int
    batch: int
    rng: np.random.Generator


# Returns (edges, targets_considered); edge rows are (target id, local index in batch).
EdgePolicy = Callable[[BatchContext], tuple[np.ndarray, int]]


def correct_probability(
    model: Model,
    current: Dataset,
    surrogate_labels: np.ndarray,
    targets: np.ndarray,
) -> np.ndarray:
    """p_v: probability the model gives the surrogate label of each target."""
    targets = np.asarray(targets, dtype=np.int64)
    probs = forward(model, current, "eval").probabilities
    return probs[targets, np.asarray(surrogate_labels, dtype=np.int64)]


def surrogate_labels_for(model: Model, clean: Dataset, targets: np.ndarray) -> np.ndarray:
    # fixed once on the clean graph
    return predict_labels(model, clean).labels[np.asarray(targets, dtype=np.int64)]


def node_scores(
    current: Dataset,
    targets: np.ndarray,
    p: np.ndarray,
    d: int,
    config: AttackConfig,
) -> NodeScores:
    lam = defective_factor(degrees(current.graph)[targets], d, config.k1, config.k2)
    return NodeScores(p=p, lam=lam, mu=defective_score(p, lam, config.alpha))


def defective_policy(ctx: BatchContext) -> tuple[np.ndarray, int]:
    scores = node_scores(ctx.current, ctx.targets, ctx.p, ctx.budget.d, ctx.config)
    return select_defective_edges(scores.mu, ctx.targets, ctx.b_seq, ctx.d_eff), int(ctx.targets.size)


def sequential_injection(
    method: str,
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    edge_policy: EdgePolicy,
    loss_mode: str,
    feature_map: str,
    newest_only: bool = False,
    batch_fraction: Optional[float] = None,
    progress: bool = False,
) -> AttackResult:
    """Inject budget.b nodes in batches; the target set is the test split.

    newest_only=True freezes the features of earlier batches; otherwise every
    injected node is re-optimized after each batch.
    """
    targets = np.asarray(dataset.test, dtype=np.int64)
    if targets.size == 0:
        raise ConstructionError("target set (test split) is empty")
    try:
        d_eff = config.degree_cap(budget.d)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if dataset.dim == 0:
        raise ConstructionError("dataset has no features")

    labels = surrogate_labels_for(surrogate, dataset, targets)
    if batch_fraction is not None:
        config = replace(config, batch_fraction=batch_fraction)
    step = config.batch_size(budget.b)
    edge_rng = np.random.default_rng([config.seed, 1])
    feat_rng = np.random.default_rng([config.seed, 2])
    layout = FeatureLayout(n_original=dataset.n, feature_map=feature_map, bounds=budget.feature_bounds)
    loss = LossSpec(mode=loss_mode, r=config.r)

    injection = Injection.empty(dataset.dim)
    current = dataset
    cross = np.zeros((0, 2), dtype=np.int64)
    raw = np.zeros((0, dataset.dim))
    logs: list[BatchLog] = []
    injected = 0
    n_batches = int(np.ceil(budget.b / step)) if step else 0

    with tqdm(total=n_batches, desc=f"{method} batches", disable=not progress, leave=False) as bar:
        while injected < budget.b:
            started = time.perf_counter()
            b_seq = min(step, budget.b - injected)
            p = correct_probability(surrogate, current, labels, targets)
            ctx = BatchContext(
                surrogate=surrogate,
                current=current,
                targets=targets,
                surrogate_labels=labels,
                p=p,
                budget=budget,
                config=config,
                b_seq=b_seq,
                d_eff=d_eff,
                batch=len(logs),
                rng=edge_rng,
            )
            local, considered = edge_policy(ctx)
            local = np.asarray(local, dtype=np.int64).reshape(-1, 2)
            cross = np.concatenate([cross, np.stack([local[:, 0], local[:, 1] + injected], axis=1)])
            raw = np.vstack([raw, feat_rng.normal(0.0, config.init_sigma, size=(b_seq, dataset.dim))])
            injected += b_seq

            mapped, _ = apply_feature_map(feature_map, raw, budget.feature_bounds)
            placed = Injection.build(injected, cross, np.clip(mapped, *budget.feature_bounds))
            attacked = apply_injection(dataset, placed)
            trainable = None
            if newest_only:
                trainable = np.zeros(injected, dtype=bool)
                trainable[injected - b_seq :] = True
            result = optimize_features(
                surrogate,
                attacked,
                targets,
                labels,
                raw,
                layout=layout,
                loss=loss,
                lr=config.opt_lr,
                epochs=config.opt_epochs,
                trainable_rows=trainable,
                progress=progress,
            )
            raw = result.raw
            injection = Injection.build(injected, cross, result.features)
            violations = validate_injection(injection, budget, dataset.n)
            if violations:
                raise BudgetError(violations)
            current = apply_injection(dataset, injection)

            entry = BatchLog(
                method=method,
                batch=len(logs),
                mean_p=float(p.mean()),
                loss_before=result.loss_before,
                loss_after=result.loss_after,
                nodes_injected=injected,
                targets_considered=considered,
                wall_time=time.perf_counter() - started,
            )
            logs.append(entry)
            log.info(
                "%s batch %d: +%d nodes (%d/%d), mean p %.4f, loss %.4f -> %.4f",
                method,
                entry.batch,
                b_seq,
                injected,
                budget.b,
                entry.mean_p,
                entry.loss_before,
                entry.loss_after,
            )
            bar.update(1)

    return AttackResult(method=method, injection=injection, budget=budget, surrogate_labels=labels, log=logs)


def run_tdgia(
    surrogate: Model,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    progress: bool = False,
) -> AttackResult:
    return sequential_injection(
        "tdgia",
        surrogate,
        dataset,
        budget,
        config,
        edge_policy=defective_policy,
        loss_mode=config.loss_mode or "smooth",
        feature_map=config.feature_map or "smoothmap",
        progress=progress,
    )


def tdgia_attack(surrogate: Model, dataset: Dataset, budget: Budget, config: AttackConfig) -> Injection:
    return run_tdgia(surrogate, dataset, budget, config).injection


def write_attack_log(path: Path, logs: list[BatchLog]) -> Path:
    return write_csv(path, ATTACK_LOG_HEADER, (entry.row() for entry in logs))
