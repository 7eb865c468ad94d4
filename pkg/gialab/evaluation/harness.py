"""Transfer evaluation: fixed defenses scored on clean and attacked graphs.

Defenses are never retrained; each one runs in eval mode on the attacked
dataset built once per injection.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..graph.dataset import Dataset
from ..graph.injection import Budget, Injection, apply_injection
from ..gnn.model import Model, predict_labels
from ..attacks.config import AttackConfig
from ..attacks.tdgia import AttackResult
from .metrics import MetricWeights, accuracy, aggregate

log = logging.getLogger(__name__)

NamedModels = Sequence[tuple[str, Model]]
AttackRunner = Callable[..., AttackResult]


@dataclass(frozen=True)
class Scores:
    s_avg: float
    s_top3: float
    s_weighted: float

    def to_dict(self) -> dict:
        return {"s_avg": self.s_avg, "s_top3": self.s_top3, "s_weighted": self.s_weighted}


@dataclass(frozen=True)
class EvalReport:
    models: tuple[str, ...]
    clean_accuracy: tuple[float, ...]
    attacked_accuracy: tuple[float, ...]
    clean: Scores
    attacked: Scores
    method: str = "clean"
    seed: Optional[int] = None
    budget: Optional[dict] = None
    n_injected: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def reduction(self) -> float:
        return self.clean.s_weighted - self.attacked.s_weighted

    def per_model(self) -> list[tuple[str, float, float]]:
        return list(zip(self.models, self.clean_accuracy, self.attacked_accuracy))


@dataclass(frozen=True)
class TransferMatrix:
    surrogates: tuple[str, ...]
    defenses: tuple[str, ...]
    reductions: np.ndarray  # rows: surrogates, columns: defenses


@dataclass(frozen=True)
class SweepPoint:
    b: int
    report: EvalReport


def _map(fn, items: list, workers: int) -> list:
    # results come back in input order
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def defense_accuracies(
    defenses: NamedModels,
    dataset: Dataset,
    targets: np.ndarray,
    true_labels: np.ndarray,
    *,
    workers: int = 1,
) -> list[float]:
    def one(item: tuple[str, Model]) -> float:
        return accuracy(predict_labels(item[1], dataset).labels, true_labels, targets)

    return _map(one, list(defenses), workers)


def evaluate_attack(
    defenses: NamedModels,
    clean: Dataset,
    injection: Injection,
    weights: MetricWeights,
    *,
    top3_mode: str = "mean",
    method: str = "clean",
    seed: Optional[int] = None,
    budget: Optional[Budget] = None,
    clean_accuracy: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> EvalReport:
    """Score every defense on the test split, before and after the injection.

    Accuracy is against true labels. `clean_accuracy` skips the clean pass
    when the caller already has it.
    """
    if len(defenses) != len(weights):
        raise ConfigError(f"{len(defenses)} defenses but {len(weights)} metric weights")
    targets = clean.test
    true_labels = clean.labels
    if clean_accuracy is None:
        clean_accuracy = defense_accuracies(defenses, clean, targets, true_labels, workers=workers)
    attacked = apply_injection(clean, injection)
    attacked_accuracy = defense_accuracies(defenses, attacked, targets, true_labels, workers=workers)

    report = EvalReport(
        models=tuple(name for name, _ in defenses),
        clean_accuracy=tuple(float(a) for a in clean_accuracy),
        attacked_accuracy=tuple(attacked_accuracy),
        clean=Scores(*aggregate(clean_accuracy, weights, top3_mode=top3_mode)),
        attacked=Scores(*aggregate(attacked_accuracy, weights, top3_mode=top3_mode)),
        method=method,
        seed=seed,
        budget=None if budget is None else budget.to_dict(),
        n_injected=injection.n_injected,
    )
    log.info(
        "%s seed %s: weighted accuracy %.4f -> %.4f (reduction %.4f)",
        method,
        seed,
        report.clean.s_weighted,
        report.attacked.s_weighted,
        report.reduction,
    )
    return report


def transfer_matrix(
    surrogates: NamedModels,
    defenses: NamedModels,
    attack: AttackRunner,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    *,
    workers: int = 1,
    progress: bool = False,
) -> TransferMatrix:
    """One attack per surrogate, each injection scored against every defense."""
    targets = dataset.test
    clean = np.asarray(defense_accuracies(defenses, dataset, targets, dataset.labels, workers=workers))
    rows = []
    for name, surrogate in surrogates:
        injection = attack(surrogate, dataset, budget, config, progress=progress).injection
        attacked = apply_injection(dataset, injection)
        hit = np.asarray(defense_accuracies(defenses, attacked, targets, dataset.labels, workers=workers))
        rows.append(clean - hit)
        log.info("transfer from %s: reductions %s", name, np.round(clean - hit, 4).tolist())
    return TransferMatrix(
        surrogates=tuple(n for n, _ in surrogates),
        defenses=tuple(n for n, _ in defenses),
        reductions=np.array(rows, dtype=np.float64).reshape(len(surrogates), len(defenses)),
    )


def budget_sweep(
    surrogate: Model,
    defenses: NamedModels,
    attack: AttackRunner,
    dataset: Dataset,
    budget: Budget,
    config: AttackConfig,
    weights: MetricWeights,
    budgets: Sequence[int],
    *,
    method: str = "tdgia",
    top3_mode: str = "mean",
    workers: int = 1,
    progress: bool = False,
) -> list[SweepPoint]:
    """Weighted accuracy as the injected-node count grows; degree and bounds stay fixed."""
    clean = defense_accuracies(defenses, dataset, dataset.test, dataset.labels, workers=workers)
    points = []
    for b in budgets:
        sized = replace(budget, b=int(b))
        injection = attack(surrogate, dataset, sized, config, progress=progress).injection
        report = evaluate_attack(
            defenses,
            dataset,
            injection,
            weights,
            top3_mode=top3_mode,
            method=method,
            seed=config.seed,
            budget=sized,
            clean_accuracy=clean,
            workers=workers,
        )
        points.append(SweepPoint(b=int(b), report=report))
    return points
