from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ConstructionError

WEIGHTS_7 = (0.3, 0.24, 0.18, 0.12, 0.08, 0.05, 0.03)
WEIGHTS_12 = (0.24, 0.18, 0.12, 0.1, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01)
TOP3_MODES = ("mean", "over_n")


@dataclass(frozen=True)
class MetricWeights:
    """Descending nonnegative weights summing to 1; the most robust defense gets w[0]."""

    w: tuple[float, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("metric weights must be a non-empty vector")
        if not np.isfinite(w).all() or (w < 0).any():
            raise ValueError(f"metric weights must be finite and >= 0, got {list(self.w)}")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError(f"metric weights must sum to 1, got {float(w.sum())!r}")
        if (np.diff(w) > 0).any():
            raise ValueError(f"metric weights must be non-increasing, got {list(self.w)}")

    @classmethod
    def of(cls, values) -> "MetricWeights":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def uniform(cls, n: int) -> "MetricWeights":
        return cls(tuple([1.0 / n] * n))

    def __len__(self) -> int:
        return len(self.w)


def accuracy(predictions: np.ndarray, true_labels: np.ndarray, targets: np.ndarray) -> float:
    """Fraction of targets whose predicted label equals the true label."""
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ConstructionError("accuracy over an empty target set")
    return float(np.mean(np.asarray(predictions)[targets] == np.asarray(true_labels)[targets]))


def aggregate(scores, weights: MetricWeights, *, top3_mode: str = "mean") -> tuple[float, float, float]:
    """(s_avg, s_top3, s_weighted); scores are sorted descending first."""
    s = np.sort(np.asarray(scores, dtype=np.float64))[::-1]
    if s.size != len(weights):
        raise ConfigError(f"{s.size} scores but {len(weights)} metric weights")
    if top3_mode not in TOP3_MODES:
        raise ConfigError(f"unknown top3_mode {top3_mode!r}; expected one of {TOP3_MODES}")
    s_avg = float(s.mean())
    top = s[:3]
    s_top3 = float(top.sum() / (top.size if top3_mode == "mean" else s.size))
    s_weighted = float(np.dot(np.asarray(weights.w), s))
    return s_avg, s_top3, s_weighted
