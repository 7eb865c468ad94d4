from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from tqdm import tqdm

from ..errors import NumericalError
from ..graph.dataset import Dataset
from ..gnn.adam import Adam
from ..gnn.grad import FeatureLayout, LossSpec, grad_injected_features
from ..gnn.model import Model
from ..gnn.objectives import apply_feature_map

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    features: np.ndarray  # mapped, always inside the feature bounds
    raw: np.ndarray
    loss_before: float
    loss_after: float


def optimize_features(
    model: Model,
    attacked: Dataset,
    targets: np.ndarray,
    surrogate_labels: np.ndarray,
    raw_init: np.ndarray,
    *,
    layout: FeatureLayout,
    loss: LossSpec,
    lr: float,
    epochs: int,
    trainable_rows: Optional[np.ndarray] = None,
    progress: bool = False,
) -> OptimizeResult:
    """Adam on the raw variables of the injected rows of `attacked`.

    The model sees feature_map(raw) at every step. `trainable_rows` is a
    boolean mask over injected nodes; unmasked rows keep their raw values.
    """
    raw = {"raw": np.array(raw_init, dtype=np.float64)}
    prop = model.propagator(attacked)
    masks = None
    if trainable_rows is not None:
        masks = {"raw": np.asarray(trainable_rows, dtype=np.float64)[:, None]}
    opt = Adam(lr=lr)

    def evaluate() -> float:
        value, _ = grad_injected_features(
            model, attacked, layout, targets, surrogate_labels, loss, raw["raw"], prop=prop
        )
        return value

    loss_before = evaluate() if raw["raw"].size else 0.0
    loss_after = loss_before
    if raw["raw"].size and epochs > 0:
        for epoch in tqdm(range(1, epochs + 1), desc="optimize features", disable=not progress, leave=False):
            value, grad = grad_injected_features(
                model, attacked, layout, targets, surrogate_labels, loss, raw["raw"], prop=prop
            )
            if not np.isfinite(value):
                raise NumericalError("optimize_features", f"non-finite loss {value}", epoch=epoch, lr=lr)
            opt.step(raw, {"raw": grad}, masks)
        loss_after = evaluate()
        log.debug("feature optimization %s: loss %.6f -> %.6f", loss.mode, loss_before, loss_after)

    mapped, _ = apply_feature_map(layout.feature_map, raw["raw"], layout.bounds)
    # sin can overshoot the bounds by an ulp
    mapped = np.clip(mapped, *layout.bounds)
    return OptimizeResult(features=mapped, raw=raw["raw"], loss_before=loss_before, loss_after=loss_after)
