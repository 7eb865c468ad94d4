from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConstructionError, NumericalError
from ..graph.dataset import Dataset
from .layers import Propagator, backward_pass, forward_pass
from .model import Model, _check_dims, log_softmax
from .objectives import apply_feature_map, loss_logp


@dataclass(frozen=True)
class LossSpec:
    mode: str = "smooth"  # smooth | inverse_kl
    r: float = 4.0


@dataclass(frozen=True)
class FeatureLayout:
    """Where the injected rows sit and how raw variables map onto them."""

    n_original: int
    feature_map: str = "smoothmap"  # smoothmap | clamp
    bounds: tuple[float, float] = (-1.0, 1.0)


def target_loss(
    logits: np.ndarray,
    targets: np.ndarray,
    labels: np.ndarray,
    loss: LossSpec,
) -> tuple[float, np.ndarray]:
    """Mean target loss and its gradient with respect to all logits."""
    logp_all = log_softmax(logits[targets])
    logp = logp_all[np.arange(targets.size), labels]
    values, d_logp = loss_logp(loss.mode, logp, loss.r)
    d_logp = d_logp / targets.size
    # d ln p_y / d z = onehot(y) - softmax(z)
    d_t = -np.exp(logp_all) * d_logp[:, None]
    d_t[np.arange(targets.size), labels] += d_logp
    dlogits = np.zeros_like(logits)
    np.add.at(dlogits, targets, d_t)
    return float(values.mean()), dlogits


def grad_injected_features(
    model: Model,
    attacked: Dataset,
    layout: FeatureLayout,
    targets: np.ndarray,
    labels: np.ndarray,
    loss: LossSpec,
    raw_vars: np.ndarray,
    *,
    prop: Optional[Propagator] = None,
) -> tuple[float, np.ndarray]:
    """Loss over targets and its exact gradient with respect to raw_vars.

    raw_vars are mapped into the injected rows of `attacked` (rows from
    layout.n_original on) before the forward pass; `labels` are the
    surrogate labels of `targets`.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ConstructionError("target set is empty")
    n0 = layout.n_original
    if raw_vars.shape != (attacked.n - n0, attacked.dim):
        raise ConstructionError(f"raw_vars must be {(attacked.n - n0, attacked.dim)}, got {raw_vars.shape}")
    _check_dims(model, attacked.features)
    prop = prop or model.propagator(attacked)

    mapped, d_map = apply_feature_map(layout.feature_map, raw_vars, layout.bounds)
    x = np.vstack([attacked.features[:n0], mapped])
    logits, caches = forward_pass(model.spec, model.params, x, prop)
    value, dlogits = target_loss(logits, targets, np.asarray(labels, dtype=np.int64), loss)
    _, dx = backward_pass(model.spec, model.params, caches, prop, dlogits, need_params=False, need_input=True)
    grad = dx[n0:] * d_map
    if not (np.isfinite(value) and np.isfinite(grad).all()):
        raise NumericalError("gradient", "non-finite loss or gradient")
    return value, grad
