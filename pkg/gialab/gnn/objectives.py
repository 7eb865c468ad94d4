"""Attack objectives in log-probability form, and the maps from raw variables to bounded features.

Each loss returns the per-node value and its derivative with respect to ln p,
which is what the gradient code chains through log-softmax.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

LossMode = Literal["smooth", "inverse_kl"]
FeatureMap = Literal["smoothmap", "clamp"]
LOSS_MODES: tuple[str, ...] = ("smooth", "inverse_kl")
FEATURE_MAPS: tuple[str, ...] = ("smoothmap", "clamp")

P_FLOOR = 1e-12
LOG_P_FLOOR = float(np.log(P_FLOOR))


# ---- losses ----

def smooth_loss_logp(logp: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """L = max(r + ln p, 0)^2 and dL/d(ln p); both exactly 0 for p <= e^-r."""
    m = np.maximum(np.asarray(logp, dtype=np.float64) + r, 0.0)
    return m * m, 2.0 * m


def inverse_kl_loss_logp(logp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """L = ln max(p, 1e-12) and dL/d(ln p); the floor is flat."""
    logp = np.asarray(logp, dtype=np.float64)
    floored = logp <= LOG_P_FLOOR
    return np.where(floored, LOG_P_FLOOR, logp), np.where(floored, 0.0, 1.0)


def loss_logp(mode: str, logp: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    if mode == "smooth":
        return smooth_loss_logp(logp, r)
    if mode == "inverse_kl":
        return inverse_kl_loss_logp(logp)
    raise ValueError(f"unknown loss mode {mode!r}; expected one of {LOSS_MODES}")


# ---- feature maps ----

def smoothmap(x, lo: float, hi: float):
    return (hi + lo) / 2.0 + (hi - lo) / 2.0 * np.sin(x)


def smoothmap_grad(x, lo: float, hi: float):
    return (hi - lo) / 2.0 * np.cos(x)


def clamp(x, lo: float, hi: float):
    return np.clip(x, lo, hi)


def clamp_grad(x, lo: float, hi: float):
    # subgradient: 1 inside and on the boundary, 0 outside
    x = np.asarray(x)
    return ((x >= lo) & (x <= hi)).astype(np.float64)


def apply_feature_map(name: str, x: np.ndarray, bounds: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Mapped features and the elementwise derivative of the map."""
    lo, hi = bounds
    if name == "smoothmap":
        return smoothmap(x, lo, hi), smoothmap_grad(x, lo, hi)
    if name == "clamp":
        return clamp(x, lo, hi), clamp_grad(x, lo, hi)
    raise ValueError(f"unknown feature map {name!r}; expected one of {FEATURE_MAPS}")
