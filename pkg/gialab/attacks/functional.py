"""Closed-form pieces of the attack: target scores and the losses as functions of p."""
from __future__ import annotations

import numpy as np

from ..gnn.objectives import P_FLOOR, inverse_kl_loss_logp, smooth_loss_logp


def _log(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(p)


# ---- losses ----

def smooth_loss(p: np.ndarray, r: float) -> tuple[np.ndarray, float]:
    losses, _ = smooth_loss_logp(_log(p), r)
    return losses, float(losses.mean()) if losses.size else 0.0


def smooth_loss_grad_p(p: np.ndarray, r: float) -> np.ndarray:
    """dL/dp = 2 (r + ln p) / p above e^-r, 0 at or below it (including p = 0)."""
    p = np.asarray(p, dtype=np.float64)
    _, d_logp = smooth_loss_logp(_log(p), r)
    out = np.zeros_like(p)
    live = d_logp > 0
    out[live] = d_logp[live] / p[live]
    return out


def inverse_kl_loss(p: np.ndarray) -> tuple[np.ndarray, float]:
    losses, _ = inverse_kl_loss_logp(_log(np.maximum(p, P_FLOOR)))
    return losses, float(losses.mean()) if losses.size else 0.0


# ---- target scores ----

def defective_factor(deg: np.ndarray, d: int, k1: float, k2: float) -> np.ndarray:
    """lambda_v = k1 / sqrt(deg(v) d) + k2 / deg(v); isolated targets count as degree 1."""
    if d < 1:
        raise ValueError(f"degree budget d must be >= 1, got {d}")
    deg = np.maximum(np.asarray(deg, dtype=np.float64), 1.0)
    return k1 / np.sqrt(deg * d) + k2 / deg


def defective_score(p: np.ndarray, lam: np.ndarray, alpha: float) -> np.ndarray:
    """mu_v = (alpha p_v + (1 - alpha)) lambda_v."""
    return (alpha * np.asarray(p, dtype=np.float64) + (1.0 - alpha)) * np.asarray(lam, dtype=np.float64)
