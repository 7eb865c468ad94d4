from __future__ import annotations

from typing import Optional

import numpy as np


class Adam:
    """Adam over a dict of named arrays, updated in place."""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(
        self,
        params: dict[str, np.ndarray],
        grads: dict[str, np.ndarray],
        masks: Optional[dict[str, np.ndarray]] = None,
    ) -> None:
        """One update; `masks` (broadcastable 0/1 arrays) freeze entries per parameter."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1

        for k, g in grads.items():
            if k not in self.m or self.m[k].shape != params[k].shape:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)
            update = step_size * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.eps)
            if masks is not None and k in masks:
                update = update * masks[k]
            params[k] -= update
