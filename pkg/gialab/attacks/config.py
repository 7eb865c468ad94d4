from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from ..gnn.objectives import FEATURE_MAPS, LOSS_MODES


@dataclass(frozen=True)
class AttackConfig:
    k1: float = 0.9
    k2: float = 0.1
    alpha: float = 0.33
    r: float = 4.0
    batch_fraction: float = 0.2
    opt_lr: float = 1.0
    opt_epochs: int = 2000
    feature_map: Optional[str] = None  # None: the attack's own default
    loss_mode: Optional[str] = None
    init_sigma: float = 1.0
    seed: int = 0
    effective_degree_cap: Optional[int] = None  # None: budget d

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "alpha", "r", "batch_fraction", "opt_lr", "init_sigma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError(f"batch_fraction must lie in (0, 1], got {self.batch_fraction}")
        if self.opt_epochs < 0:
            raise ValueError(f"opt_epochs must be >= 0, got {self.opt_epochs}")
        if self.feature_map is not None and self.feature_map not in FEATURE_MAPS:
            raise ValueError(f"unknown feature_map {self.feature_map!r}; expected one of {FEATURE_MAPS}")
        if self.loss_mode is not None and self.loss_mode not in LOSS_MODES:
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}; expected one of {LOSS_MODES}")
        if self.effective_degree_cap is not None and self.effective_degree_cap < 1:
            raise ValueError("effective_degree_cap must be >= 1")

    def degree_cap(self, d: int) -> int:
        if self.effective_degree_cap is None:
            return d
        if self.effective_degree_cap > d:
            raise ValueError(f"effective_degree_cap {self.effective_degree_cap} exceeds budget d={d}")
        return self.effective_degree_cap

    def batch_size(self, b: int) -> int:
        return max(1, math.ceil(self.batch_fraction * b)) if b > 0 else 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AttackConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
