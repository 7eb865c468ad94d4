from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

Architecture = Literal["gcn", "sgc", "sage_mean"]
ARCHITECTURES: tuple[str, ...] = ("gcn", "sgc", "sage_mean")


@dataclass(frozen=True)
class ModelSpec:
    architecture: str = "gcn"
    hidden_dims: tuple[int, ...] = (32, 16)
    use_layernorm: bool = True
    sgc_k: int = 2
    activation: str = "relu"
    dropout_rate: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}; expected one of {ARCHITECTURES}")
        if self.architecture != "sgc" and not self.hidden_dims:
            raise ValueError(f"{self.architecture} needs at least one hidden layer")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError(f"hidden dims must be positive, got {self.hidden_dims}")
        if self.sgc_k < 1:
            raise ValueError(f"sgc_k must be >= 1, got {self.sgc_k}")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")

    @property
    def depth(self) -> int:
        """Hops of message passing, i.e. the receptive-field radius."""
        if self.architecture == "sgc":
            return self.sgc_k
        return len(self.hidden_dims) + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        if "hidden_dims" in known:
            known["hidden_dims"] = tuple(known["hidden_dims"])
        return cls(**known)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 500
    eval_interval: int = 20
    dropout_rate: float = 0.1
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.eval_interval < 1:
            raise ValueError(f"eval_interval must be >= 1, got {self.eval_interval}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True, eq=False)
class Prediction:
    probabilities: np.ndarray
    labels: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        # np.argmax returns the first maximum, so ties go to the smallest class index
        object.__setattr__(self, "labels", np.argmax(self.probabilities, axis=1).astype(np.int64))
