from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import read_json, write_json
from ..errors import ConstructionError, LoadError
from ..graph.dataset import Dataset
from .layers import Propagator, forward_pass, param_shapes
from .spec import ModelSpec, Prediction


@dataclass(frozen=True, eq=False)
class Model:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    in_dim: int
    num_classes: int

    def __post_init__(self) -> None:
        want = param_shapes(self.spec, self.in_dim, self.num_classes)
        if list(want) != list(self.params):
            raise ConstructionError(f"parameter names {list(self.params)} do not match spec {list(want)}")
        for name, shape in want.items():
            if self.params[name].shape != shape:
                raise ConstructionError(f"{name} has shape {self.params[name].shape}, expected {shape}")

    def frozen(self) -> "Model":
        params = {k: np.array(v, dtype=np.float64) for k, v in self.params.items()}
        for v in params.values():
            v.setflags(write=False)
        return Model(self.spec, params, self.in_dim, self.num_classes)

    def propagator(self, dataset: Dataset) -> Propagator:
        return Propagator.for_graph(self.spec, dataset.graph)


def init_model(spec: ModelSpec, in_dim: int, num_classes: int, seed: int) -> Model:
    """Glorot-uniform weights, zero biases, unit LayerNorm gains."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(spec, in_dim, num_classes).items():
        if name.startswith("gain"):
            params[name] = np.ones(shape)
        elif len(shape) == 2:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-limit, limit, size=shape)
        else:
            params[name] = np.zeros(shape)
    return Model(spec, params, in_dim, num_classes)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _check_dims(model: Model, features: np.ndarray) -> None:
    if features.ndim != 2 or features.shape[1] != model.in_dim:
        raise ConstructionError(
            f"model expects {model.in_dim} input features, dataset has {features.shape[-1] if features.ndim else 0}"
        )


def logits_of(
    model: Model,
    dataset: Dataset,
    *,
    prop: Optional[Propagator] = None,
    features: Optional[np.ndarray] = None,
) -> np.ndarray:
    x = dataset.features if features is None else features
    _check_dims(model, x)
    prop = prop or model.propagator(dataset)
    logits, _ = forward_pass(model.spec, model.params, x, prop)
    return logits


def forward(
    model: Model,
    dataset: Dataset,
    mode: str = "eval",
    *,
    dropout_rate: Optional[float] = None,
    seed: int = 0,
) -> Prediction:
    """Class probabilities for every node.

    mode="train" applies inverted dropout seeded by `seed` (rate defaults
    to ModelSpec.dropout_rate); mode="eval" is deterministic.
    """
    _check_dims(model, dataset.features)
    prop = model.propagator(dataset)
    if mode == "eval":
        logits, _ = forward_pass(model.spec, model.params, dataset.features, prop)
    elif mode == "train":
        rate = model.spec.dropout_rate if dropout_rate is None else dropout_rate
        logits, _ = forward_pass(
            model.spec,
            model.params,
            dataset.features,
            prop,
            dropout_rate=rate,
            rng=np.random.default_rng(seed),
        )
    else:
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return Prediction(softmax(logits))


def predict_labels(model: Model, dataset: Dataset) -> Prediction:
    return forward(model, dataset, "eval")


# ---- model.json ----

def model_to_dict(model: Model) -> dict:
    return {
        "spec": model.spec.to_dict(),
        "in_dim": model.in_dim,
        "num_classes": model.num_classes,
        "params": {
            name: {"shape": list(v.shape), "data": v.ravel().tolist()} for name, v in model.params.items()
        },
    }


def save_model(path: Path, model: Model) -> Path:
    return write_json(path, model_to_dict(model))


def load_model(path: Path) -> Model:
    path = Path(path)
    if not path.exists():
        raise LoadError(path, None, "missing file")
    try:
        d = read_json(path)
        spec = ModelSpec.from_dict(d["spec"])
        params = {
            name: np.array(p["data"], dtype=np.float64).reshape(p["shape"]) for name, p in d["params"].items()
        }
        return Model(spec, params, int(d["in_dim"]), int(d["num_classes"])).frozen()
    except (KeyError, ValueError, TypeError, ConstructionError) as e:
        raise LoadError(path, None, f"malformed model checkpoint: {e}") from None
