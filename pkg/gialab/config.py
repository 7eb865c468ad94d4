from __future__ import annotations
import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional
import yaml

from .attacks.config import AttackConfig
from .attacks.registry import method_keys
from .errors import ConfigError
from .evaluation.metrics import TOP3_MODES, MetricWeights
from .graph.injection import Budget
from .graph.synth import SBMParams
from .gnn.spec import ModelSpec, TrainConfig
from .paths import default_output_dir

DEFAULT_CONFIG = {
    "dataset": {
        "path": None,  # directory in the dataset format; None means synthesize
        "strict_symmetric": False,
        "sbm": {
            "blocks": 4,
            "nodes": 500,
            "p_in": 0.05,
            "p_out": 0.005,
            "feature_dim": 16,
            "class_signal_strength": 0.5,
            "noise": 1.0,
            "feature_scale": 1.0,
            "split_fractions": [0.5, 0.2, 0.3],
        },
    },
    "surrogate": {
        "name": "surrogate_gcn",
        "model": {"architecture": "gcn", "hidden_dims": [32, 16], "use_layernorm": True},
        "train": {"lr": 0.01, "epochs": 300, "eval_interval": 10, "dropout_rate": 0.1, "weight_decay": 0.0},
    },
    "defenses": [
        {"name": "gcn_ln", "model": {"architecture": "gcn", "hidden_dims": [32, 16], "use_layernorm": True}},
        {"name": "sgc", "model": {"architecture": "sgc", "sgc_k": 2, "hidden_dims": []}},
        {"name": "sage_mean", "model": {"architecture": "sage_mean", "hidden_dims": [32], "use_layernorm": False}},
    ],
    "transfer_surrogates": [],
    "budget": {"nodes": 20, "degree": 5, "feature_bounds": [-1.0, 1.0]},
    "sweep_budgets": [],
    "sweep_methods": [],  # empty means the --method of the evaluate call
    "attack": {
        "k1": 0.9,
        "k2": 0.1,
        "alpha": 0.33,
        "r": 4.0,
        "batch_fraction": 0.2,
        "opt_lr": 1.0,
        "opt_epochs": 300,
        "feature_map": None,
        "loss_mode": None,
        "init_sigma": 1.0,
        "effective_degree_cap": None,
    },
    "metric_weights": [0.5, 0.3, 0.2],
    "top3_mode": "mean",
    "seeds": [0],
    "output_dir": str(default_output_dir()),
    "workers": 1,
    "progress": False,
}


def _merge(base: Any, over: Any) -> Any:
    # dicts merge key by key; lists and scalars replace
    if isinstance(base, dict) and isinstance(over, dict):
        out = dict(base)
        for k, v in over.items():
            out[k] = _merge(base[k], v) if k in base else v
        return out
    return copy.deepcopy(over)


def load_config(path: Optional[Path] = None) -> dict:
    """Defaults, with the YAML (or JSON) file at `path` merged over them."""
    merged = copy.deepcopy(DEFAULT_CONFIG)
    if path is None:
        return merged
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with p.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: not valid YAML: {e}") from None
    except UnicodeDecodeError as e:
        raise ConfigError(f"{p}: not valid UTF-8: {e.reason}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    # unknown top-level keys are ignored
    for k, v in data.items():
        if k in merged:
            merged[k] = _merge(merged[k], v)
    return merged


def save_config(cfg: dict, path: Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as f:
        yaml.safe_dump(cfg, f, sort_keys=False)
    return p


@dataclass(frozen=True)
class NamedModel:
    name: str
    spec: ModelSpec
    train: TrainConfig


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: Optional[Path]
    strict_symmetric: bool
    sbm: SBMParams
    surrogate: NamedModel
    defenses: tuple[NamedModel, ...]
    transfer_surrogates: tuple[NamedModel, ...]
    budget: Budget
    sweep_budgets: tuple[int, ...]
    sweep_methods: tuple[str, ...]
    attack: AttackConfig
    weights: MetricWeights
    top3_mode: str
    seeds: tuple[int, ...]
    output_dir: Path
    workers: int
    progress: bool

    @classmethod
    def from_dict(cls, tree: dict) -> "ExperimentConfig":
        ds = _section(tree, "dataset")
        sur = _section(tree, "surrogate")
        base_train = _build("surrogate.train", TrainConfig.from_dict, sur.get("train") or {})
        surrogate = _named("surrogate", sur, base_train)
        defenses = tuple(_named(f"defenses[{i}]", d, base_train) for i, d in enumerate(_list(tree, "defenses")))
        if not defenses:
            raise ConfigError("defenses: at least one defense model is required")
        names = [d.name for d in defenses]
        if len(set(names)) != len(names):
            raise ConfigError(f"defenses: duplicate names {names}")
        transfer = tuple(
            _named(f"transfer_surrogates[{i}]", d, base_train) for i, d in enumerate(_list(tree, "transfer_surrogates"))
        )

        b = _section(tree, "budget")
        budget = _build(
            "budget",
            Budget.from_dict,
            {"b": b.get("nodes"), "d": b.get("degree"), "feature_bounds": b.get("feature_bounds")},
        )
        sweep = tuple(int(x) for x in _list(tree, "sweep_budgets"))
        if any(x < 0 or x > budget.b for x in sweep):
            raise ConfigError(f"sweep_budgets: every entry must lie in [0, {budget.b}], got {list(sweep)}")
        sweep_methods = tuple(str(m) for m in _list(tree, "sweep_methods"))
        unknown = [m for m in sweep_methods if m not in method_keys()]
        if unknown:
            raise ConfigError(f"sweep_methods: unknown {unknown}; valid methods: {', '.join(method_keys())}")
        attack = _build("attack", AttackConfig.from_dict, _section(tree, "attack"))
        try:
            attack.degree_cap(budget.d)
        except ValueError as e:
            raise ConfigError(f"attack: {e}") from None
        weights = _build("metric_weights", MetricWeights.of, _list(tree, "metric_weights"))

        top3 = tree.get("top3_mode", "mean")
        if top3 not in TOP3_MODES:
            raise ConfigError(f"top3_mode: expected one of {TOP3_MODES}, got {top3!r}")
        seeds = tuple(int(s) for s in _list(tree, "seeds"))
        if not seeds:
            raise ConfigError("seeds: at least one seed is required")
        workers = int(tree.get("workers", 1))
        if workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {workers}")

        sbm = dict(ds.get("sbm") or {})
        for key in ("sizes", "split_fractions"):
            if sbm.get(key) is not None:
                sbm[key] = tuple(sbm[key])
        return cls(
            dataset_path=Path(ds["path"]) if ds.get("path") else None,
            strict_symmetric=bool(ds.get("strict_symmetric", False)),
            sbm=_build("dataset.sbm", lambda d: SBMParams(**d), sbm),
            surrogate=surrogate,
            defenses=defenses,
            transfer_surrogates=transfer,
            budget=budget,
            sweep_budgets=sweep,
            sweep_methods=sweep_methods,
            attack=attack,
            weights=weights,
            top3_mode=top3,
            seeds=seeds,
            output_dir=Path(tree.get("output_dir") or default_output_dir()),
            workers=workers,
            progress=bool(tree.get("progress", False)),
        )


def _section(tree: dict, key: str) -> dict:
    v = tree.get(key)
    if not isinstance(v, dict):
        raise ConfigError(f"{key}: expected a mapping, got {type(v).__name__}")
    return v


def _list(tree: dict, key: str) -> list:
    v = tree.get(key)
    if v is None:
        return []
    if not isinstance(v, list):
        raise ConfigError(f"{key}: expected a list, got {type(v).__name__}")
    return v


def _build(where: str, make, value):
    try:
        return make(value)
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"{where}: {e}") from None


def _named(where: str, entry: Any, base_train: TrainConfig) -> NamedModel:
    if not isinstance(entry, dict) or not entry.get("name"):
        raise ConfigError(f"{where}: expected a mapping with a 'name'")
    spec = _build(f"{where}.model", ModelSpec.from_dict, entry.get("model") or {})
    train = base_train
    if entry.get("train"):
        train = _build(f"{where}.train", TrainConfig.from_dict, {**base_train.to_dict(), **entry["train"]})
    return NamedModel(name=str(entry["name"]), spec=spec, train=train)
