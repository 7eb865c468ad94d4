from __future__ import annotations
from pathlib import Path
from typing import Optional

APP_NAME = "GIALab"

DATASET_DIR = "dataset"
MODELS_DIR = "models"
ATTACKS_DIR = "attacks"
EVAL_DIR = "eval"

CONFIG_ECHO = "config.yaml"
LEDGER_FILE = "ledger.sqlite"
INJECTION_FILE = "injection.json"
ATTACK_LOG_FILE = "attack_log.csv"
MODEL_FILE_SUFFIX = ".json"
CLEAN_ACCURACY_FILE = "clean_accuracy.csv"


def default_output_dir() -> Path:
    return Path("runs")


def dataset_dir(out: Path) -> Path:
    return out / DATASET_DIR


def models_dir(out: Path) -> Path:
    return out / MODELS_DIR


def model_path(out: Path, name: str) -> Path:
    return models_dir(out) / f"{name}{MODEL_FILE_SUFFIX}"


def seed_dir(root: Path, seed: int) -> Path:
    return root / f"seed_{seed}"


def attack_dir(out: Path, method: str, seed: int) -> Path:
    # "ablation:uniform" -> "ablation_uniform"
    return seed_dir(out / ATTACKS_DIR / method.replace(":", "_"), seed)


def eval_dir(out: Path) -> Path:
    return out / EVAL_DIR


def ledger_path(out: Path) -> Path:
    return out / LEDGER_FILE


def parse_attack_dir(directory: Path) -> tuple[Optional[str], Optional[int]]:
    """(method, seed) for attacks/<method>/seed_<n>; None where the layout does not match."""
    directory = Path(directory)
    seed = None
    if directory.name.startswith("seed_") and directory.name[5:].lstrip("-").isdigit():
        seed = int(directory.name[5:])
    if seed is None or directory.parent.parent.name != ATTACKS_DIR:
        return None, seed
    method = directory.parent.name
    if method.startswith("ablation_"):
        method = "ablation:" + method[len("ablation_"):]
    return method, seed
