from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, TypeVar

import numpy as np

from ..core import ensure_dir, fmt_float, write_text
from ..errors import ConstructionError, LoadError
from .graph import Graph, _frozen

EDGES_FILE = "edges.csv"
FEATURES_FILE = "features.csv"
LABELS_FILE = "labels.csv"
SPLIT_FILES = {
    "train": "split_train.csv",
    "val": "split_val.csv",
    "test": "split_test.csv",
}

UNLABELED = -1

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Attributed graph with labels and train/val/test splits.

    Injected nodes carry label UNLABELED and belong to no split.
    """

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    num_classes: int
    feature_range: tuple[float, float]

    def __post_init__(self) -> None:
        n = self.graph.n
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ConstructionError(f"features must be {n} x D, got {self.features.shape}")
        if self.labels.shape != (n,):
            raise ConstructionError(f"labels must have length {n}, got {self.labels.shape}")
        if n and (self.labels.max(initial=UNLABELED) >= self.num_classes or self.labels.min(initial=0) < UNLABELED):
            raise ConstructionError(f"labels must lie in [0, {self.num_classes})")
        seen: set[int] = set()
        for name in ("train", "val", "test"):
            idx = getattr(self, name)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ConstructionError(f"{name} split index out of range for n={n}")
            s = set(idx.tolist())
            if len(s) != idx.size or seen & s:
                raise ConstructionError(f"{name} split overlaps another split or repeats an index")
            if idx.size and (self.labels[idx] == UNLABELED).any():
                raise ConstructionError(f"{name} split contains unlabeled nodes")
            seen |= s
        for a in (self.features, self.labels, self.train, self.val, self.test):
            _frozen(a)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def split(self, name: str) -> np.ndarray:
        if name not in SPLIT_FILES:
            raise KeyError(name)
        return getattr(self, name)


def feature_range_of(features: np.ndarray) -> tuple[float, float]:
    if features.size == 0:
        return (0.0, 0.0)
    return (float(features.min()), float(features.max()))


def make_dataset(
    graph: Graph,
    features: np.ndarray,
    labels: np.ndarray,
    splits: dict[str, np.ndarray],
    num_classes: int,
) -> Dataset:
    features = np.array(features, dtype=np.float64)
    return Dataset(
        graph=graph,
        features=features,
        labels=np.array(labels, dtype=np.int64),
        train=np.array(splits.get("train", []), dtype=np.int64),
        val=np.array(splits.get("val", []), dtype=np.int64),
        test=np.array(splits.get("test", []), dtype=np.int64),
        num_classes=int(num_classes),
        feature_range=feature_range_of(features),
    )


# ---- Loading ----

def _read_rows(path: Path, parse: Callable[[list[str], int], T]) -> list[T]:
    if not path.exists():
        raise LoadError(path, None, "missing file")
    out: list[T] = []
    with open(path, "rb") as f:
        for lineno, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError as e:
                raise LoadError(path, lineno, f"not valid UTF-8: {e.reason}") from None
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                out.append(parse(cells, lineno))
            except ValueError as e:
                raise LoadError(path, lineno, f"malformed row {line!r}: {e}") from None
    return out


def _edge_row(cells: list[str], _: int) -> tuple[int, int]:
    if len(cells) != 2:
        raise ValueError(f"expected 2 columns, got {len(cells)}")
    return int(cells[0]), int(cells[1])


def _int_row(cells: list[str], _: int) -> int:
    if len(cells) != 1:
        raise ValueError(f"expected 1 column, got {len(cells)}")
    return int(cells[0])


def _float_row(cells: list[str], _: int) -> list[float]:
    return [float(c) for c in cells]


def load_dataset(path: Path, *, strict_symmetric: bool = False) -> Dataset:
    """Load a dataset directory (edges, features, labels, three splits).

    Edge rows are read as undirected pairs and symmetrized. With
    strict_symmetric=True a pair whose reverse is absent is an error.
    """
    path = Path(path)
    feat_rows = _read_rows(path / FEATURES_FILE, _float_row)
    n = len(feat_rows)
    dim = len(feat_rows[0]) if feat_rows else 0
    for i, row in enumerate(feat_rows):
        if len(row) != dim:
            raise LoadError(path / FEATURES_FILE, i + 1, f"expected {dim} columns, got {len(row)}")
    features = np.array(feat_rows, dtype=np.float64).reshape(n, dim)
    if not np.isfinite(features).all():
        raise LoadError(path / FEATURES_FILE, None, "non-finite feature value")

    labels_list = _read_rows(path / LABELS_FILE, _int_row)
    if len(labels_list) != n:
        raise LoadError(path / LABELS_FILE, None, f"expected {n} labels, got {len(labels_list)}")
    labels = np.array(labels_list, dtype=np.int64)
    if n and labels.min() < 0:
        line = int(np.argmax(labels < 0)) + 1
        raise LoadError(path / LABELS_FILE, line, f"negative label {labels[line - 1]}")
    num_classes = int(labels.max()) + 1 if n else 0

    edges_path = path / EDGES_FILE
    edges = _read_rows(edges_path, _edge_row)
    for lineno, (u, v) in enumerate(edges, start=1):
        if not (0 <= u < n and 0 <= v < n):
            raise LoadError(edges_path, lineno, f"edge ({u},{v}) out of range for n={n}")
    if strict_symmetric:
        directed = set(edges)
        for lineno, (u, v) in enumerate(edges, start=1):
            if u != v and (v, u) not in directed:
                raise LoadError(edges_path, lineno, f"edge ({u},{v}) has no reverse ({v},{u})")
    graph = Graph.from_edges(n, edges)

    splits: dict[str, np.ndarray] = {}
    for name, fname in SPLIT_FILES.items():
        idx = _read_rows(path / fname, _int_row)
        for lineno, i in enumerate(idx, start=1):
            if not 0 <= i < n:
                raise LoadError(path / fname, lineno, f"index {i} out of range for n={n}")
        splits[name] = np.array(idx, dtype=np.int64)

    try:
        return make_dataset(graph, features, labels, splits, num_classes)
    except ConstructionError as e:
        raise LoadError(path, None, str(e)) from None


# ---- Saving ----

def save_dataset(dataset: Dataset, path: Path) -> Path:
    path = ensure_dir(Path(path))
    edges = dataset.graph.edge_list()
    write_text(path / EDGES_FILE, "".join(f"{u},{v}\n" for u, v in edges.tolist()))
    write_text(
        path / FEATURES_FILE,
        "".join(",".join(fmt_float(x) for x in row) + "\n" for row in dataset.features.tolist()),
    )
    write_text(path / LABELS_FILE, "".join(f"{y}\n" for y in dataset.labels.tolist()))
    for name, fname in SPLIT_FILES.items():
        write_text(path / fname, "".join(f"{i}\n" for i in dataset.split(name).tolist()))
    return path


def summary(dataset: Dataset) -> dict:
    lo, hi = dataset.feature_range
    return {
        "nodes": dataset.n,
        "train": int(dataset.train.size),
        "val": int(dataset.val.size),
        "test": int(dataset.test.size),
        "edges": dataset.graph.num_edges,
        "features": dataset.dim,
        "classes": dataset.num_classes,
        "feature_range": f"{lo:.2f}~{hi:.2f}",
    }
