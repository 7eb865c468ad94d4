from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import read_json, write_json
from ..errors import ConstructionError, LoadError
from .dataset import UNLABELED, Dataset, make_dataset
from .graph import Graph, _frozen


@dataclass(frozen=True)
class Budget:
    b: int
    d: int
    feature_bounds: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        lo, hi = self.feature_bounds
        if self.b < 0:
            raise ValueError(f"budget b must be >= 0, got {self.b}")
        if self.d < 1:
            raise ValueError(f"budget d must be >= 1, got {self.d}")
        if not lo < hi:
            raise ValueError(f"feature bounds must satisfy min < max, got {self.feature_bounds}")

    def to_dict(self) -> dict:
        return {"b": self.b, "d": self.d, "feature_bounds": list(self.feature_bounds)}

    @classmethod
    def from_dict(cls, d: dict) -> "Budget":
        lo, hi = d["feature_bounds"]
        return cls(b=int(d["b"]), d=int(d["d"]), feature_bounds=(float(lo), float(hi)))


@dataclass(frozen=True, eq=False)
class Injection:
    """Injected block: cross edges V_I, internal edges A_I and features F_I.

    cross_edges rows are (original node id, injected index); injected_edges
    rows are (i, j) pairs of injected indices with i < j.
    """

    n_injected: int
    cross_edges: np.ndarray
    injected_edges: np.ndarray
    features: np.ndarray

    def __post_init__(self) -> None:
        for a in (self.cross_edges, self.injected_edges, self.features):
            _frozen(a)

    @classmethod
    def build(
        cls,
        n_injected: int,
        cross_edges,
        features,
        injected_edges=None,
    ) -> "Injection":
        cross = np.asarray(cross_edges, dtype=np.int64).reshape(-1, 2)
        inner = np.zeros((0, 2), np.int64) if injected_edges is None else np.asarray(injected_edges, np.int64).reshape(-1, 2)
        if inner.size:
            inner = np.unique(np.sort(inner, axis=1), axis=0)
        feats = np.array(features, dtype=np.float64)
        return cls(int(n_injected), cross.copy(), inner.copy(), feats)

    @classmethod
    def empty(cls, dim: int) -> "Injection":
        return cls.build(0, np.zeros((0, 2), np.int64), np.zeros((0, dim)))

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def injected_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_injected, dtype=np.int64)
        if self.cross_edges.size:
            np.add.at(deg, self.cross_edges[:, 1], 1)
        if self.injected_edges.size:
            np.add.at(deg, self.injected_edges[:, 0], 1)
            np.add.at(deg, self.injected_edges[:, 1], 1)
        return deg

    def same_as(self, other: "Injection") -> bool:
        return (
            self.n_injected == other.n_injected
            and np.array_equal(self.cross_edges, other.cross_edges)
            and np.array_equal(self.injected_edges, other.injected_edges)
            and np.array_equal(self.features, other.features)
        )


@dataclass(frozen=True)
class Violation:
    kind: str  # count | degree | feature_range | index | duplicate
    index: Optional[int]
    detail: str

    def __str__(self) -> str:
        where = "" if self.index is None else f"[{self.index}]"
        return f"{self.kind}{where}: {self.detail}"


def validate_injection(injection: Injection, budget: Budget, n_original: int) -> list[Violation]:
    """Every violated constraint, with offending indices; empty list means admissible."""
    out: list[Violation] = []
    ni = injection.n_injected

    if ni > budget.b:
        out.append(Violation("count", None, f"{ni} injected nodes exceed budget b={budget.b}"))
    if injection.features.shape[0] != ni:
        out.append(Violation("index", None, f"feature rows {injection.features.shape[0]} != n_injected {ni}"))

    cross = injection.cross_edges
    for k, (u, j) in enumerate(cross.tolist()):
        if not 0 <= u < n_original:
            out.append(Violation("index", k, f"cross edge original node {u} outside [0, {n_original})"))
        if not 0 <= j < ni:
            out.append(Violation("index", k, f"cross edge injected index {j} outside [0, {ni})"))
    for k, (i, j) in enumerate(injection.injected_edges.tolist()):
        if not (0 <= i < ni and 0 <= j < ni) or i == j:
            out.append(Violation("index", k, f"injected edge ({i},{j}) invalid for n_injected={ni}"))

    if cross.size:
        _, first, counts = np.unique(cross, axis=0, return_index=True, return_counts=True)
        for k in sorted(first[counts > 1].tolist()):
            out.append(Violation("duplicate", k, f"cross edge {tuple(cross[k].tolist())} repeated"))

    valid_cross = cross[(cross[:, 1] >= 0) & (cross[:, 1] < ni)] if cross.size else cross
    deg = np.zeros(ni, dtype=np.int64)
    if valid_cross.size:
        np.add.at(deg, valid_cross[:, 1], 1)
    inner = injection.injected_edges
    if inner.size:
        ok = (inner >= 0).all(axis=1) & (inner < ni).all(axis=1)
        np.add.at(deg, inner[ok, 0], 1)
        np.add.at(deg, inner[ok, 1], 1)
    for j in np.flatnonzero(deg > budget.d).tolist():
        out.append(Violation("degree", j, f"injected node {j} has degree {deg[j]} > d={budget.d}"))

    lo, hi = budget.feature_bounds
    if injection.features.size:
        bad = ~((injection.features >= lo) & (injection.features <= hi))
        for j in np.flatnonzero(bad.any(axis=1)).tolist():
            row = injection.features[j]
            worst = row[bad[j]][0]
            out.append(Violation("feature_range", j, f"feature {worst!r} outside [{lo}, {hi}]"))
    return out


def apply_injection(dataset: Dataset, injection: Injection) -> Dataset:
    """Attacked dataset with adjacency [[A, V_I], [V_I^T, A_I]] and features [F; F_I]."""
    n = dataset.n
    ni = injection.n_injected
    if injection.features.shape != (ni, dataset.dim):
        raise ConstructionError(
            f"injected features must be {ni} x {dataset.dim}, got {injection.features.shape}"
        )
    cross = injection.cross_edges
    if cross.size and (cross[:, 0].min() < 0 or cross[:, 0].max() >= n or cross[:, 1].min() < 0 or cross[:, 1].max() >= ni):
        raise ConstructionError("cross edge index out of range")
    inner = injection.injected_edges
    if inner.size and (inner.min() < 0 or inner.max() >= ni):
        raise ConstructionError("injected edge index out of range")
    if ni == 0:
        return dataset

    edges = np.concatenate(
        [
            dataset.graph.edge_list(),
            np.stack([cross[:, 0], cross[:, 1] + n], axis=1) if cross.size else np.zeros((0, 2), np.int64),
            inner + n,
        ]
    )
    graph = Graph.from_edges(n + ni, edges)
    features = np.vstack([dataset.features, injection.features])
    labels = np.concatenate([dataset.labels, np.full(ni, UNLABELED, dtype=np.int64)])
    splits = {"train": dataset.train, "val": dataset.val, "test": dataset.test}
    return make_dataset(graph, features, labels, splits, dataset.num_classes)


# ---- injection.json ----

def injection_to_dict(injection: Injection, budget: Optional[Budget] = None) -> dict:
    out = {
        "n_injected": injection.n_injected,
        "dim": injection.dim,
        "cross_edges": injection.cross_edges,
        "injected_adjacency": injection.injected_edges,
        "injected_features": injection.features,
    }
    if budget is not None:
        out["budget"] = budget.to_dict()
    return out


def save_injection(path: Path, injection: Injection, budget: Optional[Budget] = None) -> Path:
    return write_json(path, injection_to_dict(injection, budget))


def load_injection(path: Path) -> tuple[Injection, Optional[Budget]]:
    path = Path(path)
    if not path.exists():
        raise LoadError(path, None, "missing file")
    try:
        d = read_json(path)
        dim = int(d["dim"])
        ni = int(d["n_injected"])
        feats = np.array(d["injected_features"], dtype=np.float64).reshape(ni, dim)
        inj = Injection.build(ni, d["cross_edges"], feats, d.get("injected_adjacency"))
        budget = Budget.from_dict(d["budget"]) if "budget" in d else None
    except (KeyError, ValueError, TypeError) as e:
        raise LoadError(path, None, f"malformed injection artifact: {e}") from None
    return inj, budget
