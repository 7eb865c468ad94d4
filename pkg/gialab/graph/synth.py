from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset, make_dataset
from .graph import Graph


@dataclass(frozen=True)
class SBMParams:
    blocks: int = 4
    sizes: Optional[tuple[int, ...]] = None  # None: nodes split evenly over blocks
    nodes: int = 500
    p_in: float = 0.05
    p_out: float = 0.005
    feature_dim: int = 16
    class_signal_strength: float = 0.5
    noise: float = 1.0
    feature_scale: float = 1.0  # features land in [-feature_scale, feature_scale]
    split_fractions: tuple[float, float, float] = field(default=(0.5, 0.2, 0.3))

    def __post_init__(self) -> None:
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.sizes is not None and len(self.sizes) != self.blocks:
            raise ValueError(f"sizes has {len(self.sizes)} entries for {self.blocks} blocks")
        if self.feature_dim < 1 or self.feature_scale <= 0:
            raise ValueError("feature_dim must be >= 1 and feature_scale > 0")
        fr = self.split_fractions
        if len(fr) != 3 or min(fr) < 0 or sum(fr) > 1.0 + 1e-9:
            raise ValueError(f"split fractions must be 3 nonnegative values summing to <= 1, got {fr}")

    def block_sizes(self) -> tuple[int, ...]:
        if self.sizes is not None:
            return tuple(int(s) for s in self.sizes)
        base, extra = divmod(self.nodes, self.blocks)
        return tuple(base + (1 if i < extra else 0) for i in range(self.blocks))


def synth_sbm(params: SBMParams, seed: int) -> Dataset:
    """Stochastic block model graph whose labels are the blocks.

    Features are a per-class mean vector scaled by class_signal_strength plus
    uniform noise, globally rescaled so the largest magnitude equals
    feature_scale.
    """
    rng = np.random.default_rng(seed)
    sizes = params.block_sizes()
    n = int(sum(sizes))
    labels = np.repeat(np.arange(len(sizes)), sizes)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], params.p_in, params.p_out)
    keep = rng.random(iu.size) < prob
    graph = Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))

    means = rng.normal(size=(len(sizes), params.feature_dim))
    feats = params.class_signal_strength * means[labels]
    feats = feats + rng.uniform(-params.noise, params.noise, size=(n, params.feature_dim))
    peak = np.abs(feats).max()
    if peak > 0:
        feats = feats * (params.feature_scale / peak)

    order = rng.permutation(n)
    n_train = int(round(params.split_fractions[0] * n))
    n_val = int(round(params.split_fractions[1] * n))
    n_test = min(int(round(params.split_fractions[2] * n)), n - n_train - n_val)
    splits = {
        "train": np.sort(order[:n_train]),
        "val": np.sort(order[n_train : n_train + n_val]),
        "test": np.sort(order[n_train + n_val : n_train + n_val + n_test]),
    }
    return make_dataset(graph, feats, labels, splits, len(sizes))
