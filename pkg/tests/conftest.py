from __future__ import annotations

import numpy as np
import pytest

from gialab.attacks.config import AttackConfig
from gialab.graph.dataset import make_dataset
from gialab.graph.graph import Graph
from gialab.graph.injection import Budget
from gialab.graph.synth import SBMParams, synth_sbm
from gialab.gnn.spec import ModelSpec, TrainConfig
from gialab.gnn.train import train


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale benchmarks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def path_graph():
    # 0-1-2-3
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def tiny_dataset():
    rng = np.random.default_rng(7)
    n = 12
    edges = [(i, (i + 1) % n) for i in range(n)] + [(0, 6), (3, 9)]
    labels = np.arange(n) % 3
    features = rng.uniform(-1, 1, size=(n, 4))
    splits = {"train": np.arange(0, 6), "val": np.arange(6, 8), "test": np.arange(8, 12)}
    return make_dataset(Graph.from_edges(n, edges), features, labels, splits, 3)


@pytest.fixture(scope="session")
def small_sbm():
    params = SBMParams(blocks=3, nodes=120, p_in=0.08, p_out=0.01, feature_dim=8)
    return synth_sbm(params, seed=3)


@pytest.fixture(scope="session")
def small_surrogate(small_sbm):
    spec = ModelSpec(architecture="gcn", hidden_dims=(16,), use_layernorm=False)
    return train(spec, small_sbm, TrainConfig(epochs=120, eval_interval=10, seed=0))


@pytest.fixture
def fast_attack():
    return AttackConfig(opt_epochs=15, opt_lr=0.5, seed=0)


@pytest.fixture
def small_budget():
    return Budget(b=6, d=3)
