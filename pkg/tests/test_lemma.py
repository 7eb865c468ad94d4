from __future__ import annotations

import numpy as np
import pytest

from gialab.errors import ConstructionError
from gialab.graph.dataset import make_dataset
from gialab.graph.graph import Graph
from gialab.graph.lemma import build_lemma_graphs, is_isomorphic_under, lemma_permutation
from gialab.graph.synth import SBMParams, synth_sbm
from gialab.gnn.model import predict_labels
from gialab.gnn.spec import ModelSpec, TrainConfig
from gialab.gnn.train import train


def _random_graph(rng, n, dim, shared_row):
    edges = [(0, j) for j in range(1, n)] + [tuple(rng.choice(n, 2, replace=False)) for _ in range(n)]
    feats = rng.uniform(-1, 1, size=(n, dim))
    feats[0] = shared_row
    return make_dataset(Graph.from_edges(n, edges), feats, np.zeros(n), {}, 1)


def test_constructed_graphs_are_isomorphic():
    rng = np.random.default_rng(0)
    shared = rng.uniform(-1, 1, size=3)
    g1 = _random_graph(rng, 6, 3, shared)
    g2 = _random_graph(rng, 9, 3, shared)
    a, b = build_lemma_graphs(g1, g2, shared_node=0)
    assert a.n == b.n == 6 + 9 - 1
    assert is_isomorphic_under(a, b, lemma_permutation(6, 9))
    assert not is_isomorphic_under(a, b, np.arange(a.n))


def test_first_graph_is_kept_as_a_block():
    rng = np.random.default_rng(1)
    shared = rng.uniform(-1, 1, size=2)
    g1 = _random_graph(rng, 5, 2, shared)
    g2 = _random_graph(rng, 4, 2, shared)
    a, _ = build_lemma_graphs(g1, g2, shared_node=0)
    sub = a.graph.to_scipy()[:5, :5].toarray()
    np.testing.assert_array_equal(sub, g1.graph.to_scipy().toarray())
    np.testing.assert_array_equal(a.features[:5], g1.features)


def test_shared_node_is_moved_to_front():
    rng = np.random.default_rng(2)
    g1 = _random_graph(rng, 5, 2, np.zeros(2))
    g2 = _random_graph(rng, 5, 2, np.zeros(2))
    shared = g1.features[3]
    f2 = g2.features.copy()
    f2[3] = shared
    g2 = make_dataset(g2.graph, f2, g2.labels, {}, 1)
    a, b = build_lemma_graphs(g1, g2, shared_node=3)
    np.testing.assert_array_equal(a.features[0], shared)
    assert is_isomorphic_under(a, b, lemma_permutation(5, 5))


def test_mismatched_shared_features_rejected():
    rng = np.random.default_rng(3)
    g1 = _random_graph(rng, 4, 2, np.zeros(2))
    g2 = _random_graph(rng, 4, 2, np.ones(2))
    with pytest.raises(ConstructionError):
        build_lemma_graphs(g1, g2, shared_node=0)


def test_trained_gcn_is_injection_attackable():
    params = SBMParams(blocks=2, nodes=80, p_in=0.15, p_out=0.01, feature_dim=6, class_signal_strength=1.0)
    base = synth_sbm(params, seed=0)
    model = train(ModelSpec(hidden_dims=(16,), use_layernorm=False), base, TrainConfig(epochs=100, seed=0))
    by_class = [base.features[base.labels == c] for c in range(2)]

    changed = 0
    for trial in range(10):
        rng = np.random.default_rng(trial)
        shared = base.features[rng.integers(base.n)]
        graphs = []
        for c in range(2):
            feats = by_class[c][rng.choice(len(by_class[c]), 10)]
            feats[0] = shared
            edges = [(0, j) for j in range(1, 10)] + [tuple(rng.choice(10, 2, replace=False)) for _ in range(5)]
            graphs.append(make_dataset(Graph.from_edges(10, edges), feats, np.zeros(10), {}, 2))
        g1, g2 = graphs
        a, b = build_lemma_graphs(g1, g2, shared_node=0)
        before = (predict_labels(model, g1).labels[0], predict_labels(model, g2).labels[0])
        after = (predict_labels(model, a).labels[0], predict_labels(model, b).labels[0])
        # isomorphic graphs, so node 0 gets one answer on both
        assert after[0] == after[1]
        changed += int(after[0] != before[0] or after[1] != before[1])
    assert changed >= 1
