"""Two-graph injection construction showing a structure-aware model is GIA-attackable.

Given G1 and G2 that share a node with the same features, both graphs are
relabeled so that node sits at index 0 and combined into

    A1* = [[0, B1, B2], [C1, S1, 0], [C2, 0, S2]]
    A2* = [[0, B2, B1], [C2, S2, 0], [C1, 0, S1]]

G1* is G1 with the rest of G2 injected around node 0 (and vice versa). The
two results are the same graph under the block-swap permutation, so a
permutation-invariant model predicts node 0 identically on both, and it
cannot match both M(G1)[0] and M(G2)[0] when those differ.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConstructionError
from .dataset import UNLABELED, Dataset, make_dataset
from .graph import Graph


def _to_front(n: int, node: int) -> np.ndarray:
    """old index -> new index, moving `node` to 0 and keeping the others in order."""
    order = np.concatenate([[node], np.delete(np.arange(n), node)])
    new_of_old = np.empty(n, dtype=np.int64)
    new_of_old[order] = np.arange(n)
    return new_of_old


def _combine(first: Dataset, second: Dataset, m1: np.ndarray, m2: np.ndarray) -> Dataset:
    n1, n2 = first.n, second.n
    n = n1 + n2 - 1
    # first: 0..n1-1 as relabeled, second: 0 -> 0, others -> n1 + (k - 1)
    map2 = np.where(m2 == 0, 0, m2 + n1 - 1)
    e1 = m1[first.graph.edge_list()]
    e2 = map2[second.graph.edge_list()]
    graph = Graph.from_edges(n, np.concatenate([e1, e2]))

    feats = np.zeros((n, first.dim))
    feats[m1] = first.features
    feats[map2] = second.features
    feats[0] = first.features[np.flatnonzero(m1 == 0)[0]]
    labels = np.full(n, UNLABELED, dtype=np.int64)
    labels[m1] = first.labels
    labels[map2[m2 != 0]] = second.labels[m2 != 0]
    num_classes = max(first.num_classes, second.num_classes)
    if labels[0] == UNLABELED:
        return make_dataset(graph, feats, labels, {}, num_classes)
    return make_dataset(graph, feats, labels, {"test": np.array([0])}, num_classes)


def build_lemma_graphs(g1: Dataset, g2: Dataset, shared_node: int) -> tuple[Dataset, Dataset]:
    if g1.dim != g2.dim:
        raise ConstructionError(f"feature dimensions differ: {g1.dim} vs {g2.dim}")
    if not (0 <= shared_node < g1.n and 0 <= shared_node < g2.n):
        raise ConstructionError(f"shared node {shared_node} out of range")
    if not np.array_equal(g1.features[shared_node], g2.features[shared_node]):
        raise ConstructionError(f"node {shared_node} has different features in the two graphs")
    m1 = _to_front(g1.n, shared_node)
    m2 = _to_front(g2.n, shared_node)
    return _combine(g1, g2, m1, m2), _combine(g2, g1, m2, m1)


def lemma_permutation(n1: int, n2: int) -> np.ndarray:
    """perm[i] = index in G2* of node i of G1* (node 0 stays, the blocks swap)."""
    perm = np.empty(n1 + n2 - 1, dtype=np.int64)
    perm[0] = 0
    perm[1:n1] = np.arange(n2, n1 + n2 - 1)
    perm[n1:] = np.arange(1, n2)
    return perm


def relabel(graph: Graph, perm: np.ndarray) -> Graph:
    return Graph.from_edges(graph.n, perm[graph.edge_list()])


def is_isomorphic_under(a: Dataset, b: Dataset, perm: np.ndarray) -> bool:
    """True when relabeling `a` by perm reproduces `b` exactly (edges and features)."""
    if a.n != b.n or a.dim != b.dim or perm.shape != (a.n,):
        return False
    if not np.array_equal(np.sort(perm), np.arange(a.n)):
        return False
    if not relabel(a.graph, perm).same_as(b.graph):
        return False
    feats = np.empty_like(a.features)
    feats[perm] = a.features
    return bool(np.array_equal(feats, b.features))
