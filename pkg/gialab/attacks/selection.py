"""Edge selection: which targets each injected node in a batch connects to.

All policies return an (m, 2) array of (target node id, local injected index)
rows with no repeated pair and at most d_eff rows per injected node.
"""
from __future__ import annotations

import numpy as np


def rank_by_score(mu: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Targets by descending score, ties toward the smaller node id."""
    targets = np.asarray(targets, dtype=np.int64)
    return targets[np.lexsort((targets, -np.asarray(mu, dtype=np.float64)))]


def assign_cyclic(ranking: np.ndarray, b_seq: int, d_eff: int, offset: int = 0) -> np.ndarray:
    """Slot k of injected node j takes ranking[(offset + k*b_seq + j) mod T].

    When T >= b_seq*d_eff and offset is 0 this is plain round-robin over the
    top b_seq*d_eff entries. When targets run short a slot whose target is
    already linked to that node moves on to the next unused one, and
    each node gets at most T edges.
    """
    t = ranking.size
    if b_seq <= 0 or t == 0:
        return np.zeros((0, 2), dtype=np.int64)
    per_node = min(d_eff, t)
    slots: list[tuple[int, int, int]] = []
    for j in range(b_seq):
        used: set[int] = set()
        for k in range(per_node):
            pos = (offset + k * b_seq + j) % t
            while int(ranking[pos]) in used:
                pos = (pos + 1) % t
            used.add(int(ranking[pos]))
            slots.append((k, j, int(ranking[pos])))
    # slot order (k, j) follows the ranking
    slots.sort()
    return np.array([(tgt, j) for _, j, tgt in slots], dtype=np.int64).reshape(-1, 2)


def select_defective_edges(mu: np.ndarray, targets: np.ndarray, b_seq: int, d_eff: int) -> np.ndarray:
    return assign_cyclic(rank_by_score(mu, targets), b_seq, d_eff)


def uniform_edges(targets: np.ndarray, b_seq: int, d_eff: int, cursor: int = 0) -> tuple[np.ndarray, int]:
    """Round-robin over targets sorted by node id, continuing from `cursor`."""
    ranking = np.sort(np.asarray(targets, dtype=np.int64))
    edges = assign_cyclic(ranking, b_seq, d_eff, offset=cursor)
    t = max(ranking.size, 1)
    return edges, (cursor + b_seq * min(d_eff, ranking.size)) % t


def random_edges(targets: np.ndarray, b_seq: int, d_eff: int, rng: np.random.Generator) -> np.ndarray:
    """Each injected node draws its targets uniformly without replacement."""
    targets = np.asarray(targets, dtype=np.int64)
    if b_seq <= 0 or targets.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    per_node = min(d_eff, targets.size)
    rows = []
    for j in range(b_seq):
        picked = rng.choice(targets, size=per_node, replace=False)
        rows.extend((int(t), j) for t in picked)
    return np.array(rows, dtype=np.int64).reshape(-1, 2)
