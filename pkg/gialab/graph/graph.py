from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
import scipy.sparse as sp

from ..errors import ConstructionError

Scheme = Literal["gcn_symmetric", "mean"]
SCHEMES: tuple[str, ...] = ("gcn_symmetric", "mean")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted graph in CSR form.

    Both directions of every edge are stored, column indices are strictly
    increasing inside each row and there are no self-loops.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> "Graph":
        """Build from (u, v) pairs; symmetrizes, dedupes and drops self-loops."""
        if not isinstance(edges, np.ndarray):
            edges = list(edges)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
            raise ConstructionError(f"edge {tuple(int(x) for x in bad)} out of range for n={n}")
        e = e[e[:, 0] != e[:, 1]]
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        m = sp.coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(
            n=int(n),
            indptr=_frozen(m.indptr.astype(np.int64)),
            indices=_frozen(m.indices.astype(np.int64)),
        )

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls.from_edges(n, np.zeros((0, 2), np.int64))

    @property
    def num_edges(self) -> int:
        """Unique undirected edges."""
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edge_list(self) -> np.ndarray:
        """Unique undirected edges as an (m, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def to_scipy(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def same_as(self, other: "Graph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


def degrees(graph: Graph) -> np.ndarray:
    return np.diff(graph.indptr).astype(np.int64)


def normalize_adjacency(graph: Graph, scheme: Scheme) -> sp.csr_matrix:
    """Weighted propagation operator; row v holds the weights node v aggregates with.

    gcn_symmetric: D^-1/2 (A + I) D^-1/2, degrees counted with the self-loop.
    mean: (A + I) / (deg + 1), i.e. the mean over neighbors plus self.
    """
    a = graph.to_scipy() + sp.identity(graph.n, format="csr", dtype=np.float64)
    deg = np.asarray(a.sum(axis=1)).ravel()
    if scheme == "gcn_symmetric":
        inv_sqrt = 1.0 / np.sqrt(deg)
        out = sp.diags(inv_sqrt) @ a @ sp.diags(inv_sqrt)
    elif scheme == "mean":
        out = sp.diags(1.0 / deg) @ a
    else:
        raise ValueError(f"unknown normalization scheme {scheme!r}; expected one of {SCHEMES}")
    out = sp.csr_matrix(out)
    out.sort_indices()
    return out
