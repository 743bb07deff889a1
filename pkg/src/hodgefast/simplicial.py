"""Clique complex of the mask graph, signed boundaries and Hodge Laplacians.

Every simplex is oriented by ascending node index. With that convention

* ``B1[:, (i, j)]`` is ``-1`` at node ``i`` and ``+1`` at node ``j``;
* ``B2[:, (i, j, k)]`` is ``+1`` at ``(i, j)``, ``-1`` at ``(i, k)`` and
  ``+1`` at ``(j, k)``;

so that ``B1 @ B2 == 0`` exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import InvalidParameterError, ValidationError

BOUNDARY_DTYPE = np.int32


@dataclass(frozen=True)
class CliqueComplex:
    n_nodes: int
    edges: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        e = np.ascontiguousarray(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        n = int(self.n_nodes)
        if e.size:
            keys = e[:, 0] * n + e[:, 1]
            if np.any(e[:, 0] >= e[:, 1]) or e.min() < 0 or e.max() >= n:
                raise ValidationError("edges must satisfy 0 <= i < j < n_nodes")
            if np.any(np.diff(keys) <= 0):
                raise ValidationError("edges must be sorted and duplicate-free")
        if t.size:
            if np.any(t[:, 0] >= t[:, 1]) or np.any(t[:, 1] >= t[:, 2]):
                raise ValidationError("triangles must satisfy i < j < k")
            tk = (t[:, 0] * n + t[:, 1]) * n + t[:, 2]
            if np.any(np.diff(tk) <= 0):
                raise ValidationError("triangles must be sorted and duplicate-free")
            present = set(map(int, e[:, 0] * n + e[:, 1]))
            for a, b in ((0, 1), (0, 2), (1, 2)):
                if not all(int(v) in present for v in t[:, a] * n + t[:, b]):
                    raise ValidationError("a triangle has an edge missing from the complex")
        for arr in (e, t):
            arr.setflags(write=False)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "triangles", t)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def edge_index(self, pairs):
        """Column index of each ``(i, j)`` row of ``pairs`` (must exist)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        keys = self.edges[:, 0] * self.n_nodes + self.edges[:, 1]
        q = pairs[:, 0] * self.n_nodes + pairs[:, 1]
        idx = np.searchsorted(keys, q)
        if np.any(idx >= keys.size) or np.any(keys[np.minimum(idx, keys.size - 1)] != q):
            raise ValidationError("edge not present in complex")
        return idx

    def to_dict(self):
        return {
            "n_nodes": self.n_nodes,
            "edges": self.edges.tolist(),
            "triangles": self.triangles.tolist(),
        }

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_nodes"]), np.array(d["edges"]), np.array(d["triangles"]))

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_clique_complex(mask, backend=None):
    """Nodes, mask edges and every 3-clique of the mask graph."""
    edges = np.ascontiguousarray(mask.edges, dtype=np.int64).reshape(-1, 2)
    tri = kernels.get_backend(backend).triangles(int(mask.n_nodes), edges)
    return CliqueComplex(mask.n_nodes, edges, tri)


def boundary_b1(cx):
    """Node-edge incidence, ``(n_nodes, n_edges)``."""
    m = cx.n_edges
    cols = np.repeat(np.arange(m), 2)
    rows = cx.edges.reshape(-1)
    vals = np.tile(np.array([-1, 1], dtype=BOUNDARY_DTYPE), m)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(cx.n_nodes, m),
                             dtype=BOUNDARY_DTYPE)


def boundary_b2(cx):
    """Edge-triangle incidence, ``(n_edges, n_triangles)``."""
    t = cx.triangles
    nt = t.shape[0]
    if nt == 0:
        return sparse.csr_matrix((cx.n_edges, 0), dtype=BOUNDARY_DTYPE)
    rows = np.column_stack([
        cx.edge_index(t[:, [0, 1]]),
        cx.edge_index(t[:, [0, 2]]),
        cx.edge_index(t[:, [1, 2]]),
    ]).reshape(-1)
    cols = np.repeat(np.arange(nt), 3)
    vals = np.tile(np.array([1, -1, 1], dtype=BOUNDARY_DTYPE), nt)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(cx.n_edges, nt),
                             dtype=BOUNDARY_DTYPE)


def hodge_laplacian(cx, p):
    """``Δ0 = B1 B1ᵀ``, ``Δ1 = B1ᵀB1 + B2B2ᵀ``, ``Δ2 = B2ᵀB2`` (float64 CSR)."""
    b1 = boundary_b1(cx).astype(np.float64)
    b2 = boundary_b2(cx).astype(np.float64)
    if p == 0:
        lap = b1 @ b1.T
    elif p == 1:
        lap = b1.T @ b1 + b2 @ b2.T
    elif p == 2:
        lap = b2.T @ b2
    else:
        raise InvalidParameterError(f"Hodge Laplacian order must be 0, 1 or 2, got {p}")
    lap = sparse.csr_matrix(lap)
    lap.eliminate_zeros()
    lap.sort_indices()
    return lap


def n_components(cx):
    """Connected components of the graph on all ``n_nodes`` (isolated nodes count)."""
    return component_labels(cx)[0]


def component_labels(cx):
    adj = sparse.csr_matrix(
        (np.ones(cx.n_edges), (cx.edges[:, 0], cx.edges[:, 1])),
        shape=(cx.n_nodes, cx.n_nodes),
    )
    return connected_components(adj, directed=False)


def betti_numbers(cx):
    """``(β0, β1)`` from ranks of the boundary matrices."""
    b0 = n_components(cx)
    rank_b1 = cx.n_nodes - b0
    if cx.n_triangles:
        rank_b2 = int(np.linalg.matrix_rank(boundary_b2(cx).toarray().astype(np.float64)))
    else:
        rank_b2 = 0
    return b0, cx.n_edges - rank_b1 - rank_b2


def boundary_to_csv(mat, path):
    """Coordinate triplets ``row,col,sign`` sorted by row then column."""
    coo = sparse.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    lines = ["row,col,sign"]
    lines += [f"{coo.row[k]},{coo.col[k]},{int(coo.data[k])}" for k in order]
    Path(path).write_text("\n".join(lines) + "\n")


def summary(cx):
    b0, b1 = betti_numbers(cx)
    return {
        "nodes": cx.n_nodes,
        "edges": cx.n_edges,
        "triangles": cx.n_triangles,
        "components": b0,
        "beta1": b1,
    }
