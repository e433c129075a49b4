"""Weighted multigraph with contraction, deletion, and Laplacian extraction.

Vertices are dense 0-based indices. Edges live in parallel numpy arrays and
carry stable ids: non-negative ids are positions in the original input edge
list, negative ids mark edges created by (approximate) Schur complements, so
an edge's origin is recoverable from the sign of its id. A contraction map
records, for every vertex of the originally built graph, its current live
representative.

Graphs are values: the mutation-shaped operations (contract_edge,
delete_edges) return new graphs and never touch their input.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    NonPositiveWeight,
    SelfLoopInput,
    TooFewVertices,
    UnknownEdge,
)


class VertexPartition(NamedTuple):
    left: np.ndarray
    right: np.ndarray


class WeightedMultigraph:
    """Immutable weighted multigraph over vertices 0..n-1.

    Attributes
    ----------
    n : int                live vertex count
    eu, ev : int64 arrays  endpoints of each edge
    ew : float64 array     positive edge weights
    eid : int64 array      stable edge ids (>= 0 original, < 0 Schur-created)
    n_build : int          vertex count of the graph this one was built from
    rep : int64 array      contraction map: built vertex -> live vertex
                           (-1 once a vertex has been eliminated by a Schur
                           complement rather than merged by a contraction)
    """

    __slots__ = ("n", "eu", "ev", "ew", "eid", "n_build", "rep", "_next_schur")

    def __init__(self, n, eu, ev, ew, eid, n_build=None, rep=None, next_schur=-1):
        self.n = int(n)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=np.float64)
        self.eid = np.asarray(eid, dtype=np.int64)
        self.n_build = self.n if n_build is None else int(n_build)
        self.rep = np.arange(self.n, dtype=np.int64) if rep is None else np.asarray(rep, dtype=np.int64)
        self._next_schur = int(next_schur)

    # -- basic views ----------------------------------------------------

    @property
    def m(self) -> int:
        return self.eu.shape[0]

    def vertices(self) -> np.ndarray:
        return np.arange(self.n, dtype=np.int64)

    def edge_ids(self) -> np.ndarray:
        return self.eid.copy()

    def edge_pos(self, e: int) -> int:
        """Array position of edge id `e` (UnknownEdge if absent)."""
        hits = np.nonzero(self.eid == e)[0]
        if hits.size == 0:
            raise UnknownEdge(f"edge id {e} not in graph")
        return int(hits[0])

    def endpoints(self, e: int) -> tuple[int, int]:
        p = self.edge_pos(e)
        return int(self.eu[p]), int(self.ev[p])

    def weight(self, e: int) -> float:
        return float(self.ew[self.edge_pos(e)])

    def original_mask(self) -> np.ndarray:
        return self.eid >= 0

    def degree_weights(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.eu, self.ew)
        np.add.at(d, self.ev, self.ew)
        return d

    def __repr__(self):
        return f"WeightedMultigraph(n={self.n}, m={self.m})"


def build_graph(edge_list: Sequence) -> WeightedMultigraph:
    """Validate an (u, v, w) edge list and compact vertex ids.

    Vertices are renumbered to 0..n-1 in order of first appearance. Edge ids
    are the 0-based input positions.
    """
    edges = list(edge_list)
    if len(edges) == 0:
        raise EmptyInput("edge list is empty")
    label = {}
    eu = np.empty(len(edges), dtype=np.int64)
    ev = np.empty(len(edges), dtype=np.int64)
    ew = np.empty(len(edges), dtype=np.float64)
    for i, (u, v, w) in enumerate(edges):
        if int(u) != u or int(v) != v or u < 0 or v < 0:
            raise ValueError(f"edge {i}: vertex ids must be non-negative integers")
        u, v = int(u), int(v)
        w = float(w)
        if u == v:
            raise SelfLoopInput(f"edge {i}: self-loop at vertex {u}")
        if not np.isfinite(w) or w <= 0.0:
            raise NonPositiveWeight(f"edge {i}: weight {w} must be positive and finite")
        if u not in label:
            label[u] = len(label)
        if v not in label:
            label[v] = len(label)
        eu[i] = label[u]
        ev[i] = label[v]
        ew[i] = w
    return WeightedMultigraph(len(label), eu, ev, ew, np.arange(len(edges), dtype=np.int64))


def contract_edge(g: WeightedMultigraph, e: int) -> WeightedMultigraph:
    """Merge the endpoints of edge `e`, dropping all resulting self-loops.

    The surviving vertex keeps the smaller of the two endpoint indices and
    every index above the removed one shifts down by one, so vertices stay
    dense. Parallel edges other than the self-loops are retained.
    """
    p = g.edge_pos(e)
    a, b = int(g.eu[p]), int(g.ev[p])
    c, d = (a, b) if a < b else (b, a)

    newidx = np.arange(g.n, dtype=np.int64)
    newidx[d] = c
    newidx[d + 1:] -= 1

    eu = newidx[g.eu]
    ev = newidx[g.ev]
    keep = eu != ev
    rep = np.where(g.rep >= 0, newidx[np.clip(g.rep, 0, None)], -1)
    return WeightedMultigraph(
        g.n - 1, eu[keep], ev[keep], g.ew[keep], g.eid[keep],
        n_build=g.n_build, rep=rep, next_schur=g._next_schur,
    )


def delete_edges(g: WeightedMultigraph, es: Iterable[int]) -> WeightedMultigraph:
    """Remove the edges with the given ids; vertices are unchanged."""
    ids = np.asarray(sorted(set(int(e) for e in es)), dtype=np.int64)
    if ids.size == 0:
        return g
    hit = np.isin(ids, g.eid)
    if not hit.all():
        raise UnknownEdge(f"edge ids {ids[~hit].tolist()} not in graph")
    keep = ~np.isin(g.eid, ids)
    return WeightedMultigraph(
        g.n, g.eu[keep], g.ev[keep], g.ew[keep], g.eid[keep],
        n_build=g.n_build, rep=g.rep, next_schur=g._next_schur,
    )


def laplacian_of(g: WeightedMultigraph) -> np.ndarray:
    """Dense Laplacian: degree matrix minus weighted adjacency."""
    return laplacian_from_arrays(g.n, g.eu, g.ev, g.ew)


def laplacian_from_arrays(n, eu, ev, ew) -> np.ndarray:
    L = np.zeros((n, n))
    flat = L.ravel()
    np.add.at(flat, eu * n + ev, -ew)
    np.add.at(flat, ev * n + eu, -ew)
    np.add.at(flat, eu * n + eu, ew)
    np.add.at(flat, ev * n + ev, ew)
    return L


def split_vertices(g: WeightedMultigraph) -> VertexPartition:
    """Deterministic halving: first ceil(n/2) vertices left, rest right."""
    if g.n < 2:
        raise TooFewVertices("need at least 2 vertices to split")
    cut = (g.n + 1) // 2
    return VertexPartition(np.arange(cut, dtype=np.int64), np.arange(cut, g.n, dtype=np.int64))


def is_connected(g: WeightedMultigraph) -> bool:
    return connected_components(g.n, g.eu, g.ev)[0] == 1


def connected_components(n, eu, ev) -> tuple[int, np.ndarray]:
    """(component count, component label per vertex) via union-find."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(eu.tolist(), ev.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            if ra > rb:
                ra, rb = rb, ra
            parent[rb] = ra
    roots = np.fromiter((find(x) for x in range(n)), dtype=np.int64, count=n)
    uniq, labels = np.unique(roots, return_inverse=True)
    return uniq.size, labels


def from_dense_laplacian(S: np.ndarray, drop_tol: float = 1e-12) -> WeightedMultigraph:
    """Graph of a dense Laplacian; every edge is tagged Schur-created.

    Off-diagonal entries whose magnitude is below drop_tol * max|S| are
    treated as numerical noise and dropped.
    """
    n = S.shape[0]
    scale = np.abs(S).max() if S.size else 0.0
    iu, iv = np.triu_indices(n, k=1)
    w = -S[iu, iv]
    keep = w > drop_tol * max(scale, 1.0)
    eu, ev, ew = iu[keep], iv[keep], w[keep]
    eid = -1 - np.arange(eu.size, dtype=np.int64)
    return WeightedMultigraph(n, eu, ev, ew, eid, next_schur=-1 - eu.size)
