"""Shared test utilities: deterministic random graph families."""

import numpy as np

from schurtree import build_graph


def random_connected_graph(n, extra, rng, unit=False):
    """Random spanning tree plus `extra` distinct chords, weights in [1, 3)."""
    perm = rng.permutation(n)
    edges = []
    for i in range(1, n):
        j = int(rng.integers(i))
        w = 1.0 if unit else float(1.0 + 2.0 * rng.random())
        edges.append((int(perm[i]), int(perm[j]), w))
    seen = set(frozenset((u, v)) for u, v, _ in edges)
    cap = n * (n - 1) // 2
    while len(edges) < min(n - 1 + extra, cap):
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u == v or frozenset((u, v)) in seen:
            continue
        seen.add(frozenset((u, v)))
        w = 1.0 if unit else float(1.0 + 2.0 * rng.random())
        edges.append((u, v, w))
    return build_graph(edges)


def edge_vector(n, u, v):
    b = np.zeros(n)
    b[u], b[v] = 1.0, -1.0
    return b
