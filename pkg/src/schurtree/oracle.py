"""Exact dense-arithmetic reference implementations.

Ground truth for everything the randomized stack approximates: effective
resistances via grounded solves, exact Schur complements, matrix-tree
counting, exhaustive spanning-tree enumeration, spectral-approximation
checking, a loop-erased random-walk tree sampler, and a naive sequential
leverage-score tree sampler. Dense O(n^3) algebra throughout -- these run at
desk scale, where exactness beats asymptotics.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np
import scipy.linalg

from .errors import (
    Disconnected,
    NotOrthogonal,
    NullSpaceMismatch,
    SameVertex,
    SingularBlock,
    StepBudgetExceeded,
    TooLarge,
)
from .graph import (
    WeightedMultigraph,
    connected_components,
    contract_edge,
    delete_edges,
    is_connected,
    laplacian_of,
)


def _require_connected(g: WeightedMultigraph):
    if g.n > 1 and not is_connected(g):
        raise Disconnected(f"graph with n={g.n} is not connected")


def grounded_solve(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """L^+ applied to the columns of B by grounding vertex 0.

    Every column of B must be orthogonal to all-ones. Raises Disconnected if
    the grounded block is singular.
    """
    n = L.shape[0]
    one_d = B.ndim == 1
    B2 = B.reshape(n, -1)
    try:
        cf = scipy.linalg.cho_factor(L[1:, 1:], check_finite=False)
        Xi = scipy.linalg.cho_solve(cf, B2[1:], check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise Disconnected("grounded Laplacian block is singular") from exc
    X = np.vstack([np.zeros((1, B2.shape[1])), Xi])
    X -= X.mean(axis=0)
    return X[:, 0] if one_d else X


def laplacian_solve(L: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Solve Lx = b on the complement of the all-ones null space.

    The dense factorization is exact to machine precision, which satisfies
    any meaningful tol; the argument documents the contract.
    """
    b = np.asarray(b, dtype=np.float64)
    scale = np.linalg.norm(b) + 1.0
    if abs(b.sum()) > 1e-9 * scale:
        raise NotOrthogonal("right-hand side is not orthogonal to all-ones")
    del tol
    return grounded_solve(L, b)


def pinv_grounded(L: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a connected Laplacian via grounding."""
    n = L.shape[0]
    M = np.zeros((n, n))
    try:
        M[1:, 1:] = scipy.linalg.inv(L[1:, 1:], check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise Disconnected("grounded Laplacian block is singular") from exc
    # re-center rows and columns so the result annihilates all-ones
    M -= M.mean(axis=0, keepdims=True)
    M -= M.mean(axis=1, keepdims=True)
    return M


def effective_resistance_exact(g: WeightedMultigraph, u: int, v: int) -> float:
    """b_uv^T L^+ b_uv by a grounded dense solve."""
    if u == v:
        raise SameVertex(f"effective resistance needs distinct vertices, got {u}")
    _require_connected(g)
    b = np.zeros(g.n)
    b[u], b[v] = 1.0, -1.0
    return float(b @ grounded_solve(laplacian_of(g), b))


def resistances_all_pairs(g: WeightedMultigraph) -> np.ndarray:
    """Matrix of effective resistances between every vertex pair."""
    _require_connected(g)
    M = pinv_grounded(laplacian_of(g))
    d = np.diag(M)
    return d[:, None] + d[None, :] - 2.0 * M


def leverage_score_exact(g: WeightedMultigraph, e: int) -> float:
    """w_e times the effective resistance across edge e; 1 iff e is a bridge."""
    p = g.edge_pos(e)
    return float(g.ew[p]) * effective_resistance_exact(g, int(g.eu[p]), int(g.ev[p]))


def leverage_scores_exact(g: WeightedMultigraph) -> np.ndarray:
    """All leverage scores at once (one dense inverse)."""
    R = resistances_all_pairs(g)
    return g.ew * R[g.eu, g.ev]


def schur_exact(g: WeightedMultigraph, keep: Iterable[int]) -> np.ndarray:
    """Exact Schur complement of the Laplacian onto the kept vertices.

    Returns a dense Laplacian indexed by the kept vertices in sorted order.
    Raises SingularBlock when some eliminated component has no edge to the
    kept set (the eliminated block is then singular).
    """
    keep = np.unique(np.asarray(list(keep), dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.n):
        raise ValueError("keep set references missing vertices")
    L = laplacian_of(g)
    return schur_exact_dense(L, keep)


def schur_exact_dense(L: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Dense block elimination of everything outside sorted `keep`."""
    n = L.shape[0]
    mask = np.zeros(n, dtype=bool)
    mask[keep] = True
    if mask.all():
        return L.copy()
    elim = np.nonzero(~mask)[0]
    # an eliminated block is invertible iff every component of the eliminated
    # subgraph touches the kept set; check structurally for a clean error
    C = L[np.ix_(elim, elim)]
    sub_eu, sub_ev = np.nonzero(np.triu(C, k=1) != 0.0)
    ncomp, labels = connected_components(elim.size, sub_eu, sub_ev)
    boundary = L[np.ix_(elim, keep)].any(axis=1)
    for c in range(ncomp):
        if not boundary[labels == c].any():
            raise SingularBlock("an eliminated component has no boundary edge")
    A = L[np.ix_(keep, keep)]
    B = L[np.ix_(keep, elim)]
    try:
        cf = scipy.linalg.cho_factor(C, check_finite=False)
        S = A - B @ scipy.linalg.cho_solve(cf, B.T, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise SingularBlock("eliminated block is numerically singular") from exc
    S = 0.5 * (S + S.T)
    return S


def spanning_tree_count(g: WeightedMultigraph) -> float:
    """Weighted spanning-tree count: any cofactor of the Laplacian."""
    return float(np.exp(log_spanning_tree_count(g)))


def log_spanning_tree_count(g: WeightedMultigraph) -> float:
    """log of the weighted tree count (sign-tracked to avoid overflow)."""
    _require_connected(g)
    if g.n == 1:
        return 0.0
    sign, logdet = np.linalg.slogdet(laplacian_of(g)[1:, 1:])
    if sign <= 0:
        raise Disconnected("Laplacian cofactor is not positive definite")
    return float(logdet)


_ENUM_MAX_N = 10
_ENUM_MAX_M = 20


def enumerate_trees(g: WeightedMultigraph) -> dict[frozenset, float]:
    """All spanning trees with their weights, by deletion-contraction.

    Tree keys are frozensets of original edge ids; values are products of
    edge weights. Guarded to n <= 10, m <= 20.
    """
    if g.n > _ENUM_MAX_N or g.m > _ENUM_MAX_M:
        raise TooLarge(f"enumeration guarded to n<={_ENUM_MAX_N}, m<={_ENUM_MAX_M}")
    _require_connected(g)
    out: dict[frozenset, float] = {}

    def recurse(h: WeightedMultigraph, chosen: tuple, factor: float):
        if h.n == 1:
            key = frozenset(chosen)
            out[key] = out.get(key, 0.0) + factor
            return
        e = int(h.eid[0])
        w = float(h.ew[0])
        # trees containing e
        recurse(contract_edge(h, e), chosen + (e,), factor * w)
        # trees avoiding e, if any survive
        rest = delete_edges(h, [e])
        if is_connected(rest):
            recurse(rest, chosen, factor)

    recurse(g, (), 1.0)
    return out


class SpectralBound:
    """Extreme generalized eigenvalues of a Laplacian pair on ones-complement."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)

    def valid(self, eps: float, slack: float = 1e-9) -> bool:
        return self.lo >= np.exp(-eps) - slack and self.hi <= np.exp(eps) + slack

    def __repr__(self):
        return f"SpectralBound(lo={self.lo:.6g}, hi={self.hi:.6g})"


def _ones_complement_basis(n: int) -> np.ndarray:
    return scipy.linalg.null_space(np.ones((1, n)))


def check_spectral_approx(a: np.ndarray, b: np.ndarray, eps: float | None = None) -> SpectralBound:
    """Extreme eigenvalues of (a, b) restricted to the complement of all-ones.

    The approximation a ~eps~ b holds iff [lo, hi] lies inside
    [exp(-eps), exp(eps)]; the returned SpectralBound tests that via
    .valid(eps) (with 1e-9 absolute slack for floating-point noise), so the
    eps argument here is advisory and may be omitted.
    """
    del eps  # the bound object carries enough to test any eps
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NullSpaceMismatch("Laplacians must share one square shape")
    n = a.shape[0]
    Q = _ones_complement_basis(n)
    A = Q.T @ a @ Q
    B = Q.T @ b @ Q
    scale = max(np.abs(A).max(), np.abs(B).max(), 1e-300)
    for M, name in ((A, "first"), (B, "second")):
        w = scipy.linalg.eigvalsh(M, check_finite=False)
        if w[0] <= 1e-12 * scale:
            raise NullSpaceMismatch(f"{name} Laplacian has extra null space (disconnected?)")
    vals = scipy.linalg.eigh(A, B, eigvals_only=True, check_finite=False)
    return SpectralBound(vals[0], vals[-1])


def wilson_sample(g: WeightedMultigraph, rng: np.random.Generator,
                  step_budget: int = 10**8) -> set:
    """A w-uniform spanning tree via loop-erased random walks.

    The baseline oracle sampler. Walk steps pick an incident edge with
    probability proportional to its weight; a step budget guards against the
    (unbounded at desk scale) expected runtime.
    """
    _require_connected(g)
    n = g.n
    if n == 1:
        return set()
    # per-vertex incidence: edge positions and cumulative weights
    order = np.argsort(np.concatenate([g.eu, g.ev]), kind="stable")
    inc_pos = np.concatenate([np.arange(g.m), np.arange(g.m)])[order]
    inc_other = np.concatenate([g.ev, g.eu])[order]
    owner = np.concatenate([g.eu, g.ev])[order]
    starts = np.searchsorted(owner, np.arange(n + 1))
    cums = np.cumsum(g.ew[inc_pos])

    def draw_step(v: int) -> int:
        s, t = starts[v], starts[v + 1]
        base = cums[s - 1] if s > 0 else 0.0
        total = cums[t - 1] - base
        x = base + rng.random() * total
        j = int(np.searchsorted(cums[s:t], x, side="right")) + s
        return min(j, t - 1)

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    next_edge = np.full(n, -1, dtype=np.int64)
    steps = 0
    for start in range(1, n):
        if in_tree[start]:
            continue
        v = start
        while not in_tree[v]:
            steps += 1
            if steps > step_budget:
                raise StepBudgetExceeded(f"random walk exceeded {step_budget} steps")
            j = draw_step(v)
            next_edge[v] = j
            v = int(inc_other[j])
        v = start
        while not in_tree[v]:
            in_tree[v] = True
            v = int(inc_other[next_edge[v]])
    # a vertex is marked in_tree only by a retrace that used its current
    # pointer, so every non-root pointer is a tree edge at completion
    return set(int(g.eid[inc_pos[next_edge[v]]]) for v in range(1, n))


def sequential_leverage_sampler(
    g: WeightedMultigraph,
    r_values: Iterable[float] | None = None,
    order: Iterable[int] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[set, list]:
    """Naive w-uniform sampler: decide edges one by one by exact leverage.

    Processes original edge ids in `order` (default: ascending id). For each
    edge still alive, computes its exact leverage score in the current
    conditioned graph, draws r (from `r_values` or `rng`), accepts iff
    r < leverage, and contracts or deletes accordingly. Edges turned into
    self-loops by earlier contractions are skipped.

    Returns (tree edge ids, trace) where trace holds one
    (edge id, leverage, accepted) triple per actual decision.
    """
    _require_connected(g)
    if r_values is not None:
        r_iter = iter(r_values)
        draw = lambda: float(next(r_iter))
    else:
        if rng is None:
            raise ValueError("need r_values or rng")
        draw = lambda: float(rng.random())
    ids = [int(e) for e in (order if order is not None else sorted(g.eid[g.eid >= 0]))]
    h = g
    tree: set = set()
    trace: list = []
    for e in ids:
        if not np.any(h.eid == e):
            continue  # contracted away or deleted
        lev = leverage_score_exact(h, e)
        r = draw()
        accept = r < lev
        trace.append((e, lev, accept))
        if accept:
            tree.add(e)
            h = contract_edge(h, e)
        else:
            h = delete_edges(h, [e])
    return tree, trace
