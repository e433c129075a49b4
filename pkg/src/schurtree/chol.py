"""Randomized approximation stack.

LevScoreEst -> edge splitting -> random-order elimination with clique
sampling -> spectral sparsification, composed into approximate partial
Cholesky factorizations and approximate Schur complements.

The one structural liberty taken with the pseudocode: edges of the original
graph whose endpoints both survive into the kept set bypass the randomized
pipeline entirely and are copied through unchanged. The elimination/
sparsification machinery is applied only to the remaining edges (those
touching eliminated vertices, plus previously created complement edges).
The two parts add: the Schur complement of the whole equals the kept
original edges plus the Schur complement of the rest, and a spectral bound
on the second part extends to the sum. The tree sampler depends on this
bookkeeping -- original edges must survive every level with their identity
and exact weight.

Internally the split multigraph is never materialized per copy: the state
holds, per vertex pair, the total weight ("mass") and the integer copy
count, with copies within a pair sharing the averaged weight mass/count.
Each elimination step draws one multinomial row per incident pair -- the
grouped equivalent of every copy sampling one partner copy. Tracking every
distinct per-copy weight class instead would be the letter of the procedure,
but the class count fragments combinatorially with elimination depth (it
exhausts memory at n=200 while the copy counts themselves stay bounded).
The pair-level state preserves the per-step expectation exactly -- the
elimination clique depends only on per-neighbor weight totals -- and keeps
the copy granularity that the concentration argument rests on; the spectral
quality it delivers is what the acceptance suite measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .config import SamplerConfig
from .errors import Disconnected, EmptyKeep, IsolatedVertex
from .graph import (
    WeightedMultigraph,
    connected_components,
    is_connected,
    laplacian_from_arrays,
)
from .oracle import grounded_solve
from .rng import make_rng

_DEFAULT_CFG = SamplerConfig()


# ---------------------------------------------------------------------------
# leverage score estimation
# ---------------------------------------------------------------------------

def _lev_wr(n, eu, ev, ew, delta, rng, cfg) -> np.ndarray:
    """w_e * (estimated effective resistance) per edge of a connected graph.

    Exact dense resistances below the dense-leaf threshold; otherwise a
    random-projection sketch of the weighted incidence operator pushed
    through grounded Laplacian solves (relative error <= 1/3 w.h.p. at
    k = ceil(c_jl * ln(n/delta)) projections).
    """
    m = eu.shape[0]
    if m == 0:
        return np.zeros(0)
    if m == 1:
        return np.ones(1)          # a lone edge is a bridge: w * R = 1
    if n == 2:
        return ew / ew.sum()       # parallel edges: R = 1 / total weight
    L = laplacian_from_arrays(n, eu, ev, ew)
    if n <= cfg.dense_leaf:
        # resistances from the grounded inverse (no centering needed: the
        # difference quadratic form is invariant to the grounding choice)
        try:
            cf = scipy.linalg.cho_factor(L[1:, 1:], check_finite=False)
            Minv = scipy.linalg.cho_solve(cf, np.eye(n - 1), check_finite=False)
        except scipy.linalg.LinAlgError:
            raise Disconnected("grounded Laplacian block is singular") from None
        M = np.zeros((n, n))
        M[1:, 1:] = Minv
        d = np.diag(M)
        R = d[eu] + d[ev] - 2.0 * M[eu, ev]
        return ew * np.clip(R, 0.0, None)
    k = int(math.ceil(cfg.c_jl * math.log(n / delta)))
    signs = rng.integers(0, 2, size=(k, m)).astype(np.float64) * 2.0 - 1.0
    sw = np.sqrt(ew)
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([eu, ev])
    data = np.concatenate([sw, -sw])
    W12B = scipy.sparse.csr_matrix((data, (rows, cols)), shape=(m, n))
    Y = (W12B.T @ signs.T).T            # k x n, rows orthogonal to all-ones
    X = grounded_solve(L, Y.T)          # n x k
    D = X[eu] - X[ev]
    R_hat = (D * D).sum(axis=1) / k
    return ew * R_hat


def _tau_hat_from_wr(wr, n, exact) -> np.ndarray:
    if exact:
        return np.minimum(1.0, wr)
    return np.minimum(1.0, 1.5 * wr)


def lev_score_est(
    g: WeightedMultigraph,
    delta: float,
    rng: np.random.Generator | None = None,
    config: SamplerConfig = _DEFAULT_CFG,
) -> np.ndarray:
    """Leverage score overestimates tau_hat, aligned with g's edge arrays.

    Guarantees (w.h.p. at the configured delta): tau_e <= tau_hat_e <= 1 and
    sum(tau_hat) <= 2n. Exact below the dense-leaf threshold.
    """
    if not is_connected(g):
        raise Disconnected("leverage estimation needs a connected graph")
    if rng is None:
        rng = make_rng(config.seed)
    wr = _lev_wr(g.n, g.eu, g.ev, g.ew, delta, rng, config)
    return _tau_hat_from_wr(wr, g.n, g.n <= config.dense_leaf)


# ---------------------------------------------------------------------------
# edge splitting
# ---------------------------------------------------------------------------

def split_rho(tau_hat: np.ndarray, eps: float, delta: float, n: int) -> np.ndarray:
    """Copy counts rho_e = ceil(tau_hat * 12 * (eps/2)^-2 * ln^2(3n/delta))."""
    if not (0.0 < eps <= 0.5):
        raise ValueError("eps must lie in (0, 1/2]")
    factor = 12.0 * (eps / 2.0) ** -2 * math.log(3.0 * n / delta) ** 2
    return np.ceil(tau_hat * factor).astype(np.int64)


@dataclass
class SplitMultigraph:
    """A graph with each edge replaced by equal-weight parallel copies."""

    graph: WeightedMultigraph
    parent: np.ndarray   # copy position -> parent edge id
    rho: np.ndarray      # per parent edge position, the copy count


def split_edges(
    g: WeightedMultigraph,
    tau_hat: np.ndarray,
    eps: float,
    delta: float,
) -> SplitMultigraph:
    """Materialized edge splitting (small-scale / test use).

    Each parent edge becomes rho_e copies of weight w_e/rho_e; the last copy
    absorbs the division rounding, so the copies sum back to the parent
    weight up to float accumulation error.
    """
    rho = split_rho(np.asarray(tau_hat, dtype=np.float64), eps, delta, g.n)
    total = int(rho.sum())
    eu = np.repeat(g.eu, rho)
    ev = np.repeat(g.ev, rho)
    parent = np.repeat(g.eid, rho)
    w_copy = np.repeat(g.ew / rho, rho)
    last = np.cumsum(rho) - 1
    w_copy[last] = g.ew - (rho - 1) * (g.ew / rho)
    out = WeightedMultigraph(g.n, eu, ev, w_copy, np.arange(total, dtype=np.int64))
    return SplitMultigraph(graph=out, parent=parent, rho=rho)


# ---------------------------------------------------------------------------
# clique sampling
# ---------------------------------------------------------------------------

def clique_sample(g: WeightedMultigraph, v: int, rng: np.random.Generator) -> list:
    """One pass of randomized clique construction at vertex v.

    For each multi-edge e = (v, a), samples one incident multi-edge
    f = (v, b) with probability w_f / W_v and, when a != b, emits (a, b)
    with weight w_e w_f / (w_e + w_f). The expected emitted Laplacian equals
    the exact elimination clique at v.
    """
    inc = np.nonzero((g.eu == v) | (g.ev == v))[0]
    if inc.size == 0:
        raise IsolatedVertex(f"vertex {v} has no incident edges")
    others = (g.eu[inc] + g.ev[inc] - v).astype(np.int64)
    w = g.ew[inc]
    cum = np.cumsum(w)
    total = cum[-1]
    x = rng.random(inc.size) * total
    f = np.searchsorted(cum, x, side="right")
    f = np.minimum(f, inc.size - 1)
    a, b = others, others[f]
    wa, wb = w, w[f]
    keep = a != b
    return [
        (int(aa), int(bb), float(wab))
        for aa, bb, wab in zip(a[keep], b[keep], wa[keep] * wb[keep] / (wa[keep] + wb[keep]))
    ]


# ---------------------------------------------------------------------------
# grouped elimination engine
# ---------------------------------------------------------------------------

class _PairState:
    """Elimination state at pair granularity.

    mass[u, v] is the total weight between u and v, cnt[u, v] the number of
    split copies carrying it; copies within a pair share the averaged weight
    mass/cnt. Both matrices stay symmetric with zero diagonal.
    """

    __slots__ = ("mass", "cnt")

    def __init__(self, n, eu, ev, ew, rho):
        self.mass = np.zeros((n, n))
        self.cnt = np.zeros((n, n), dtype=np.int64)
        np.add.at(self.mass, (eu, ev), ew)
        np.add.at(self.mass, (ev, eu), ew)
        np.add.at(self.cnt, (eu, ev), rho)
        np.add.at(self.cnt, (ev, eu), rho)

    def eliminate(self, v, rng, record=False):
        """Replace the star at v by one clique-sample pass.

        Every copy incident to v picks a partner copy with probability
        proportional to weight; a pick across pairs (v,a), (v,b) emits one
        copy on (a,b) of weight w_a w_b / (w_a + w_b) (per-copy weights),
        picks within a pair emit nothing. Returns (alpha, column) of the
        exact elimination column at v in the current state when record is
        set, else (alpha, None); alpha = 0 for an isolated vertex.
        """
        nbr = np.nonzero(self.cnt[v])[0]
        if nbr.size == 0:
            return 0.0, None
        c = self.cnt[v, nbr]
        ms = self.mass[v, nbr]
        W = float(ms.sum())
        col = None
        if record:
            col = np.zeros(self.mass.shape[0])
            col[nbr] = -ms
            col[v] = W
            col /= W
        if nbr.size > 1:
            # every copy picks a partner; with one neighbor all picks stay
            # within the pair and emit nothing (and consume no RNG state)
            K = rng.multinomial(c, ms / W)
            K2 = K + K.T
            om = ms / c
            pair_w = np.outer(om, om) / (om[:, None] + om[None, :])
            add_mass = K2 * pair_w
            np.fill_diagonal(add_mass, 0.0)
            np.fill_diagonal(K2, 0)
            self.mass[np.ix_(nbr, nbr)] += add_mass
            self.cnt[np.ix_(nbr, nbr)] += K2
        self.mass[v, :] = 0.0
        self.mass[:, v] = 0.0
        self.cnt[v, :] = 0
        self.cnt[:, v] = 0
        return W, col

    def remainder(self):
        """Edges (u < v, weight) still present."""
        iu, iv = np.nonzero(np.triu(self.cnt, 1))
        return iu, iv, self.mass[iu, iv]


def _merge_pairs(eu, ev, w):
    """Sum parallel edges per unordered vertex pair."""
    if eu.shape[0] == 0:
        return eu, ev, w
    a = np.minimum(eu, ev)
    b = np.maximum(eu, ev)
    key = a * (b.max() + 1) + b
    uniq, inv = np.unique(key, return_inverse=True)
    wm = np.bincount(inv, weights=w, minlength=uniq.size)
    au = np.empty(uniq.size, dtype=np.int64)
    av = np.empty(uniq.size, dtype=np.int64)
    au[inv] = a
    av[inv] = b
    return au, av, wm


# ---------------------------------------------------------------------------
# sparsification
# ---------------------------------------------------------------------------

def _sparsify_component(n_sub, eu, ev, ew, eps, delta, rng, cfg):
    """One-shot importance sampling of a connected component's edges."""
    if eu.shape[0] == 1:
        # all q copies land on the only edge, reweighted back to w exactly,
        # and a single-category multinomial consumes no RNG state
        return eu, ev, ew
    wr = _lev_wr(n_sub, eu, ev, ew, delta, rng, cfg)
    tot = wr.sum()
    if tot <= 0.0:
        return eu[:0], ev[:0], ew[:0]
    p = wr / tot
    q = int(math.ceil(cfg.c_sp * n_sub * eps ** -2 * math.log(n_sub / delta)))
    counts = rng.multinomial(q, p)
    nz = counts > 0
    w_out = counts[nz] * ew[nz] / (q * p[nz])
    return eu[nz], ev[nz], w_out


def _sparsify_arrays(n, eu, ev, ew, eps, delta, rng, cfg):
    """Sparsify per connected component (labels 0..n-1; isolated vertices
    allowed and ignored). Pairs should be pre-merged by the caller."""
    if eu.shape[0] == 0:
        return eu, ev, ew
    ncomp, labels = connected_components(n, eu, ev)
    if ncomp == 1 and np.union1d(eu, ev).size == n:
        return _sparsify_component(n, eu, ev, ew, eps, delta, rng, cfg)
    out_u, out_v, out_w = [], [], []
    edge_lab = labels[eu]
    for c in np.unique(edge_lab):
        sel = edge_lab == c
        verts = np.unique(np.concatenate([eu[sel], ev[sel]]))
        pos = np.empty(n, dtype=np.int64)
        pos[verts] = np.arange(verts.size)
        su, sv, sw = _sparsify_component(
            verts.size, pos[eu[sel]], pos[ev[sel]], ew[sel], eps, delta, rng, cfg)
        out_u.append(verts[su])
        out_v.append(verts[sv])
        out_w.append(sw)
    return (np.concatenate(out_u), np.concatenate(out_v), np.concatenate(out_w))


def graph_sparsify(
    g: WeightedMultigraph,
    eps: float,
    delta: float,
    rng: np.random.Generator | None = None,
    config: SamplerConfig = _DEFAULT_CFG,
) -> WeightedMultigraph:
    """Spectral sparsifier by i.i.d. leverage-proportional edge sampling.

    Draws q = ceil(c_sp * n * eps^-2 * ln(n/delta)) edge copies with
    probability p_e proportional to w_e * R_hat_e, reweights each by
    w_e / (q p_e), and merges copies landing on the same vertex pair. The
    expected output Laplacian equals the input Laplacian exactly.
    """
    if not is_connected(g):
        raise Disconnected("sparsifier needs a connected graph")
    if rng is None:
        rng = make_rng(config.seed)
    su, sv, sw = _sparsify_component(g.n, g.eu, g.ev, g.ew, eps, delta, rng, config)
    su, sv, sw = _merge_pairs(su, sv, sw)
    eid = -1 - np.arange(su.size, dtype=np.int64)
    return WeightedMultigraph(g.n, su, sv, sw, eid, n_build=g.n_build,
                              rep=g.rep, next_schur=-1 - su.size)


# ---------------------------------------------------------------------------
# the combined pipeline: approximate partial Cholesky / Schur complement
# ---------------------------------------------------------------------------

def _bpart_pipeline(n, eu, ev, ew, f_mask, eps, delta, rng, cfg, record=False):
    """Run split/eliminate/sparsify on one edge set (the non-passthrough
    part), eliminating the vertices marked in f_mask.

    Edges are processed per connected component, ordered by smallest member
    vertex so the RNG stream is reproducible. eps is the overall target; the
    split uses eps/2 and the sparsifier eps/2 with budget delta/3, matching
    the composition that yields an eps-approximation overall. Returns output
    edge arrays plus (elim_order, alphas, cols); the latter two are filled
    only when record is set.
    """
    order_all, alphas_all, cols_all = [], [], []

    def note_isolated(vs):
        for v in vs:
            order_all.append(int(v))
            if record:
                alphas_all.append(0.0)
                cols_all.append(np.zeros(n))

    if eu.shape[0] == 0:
        note_isolated(np.nonzero(f_mask)[0].tolist())
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0), (order_all, alphas_all, cols_all)

    _, labels = connected_components(n, eu, ev)
    edge_lab = labels[eu]
    comp_ids = np.unique(edge_lab)
    comp_min = [
        int(min(eu[edge_lab == c].min(), ev[edge_lab == c].min()))
        for c in comp_ids
    ]
    comp_ids = comp_ids[np.argsort(comp_min, kind="stable")]
    touched = np.zeros(n, dtype=bool)
    out_u, out_v, out_w = [], [], []
    for c in comp_ids:
        sel = edge_lab == c
        verts = np.unique(np.concatenate([eu[sel], ev[sel]]))
        pos = np.empty(n, dtype=np.int64)
        pos[verts] = np.arange(verts.size)
        ceu, cev, cew = pos[eu[sel]], pos[ev[sel]], ew[sel]
        nloc = verts.size
        touched[verts] = True
        f_local = np.nonzero(f_mask[verts])[0]
        wr = _lev_wr(nloc, ceu, cev, cew, delta / 3.0, rng, cfg)
        tau = _tau_hat_from_wr(wr, nloc, nloc <= cfg.dense_leaf)
        rho = split_rho(tau, eps, delta, n)
        state = _PairState(nloc, ceu, cev, cew, rho)
        order = rng.permutation(f_local) if f_local.size else f_local
        for v in order.tolist():
            alpha, col = state.eliminate(v, rng, record=record)
            order_all.append(int(verts[v]))
            if record:
                gcol = np.zeros(n)
                if col is not None:
                    gcol[verts] = col
                alphas_all.append(alpha)
                cols_all.append(gcol)
        ru, rv, rw = state.remainder()
        # remainder pairs are unique, so the sparsified sample is too
        su, sv, sw = _sparsify_arrays(
            nloc, ru, rv, rw, eps / 2.0, delta / 3.0, rng, cfg)
        out_u.append(verts[su])
        out_v.append(verts[sv])
        out_w.append(sw)
    # eliminated vertices that had no incident edges at all
    note_isolated(np.nonzero(f_mask & ~touched)[0].tolist())
    return (
        np.concatenate(out_u) if out_u else np.zeros(0, dtype=np.int64),
        np.concatenate(out_v) if out_v else np.zeros(0, dtype=np.int64),
        np.concatenate(out_w) if out_w else np.zeros(0),
        (order_all, alphas_all, cols_all),
    )


def _split_parts(g: WeightedMultigraph, keep_mask: np.ndarray):
    """Indices of passthrough edges (original, both endpoints kept) and of
    everything else (incident to an eliminated vertex, or complement-made)."""
    inside = keep_mask[g.eu] & keep_mask[g.ev]
    a_idx = np.nonzero(inside & (g.eid >= 0))[0]
    b_idx = np.nonzero(~(inside & (g.eid >= 0)))[0]
    return a_idx, b_idx


def approx_schur_arrays(n, eu, ev, ew, orig, keep_mask, eps, delta, rng, cfg):
    """Array-level approximate Schur complement for internal callers.

    No validation and no graph wrapping: returns (a_idx, su, sv, sw) where
    a_idx indexes the passthrough edges (original, both endpoints kept) in
    the input arrays and (su, sv, sw) are the freshly sampled complement
    edges. The caller is responsible for the graph being connected.
    """
    inside = keep_mask[eu] & keep_mask[ev]
    pass_through = inside & orig
    a_idx = np.nonzero(pass_through)[0]
    b_idx = np.nonzero(~pass_through)[0]
    su, sv, sw, _ = _bpart_pipeline(
        n, eu[b_idx], ev[b_idx], ew[b_idx], ~keep_mask,
        eps, delta, rng, cfg, record=False)
    return a_idx, su, sv, sw


def _keep_mask(g: WeightedMultigraph, keep) -> np.ndarray:
    keep = np.asarray(sorted(set(int(v) for v in keep)), dtype=np.int64)
    if keep.size == 0:
        raise EmptyKeep("keep set is empty")
    if keep.min() < 0 or keep.max() >= g.n:
        raise ValueError("keep contains out-of-range vertices")
    mask = np.zeros(g.n, dtype=bool)
    mask[keep] = True
    return mask


@dataclass
class PartialCholesky:
    """Approximate partial Cholesky factorization.

    The input Laplacian is approximated by
    sum_i alpha_i c_i c_i^T  +  L(schur_tilde),
    where c_i is the (unit-diagonal) elimination column for the i-th
    eliminated vertex and schur_tilde is a graph supported on the kept
    vertices (carried on the full vertex set for easy reassembly).
    """

    elim_order: np.ndarray
    alphas: np.ndarray
    cols: np.ndarray          # one row per eliminated vertex, length n
    schur_tilde: WeightedMultigraph

    def reconstruct(self) -> np.ndarray:
        """Dense Laplacian of the factorization."""
        from .graph import laplacian_of

        n = self.cols.shape[1] if self.cols.size else self.schur_tilde.n
        L = np.zeros((n, n))
        for a, col in zip(self.alphas, self.cols):
            if a > 0.0:
                L += a * np.outer(col, col)
        return L + laplacian_of(self.schur_tilde)


def apx_partial_cholesky(
    g: WeightedMultigraph,
    keep,
    eps: float,
    delta: float,
    rng: np.random.Generator | None = None,
    config: SamplerConfig = _DEFAULT_CFG,
) -> PartialCholesky:
    """Randomized partial Cholesky: eliminate V \\ keep, keep a sparse
    epsilon-approximate Schur complement.

    keep must be a nonempty proper subset of the vertices; the reconstruction
    spectrally eps-approximates the input Laplacian with probability at least
    1 - delta.
    """
    if not (0.0 < eps <= 0.5):
        raise ValueError("eps must lie in (0, 1/2]")
    if not is_connected(g):
        raise Disconnected("partial Cholesky needs a connected graph")
    if rng is None:
        rng = make_rng(config.seed)
    mask = _keep_mask(g, keep)
    if mask.all():
        raise EmptyKeep("keep must be a proper subset (nothing to eliminate)")
    a_idx, b_idx = _split_parts(g, mask)
    su, sv, sw, (order, alphas, cols) = _bpart_pipeline(
        g.n, g.eu[b_idx], g.ev[b_idx], g.ew[b_idx], ~mask,
        eps, delta, rng, config, record=True)
    out_u = np.concatenate([g.eu[a_idx], su])
    out_v = np.concatenate([g.ev[a_idx], sv])
    out_w = np.concatenate([g.ew[a_idx], sw])
    out_id = np.concatenate([g.eid[a_idx], -1 - np.arange(su.size, dtype=np.int64)])
    tilde = WeightedMultigraph(g.n, out_u, out_v, out_w, out_id,
                               n_build=g.n_build, rep=g.rep,
                               next_schur=-1 - su.size)
    cols_arr = np.array(cols) if cols else np.zeros((0, g.n))
    return PartialCholesky(
        elim_order=np.asarray(order, dtype=np.int64),
        alphas=np.asarray(alphas, dtype=np.float64),
        cols=cols_arr,
        schur_tilde=tilde,
    )


def approx_schur(
    g: WeightedMultigraph,
    keep,
    eps: float,
    delta: float,
    rng: np.random.Generator | None = None,
    config: SamplerConfig = _DEFAULT_CFG,
) -> WeightedMultigraph:
    """Sparse eps-approximate Schur complement onto the kept vertices.

    Original edges with both endpoints kept are copied through unchanged
    (identity and weight intact); the rest of the graph is split, eliminated
    in uniform random order with clique sampling, and sparsified. Vertices
    keep their labels in g; eliminated ones simply lose all incident edges,
    and the representative map marks them as gone.
    """
    if not (0.0 < eps <= 0.5):
        raise ValueError("eps must lie in (0, 1/2]")
    if not is_connected(g):
        raise Disconnected("Schur complement needs a connected graph")
    if rng is None:
        rng = make_rng(config.seed)
    mask = _keep_mask(g, keep)
    a_idx, su, sv, sw = approx_schur_arrays(
        g.n, g.eu, g.ev, g.ew, g.eid >= 0, mask, eps, delta, rng, config)
    out_u = np.concatenate([g.eu[a_idx], su])
    out_v = np.concatenate([g.ev[a_idx], sv])
    out_w = np.concatenate([g.ew[a_idx], sw])
    out_id = np.concatenate([g.eid[a_idx], -1 - np.arange(su.size, dtype=np.int64)])
    new_rep = g.rep.copy()
    gone = np.nonzero(~mask)[0]
    lost = np.isin(np.clip(new_rep, 0, None), gone) & (new_rep >= 0)
    new_rep[lost] = -1
    return WeightedMultigraph(g.n, out_u, out_v, out_w, out_id,
                              n_build=g.n_build, rep=new_rep,
                              next_schur=-1 - su.size)
