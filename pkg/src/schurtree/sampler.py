"""Recursive spanning-tree sampler built on approximate Schur complements.

The sampler halves the vertex set, recurses into each half through a
Schur-complement reduction, and then decides the crossing edges through a
quadtree of vertex-pair subproblems. Every edge decision compares one uniform
draw r against the edge's conditional leverage score: first with the cheap
closed form in the two-vertex leaf frame, then -- whenever r lands inside the
estimate's uncertainty band -- against re-estimates from the progressively
larger ancestor frames, and finally against an exact computation on the
conditioned input graph refined through an accuracy ladder.

Frames are immutable snapshots taken at build time. Conditioning is applied
lazily: one global representative array maps each vertex to its merged
group's representative (contractions) and one global mask hides rejected
originals (deletions), so every frame's "live view" is conditioned on every
decision made so far without replaying decisions frame by frame.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chol import approx_schur_arrays
from .config import SamplerConfig
from .errors import (
    DeadEdge,
    Disconnected,
    InternalError,
    LevelOutOfRange,
    TooFewVertices,
)
from .graph import connected_components, is_connected, laplacian_from_arrays
from .oracle import grounded_solve
from .rng import make_rng

_DEFAULT_CFG = SamplerConfig()
_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_F = np.zeros(0)

_TRIU_CACHE = {}


def _triu(k):
    if k not in _TRIU_CACHE:
        _TRIU_CACHE[k] = np.triu_indices(k, 1)
    return _TRIU_CACHE[k]


def _member(sorted_vals, x):
    """Boolean membership of each entry of x in the sorted array."""
    if sorted_vals.size == 0:
        return np.zeros(x.shape, dtype=bool)
    idx = np.searchsorted(sorted_vals, x)
    np.minimum(idx, sorted_vals.size - 1, out=idx)
    return sorted_vals[idx] == x


@dataclass(frozen=True)
class EpsilonSchedule:
    """Per-level spectral error budget for the recursion's Schur builds."""

    n: int
    m: int
    mode: str  # "sparse", "dense", or "exact"
    t1: int
    max_level: int

    def epsilon_at(self, i):
        """Error target for builds issued by a frame at level i."""
        if i < 0 or i > self.max_level:
            raise LevelOutOfRange(
                f"level {i} outside [0, {self.max_level}]")
        if self.mode == "exact":
            return 0.0
        log2n = math.log2(self.n)
        base = 2.0 ** (0.5 * i) / (log2n * log2n)
        if self.mode == "dense":
            return base * self.n ** (-1.0 / 6.0) * self.m ** -0.25
        return base / math.sqrt(self.n)


def make_schedule(n, m, mode="auto"):
    """Resolve the error schedule for an n-vertex, m-edge input graph."""
    if n < 2:
        raise TooFewVertices("schedule needs at least 2 vertices")
    if mode == "auto":
        mode = "dense" if m > n ** (4.0 / 3.0) else "sparse"
    if mode not in ("sparse", "dense", "exact"):
        raise ValueError(f"unknown eps mode {mode!r}")
    max_level = max(1, math.ceil(math.log2(n)))
    t1 = max(0, math.ceil(0.5 * math.log2(n * n / m)))
    return EpsilonSchedule(n=n, m=m, mode=mode, t1=t1, max_level=max_level)


def is_good(lev, eps_i, r):
    """True when r falls outside the closed band [(1-eps)l, (1+eps)l]."""
    return r < (1.0 - eps_i) * lev or r > (1.0 + eps_i) * lev


@dataclass
class TreeSample:
    """One sampled spanning tree.

    edges holds the original edge ids of the tree, seed the RNG seed the
    sample was drawn with (None when an external generator was supplied), and
    stats the instrumentation counters: climb-depth histogram, root-fallback
    count, per-level recursion node counts, rejection-run statistics, and the
    per-decision trace when tracing is enabled.
    """

    edges: list
    seed: object
    stats: dict


class _Frame:
    """Immutable snapshot: retained original edge ids plus the Schur-created
    part, everything in the input graph's vertex labels.

    The Schur part has two storage forms. Approximate builds produce edge
    arrays (seu, sev, sew). Exact builds keep the Schur complement as a small
    dense Laplacian block aligned with the sorted `verts` array, which spares
    the per-build edge extraction and re-assembly.
    """

    __slots__ = ("level", "verts", "orig_ids", "seu", "sev", "sew", "dense")

    def __init__(self, level, verts, orig_ids,
                 seu=_EMPTY_I, sev=_EMPTY_I, sew=_EMPTY_F, dense=None):
        self.level = level
        self.verts = verts
        self.orig_ids = orig_ids
        self.seu = seu
        self.sev = sev
        self.sew = sew
        self.dense = dense


class _Run:
    """State of one sampling run: conditioning maps, the live ancestor
    chain, and instrumentation counters."""

    def __init__(self, g, schedule, config, rng, seed=None):
        self.n = g.n
        self.m = g.m
        self.oeu = g.eu
        self.oev = g.ev
        self.oew = g.ew
        self.geid = g.eid
        self.schedule = schedule
        self.cfg = config
        self.rng = rng
        self.seed = seed
        self.log2n = math.log2(g.n)
        levels = math.ceil(math.log2(g.n)) + 1
        self.delta_call = config.delta / (6.0 * 4.0 ** (levels + 1) * levels)
        self.rep = np.arange(g.n, dtype=np.int64)
        self.rejected = np.zeros(g.m, dtype=bool)
        self.accepted = []
        self.chain = []
        self.tree = None
        self.node_counts = []
        self.climb_hist = []
        self.root_fallbacks = 0
        self.decisions = 0
        self.run_sum = 0.0
        self.max_run_sum = 0.0
        self.run_alarms = 0
        self.trace = [] if config.trace else None

    # -- conditioning ------------------------------------------------------

    def _contract(self, e):
        a = self.rep[self.oeu[e]]
        b = self.rep[self.oev[e]]
        lo, hi = (a, b) if a < b else (b, a)
        self.rep[self.rep == hi] = lo

    def _live_view(self, fr):
        """Frame edges conditioned on all decisions so far."""
        rep = self.rep
        ids = fr.orig_ids
        ou = rep[self.oeu[ids]]
        ov = rep[self.oev[ids]]
        keep = (ou != ov) & ~self.rejected[ids]
        su = rep[fr.seu]
        sv = rep[fr.sev]
        sk = su != sv
        return ids[keep], ou[keep], ov[keep], su[sk], sv[sk], fr.sew[sk]

    # -- instrumentation ---------------------------------------------------

    def _count_node(self, level):
        while len(self.node_counts) <= level:
            self.node_counts.append(0)
        self.node_counts[level] += 1

    def _count_climb(self, extra):
        while len(self.climb_hist) <= extra:
            self.climb_hist.append(0)
        self.climb_hist[extra] += 1

    # -- frame construction ------------------------------------------------

    def _build(self, fr, keep_labels):
        """Child frame on the image of keep_labels under the current
        contraction map, conditioned on all decisions so far."""
        if self.schedule.mode == "exact":
            return self._build_exact(fr, keep_labels)
        rep = self.rep
        keep_img = np.unique(rep[keep_labels])
        live = np.unique(rep[fr.verts])
        level = fr.level + 1
        if keep_img.size == live.size:
            # nothing to eliminate; share the content at the deeper level
            return _Frame(level, fr.verts, fr.orig_ids,
                          fr.seu, fr.sev, fr.sew)
        ids, ou, ov, su, sv, sw = self._live_view(fr)
        kmask = np.zeros(self.n, dtype=bool)
        kmask[keep_img] = True
        eu = np.concatenate([ou, su])
        ev = np.concatenate([ov, sv])
        ew = np.concatenate([self.oew[ids], sw])
        orig = np.zeros(eu.size, dtype=bool)
        orig[: ids.size] = True
        eps = min(self.schedule.epsilon_at(fr.level), 0.5)
        try:
            a_idx, bu, bv, bw = approx_schur_arrays(
                self.n, eu, ev, ew, orig, kmask, eps, self.delta_call,
                self.rng, self.cfg)
        except Disconnected as exc:
            raise InternalError(
                "Schur build failed on a disconnected view; an earlier "
                "approximation guarantee must have been violated") from exc
        return _Frame(level, keep_img, ids[a_idx], bu, bv, bw)

    def _build_exact(self, fr, keep_labels):
        """Zero-error child: pass kept originals through, eliminate the rest
        of the live view by dense block elimination."""
        rep = self.rep
        rk = rep[keep_labels]
        keep_img = rk if (rk == keep_labels).all() else np.unique(rk)
        rv = rep[fr.verts]
        if (rv == fr.verts).all():
            uverts, inv = fr.verts, None
        else:
            uverts, inv = np.unique(rv, return_inverse=True)
        level = fr.level + 1
        if keep_img.size == uverts.size:
            return _Frame(level, fr.verts, fr.orig_ids, dense=fr.dense)
        ids = fr.orig_ids
        ou = rep[self.oeu[ids]]
        ov = rep[self.oev[ids]]
        alive = (ou != ov) & ~self.rejected[ids]
        ids, ou, ov = ids[alive], ou[alive], ov[alive]
        kin = _member(keep_img, ou) & _member(keep_img, ov)
        child_ids = ids[kin]
        u = uverts.size
        M = np.zeros((u, u))
        if fr.dense is not None:
            if inv is None:
                M += fr.dense
            else:  # contractions since the build: aggregate merged rows
                np.add.at(M, (inv[:, None], inv[None, :]), fr.dense)
        bu = np.searchsorted(uverts, ou[~kin])
        bv = np.searchsorted(uverts, ov[~kin])
        bw = self.oew[ids[~kin]]
        np.add.at(M.ravel(),
                  np.concatenate([bu * u + bv, bv * u + bu,
                                  bu * (u + 1), bv * (u + 1)]),
                  np.concatenate([-bw, -bw, bw, bw]))
        kpos = np.searchsorted(uverts, keep_img)
        nk = kpos.size
        emask = np.ones(u, dtype=bool)
        emask[kpos] = False
        order = np.concatenate([kpos, np.nonzero(emask)[0]])
        P = M[order[:, None], order[None, :]]
        A = P[:nk, :nk]
        B = P[:nk, nk:]
        C = P[nk:, nk:]
        try:
            S = A - B @ np.linalg.solve(C, B.T)
        except np.linalg.LinAlgError as exc:
            raise InternalError(
                "exact elimination hit a singular block; the conditioned "
                "view must have disconnected") from exc
        S = 0.5 * (S + S.T)
        return _Frame(level, keep_img, child_ids, dense=S)

    # -- leverage estimates ------------------------------------------------

    def _pair_leverage(self, fr, e, a, b):
        """Two-vertex closed form: the edge's share of the total weight
        between its merged endpoints in fr's live view."""
        ids = fr.orig_ids
        ou = self.rep[self.oeu[ids]]
        ov = self.rep[self.oev[ids]]
        osel = ((((ou == a) & (ov == b)) | ((ou == b) & (ov == a)))
                & ~self.rejected[ids])
        total = float(self.oew[ids[osel]].sum())
        if fr.dense is not None:
            reps = self.rep[fr.verts]
            total -= float(fr.dense[reps == a][:, reps == b].sum())
        else:
            su = self.rep[fr.seu]
            sv = self.rep[fr.sev]
            ssel = ((su == a) & (sv == b)) | ((su == b) & (sv == a))
            total += float(fr.sew[ssel].sum())
        if total <= 0.0:
            raise InternalError("leaf frame lost the sampled pair")
        return float(self.oew[e]) / total

    def _frame_leverage(self, fr, e):
        """Exact leverage of edge e in fr's live view by a dense solve."""
        ids, ou, ov, su, sv, sw = self._live_view(fr)
        if fr.dense is not None:
            uverts, inv = np.unique(self.rep[fr.verts], return_inverse=True)
            L = np.zeros((uverts.size, uverts.size))
            np.add.at(L, (inv[:, None], inv[None, :]), fr.dense)
            pu = np.searchsorted(uverts, ou)
            pv = np.searchsorted(uverts, ov)
            ew = self.oew[ids]
            u = uverts.size
            np.add.at(L.ravel(),
                      np.concatenate([pu * u + pv, pv * u + pu,
                                      pu * (u + 1), pv * (u + 1)]),
                      np.concatenate([-ew, -ew, ew, ew]))
            verts = uverts
        else:
            eu = np.concatenate([ou, su])
            ev = np.concatenate([ov, sv])
            ew = np.concatenate([self.oew[ids], sw])
            verts = np.unique(np.concatenate([eu, ev]))
            L = laplacian_from_arrays(
                verts.size,
                np.searchsorted(verts, eu),
                np.searchsorted(verts, ev),
                ew,
            )
        a = int(np.searchsorted(verts, self.rep[self.oeu[e]]))
        b = int(np.searchsorted(verts, self.rep[self.oev[e]]))
        rhs = np.zeros(verts.size)
        rhs[a] = 1.0
        rhs[b] = -1.0
        try:
            x = grounded_solve(L, rhs)
        except Disconnected as exc:
            raise InternalError(
                "conditioned view is disconnected; an approximation "
                "guarantee must have been violated") from exc
        return float(self.oew[e]) * float(x[a] - x[b])

    def _ladder_decide(self, lev, r):
        """Root accuracy ladder: halve the band until r separates from the
        (already exact) estimate, then compare."""
        rho = 1.0 / self.n
        while abs(r - lev) <= rho and rho > self.cfg.rho_floor:
            rho *= 0.5
        return r < lev

    # -- the decision procedure --------------------------------------------

    def sample_edge(self, e):
        """Decide one original edge; True means it joins the tree."""
        a = int(self.rep[self.oeu[e]])
        b = int(self.rep[self.oev[e]])
        if a == b:
            raise DeadEdge(f"edge {e} was contracted away")
        r = float(self.rng.random())
        self.decisions += 1
        sched = self.schedule
        k = len(self.chain) - 1
        lev = self._pair_leverage(self.chain[k], e, a, b)
        self.run_sum += lev
        if self.run_sum > self.max_run_sum:
            self.max_run_sum = self.run_sum
        if self.run_sum > self.cfg.rejection_alarm:
            self.run_alarms += 1
        floor = max(sched.t1, 1)
        i, extra = k, 0
        level_decided = k
        while True:
            eps_i = 2.0 * sched.epsilon_at(i) * self.log2n
            if is_good(lev, eps_i, r):
                accept = r < lev
                level_decided = i
                break
            if i <= floor:
                lev = self._frame_leverage(self.chain[0], e)
                accept = self._ladder_decide(lev, r)
                self.root_fallbacks += 1
                extra += 1
                level_decided = 0
                break
            i -= 1
            extra += 1
            lev = self._frame_leverage(self.chain[i], e)
        self._count_climb(extra)
        if self.trace is not None:
            self.trace.append({
                "edge": int(self.geid[e]),
                "r": r,
                "leverage": float(lev),
                "level": level_decided,
                "accept": bool(accept),
            })
        if accept:
            self.run_sum = 0.0
        return accept

    # -- recursion ----------------------------------------------------------

    def _crossing_pool(self, fr, left, right):
        """Surviving original edges of fr with one endpoint-representative
        in left and the other in right, labels frozen at call time.

        left and right must partition fr's live vertices, so an edge
        crosses exactly when its endpoints disagree about membership in
        left.
        """
        ids = fr.orig_ids
        ids = ids[~self.rejected[ids]]
        a = self.rep[self.oeu[ids]]
        b = self.rep[self.oev[ids]]
        a_in_l = _member(left, a)
        cross = a_in_l != _member(left, b)
        ids, a, b, a_in_l = ids[cross], a[cross], b[cross], a_in_l[cross]
        lab_l = np.where(a_in_l, a, b)
        lab_r = np.where(a_in_l, b, a)
        return ids, lab_l, lab_r

    def _sample_pool(self, eids):
        """Base case: decide a pool of parallel original edges between one
        vertex pair, contracting on the first acceptance."""
        for e in np.sort(eids):
            e = int(e)
            try:
                accept = self.sample_edge(e)
            except DeadEdge:
                self.rejected[e] = True
                continue
            if accept:
                self.accepted.append(e)
                self._contract(e)
            else:
                self.rejected[e] = True

    def across(self, fr, left, right, pool=None):
        """Decide every surviving original edge between left and right by
        quartering the label sets; the frame on top of the chain is fr."""
        if pool is None:
            pool = self._crossing_pool(fr, left, right)
        eids, lab_l, lab_r = pool
        if eids.size == 0:
            return
        if left.size == 1 and right.size == 1:
            self._sample_pool(eids)
            return
        cut_l = (left.size + 1) // 2
        cut_r = (right.size + 1) // 2
        # every pool label lies in left (resp. right), so the second half's
        # membership mask is the complement of the first half's
        in_l1 = _member(left[:cut_l], lab_l)
        in_r1 = _member(right[:cut_r], lab_r)
        for half_l, in_l in ((left[:cut_l], in_l1), (left[cut_l:], ~in_l1)):
            if half_l.size == 0:
                continue
            for half_r, in_r in ((right[:cut_r], in_r1),
                                 (right[cut_r:], ~in_r1)):
                if half_r.size == 0:
                    continue
                sel = in_l & in_r
                if not sel.any():
                    continue
                sub = eids[sel]
                alive = (~self.rejected[sub]
                         & (self.rep[self.oeu[sub]]
                            != self.rep[self.oev[sub]]))
                if not alive.any():
                    # every parallel died by contraction: conditioned out
                    self.rejected[sub] = True
                    continue
                child = self._build(fr, np.concatenate([half_l, half_r]))
                self.chain.append(child)
                self._count_node(child.level)
                self.across(child, half_l, half_r,
                            (sub, lab_l[sel], lab_r[sel]))
                self.chain.pop()

    def recur_tree(self, fr):
        """Decide every original edge alive inside fr's vertex set; fr is
        already on top of the chain."""
        rv = self.rep[fr.verts]
        live = fr.verts if (rv == fr.verts).all() else np.unique(rv)
        if live.size <= 1:
            return
        cut = (live.size + 1) // 2
        v1, v2 = live[:cut], live[cut:]
        for vi in (v1, v2):
            if vi.size == 1:
                self._count_node(fr.level + 1)
                continue
            ids = fr.orig_ids[~self.rejected[fr.orig_ids]]
            inside = (_member(vi, self.rep[self.oeu[ids]])
                      & _member(vi, self.rep[self.oev[ids]]))
            if not inside.any():
                # no surviving original edge inside this half: nothing to
                # decide there, so the build would be dead weight
                self._count_node(fr.level + 1)
                continue
            child = self._build(fr, vi)
            self.chain.append(child)
            self._count_node(child.level)
            self.recur_tree(child)
            self.chain.pop()
        self.across(fr, v1, v2)

    def run(self):
        root = _Frame(0, np.arange(self.n, dtype=np.int64),
                      np.arange(self.m, dtype=np.int64),
                      _EMPTY_I, _EMPTY_I, _EMPTY_F)
        self.chain = [root]
        self._count_node(0)
        self.recur_tree(root)
        acc = np.array(sorted(self.accepted), dtype=np.int64)
        ncomp = connected_components(
            self.n, self.oeu[acc], self.oev[acc])[0] if acc.size else self.n
        if acc.size != self.n - 1 or ncomp != 1:
            raise InternalError(
                "sampled edge set is not a spanning tree; an approximation "
                "guarantee was violated (failure budget delta exceeded)")
        self.tree = acc


def generate_spanning_tree(g, config=_DEFAULT_CFG, rng=None, seed=None):
    """Sample one spanning tree from the w-uniform distribution of g.

    Parameters
    ----------
    g : WeightedMultigraph
        Connected input graph with at least two vertices.
    config : SamplerConfig, optional
        Failure budget delta, error-schedule mode, constants, tracing.
    rng : numpy.random.Generator, optional
        Randomness source. When omitted, one is created from `seed`.
    seed : int, optional
        Seed recorded in the result and used to create the generator when
        `rng` is omitted; defaults to the seed in `config`.

    Returns
    -------
    TreeSample
        Original edge ids of the tree, the seed, and instrumentation stats.

    Raises
    ------
    TooFewVertices
        If g has fewer than two vertices.
    Disconnected
        If g is not connected.
    InternalError
        If the sampled edge set fails the spanning-tree validity check,
        which indicates an approximation guarantee was violated.
    """
    if g.n < 2:
        raise TooFewVertices("tree sampling needs at least 2 vertices")
    if not is_connected(g):
        raise Disconnected("input graph is not connected")
    if rng is None:
        if seed is None:
            seed = config.seed
        rng = make_rng(seed)
    schedule = make_schedule(g.n, g.m, config.eps_mode)
    run = _Run(g, schedule, config, rng, seed=seed)
    run.run()
    stats = {
        "mode": schedule.mode,
        "decisions": run.decisions,
        "climb_hist": run.climb_hist,
        "root_fallbacks": run.root_fallbacks,
        "node_counts": run.node_counts,
        "max_run_sum": run.max_run_sum,
        "run_alarms": run.run_alarms,
    }
    if run.trace is not None:
        stats["trace"] = run.trace
    edges = [int(run.geid[e]) for e in run.tree]
    return TreeSample(edges=edges, seed=seed, stats=stats)
