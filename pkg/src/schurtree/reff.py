"""Batch effective-resistance estimation by recursive Schur reduction.

A set of vertex pairs is answered at once: vertices that appear in no
pair are eliminated by an approximate Schur complement (which preserves
every requested resistance up to a small multiplicative factor), the
surviving vertices are halved, and the pair set is split by which side
of the cut its endpoints landed on.  Pairs that straddle the cut are
retried on the reduced graph; when every pair straddles it, the pair
list itself is halved so the recursion always shrinks.  With the
per-layer tolerance set to eps / ceil(log2 n), the layer distortions
compose to the requested e^{+-eps} overall.  A two-vertex graph is the
base case: the resistance is one over the total weight joining the pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chol import approx_schur_arrays
from .config import SamplerConfig
from .errors import BadPair, Disconnected, InternalError
from .graph import is_connected, laplacian_from_arrays
from .oracle import check_spectral_approx, schur_exact_dense
from .rng import make_rng

_DEFAULT_CFG = SamplerConfig()
_DROP_TOL = 1e-12


def _member(sorted_vals, x):
    """Elementwise membership of x in a sorted array."""
    pos = np.minimum(np.searchsorted(sorted_vals, x), sorted_vals.size - 1)
    return sorted_vals[pos] == x


@dataclass
class ReffEstimates:
    """Effective-resistance estimates aligned with the requested pairs."""

    values: np.ndarray
    epsilon: float


def _check_pairs(g, pairs):
    """Validate a pair sequence against g and return it as two id arrays."""
    pu = np.empty(len(pairs), dtype=np.int64)
    pv = np.empty(len(pairs), dtype=np.int64)
    for i, (u, v) in enumerate(pairs):
        if int(u) != u or int(v) != v:
            raise BadPair(f"pair {i}: endpoints must be integers, got ({u}, {v})")
        u, v = int(u), int(v)
        if not (0 <= u < g.n) or not (0 <= v < g.n):
            raise BadPair(f"pair {i} references a missing vertex: ({u}, {v})")
        if u == v:
            raise BadPair(f"pair {i} joins vertex {u} to itself")
        pu[i], pv[i] = u, v
    return pu, pv


class _Reduce:
    """State carried through one batch estimation run."""

    def __init__(self, n, eps, mode, rng, cfg, n_pairs, layer_log):
        self.n = n
        self.eps = eps
        self.mode = mode
        self.rng = rng
        self.cfg = cfg
        self.delta = 1.0 / n ** 3
        self.cap = 2 * max(1, math.ceil(math.log2(n))) + 4
        self.out = np.empty(n_pairs, dtype=np.float64)
        self.log = layer_log

    def _record(self, entry):
        self.log.append(entry)
        return len(self.log) - 1

    def _schur(self, verts, eu, ev, ew, keep, parent):
        """One reduction layer: the graph on verts collapsed onto keep."""
        if self.mode == "exact":
            pu = np.searchsorted(verts, eu)
            pv = np.searchsorted(verts, ev)
            L = laplacian_from_arrays(verts.size, pu, pv, ew)
            S = schur_exact_dense(L, np.searchsorted(verts, keep))
            iu, iv = np.triu_indices(keep.size, k=1)
            w = -S[iu, iv]
            sel = w > _DROP_TOL * max(float(np.abs(S).max()), 1.0)
            neu, nev, new = keep[iu[sel]], keep[iv[sel]], w[sel]
        else:
            kmask = np.zeros(self.n, dtype=bool)
            kmask[keep] = True
            orig = np.ones(eu.size, dtype=bool)
            a_idx, su, sv, sw = approx_schur_arrays(
                self.n, eu, ev, ew, orig, kmask, min(self.eps, 0.5),
                self.delta, self.rng, self.cfg)
            neu = np.concatenate([eu[a_idx], su])
            nev = np.concatenate([ev[a_idx], sv])
            new = np.concatenate([ew[a_idx], sw])
        if self.log is None:
            return neu, nev, new, parent
        # instrumentation: measure this layer's true spectral distortion
        pu = np.searchsorted(verts, eu)
        pv = np.searchsorted(verts, ev)
        exact = schur_exact_dense(
            laplacian_from_arrays(verts.size, pu, pv, ew),
            np.searchsorted(verts, keep))
        got = laplacian_from_arrays(
            keep.size, np.searchsorted(keep, neu),
            np.searchsorted(keep, nev), new)
        bound = check_spectral_approx(got, exact)
        eps_hat = max(abs(math.log(bound.lo)), abs(math.log(bound.hi)))
        rec = self._record({"parent": parent, "eps": eps_hat})
        return neu, nev, new, rec

    def run(self, verts, eu, ev, ew, pu, pv, idx, depth, parent):
        if idx.size == 0:
            return
        if depth > self.cap:
            raise InternalError(
                "pair recursion failed to shrink within its depth budget")
        v0 = np.unique(np.concatenate([pu, pv]))
        if v0.size < verts.size:
            eu, ev, ew, parent = self._schur(verts, eu, ev, ew, v0, parent)
            verts = v0
        if verts.size == 2:
            total = float(ew.sum())
            if total <= 0.0:
                raise InternalError(
                    "a reduced pair lost its connecting edge; an "
                    "approximation guarantee must have been violated")
            if self.log is not None:
                self._record({"parent": parent, "pairs": idx.tolist()})
            self.out[idx] = 1.0 / total
            return
        cut = verts.size // 2
        v1, v2 = verts[:cut], verts[cut:]
        u_in1 = _member(v1, pu)
        v_in1 = _member(v1, pv)
        s1 = u_in1 & v_in1
        s2 = ~u_in1 & ~v_in1
        s3 = ~s1 & ~s2
        if s3.all():
            # every pair straddles the cut; halve the pair list instead so
            # the recursion is guaranteed to make progress
            h = idx.size // 2
            self.run(verts, eu, ev, ew, pu[:h], pv[:h], idx[:h],
                     depth + 1, parent)
            self.run(verts, eu, ev, ew, pu[h:], pv[h:], idx[h:],
                     depth + 1, parent)
            return
        if s1.any():
            g1 = self._schur(verts, eu, ev, ew, v1, parent)
            self.run(v1, g1[0], g1[1], g1[2], pu[s1], pv[s1], idx[s1],
                     depth + 1, g1[3])
        if s2.any():
            g2 = self._schur(verts, eu, ev, ew, v2, parent)
            self.run(v2, g2[0], g2[1], g2[2], pu[s2], pv[s2], idx[s2],
                     depth + 1, g2[3])
        if s3.any():
            self.run(verts, eu, ev, ew, pu[s3], pv[s3], idx[s3],
                     depth + 1, parent)


def help_estimate_reff(g, pairs, eps_prime, config=None, rng=None, seed=None,
                       layer_log=None):
    """Answer the pairs with one Schur layer of tolerance eps_prime per level."""
    cfg = config if config is not None else _DEFAULT_CFG
    if not (0.0 < eps_prime <= 1.0):
        raise ValueError("eps_prime must lie in (0, 1]")
    pu, pv = _check_pairs(g, pairs)
    if pu.size == 0:
        return ReffEstimates(np.empty(0, dtype=np.float64), eps_prime)
    if not is_connected(g):
        raise Disconnected("effective resistance needs a connected graph")
    if rng is None:
        rng = make_rng(seed if seed is not None else cfg.seed)
    mode = "exact" if cfg.eps_mode == "exact" else "approx"
    r = _Reduce(g.n, eps_prime, mode, rng, cfg, pu.size, layer_log)
    r.run(np.arange(g.n, dtype=np.int64), g.eu, g.ev, g.ew,
          pu, pv, np.arange(pu.size, dtype=np.int64), 0, -1)
    return ReffEstimates(r.out, eps_prime)


def estimate_reff(g, pairs, eps, config=None, rng=None, seed=None,
                  layer_log=None):
    """Estimate the effective resistance of a batch of vertex pairs.

    Parameters
    ----------
    g : WeightedMultigraph
        Connected graph with positive edge weights.
    pairs : sequence of (u, v)
        Vertex pairs to answer, u != v; duplicates are allowed and each
        occurrence is answered.
    eps : float
        Total multiplicative tolerance, 0 < eps <= 1; each returned value
        is within a factor e^{+-eps} of the exact resistance with high
        probability.  The per-layer tolerance is eps / ceil(log2 n).
    config : SamplerConfig, optional
        Pipeline knobs; eps_mode == "exact" replaces every randomized
        reduction with an exact dense one.
    rng : numpy.random.Generator, optional
        Randomness source; built from `seed` (or the config seed) if absent.
    seed : int, optional
    layer_log : list, optional
        When given, each reduction layer appends its measured spectral
        distortion (small graphs only: measuring needs dense exact Schur
        complements).

    Returns
    -------
    ReffEstimates
        values aligned with the input pair order, epsilon = eps.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    layers = max(1, math.ceil(math.log2(max(g.n, 2))))
    res = help_estimate_reff(g, pairs, eps / layers, config=config, rng=rng,
                             seed=seed, layer_log=layer_log)
    return ReffEstimates(res.values, eps)
