"""Estimator-style wrappers over the sampling and estimation routines.

The two classes follow the familiar fit/sample/predict shape so they
compose with pipeline tooling: the constructor takes hyperparameters,
fit binds and validates a graph, and the randomized work happens in
sample or predict.  get_params / set_params are provided directly,
without a dependency on any machine-learning package.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT_SEED, SamplerConfig
from .errors import Disconnected, TooFewVertices
from .graph import WeightedMultigraph, build_graph, is_connected
from .reff import estimate_reff
from .rng import derive_seed
from .sampler import generate_spanning_tree


def _as_graph(graph_or_edges) -> WeightedMultigraph:
    """Accept a ready graph or any (u, v, w) edge sequence."""
    if isinstance(graph_or_edges, WeightedMultigraph):
        return graph_or_edges
    return build_graph(list(graph_or_edges))


def _check_fitted(obj):
    if getattr(obj, "graph_", None) is None:
        raise RuntimeError(
            f"{type(obj).__name__} is not fitted; call fit(graph) first")


class SpanningTreeSampler:
    """Draws spanning trees from the weight-proportional distribution.

    Parameters mirror the sampling pipeline: eps_mode selects the
    approximation schedule ("auto", "sparse", "dense", or "exact"),
    delta is the per-tree failure budget, seed feeds the deterministic
    counter-based generator (tree i uses seed ^ i), and trace records
    every accept/reject decision on the returned samples.
    """

    def __init__(self, eps_mode="auto", delta=1e-3, seed=DEFAULT_SEED,
                 trace=False):
        self.eps_mode = eps_mode
        self.delta = delta
        self.seed = seed
        self.trace = trace

    def get_params(self, deep=True):
        return {"eps_mode": self.eps_mode, "delta": self.delta,
                "seed": self.seed, "trace": self.trace}

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, graph_or_edges):
        """Bind and validate the graph to sample from."""
        g = _as_graph(graph_or_edges)
        if g.n < 2:
            raise TooFewVertices("sampling needs at least two vertices")
        if not is_connected(g):
            raise Disconnected("sampling needs a connected graph")
        self.graph_ = g
        self.config_ = SamplerConfig(delta=self.delta, eps_mode=self.eps_mode,
                                     seed=self.seed, trace=self.trace)
        return self

    def sample(self, n_samples=1, seed=None):
        """Draw n_samples independent trees; returns a list of TreeSample."""
        _check_fitted(self)
        base = self.seed if seed is None else seed
        return [generate_spanning_tree(self.graph_, config=self.config_,
                                       seed=derive_seed(base, i))
                for i in range(n_samples)]


class EffectiveResistanceEstimator:
    """Answers batches of vertex pairs with resistance estimates.

    eps is the total multiplicative tolerance of each answer; eps_mode
    "exact" switches every internal reduction to exact dense algebra.
    """

    def __init__(self, eps=0.25, eps_mode="auto", seed=DEFAULT_SEED):
        self.eps = eps
        self.eps_mode = eps_mode
        self.seed = seed

    def get_params(self, deep=True):
        return {"eps": self.eps, "eps_mode": self.eps_mode, "seed": self.seed}

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, graph_or_edges):
        """Bind and validate the graph to answer pairs against."""
        g = _as_graph(graph_or_edges)
        if not is_connected(g):
            raise Disconnected("effective resistance needs a connected graph")
        self.graph_ = g
        self.config_ = SamplerConfig(eps_mode=self.eps_mode, seed=self.seed)
        return self

    def predict(self, pairs, seed=None):
        """Estimate the effective resistance of each (u, v) pair."""
        _check_fitted(self)
        res = estimate_reff(self.graph_, list(pairs), self.eps,
                            config=self.config_,
                            seed=self.seed if seed is None else seed)
        return np.asarray(res.values)
