"""Batch effective-resistance estimation: closed forms, error bands,
recursion structure, and input validation."""

import itertools
import math

import numpy as np
import pytest

from schurtree import SamplerConfig, build_graph, estimate_reff
from schurtree.errors import BadPair, Disconnected
from schurtree.oracle import effective_resistance_exact
from schurtree.reff import help_estimate_reff
from schurtree.rng import make_rng

from helpers import random_connected_graph


def unit_path(n):
    return build_graph([(i, i + 1, 1.0) for i in range(n - 1)])


def test_long_path_endpoint_resistance():
    g = unit_path(100)
    est = estimate_reff(g, [(0, 99)], eps=0.1, seed=1)
    assert est.epsilon == 0.1
    val = float(est.values[0])
    assert 99.0 * math.exp(-0.1) <= val <= 99.0 * math.exp(0.1)


def test_k4_adjacent_pairs():
    g = build_graph([(u, v, 1.0) for u, v in itertools.combinations(range(4), 2)])
    pairs = list(itertools.combinations(range(4), 2))
    est = estimate_reff(g, pairs, eps=0.2, seed=3)
    assert est.values.shape == (6,)
    for val in est.values:
        assert 0.5 * math.exp(-0.2) <= val <= 0.5 * math.exp(0.2)


def test_two_vertex_graph_is_exact_closed_form():
    g = build_graph([(0, 1, 2.0), (0, 1, 3.0)])
    est = estimate_reff(g, [(0, 1)], eps=0.5, seed=0)
    assert float(est.values[0]) == 1.0 / 5.0


def test_empty_pair_set():
    g = unit_path(4)
    est = estimate_reff(g, [], eps=0.3, seed=0)
    assert est.values.shape == (0,)
    # the empty answer needs no graph traversal at all
    broken = build_graph([(0, 1, 1.0), (2, 3, 1.0)])
    assert estimate_reff(broken, [], eps=0.3, seed=0).values.shape == (0,)


def test_single_pair_reduction_shape():
    # one pair: a single collapse onto its endpoints, then the closed form
    g = unit_path(16)
    log = []
    estimate_reff(g, [(2, 9)], eps=0.5, seed=4, layer_log=log)
    assert len(log) == 2
    assert set(log[0]) == {"parent", "eps"} and log[0]["parent"] == -1
    assert log[1] == {"parent": 0, "pairs": [0]}


def test_pair_free_branches_do_no_work():
    # two pairs on opposite ends: each gets its own branch, and no layer is
    # spent on the branch combinations that hold no pairs
    g = unit_path(16)
    log = []
    estimate_reff(g, [(0, 1), (14, 15)], eps=0.5, seed=4, layer_log=log)
    schur_layers = [e for e in log if "eps" in e]
    leaves = [e for e in log if "pairs" in e]
    assert len(schur_layers) == 3  # onto {0,1,14,15}, then one per side
    assert sorted(leaf["pairs"] for leaf in leaves) == [[0], [1]]
    assert len(log) == 5


def test_exact_mode_equals_dense_oracle():
    rng = make_rng(12)
    g = random_connected_graph(20, 25, rng)
    pairs = [(int(rng.integers(0, 10)), int(rng.integers(10, 20)))
             for _ in range(10)]
    cfg = SamplerConfig(eps_mode="exact")
    est = estimate_reff(g, pairs, eps=0.5, config=cfg, seed=7)
    for (u, v), val in zip(pairs, est.values):
        exact = effective_resistance_exact(g, u, v)
        assert val == pytest.approx(exact, rel=1e-8)


def test_values_stay_aligned_with_input_order():
    # weighted path with geometric weights: every pair's resistance is
    # separated from the others by more than the error band, so any
    # misalignment of the output would break the per-pair bound
    n = 16
    g = build_graph([(i, i + 1, 2.0 ** -i) for i in range(n - 1)])
    exact = np.cumsum([2.0**i for i in range(n - 1)])
    pairs = [(0, k) for k in range(1, n)]
    rng = make_rng(9)
    order = rng.permutation(len(pairs))
    shuffled = [pairs[i] for i in order]
    est = estimate_reff(g, shuffled, eps=0.25, seed=2)
    for (u, v), val in zip(shuffled, est.values):
        assert abs(math.log(val / exact[v - 1])) <= 0.25


def test_duplicate_pairs_each_answered():
    g = unit_path(8)
    est = estimate_reff(g, [(0, 5), (0, 5)], eps=0.2, seed=5)
    assert est.values.shape == (2,)
    for val in est.values:
        assert abs(math.log(val / 5.0)) <= 0.2


def test_layer_distortions_compose_within_budget():
    rng = make_rng(21)
    g = random_connected_graph(12, 14, rng)
    pairs = [(int(u), int(v)) for u, v in
             [rng.choice(12, size=2, replace=False) for _ in range(6)]]
    eps = 0.5
    log = []
    est = estimate_reff(g, pairs, eps=eps, seed=8, layer_log=log)
    seen = []
    for i, entry in enumerate(log):
        if "pairs" not in entry:
            continue
        seen.extend(entry["pairs"])
        total = 0.0
        p = entry["parent"]
        while p != -1:
            total += log[p]["eps"]
            p = log[p]["parent"]
        assert total <= eps
    assert sorted(seen) == list(range(len(pairs)))
    for (u, v), val in zip(pairs, est.values):
        assert abs(math.log(val / effective_resistance_exact(g, u, v))) <= eps


def test_pair_validation():
    g = unit_path(6)
    with pytest.raises(BadPair, match="missing vertex"):
        estimate_reff(g, [(0, 6)], eps=0.5)
    with pytest.raises(BadPair, match="itself"):
        estimate_reff(g, [(3, 3)], eps=0.5)
    with pytest.raises(BadPair, match="integers"):
        estimate_reff(g, [(0, 2.5)], eps=0.5)


def test_tolerance_validation():
    g = unit_path(4)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            estimate_reff(g, [(0, 1)], eps=bad)
        with pytest.raises(ValueError):
            help_estimate_reff(g, [(0, 1)], eps_prime=bad)


def test_disconnected_graph_rejected():
    g = build_graph([(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(Disconnected):
        estimate_reff(g, [(0, 1)], eps=0.5)
