"""Recursive tree sampler: error schedules, the band test, tree validity,
decision traces, and the instrumentation counters."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schurtree import SamplerConfig, build_graph, generate_spanning_tree
from schurtree.errors import Disconnected, LevelOutOfRange, TooFewVertices
from schurtree.graph import connected_components, contract_edge, delete_edges
from schurtree.oracle import leverage_score_exact
from schurtree.rng import make_rng
from schurtree.sampler import EpsilonSchedule, is_good, make_schedule
from schurtree.stats import tree_distribution_test

from helpers import random_connected_graph


# -- error schedule ----------------------------------------------------------

def test_schedule_sparse_value_at_root():
    s = make_schedule(4096, 4096)
    assert s.mode == "sparse"
    assert s.epsilon_at(0) == pytest.approx((1 / 64) * (1 / 144), rel=1e-12)


def test_schedule_dense_value_at_root():
    s = make_schedule(4096, 2**24)
    assert s.mode == "dense"
    assert s.epsilon_at(0) == pytest.approx(2.0**-8 / 144, rel=1e-12)


def test_schedule_level_threshold():
    # 2^{2 t1} ~ n^2 / m, rounded up
    assert make_schedule(1024, 2**16).t1 == 2
    assert make_schedule(1024, 1024**2).t1 == 0
    assert make_schedule(1024, 1023).t1 == 6


def test_schedule_auto_picks_density_by_edge_count():
    # the switch sits at m = n^{4/3}
    thresh = 16 ** (4 / 3)
    assert make_schedule(16, math.floor(thresh)).mode == "sparse"
    assert make_schedule(16, math.ceil(thresh) + 1).mode == "dense"
    assert make_schedule(16, 40, mode="dense").mode == "dense"
    assert make_schedule(16, 4000, mode="sparse").mode == "sparse"


def test_schedule_monotone_and_bounded():
    for s in (make_schedule(4096, 4096), make_schedule(4096, 2**24)):
        vals = [s.epsilon_at(i) for i in range(s.max_level + 1)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        log2n = math.log2(s.n)
        assert all(v <= 1.0 / log2n**2 + 1e-15 for v in vals)


def test_schedule_exact_mode_is_zero_everywhere():
    s = make_schedule(100, 400, mode="exact")
    assert all(s.epsilon_at(i) == 0.0 for i in range(s.max_level + 1))


def test_schedule_rejects_bad_level_and_input():
    s = make_schedule(64, 100)
    with pytest.raises(LevelOutOfRange):
        s.epsilon_at(-1)
    with pytest.raises(LevelOutOfRange):
        s.epsilon_at(s.max_level + 1)
    with pytest.raises(TooFewVertices):
        make_schedule(1, 0)
    with pytest.raises(ValueError):
        make_schedule(8, 8, mode="fast")


def test_band_membership():
    # closed band [(1-eps)l, (1+eps)l]
    assert is_good(0.5, 0.2, 0.39)
    assert not is_good(0.5, 0.2, 0.41)
    assert not is_good(0.5, 0.2, 0.4)
    assert not is_good(0.5, 0.2, 0.6)
    assert is_good(0.5, 0.2, 0.61)
    # eps = 0 decides everything except an exact tie
    assert is_good(0.5, 0.0, 0.5 - 1e-12)
    assert not is_good(0.5, 0.0, 0.5)


def test_band_on_two_vertex_leaf_estimate():
    # parallel weights (2, 3): the lighter edge has closed-form share 0.4,
    # and r = 0.9 rejects it whenever the band stays below 0.9
    lev = 2.0 / 5.0
    assert is_good(lev, 1.2, 0.9)
    assert not is_good(lev, 1.25, 0.9)  # boundary sits inside the band


# -- sampling: fixed-answer graphs ------------------------------------------

def test_single_edge_graph_returns_it():
    g = build_graph([(0, 1, 3.5)])
    for mode in ("exact", "auto"):
        s = generate_spanning_tree(g, SamplerConfig(eps_mode=mode), seed=1)
        assert s.edges == [0]


def test_tree_input_keeps_every_edge():
    g = build_graph([(0, 1, 1.0), (1, 2, 0.3), (1, 3, 2.0), (3, 4, 5.0)])
    for mode in ("exact", "sparse", "dense"):
        s = generate_spanning_tree(g, SamplerConfig(eps_mode=mode), seed=9)
        assert s.edges == [0, 1, 2, 3]


def test_parallel_pair_marginals():
    g = build_graph([(0, 1, 2.0), (0, 1, 3.0)])
    n_draws = 4000
    rng = make_rng(77)
    hits = 0
    for _ in range(n_draws):
        s = generate_spanning_tree(g, rng=rng)
        assert len(s.edges) == 1
        hits += s.edges[0] == 0
    sigma = math.sqrt(0.4 * 0.6 / n_draws)
    assert abs(hits / n_draws - 0.4) < 3 * sigma


def test_weighted_triangle_distribution():
    g = build_graph([(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)])
    rng = make_rng(5)
    report = tree_distribution_test(
        g, lambda: set(generate_spanning_tree(g, rng=rng).edges),
        n_samples=2000, alpha=1e-3)
    assert report.passed


# -- sampling: structural properties ----------------------------------------

def _assert_spanning_tree(g, edges):
    assert len(edges) == g.n - 1
    assert len(set(edges)) == len(edges)
    pos = {int(e): i for i, e in enumerate(g.eid)}
    idx = np.array([pos[e] for e in edges], dtype=np.int64)
    ncomp, _ = connected_components(g.n, g.eu[idx], g.ev[idx])
    assert ncomp == 1


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(2, 10),
    extra=st.integers(0, 8),
    mode=st.sampled_from(["exact", "auto"]),
    seed=st.integers(0, 10**6),
)
def test_output_is_always_a_spanning_tree(n, extra, mode, seed):
    g = random_connected_graph(n, extra, make_rng(seed))
    s = generate_spanning_tree(g, SamplerConfig(eps_mode=mode), seed=seed)
    _assert_spanning_tree(g, s.edges)


def test_same_seed_reproduces_everything():
    g = random_connected_graph(9, 6, make_rng(3))
    a = generate_spanning_tree(g, seed=42)
    b = generate_spanning_tree(g, seed=42)
    assert a.edges == b.edges
    assert a.seed == b.seed == 42
    assert a.stats == b.stats
    c = generate_spanning_tree(g, seed=43)
    assert a.stats != c.stats or a.edges != c.edges


def test_external_generator_matches_seed_stream():
    g = random_connected_graph(7, 5, make_rng(8))
    by_seed = generate_spanning_tree(g, seed=42)
    by_rng = generate_spanning_tree(g, rng=make_rng(42))
    assert by_rng.edges == by_seed.edges
    assert by_rng.seed is None  # external stream: no seed to record


def test_stats_counters_shape():
    g = random_connected_graph(12, 10, make_rng(1))
    s = generate_spanning_tree(g, seed=11)
    st_ = s.stats
    assert st_["mode"] in ("sparse", "dense")
    assert st_["decisions"] >= g.n - 1
    assert sum(st_["climb_hist"]) == st_["decisions"]
    assert st_["root_fallbacks"] >= 0
    assert st_["node_counts"][0] == 1
    assert st_["max_run_sum"] >= 0.0
    assert st_["run_alarms"] == 0
    assert "trace" not in st_


def test_node_counts_respect_recursion_bound():
    g = random_connected_graph(24, 30, make_rng(4))
    for mode in ("exact", "auto"):
        s = generate_spanning_tree(g, SamplerConfig(eps_mode=mode), seed=6)
        for i, cnt in enumerate(s.stats["node_counts"]):
            assert cnt <= 4 ** (i + 1) - 2**i


def test_trace_records_every_decision():
    g = random_connected_graph(8, 7, make_rng(2))
    s = generate_spanning_tree(g, SamplerConfig(trace=True), seed=15)
    trace = s.stats["trace"]
    assert len(trace) == s.stats["decisions"]
    accepted = []
    for rec in trace:
        assert set(rec) == {"edge", "r", "leverage", "level", "accept"}
        assert 0.0 <= rec["r"] < 1.0
        assert rec["leverage"] > 0.0
        assert rec["accept"] == (rec["r"] < rec["leverage"])
        if rec["accept"]:
            accepted.append(rec["edge"])
    assert sorted(accepted) == s.edges


def test_climb_fraction_tracks_band_width():
    # the chance a decision needs a second estimate is the chance r lands in
    # the leaf band, which has width 2 * eps_leaf * leverage
    g = random_connected_graph(32, 30, make_rng(10))
    sched = make_schedule(g.n, g.m)
    eps_leaf = 2.0 * sched.epsilon_at(sched.max_level) * math.log2(g.n)
    rng = make_rng(20)
    cfg = SamplerConfig(trace=True)
    climbs = decisions = 0
    lev_sum = 0.0
    for _ in range(60):
        s = generate_spanning_tree(g, cfg, rng=rng)
        decisions += s.stats["decisions"]
        climbs += sum(s.stats["climb_hist"][1:])
        lev_sum += sum(rec["leverage"] for rec in s.stats["trace"])
    mean_lev = lev_sum / decisions
    bound = min(1.0, 3.0 * eps_leaf * mean_lev + 0.08)
    assert climbs / decisions <= bound


# -- exact mode matches a naive conditioned sampler --------------------------

def _replay_against_oracle(g, trace):
    """Walk the decision trace, checking each leverage against the exact
    value in the running conditioned graph."""
    cur = g
    for rec in trace:
        lev = leverage_score_exact(cur, rec["edge"])
        assert lev == pytest.approx(rec["leverage"], abs=1e-8)
        assert rec["accept"] == (rec["r"] < lev)
        if rec["accept"]:
            cur = contract_edge(cur, rec["edge"])
        else:
            cur = delete_edges(cur, [rec["edge"]])
    assert cur.n == 1


def test_exact_mode_decisions_match_conditioned_leverage():
    cfg = SamplerConfig(eps_mode="exact", trace=True)
    tri = build_graph([(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)])
    for seed in range(6):
        s = generate_spanning_tree(tri, cfg, seed=seed)
        _replay_against_oracle(tri, s.stats["trace"])
    rng = make_rng(31)
    g = random_connected_graph(6, 6, rng)
    for seed in range(4):
        s = generate_spanning_tree(g, cfg, seed=seed)
        _replay_against_oracle(g, s.stats["trace"])


# -- input validation ---------------------------------------------------------

def test_rejects_disconnected_input():
    g = build_graph([(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(Disconnected):
        generate_spanning_tree(g, seed=0)


def test_rejects_single_vertex():
    g = contract_edge(build_graph([(0, 1, 1.0)]), 0)
    with pytest.raises(TooFewVertices):
        generate_spanning_tree(g, seed=0)
