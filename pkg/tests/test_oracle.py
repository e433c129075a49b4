"""Exact dense reference implementations: resistances, Schur complements,
tree counting/enumeration, spectral checking, and baseline samplers."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schurtree import (
    build_graph,
    check_spectral_approx,
    effective_resistance_exact,
    enumerate_trees,
    leverage_score_exact,
    leverage_scores_exact,
    schur_exact,
    sequential_leverage_sampler,
    spanning_tree_count,
    wilson_sample,
)
from schurtree.errors import (
    Disconnected,
    NotOrthogonal,
    NullSpaceMismatch,
    SameVertex,
    SingularBlock,
    StepBudgetExceeded,
    TooLarge,
)
from schurtree.graph import contract_edge, delete_edges, laplacian_of
from schurtree.oracle import laplacian_solve, pinv_grounded
from schurtree.rng import make_rng

from helpers import edge_vector, random_connected_graph

UNIT_K4 = [(u, v, 1.0) for u, v in itertools.combinations(range(4), 2)]
UNIT_TRIANGLE = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]


def test_resistance_series_path():
    g = build_graph([(0, 1, 1.0), (1, 2, 1.0)])
    assert effective_resistance_exact(g, 0, 2) == pytest.approx(2.0)


def test_resistance_parallel_edges():
    g = build_graph([(0, 1, 2.0), (0, 1, 3.0)])
    assert effective_resistance_exact(g, 0, 1) == pytest.approx(0.2)


def test_resistance_k4_adjacent():
    g = build_graph(UNIT_K4)
    assert effective_resistance_exact(g, 0, 1) == pytest.approx(0.5)


def test_resistance_errors():
    g = build_graph([(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(SameVertex):
        effective_resistance_exact(g, 1, 1)
    with pytest.raises(Disconnected):
        effective_resistance_exact(g, 0, 2)


def test_leverage_bridge_is_one():
    g = build_graph([(0, 1, 7.5)])
    assert leverage_score_exact(g, 0) == pytest.approx(1.0)


def test_leverage_unit_triangle():
    g = build_graph(UNIT_TRIANGLE)
    for e in range(3):
        assert leverage_score_exact(g, e) == pytest.approx(2.0 / 3.0)


def test_leverage_parallel_edges():
    g = build_graph([(0, 1, 2.0), (0, 1, 3.0)])
    assert leverage_score_exact(g, 0) == pytest.approx(0.4)
    assert leverage_score_exact(g, 1) == pytest.approx(0.6)


def test_schur_path_interior_elimination():
    g = build_graph([(0, 1, 1.0), (1, 2, 1.0)])
    S = schur_exact(g, [0, 2])
    assert np.allclose(S, [[0.5, -0.5], [-0.5, 0.5]])


def test_schur_star_center_elimination_is_clique():
    g = build_graph([(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
    S = schur_exact(g, [1, 2, 3])
    expect = np.full((3, 3), -1.0 / 3.0)
    np.fill_diagonal(expect, 2.0 / 3.0)
    assert np.allclose(S, expect)


def test_schur_keep_all_is_identity():
    g = build_graph(UNIT_K4)
    assert np.allclose(schur_exact(g, range(4)), laplacian_of(g))


def test_schur_singular_block():
    # eliminated component {2,3} has no edge to the kept set
    g = build_graph([(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(SingularBlock):
        schur_exact(g, [0, 1])


def test_tree_count_unit_k4():
    assert spanning_tree_count(build_graph(UNIT_K4)) == pytest.approx(16.0)


def test_tree_count_weighted_triangle():
    g = build_graph([(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)])
    assert spanning_tree_count(g) == pytest.approx(11.0)


def test_tree_count_of_tree_is_weight_product():
    g = build_graph([(0, 1, 2.0), (1, 2, 3.0), (1, 3, 5.0)])
    assert spanning_tree_count(g) == pytest.approx(30.0)


def test_enumerate_unit_triangle():
    trees = enumerate_trees(build_graph(UNIT_TRIANGLE))
    assert len(trees) == 3
    assert all(w == pytest.approx(1.0) for w in trees.values())


def test_enumerate_weighted_triangle():
    g = build_graph([(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0)])
    trees = enumerate_trees(g)
    assert sorted(trees.values()) == pytest.approx([2.0, 3.0, 6.0])
    assert sum(trees.values()) == pytest.approx(spanning_tree_count(g))


def test_enumerate_parallel_edges():
    trees = enumerate_trees(build_graph([(0, 1, 2.0), (0, 1, 3.0)]))
    assert trees == {frozenset([0]): pytest.approx(2.0),
                     frozenset([1]): pytest.approx(3.0)}


def test_enumerate_guard():
    big = build_graph([(i, i + 1, 1.0) for i in range(11)])
    with pytest.raises(TooLarge):
        enumerate_trees(big)


def test_spectral_check_identity():
    L = laplacian_of(build_graph(UNIT_K4))
    bound = check_spectral_approx(L, L)
    assert bound.lo == pytest.approx(1.0)
    assert bound.hi == pytest.approx(1.0)
    assert bound.valid(0.0)


def test_spectral_check_scalar_scaling_boundary():
    L = laplacian_of(build_graph(UNIT_TRIANGLE))
    bound = check_spectral_approx(L, np.exp(0.1) * L)
    assert bound.lo == pytest.approx(np.exp(-0.1))
    assert bound.hi == pytest.approx(np.exp(-0.1))
    assert bound.valid(0.1)
    assert not bound.valid(0.05)


def test_spectral_check_mismatch_errors():
    L3 = laplacian_of(build_graph(UNIT_TRIANGLE))
    with pytest.raises(NullSpaceMismatch):
        check_spectral_approx(L3, np.eye(4))
    disc = np.diag([1.0, 1.0, 0.0]) - 0.0  # rank-deficient beyond all-ones
    disc = np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NullSpaceMismatch):
        check_spectral_approx(L3, disc)


def test_wilson_single_edge():
    g = build_graph([(0, 1, 4.0)])
    assert wilson_sample(g, make_rng(0)) == {0}


def test_wilson_tree_input_returns_all_edges():
    g = build_graph([(0, 1, 1.0), (1, 2, 2.0), (1, 3, 3.0), (3, 4, 1.0)])
    assert wilson_sample(g, make_rng(1)) == {0, 1, 2, 3}


def test_wilson_k4_frequencies():
    g = build_graph(UNIT_K4)
    rng = make_rng(2024)
    n_samples = 32000
    counts = {}
    for _ in range(n_samples):
        key = tuple(sorted(wilson_sample(g, rng)))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 16
    p = 1.0 / 16.0
    band = 3.0 * np.sqrt(p * (1.0 - p) / n_samples)
    for c in counts.values():
        assert abs(c / n_samples - p) <= band


def test_wilson_step_budget():
    g = build_graph(UNIT_K4)
    with pytest.raises(StepBudgetExceeded):
        wilson_sample(g, make_rng(0), step_budget=0)


def test_laplacian_solve_zero_rhs():
    L = laplacian_of(build_graph(UNIT_TRIANGLE))
    assert np.allclose(laplacian_solve(L, np.zeros(3)), 0.0)


def test_laplacian_solve_single_edge_closed_form():
    w = 4.0
    L = laplacian_of(build_graph([(0, 1, w)]))
    x = laplacian_solve(L, np.array([1.0, -1.0]))
    assert np.allclose(x, [1.0 / (2.0 * w), -1.0 / (2.0 * w)])


def test_laplacian_solve_residual_random_graph():
    rng = np.random.default_rng(5)
    g = random_connected_graph(100, 150, rng)
    L = laplacian_of(g)
    b = rng.standard_normal(100)
    b -= b.mean()
    x = laplacian_solve(L, b)
    assert np.linalg.norm(L @ x - b) <= 1e-9 * np.linalg.norm(b) * 1e3
    assert abs(x.sum()) <= 1e-9 * np.linalg.norm(x) * 100


def test_laplacian_solve_rejects_unbalanced_rhs():
    L = laplacian_of(build_graph(UNIT_TRIANGLE))
    with pytest.raises(NotOrthogonal):
        laplacian_solve(L, np.array([1.0, 1.0, 1.0]))


def test_sequential_sampler_follows_forced_draws():
    g = build_graph(UNIT_TRIANGLE)
    # edge 0: l=2/3, r=0.5 -> accept; edge 1 (parallel pair after merge):
    # l=1/2, r=0.5 -> reject; edge 2: bridge, l=1 -> accept
    tree, trace = sequential_leverage_sampler(g, r_values=[0.5, 0.5, 0.5])
    assert tree == {0, 2}
    assert [e for e, _, _ in trace] == [0, 1, 2]
    assert trace[0][1] == pytest.approx(2.0 / 3.0)
    assert trace[1][1] == pytest.approx(0.5)
    assert trace[2][1] == pytest.approx(1.0)
    assert [a for _, _, a in trace] == [True, False, True]


def test_sequential_sampler_skips_dead_edges():
    g = build_graph([(0, 1, 2.0), (0, 1, 3.0)])
    tree, trace = sequential_leverage_sampler(g, r_values=[0.1])
    # edge 0 accepted; edge 1 became a self-loop and is skipped
    assert tree == {0}
    assert len(trace) == 1


def _eliminate_one(S, pos):
    """Single-vertex Gaussian elimination on a dense Laplacian."""
    col = S[:, pos].copy()
    d = col[pos]
    out = S - np.outer(col, col) / d
    return np.delete(np.delete(out, pos, axis=0), pos, axis=1)


def test_schur_matches_vertex_by_vertex_elimination():
    rng = np.random.default_rng(11)
    g = random_connected_graph(5, 4, rng)
    keep = np.array([1, 3])
    S_block = schur_exact(g, keep)
    elim = [0, 2, 4]
    for order in itertools.permutations(range(3)):
        S = laplacian_of(g)
        labels = list(range(5))
        for j in order:
            pos = labels.index(elim[j])
            S = _eliminate_one(S, pos)
            labels.remove(elim[j])
        assert np.allclose(S, S_block, atol=1e-10)


def test_schur_preserves_resistances():
    rng = np.random.default_rng(7)
    for n in (8, 17, 30):
        g = random_connected_graph(n, 2 * n, rng)
        keep = np.sort(rng.choice(n, size=n // 2, replace=False))
        S = schur_exact(g, keep)
        Sp = pinv_grounded(S)
        for _ in range(5):
            i, j = rng.choice(keep.size, size=2, replace=False)
            b = edge_vector(keep.size, i, j)
            want = effective_resistance_exact(g, int(keep[i]), int(keep[j]))
            assert float(b @ Sp @ b) == pytest.approx(want, rel=1e-8)


def test_schur_commutes_with_deletion_and_contraction():
    rng = np.random.default_rng(13)
    g = random_connected_graph(8, 8, rng)
    keep = np.array([0, 1, 2, 3])
    inside = [int(e) for e in g.eid
              if g.eu[g.edge_pos(e)] in keep and g.ev[g.edge_pos(e)] in keep]
    assert inside, "fixture needs an edge inside the kept set"
    e = inside[0]
    p = g.edge_pos(e)
    u, v, w = int(g.eu[p]), int(g.ev[p]), float(g.ew[p])

    S = schur_exact(g, keep)
    # deletion: subtract the edge's rank-one term at its kept positions
    pu, pv = np.searchsorted(keep, [u, v])
    b = edge_vector(keep.size, pu, pv)
    want_del = S - w * np.outer(b, b)
    got_del = schur_exact(delete_edges(g, [e]), keep)
    assert np.allclose(got_del, want_del, atol=1e-8)

    # contraction: merge the two kept rows/columns
    lo, hi = min(pu, pv), max(pu, pv)
    P = np.eye(keep.size)[:, [i for i in range(keep.size) if i != hi]]
    P[hi, lo] = 1.0
    want_con = P.T @ S @ P
    g2 = contract_edge(g, e)
    keep2 = np.unique([x if x < max(u, v) else x - 1 for x in (0, 1, 2, 3)
                       if x != max(u, v)] + [min(u, v)])
    got_con = schur_exact(g2, keep2)
    assert np.allclose(got_con, want_con, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 12))
def test_leverage_scores_sum_to_rank(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, int(rng.integers(0, n)), rng)
    assert leverage_scores_exact(g).sum() == pytest.approx(n - 1, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_enumeration_total_matches_determinant(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(int(rng.integers(2, 7)), int(rng.integers(0, 4)), rng)
    total = sum(enumerate_trees(g).values())
    assert total == pytest.approx(spanning_tree_count(g), rel=1e-9)
