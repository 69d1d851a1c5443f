import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucgs.core import ContractError, OracleCounters
from ucgs.sets import ApproxLmo, Box, L1Ball, L2Ball, Simplex, approx_lmo, lmo, wolfe_gap


def brute_vertices(set_):
    """Explicit vertex list for small polytopes, independent of the LMO code."""
    n = set_.n
    if isinstance(set_, Simplex):
        return list(np.eye(n))
    if isinstance(set_, L1Ball):
        c = set_.center()
        return [c + s * set_.radius * e for e in np.eye(n) for s in (1.0, -1.0)]
    if isinstance(set_, Box):
        return [np.where(np.array(bits) == 1, set_.hi, set_.lo) for bits in itertools.product((0, 1), repeat=n)]
    raise TypeError


def make_sets(n):
    return [
        Simplex(n),
        L1Ball(np.linspace(-0.5, 0.5, n), 1.5),
        Box(-np.ones(n), np.arange(1, n + 1, dtype=float)),
        L2Ball(np.ones(n), 2.0),
    ]


# -- lmo


def test_lmo_simplex_example():
    np.testing.assert_array_equal(Simplex(3).lmo(np.array([3.0, 1.0, 2.0])), [0, 1, 0])


def test_lmo_box_example():
    box = Box([-1, -1], [1, 1])
    np.testing.assert_array_equal(box.lmo(np.array([2.0, -3.0])), [-1, 1])


def test_lmo_l2ball_example(rng):
    ball = L2Ball(np.zeros(2), 2.0)
    v = ball.lmo(np.array([3.0, 4.0]))
    np.testing.assert_allclose(v, [-1.2, -1.6], rtol=1e-15)
    # sampling oracle: no feasible point does better
    pts = ball.sample(rng, 100_000)
    assert v @ [3, 4] <= np.min(pts @ [3.0, 4.0]) + 1e-12


def test_lmo_ties_take_lowest_index():
    np.testing.assert_array_equal(Simplex(4).lmo(np.array([1.0, 0.0, 0.0, 2.0])), [0, 1, 0, 0])
    v = L1Ball(np.zeros(3), 1.0).lmo(np.array([2.0, -2.0, 1.0]))
    np.testing.assert_array_equal(v, [-1, 0, 0])


@pytest.mark.parametrize("set_", make_sets(3), ids=lambda s: s.kind)
def test_lmo_zero_direction_returns_center(set_):
    np.testing.assert_array_equal(set_.lmo(np.zeros(3)), set_.center())


@pytest.mark.parametrize("set_", make_sets(3)[:3], ids=lambda s: s.kind)
def test_lmo_matches_vertex_enumeration(set_, rng):
    verts = np.array(brute_vertices(set_))
    for _ in range(200):
        c = rng.standard_normal(3)
        assert c @ set_.lmo(c) == pytest.approx(np.min(verts @ c), abs=1e-12)


def test_lmo_rejects_bad_direction():
    with pytest.raises(ContractError):
        Simplex(3).lmo(np.zeros(2))
    with pytest.raises(ContractError):
        Simplex(2).lmo(np.array([np.inf, 0.0]))


def test_lmo_counts_calls():
    c = OracleCounters()
    lmo(Simplex(2), np.array([1.0, 0.0]), c)
    wolfe_gap(Simplex(2), np.array([1.0, 0.0]), np.array([0.5, 0.5]), c)
    assert c.lmo_calls == 2


# -- diameter


def test_diameters():
    assert Simplex(5).diameter() == math.sqrt(2)
    assert L2Ball(np.zeros(3), 1.5).diameter() == 3.0
    assert L1Ball(np.zeros(3), 1.5).diameter() == 3.0
    assert Box([0, 0], [3, 4]).diameter() == 5.0


@pytest.mark.parametrize("set_", make_sets(4), ids=lambda s: s.kind)
def test_diameter_dominates_sampled_distances(set_, rng):
    a, b = set_.sample(rng, 2000), set_.sample(rng, 2000)
    assert np.max(np.linalg.norm(a - b, axis=1)) <= set_.diameter() + 1e-12


@pytest.mark.parametrize("set_", make_sets(4), ids=lambda s: s.kind)
def test_samples_and_vertex_are_feasible(set_, rng):
    assert all(set_.contains(x, 1e-12) for x in set_.sample(rng, 500))
    assert set_.contains(set_.vertex())
    assert set_.contains(set_.center())


# -- wolfe gap


def test_wolfe_gap_examples():
    gap, v = wolfe_gap(Simplex(2), np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert gap == 1.0
    np.testing.assert_array_equal(v, [1, 0])
    g = np.array([0.3, -0.2, 0.9])
    gap, _ = wolfe_gap(Simplex(3), g, Simplex(3).lmo(g))
    assert gap == 0.0
    gap, _ = wolfe_gap(Simplex(3), np.zeros(3), np.array([0.2, 0.3, 0.5]))
    assert gap == 0.0


# -- approx lmo


def test_approx_lmo_zero_budget_is_exact():
    c = np.array([0.4, -1.0, 0.3])
    np.testing.assert_array_equal(approx_lmo(ApproxLmo(Simplex(3), 0.0), c, 1), Simplex(3).lmo(c))


def test_approx_lmo_segment_example():
    v = approx_lmo(ApproxLmo(Simplex(2), 0.25), np.array([0.0, 1.0]), 1)
    np.testing.assert_allclose(v, [0.75, 0.25], rtol=1e-15)


def test_approx_lmo_saturates_at_worst_vertex():
    v = approx_lmo(ApproxLmo(Simplex(2), 10.0), np.array([0.0, 1.0]), 1)
    np.testing.assert_array_equal(v, [0, 1])


def test_approx_lmo_schedule_and_counting():
    w = ApproxLmo.schedule(Simplex(3), sigma=2.0, beta=0.5)
    assert w.budget(4) == pytest.approx(2.0 * 0.5 * 2.0 / 4)
    c = OracleCounters()
    approx_lmo(w, np.array([1.0, 2.0, 3.0]), 1, c)
    assert c.lmo_calls == 1


def test_approx_lmo_rejects_negative_budget():
    with pytest.raises(ContractError):
        approx_lmo(ApproxLmo(Simplex(2), -1.0), np.array([1.0, 0.0]), 1)


set_index = st.integers(0, 3)
dims = st.integers(1, 6)


@given(set_index, dims, st.integers(0, 2**31 - 1), st.floats(0.0, 5.0))
def test_approx_lmo_stays_within_budget(idx, n, seed, delta):
    rng = np.random.default_rng(seed)
    set_ = make_sets(n)[idx]
    c = rng.standard_normal(n)
    v = approx_lmo(ApproxLmo(set_, delta), c, 1)
    exact = set_.lmo(c)
    assert set_.contains(v, 1e-12)
    assert c @ v - c @ exact <= delta + 1e-12


@given(set_index, dims, st.integers(0, 2**31 - 1))
def test_lmo_beats_random_feasible_points(idx, n, seed):
    rng = np.random.default_rng(seed)
    set_ = make_sets(n)[idx]
    c = rng.standard_normal(n)
    v = set_.lmo(c)
    pts = set_.sample(rng, 100)
    assert set_.contains(v)
    assert np.all(c @ v <= pts @ c + 1e-12)


@given(set_index, dims, st.integers(0, 2**31 - 1))
def test_wolfe_gap_nonnegative(idx, n, seed):
    rng = np.random.default_rng(seed)
    set_ = make_sets(n)[idx]
    u = set_.sample(rng, 1)[0]
    gap, _ = wolfe_gap(set_, rng.standard_normal(n), u)
    assert gap >= -1e-12


def test_lmo_exactness_spot_check_bulk(rng):
    # 10^4 directions, each compared against 100 feasible points
    for set_ in make_sets(5):
        pts = set_.sample(rng, 100)
        for _ in range(2500):
            c = rng.standard_normal(5)
            assert c @ set_.lmo(c) <= np.min(pts @ c) + 1e-12
