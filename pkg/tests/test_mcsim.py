import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwboot.dynamics import StopRule, iterate
from gwboot.mcsim import (
    RNG_ALGORITHM,
    InsufficientDepthError,
    MemoryGuardError,
    SampledTree,
    SimulationUnsafeError,
    estimate_phi,
    expected_nodes,
    prevalence,
    prevalence_sweep,
    root_state_at,
    sample_tree,
    states_at,
)
from gwboot.offspring import OffspringDistribution, telescoping_law, delta

from .test_offspring import finite_laws

HALF_HALF = OffspringDistribution(2, {2: F(1, 2), 3: F(1, 2)})


def hand_tree(counts, states, r=2):
    """Tree from explicit per-layer child counts and initial infections."""
    xi = OffspringDistribution(r, {2: F(1)}) if r == 2 else delta(r, r)
    return SampledTree(
        xi,
        F(1, 2),
        len(counts),
        [np.asarray(c, dtype=np.int64) for c in counts],
        [np.asarray(s, dtype=bool) for s in states],
        seed=0,
    )


class TestSampling:
    def test_full_binary_tree(self):
        tree = sample_tree(delta(2), 3, seed=1)
        assert tree.layer_sizes == [1, 2, 4, 8]
        assert tree.n_nodes == 15
        assert tree.rng_algorithm == RNG_ALGORITHM

    def test_deterministic(self):
        a = sample_tree(HALF_HALF, 6, seed=42, q=F(2, 3))
        b = sample_tree(HALF_HALF, 6, seed=42, q=F(2, 3))
        assert all(np.array_equal(x, y) for x, y in zip(a.child_counts, b.child_counts))
        assert all(np.array_equal(x, y) for x, y in zip(a.infected0, b.infected0))
        c = sample_tree(HALF_HALF, 1, seed=7)
        assert c.child_counts[0][0] in (2, 3)
        assert c.child_counts[0][0] == sample_tree(HALF_HALF, 1, seed=7).child_counts[0][0]

    def test_streams_differ(self):
        a = sample_tree(HALF_HALF, 8, seed=5, stream=0)
        b = sample_tree(HALF_HALF, 8, seed=5, stream=1)
        assert a.layer_sizes != b.layer_sizes or not np.array_equal(a.infected0[-1], b.infected0[-1])

    def test_layer_one_mean(self):
        n = 100_000
        sizes = np.array([sample_tree(HALF_HALF, 1, seed=s).layer_sizes[1] for s in range(n)])
        # child count is 2 + Bernoulli(1/2): standard deviation 1/2
        assert abs(sizes.mean() - 2.5) <= 3 * 0.5 / math.sqrt(n)

    def test_initial_density(self):
        tree = sample_tree(delta(3), 9, seed=3, q=F(9, 10))
        states = np.concatenate(tree.infected0)
        p = states.mean()
        assert abs(p - 0.1) <= 4 * math.sqrt(0.1 * 0.9 / states.size)

    def test_refuses_infinite_mean(self):
        with pytest.raises(SimulationUnsafeError):
            sample_tree(telescoping_law(2), 2, seed=0)

    def test_memory_guard(self):
        with pytest.raises(MemoryGuardError) as err:
            sample_tree(delta(3), 20, seed=0, node_cap=10**6)
        assert err.value.projected == pytest.approx(expected_nodes(delta(3), 20))

    def test_expected_nodes(self):
        assert expected_nodes(delta(2), 3) == 15


class TestRootState:
    def test_all_infected(self):
        tree = hand_tree([[2]], [[True], [True, True]])
        assert root_state_at(tree, 0) == "infected"

    def test_two_infected_children(self):
        tree = hand_tree([[2]], [[False], [True, True]])
        assert root_state_at(tree, 0) == "healthy"
        assert root_state_at(tree, 1) == "infected"

    def test_two_step_cascade(self):
        tree = hand_tree([[2], [2, 2]], [[False], [False, False], [True] * 4])
        assert root_state_at(tree, 1) == "healthy"
        assert root_state_at(tree, 2) == "infected"

    def test_one_child_is_not_enough(self):
        tree = hand_tree([[2], [2, 2]], [[False], [False, False], [True, True, True, False]])
        assert root_state_at(tree, 2) == "healthy"

    def test_insufficient_depth(self):
        tree = sample_tree(delta(2), 2, seed=0)
        with pytest.raises(InsufficientDepthError):
            root_state_at(tree, 3)

    @settings(max_examples=20, deadline=None)
    @given(finite_laws(max_extra=2), st.fractions(0, 1, max_denominator=10), st.integers(0, 2**32))
    def test_monotone_in_time(self, xi, q, seed):
        tree = sample_tree(xi, 5, seed=seed, q=q, n_roots=50, node_cap=10**6)
        prev = None
        for t in range(6):
            roots = states_at(tree, t)[0]
            if prev is not None:
                assert np.all(roots >= prev)
            prev = roots

    def test_only_depth_t_subtree_matters(self):
        # changing the deepest layer cannot affect the root at t < depth
        tree = sample_tree(HALF_HALF, 6, seed=11, q=F(1, 2), n_roots=200)
        flipped = SampledTree(
            tree.xi, tree.q, tree.depth, tree.child_counts, tree.infected0[:-1] + [~tree.infected0[-1]], tree.seed
        )
        for t in range(6):
            assert np.array_equal(states_at(tree, t)[0], states_at(flipped, t)[0])


class TestEstimatePhi:
    def test_time_zero(self):
        est, se = estimate_phi(HALF_HALF, F(7, 10), 0, 100_000, seed=2)
        assert abs(est - 0.7) <= 3 * se

    def test_regular_tree(self):
        est, se = estimate_phi(delta(2), F(9, 10), 1, 100_000, seed=3)
        assert abs(est - 0.891) <= 3 * se
        assert se == pytest.approx(math.sqrt(est * (1 - est) / 100_000))

    def test_cubic(self):
        xi = OffspringDistribution(2, {2: F(3, 4), 3: F(1, 4)})
        est, se = estimate_phi(xi, F(2, 3), 1, 100_000, seed=4)
        assert abs(est - 46 / 81) <= 3 * se

    def test_independent_of_workers(self):
        a = estimate_phi(HALF_HALF, F(4, 5), 3, 30_000, seed=9, batch_size=10_000)
        b = estimate_phi(HALF_HALF, F(4, 5), 3, 30_000, seed=9, batch_size=10_000, workers=3)
        assert a == b

    def test_against_recursion_small(self):
        exact = float(iterate(HALF_HALF, F(9, 10), StopRule.steps(4), exact=True).values[4])
        est, se = estimate_phi(HALF_HALF, F(9, 10), 4, 40_000, seed=13)
        assert abs(est - exact) <= 4 * se


class TestPrevalence:
    def test_time_zero_density(self):
        p = prevalence(delta(2), F(9, 10), 12, 0, seed=1)
        assert p.ball_size == 2**13 - 1
        assert abs(p.value - 0.1) <= 4 * math.sqrt(0.09 / p.ball_size)

    def test_regular_tree_law_of_large_numbers(self):
        phi2 = float(iterate(delta(2), F(9, 10), StopRule.steps(2), exact=True).values[2])
        rows = prevalence_sweep(delta(2), F(9, 10), 12, 2, seeds=range(200))
        good = sum(abs(r.value - (1 - phi2)) < 0.01 for r in rows)
        assert good >= 190

    def test_annulus_close_to_ball(self):
        for seed in range(5):
            full = prevalence(HALF_HALF, F(9, 10), 10, 2, seed=seed)
            for w in (1, 3, 6, 10):
                ann = prevalence(HALF_HALF, F(9, 10), 10, 2, w=w, seed=seed)
                inner = full.ball_size - ann.ball_size
                # |B(R-w)| <= 2^-w |B(R)| since every vertex has at least two children
                assert inner <= 2.0**-w * full.ball_size
                assert abs(full.value - ann.value) <= inner / full.ball_size + 1e-12

    def test_json_row(self):
        row = prevalence(delta(2), F(9, 10), 4, 1, w=2, seed=8).to_json()
        assert set(row) == {"R", "w", "t", "value", "ball_size", "seed"}

    def test_memory_guard(self):
        with pytest.raises(MemoryGuardError):
            prevalence(delta(3), F(1, 2), 20, 2, node_cap=10**5)

    def test_bad_width(self):
        with pytest.raises(ValueError):
            prevalence(delta(2), F(1, 2), 3, 1, w=5)
