import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combeo.core import OptimizationSense
from combeo.innovation import (
    BestMemory,
    InnovationKind,
    build_coalescence_innovation,
    build_greedy_innovation,
    build_pso_innovation,
    build_split_innovation,
    greedy_coalescence_rows,
    pair_difference_rows,
    pso_rows,
    stack_innovation_matrix,
)
from combeo.perturbation import sample_derangement


def test_greedy_scalar():
    np.testing.assert_array_equal(build_greedy_innovation(1.0, 4.0), [-3.0])


def test_coalescence_pair():
    X = np.array([[0.0, 0.0], [1.0, 2.0]])
    np.testing.assert_array_equal(build_coalescence_innovation(X, 0, [1, 0]), [1.0, 2.0])
    with pytest.raises(ValueError):
        build_coalescence_innovation(X, 0, [0, 1])


def test_pso_innovation_one_dimensional():
    mem = BestMemory(np.array([[1.0]]), np.array([0.0]), np.array([2.0]), 0.0)
    np.testing.assert_array_equal(build_pso_innovation(mem, [0.0], 0), [1.0, 2.0])


def test_split_squared_and_signed():
    np.testing.assert_array_equal(build_split_innovation([1, -2]), [1, 4])
    np.testing.assert_array_equal(build_split_innovation([1, -2], squared=False), [1, -2])


def test_stack_columns():
    S = stack_innovation_matrix([[1.0], [2.0]])
    assert S.shape == (1, 2)
    np.testing.assert_array_equal(S, [[1.0, 2.0]])
    with pytest.raises(ValueError):
        stack_innovation_matrix([[1.0], [2.0, 3.0]])
    with pytest.raises(ValueError):
        stack_innovation_matrix([])


@pytest.mark.parametrize(
    "kind, expected",
    [
        (InnovationKind.GREEDY, 1),
        (InnovationKind.COALESCENCE, 5),
        (InnovationKind.GREEDY_PLUS_COALESCENCE, 6),
        (InnovationKind.PERSONAL_GLOBAL_BEST, 10),
        (InnovationKind.PAIR_DIFFERENCE, 5),
    ],
)
def test_dimensions(kind, expected):
    assert kind.dimension(5) == expected


def test_split_dimension_needs_components():
    assert InnovationKind.SPLIT_COMPONENTS.dimension(5, 7) == 7
    with pytest.raises(ValueError):
        InnovationKind.SPLIT_COMPONENTS.dimension(5)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 12), n=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_pair_differences_sum_to_zero(N, n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(N, n))
    rows = pair_difference_rows(X, sample_derangement(N, rng))
    np.testing.assert_allclose(rows.sum(axis=0), 0.0, atol=1e-12)


def test_rows_match_per_particle_builders():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 3))
    costs = rng.random(6)
    s1 = sample_derangement(6, rng)
    rows = greedy_coalescence_rows(0.1, costs, X, s1)
    for j in range(6):
        expect = np.concatenate([build_greedy_innovation(0.1, costs[j]), build_coalescence_innovation(X, j, s1)])
        np.testing.assert_array_equal(rows[j], expect)
    with pytest.raises(ValueError):
        pair_difference_rows(X, np.arange(6))


def test_best_memory_tracks_best_ever_per_index():
    X0 = np.array([[0.0], [1.0]])
    mem = BestMemory.initialize(X0, [5.0, 1.0], OptimizationSense.MINIMIZE)
    assert mem.global_cost == 1.0
    mem.update(np.array([[2.0], [3.0]]), [4.0, 9.0])
    np.testing.assert_array_equal(mem.personal, [[2.0], [1.0]])
    np.testing.assert_array_equal(mem.personal_cost, [4.0, 1.0])
    assert mem.global_cost == 1.0
    mem.update(np.array([[7.0], [3.0]]), [0.5, 9.0])
    assert mem.global_cost == 0.5 and mem.global_best[0] == 7.0
    rows = pso_rows(mem, np.array([[7.0], [3.0]]))
    np.testing.assert_array_equal(rows, [[0.0, 0.0], [-2.0, 4.0]])
