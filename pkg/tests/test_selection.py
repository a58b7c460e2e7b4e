import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from itlm import ConfigError, select_k_smallest, selection_stats


def test_examples():
    np.testing.assert_array_equal(select_k_smallest([3.0, 1.0, 2.0, 1.0], 2), [1, 3])
    np.testing.assert_array_equal(select_k_smallest([5.0, 5.0, 5.0], 2), [0, 1])
    np.testing.assert_array_equal(select_k_smallest([4.0, 2.0, 9.0], 3), [0, 1, 2])


@pytest.mark.parametrize("k", [0, 4])
def test_k_out_of_range(k):
    with pytest.raises(ConfigError):
        select_k_smallest([1.0, 2.0, 3.0], k)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ConfigError):
        select_k_smallest([1.0, bad, 3.0], 1)


finite = arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e3, 1e3))


@given(finite, st.data())
def test_matches_stable_sort(losses, data):
    k = data.draw(st.integers(1, losses.size))
    expected = np.sort(np.argsort(losses, kind="stable")[:k])
    got = select_k_smallest(losses, k)
    np.testing.assert_array_equal(got, expected)
    assert got.size == k
    rest = np.setdiff1d(np.arange(losses.size), got)
    if rest.size:
        assert losses[got].max() <= losses[rest].min()


@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-1e3, 1e3), unique=True), st.data())
def test_permutation_equivariance(losses, data):
    k = data.draw(st.integers(1, losses.size))
    perm = np.array(data.draw(st.permutations(range(losses.size))))
    base = select_k_smallest(losses, k)
    permuted = select_k_smallest(losses[perm], k)
    np.testing.assert_array_equal(np.sort(perm[permuted]), base)


def test_large_input():
    losses = np.random.default_rng(1).random(1_000_000)
    got = select_k_smallest(losses, 1000)
    np.testing.assert_array_equal(got, np.sort(np.argsort(losses)[:1000]))


def test_stats_examples():
    mask = [True, True, False, False]
    s = selection_stats([0, 1], mask)
    assert (s.n_selected, s.n_bad_selected, s.clean_recovery_ratio) == (2, 0, 1.0)
    s = selection_stats([0, 2], mask)
    assert (s.n_bad_selected, s.clean_recovery_ratio) == (1, 0.5)
    mask = np.array([False, True, True, False, True])
    s = selection_stats(np.flatnonzero(mask), mask)
    assert (s.n_bad_selected, s.clean_recovery_ratio) == (0, 1.0)


def test_stats_empty_subset():
    with pytest.raises(ConfigError):
        selection_stats([], [True])
