import numpy as np
import pytest

from itlm import (
    ConfigError,
    Dataset,
    RankDeficiencyError,
    UpdatePolicy,
    batch_sgd_update,
    closed_form_ls,
    full_gradient_step,
)
from itlm.glm import subset_loss
from itlm.oracle import regularity_constants

from conftest import PIECEWISE, central_difference


def test_closed_form_examples():
    ds = Dataset([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0])
    np.testing.assert_allclose(closed_form_ls(ds, [0, 1, 2]), [2.0], rtol=1e-14)
    ds = Dataset([[1.0], [1.0]], [0.0, 10.0])
    np.testing.assert_allclose(closed_form_ls(ds, [0, 1]), [5.0], rtol=1e-14)


def test_closed_form_matches_normal_equations(rng):
    X, y = rng.standard_normal((6, 2)), rng.standard_normal(6)
    subset = [0, 2, 3, 5]
    direct = np.linalg.solve(X[subset].T @ X[subset], X[subset].T @ y[subset])
    np.testing.assert_allclose(closed_form_ls(Dataset(X, y), subset), direct, atol=1e-10)


def test_closed_form_stationarity(rng):
    X, y = rng.standard_normal((200, 10)), rng.standard_normal(200)
    S = np.arange(0, 200, 2)
    theta = closed_form_ls(Dataset(X, y), S)
    resid_grad = X[S].T @ (X[S] @ theta - y[S])
    assert np.linalg.norm(resid_grad) <= 1e-8 * (1 + np.linalg.norm(y[S]))


def test_closed_form_is_global_minimizer(rng):
    X, y = rng.standard_normal((30, 3)), rng.standard_normal(30)
    ds, S = Dataset(X, y), np.arange(20)
    theta = closed_form_ls(ds, S)
    base = subset_loss(theta, ds, S)
    for _ in range(10):
        u = rng.standard_normal(3)
        u *= 1e-3 / np.linalg.norm(u)
        assert subset_loss(theta + u, ds, S) >= base
        assert subset_loss(theta - u, ds, S) >= base


def test_closed_form_errors():
    with pytest.raises(ConfigError):
        closed_form_ls(Dataset([[1.0], [2.0]], [1, 2], PIECEWISE), [0, 1])
    with pytest.raises(ConfigError):
        closed_form_ls(Dataset(np.eye(3), [1, 2, 3]), [0, 1])
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficiencyError) as info:
        closed_form_ls(Dataset(X, [1, 2, 3]), [0, 1, 2])
    assert info.value.ratio < 1e-10


def test_sgd_single_step_example():
    ds = Dataset([[1.0]], [1.0])
    policy = UpdatePolicy("batch_sgd", eta=0.5, M=1, N=1)
    np.testing.assert_array_equal(batch_sgd_update([0.0], ds, [0], policy, 0), [1.0])


def test_policy_validation():
    with pytest.raises(ConfigError):
        UpdatePolicy("batch_sgd", M=0)
    with pytest.raises(ConfigError):
        UpdatePolicy("batch_sgd", eta=0.0)
    with pytest.raises(ConfigError):
        UpdatePolicy("newton")
    with pytest.raises(ConfigError):
        UpdatePolicy("batch_sgd", schedule={0: 0})


def test_sgd_batch_larger_than_subset():
    ds = Dataset(np.ones((3, 1)), [1, 2, 3])
    with pytest.raises(ConfigError):
        batch_sgd_update([0.0], ds, [0, 1], UpdatePolicy("batch_sgd", N=3), 0)


def test_sgd_exact_fit_is_fixed_point(rng):
    X = rng.standard_normal((20, 3))
    theta = rng.standard_normal(3)
    ds = Dataset(X, X @ theta)
    policy = UpdatePolicy("batch_sgd", eta=0.1, M=25, N=5)
    np.testing.assert_array_equal(batch_sgd_update(theta, ds, np.arange(20), policy, 7), theta)


def test_sgd_is_bit_reproducible(rng):
    ds = Dataset(rng.standard_normal((50, 4)), rng.standard_normal(50))
    policy = UpdatePolicy("batch_sgd", eta=0.05, M=30, N=8, reinit=True, reinit_scale=0.5)
    a = batch_sgd_update(np.zeros(4), ds, np.arange(40), policy, 1234)
    b = batch_sgd_update(np.zeros(4), ds, np.arange(40), policy, 1234)
    assert a.tobytes() == b.tobytes()
    c = batch_sgd_update(np.zeros(4), ds, np.arange(40), policy, 1235)
    assert not np.array_equal(a, c)


def test_sgd_schedule_overrides_steps(rng):
    ds = Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10))
    policy = UpdatePolicy("batch_sgd", eta=0.1, M=5, schedule={0: 1})
    one = batch_sgd_update(np.zeros(2), ds, np.arange(10), policy, 0, round_index=0)
    ref = full_gradient_step(np.zeros(2), ds, np.arange(10), 0.1)
    np.testing.assert_array_equal(one, ref)
    assert policy.steps_for_round(3) == 5


def test_full_gradient_examples():
    ds = Dataset([[1.0], [1.0]], [2.0, 4.0])
    np.testing.assert_allclose(full_gradient_step([0.0], ds, [0, 1], 0.5), [3.0], rtol=1e-15)
    ds = Dataset([[1.0], [2.0]], [3.0, 6.0])
    np.testing.assert_array_equal(full_gradient_step([3.0], ds, [0, 1], 0.5), [3.0])
    with pytest.raises(ConfigError):
        full_gradient_step([0.0], ds, [], 0.5)


def test_full_gradient_piecewise_is_descent_direction(rng):
    X, y = rng.standard_normal((15, 3)), rng.standard_normal(15)
    ds = Dataset(X, y, PIECEWISE)
    S = np.arange(10)
    theta = rng.standard_normal(3)
    step = full_gradient_step(theta, ds, S, 0.01) - theta
    fd = central_difference(lambda t: subset_loss(t, ds, S) / S.size, theta)
    assert step @ (-fd) > 0


def test_full_gradient_equals_sgd_with_whole_batch(rng):
    ds = Dataset(rng.standard_normal((40, 5)), rng.standard_normal(40), PIECEWISE)
    S = np.sort(rng.choice(40, 25, replace=False))
    theta = rng.standard_normal(5)
    policy = UpdatePolicy("batch_sgd", eta=0.2, M=1, N=25)
    a = full_gradient_step(theta, ds, S, 0.2)
    b = batch_sgd_update(theta, ds, S, policy, 99)
    assert a.tobytes() == b.tobytes()


def test_small_step_decreases_subset_loss(rng):
    n, d = 8, 2
    X, y = rng.standard_normal((n, d)), rng.standard_normal(n)
    ds = Dataset(X, y)
    S = np.arange(6)
    psi_plus = regularity_constants(X, S.size).psi_plus
    eta = 1.0 / (2 * psi_plus / S.size)
    theta = rng.standard_normal(d)
    for _ in range(20):
        new = full_gradient_step(theta, ds, S, eta)
        assert subset_loss(new, ds, S) < subset_loss(theta, ds, S)
        theta = new
