"""scikit-learn compatible wrapper around :func:`itlm.driver.run_itlm`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted, validate_data

from .driver import ItlmConfig, run_itlm
from .glm import Dataset, LinkFunction
from .update import UpdatePolicy


class ITLMRegressor(RegressorMixin, BaseEstimator):
    """Robust regressor that refits on its lowest-loss fraction of samples.

    Parameters
    ----------
    alpha : float, default=0.9
        Fraction of samples kept in every round.
    n_rounds : int, default=10
    update : {"closed_form", "full_gradient", "batch_sgd"}, default="closed_form"
    eta : float, default=0.1
        Step size for the gradient updates.
    n_steps : int, default=1
        SGD steps per round (``batch_sgd`` only).
    batch_size : int or None, default=None
        SGD batch size; ``None`` uses the whole selected subset.
    reinit : bool, default=False
        Restart SGD from a random point every round.
    link : str, default="identity"
        ``"identity"`` or ``"piecewise:<neg>:<pos>"``.
    init : str or None, default=None
        ``"fit_all"``, ``"zero"`` or ``"random"``; ``None`` picks by update mode.
    fit_intercept : bool, default=False
    random_state : int, RandomState or None

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    support_ : ndarray of bool, shape (n_samples,)
        Samples selected at the final estimate.
    trace_ : EstimationTrace
    """

    def __init__(self, alpha=0.9, n_rounds=10, update="closed_form", eta=0.1, n_steps=1,
                 batch_size=None, reinit=False, link="identity", init=None,
                 fit_intercept=False, random_state=None):
        self.alpha = alpha
        self.n_rounds = n_rounds
        self.update = update
        self.eta = eta
        self.n_steps = n_steps
        self.batch_size = batch_size
        self.reinit = reinit
        self.link = link
        self.init = init
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def _design(self, X):
        if self.fit_intercept:
            return np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        link = LinkFunction.from_string(self.link)
        if isinstance(self.random_state, (int, np.integer)):
            seed = int(self.random_state)
        else:
            seed = int(check_random_state(self.random_state).randint(2**31 - 1))
        policy = UpdatePolicy(
            self.update, eta=self.eta, M=self.n_steps, N=self.batch_size, reinit=self.reinit
        )
        config = ItlmConfig(
            alpha=self.alpha, rounds=self.n_rounds, init=self.init, update=policy, seed=seed
        )
        self.trace_ = run_itlm(Dataset(self._design(X), y, link), config)
        theta = self.trace_.theta
        if self.fit_intercept:
            self.coef_, self.intercept_ = theta[:-1].copy(), float(theta[-1])
        else:
            self.coef_, self.intercept_ = theta.copy(), 0.0
        self.support_ = np.zeros(X.shape[0], dtype=bool)
        self.support_[self.trace_.selected[-1]] = True
        self.link_ = link
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.link_.value(X @ self.coef_ + self.intercept_)
