"""Generalized linear models with squared loss.

A sample ``(phi, y)`` is scored by ``f(theta) = (y - link(phi @ theta)) ** 2``.
There is no 1/2 factor on the square, so gradients carry a factor of 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigError


@dataclass(frozen=True)
class LinkFunction:
    """Monotone link applied to the linear predictor.

    ``kind`` is ``"identity"`` or ``"piecewise"``.  The piecewise link is
    ``neg_slope * u`` for ``u < 0`` and ``pos_slope * u`` for ``u >= 0``;
    its derivative at the kink is the positive-branch slope.
    """

    kind: str = "identity"
    neg_slope: float = 1.0
    pos_slope: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "piecewise"):
            raise ConfigError(f"unknown link kind {self.kind!r}")
        if self.kind == "identity":
            object.__setattr__(self, "neg_slope", 1.0)
            object.__setattr__(self, "pos_slope", 1.0)
        elif not (self.neg_slope > 0 and self.pos_slope > 0):
            raise ConfigError("piecewise link slopes must be positive")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def piecewise(cls, neg_slope, pos_slope):
        return cls("piecewise", float(neg_slope), float(pos_slope))

    @property
    def is_identity(self):
        return self.kind == "identity"

    @property
    def bounds(self):
        """Derivative bounds ``(a, b)`` with ``a <= link'(u) <= b`` everywhere."""
        return (min(self.neg_slope, self.pos_slope), max(self.neg_slope, self.pos_slope))

    def value(self, u):
        if self.is_identity:
            return u
        u = np.asarray(u, dtype=np.float64)
        return np.where(u < 0, self.neg_slope * u, self.pos_slope * u)

    def derivative(self, u):
        if self.is_identity:
            return np.ones_like(np.asarray(u, dtype=np.float64))
        u = np.asarray(u, dtype=np.float64)
        return np.where(u < 0, self.neg_slope, self.pos_slope)

    def to_string(self):
        if self.is_identity:
            return "identity"
        return f"piecewise:{self.neg_slope!r}:{self.pos_slope!r}"

    @classmethod
    def from_string(cls, text):
        """Parse ``identity`` or ``piecewise:<neg>:<pos>``."""
        parts = text.strip().split(":")
        if parts[0] == "identity" and len(parts) == 1:
            return cls.identity()
        if parts[0] == "piecewise" and len(parts) == 3:
            try:
                return cls.piecewise(float(parts[1]), float(parts[2]))
            except ValueError:
                pass
        raise ConfigError(f"cannot parse link {text!r}")


@dataclass
class Truth:
    """Ground-truth metadata for a generated dataset.

    ``theta_star`` is an ``(m, d)`` array; row 0 is the clean model and
    further rows are mixture components.
    """

    theta_star: np.ndarray
    clean_mask: np.ndarray
    component_id: np.ndarray

    @property
    def clean_indices(self):
        return np.flatnonzero(self.clean_mask)


@dataclass
class Dataset:
    """Feature matrix, responses, link and optional ground truth.

    Row ``i`` of ``features`` is ``phi(x_i)``.
    """

    features: np.ndarray
    responses: np.ndarray
    link: LinkFunction = field(default_factory=LinkFunction)
    truth: Optional[Truth] = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.responses = np.asarray(self.responses, dtype=np.float64).reshape(-1)
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ConfigError("dataset needs n >= 1 rows and d >= 1 columns")
        if self.responses.shape[0] != n:
            raise ConfigError(
                f"features have {n} rows but responses have {self.responses.shape[0]}"
            )
        if self.truth is not None:
            t = self.truth
            t.theta_star = np.atleast_2d(np.asarray(t.theta_star, dtype=np.float64))
            t.clean_mask = np.asarray(t.clean_mask, dtype=bool).reshape(-1)
            t.component_id = np.asarray(t.component_id, dtype=np.int64).reshape(-1)
            if t.theta_star.shape[1] != d:
                raise ConfigError("theta_star dimension does not match features")
            if t.clean_mask.shape[0] != n or t.component_id.shape[0] != n:
                raise ConfigError("truth metadata must have one entry per row")
            m = t.theta_star.shape[0]
            if np.any(t.component_id < 0) or np.any(t.component_id >= m):
                raise ConfigError("component_id entries must index into theta_star")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, indices):
        """Return a new dataset restricted to ``indices`` (truth is dropped)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.responses[idx], self.link)


def as_theta(theta, d=None):
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if d is not None and theta.shape[0] != d:
        raise ConfigError(f"parameter has length {theta.shape[0]}, expected {d}")
    if not np.all(np.isfinite(theta)):
        raise ConfigError("parameter has non-finite entries")
    return theta


def _check_index(dataset, i):
    if not (0 <= i < dataset.n):
        raise IndexError(f"sample index {i} out of range for n={dataset.n}")


def predict(theta, dataset, i):
    """Prediction ``link(phi_i @ theta)`` for sample ``i``."""
    theta = as_theta(theta, dataset.d)
    _check_index(dataset, i)
    return float(dataset.link.value(dataset.features[i] @ theta))


def sample_loss(theta, dataset, i):
    """Squared loss of sample ``i`` at ``theta``."""
    r = dataset.responses[i] - predict(theta, dataset, i)
    return float(r * r)


def loss_gradient(theta, dataset, i):
    """Gradient of :func:`sample_loss` with respect to ``theta``."""
    theta = as_theta(theta, dataset.d)
    _check_index(dataset, i)
    phi = dataset.features[i]
    u = phi @ theta
    r = dataset.responses[i] - dataset.link.value(u)
    return -2.0 * r * dataset.link.derivative(u) * phi


def losses(theta, dataset, indices=None):
    """Vector of per-sample losses, optionally restricted to ``indices``."""
    theta = as_theta(theta, dataset.d)
    X, y = dataset.features, dataset.responses
    if indices is not None:
        X, y = X[indices], y[indices]
    r = y - dataset.link.value(X @ theta)
    return r * r


def mean_gradient(theta, dataset, indices):
    """Average of per-sample loss gradients over ``indices``."""
    X = dataset.features[indices]
    y = dataset.responses[indices]
    u = X @ theta
    g = -2.0 * (y - dataset.link.value(u)) * dataset.link.derivative(u)
    return (X.T @ g) / X.shape[0]


@dataclass(frozen=True)
class TrimmedLoss:
    value: float
    subset: np.ndarray


def trim_count(alpha, n):
    """``floor(alpha * n)``, validated to be at least 1."""
    if not (0 < alpha <= 1):
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    # guard against 0.7 * 1000 = 699.999...
    k = int(np.floor(alpha * n + 1e-9))
    if k < 1:
        raise ConfigError(f"floor(alpha * n) = 0 for alpha={alpha}, n={n}")
    return k


def trimmed_loss(theta, dataset, alpha):
    """Sum of the ``floor(alpha n)`` smallest sample losses at ``theta``.

    Returns the value and the (ascending) index set achieving it.
    """
    from .selection import select_k_smallest

    k = trim_count(alpha, dataset.n)
    per_sample = losses(theta, dataset)
    subset = select_k_smallest(per_sample, k)
    return TrimmedLoss(float(per_sample[subset].sum()), subset)


def subset_loss(theta, dataset, subset):
    """Total loss of ``theta`` over the rows in ``subset``."""
    return float(losses(theta, dataset, np.asarray(subset, dtype=np.int64)).sum())

