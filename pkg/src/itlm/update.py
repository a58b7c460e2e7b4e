"""Model updates on a selected subset of rows.

Three update rules are provided: the exact least-squares fit (identity
link only), mini-batch SGD with an optional random restart, and a single
full-batch gradient step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConfigError, RankDeficiencyError
from .glm import as_theta, mean_gradient
from .rng import make_rng

RANK_TOL = 1e-10

MODES = ("closed_form", "batch_sgd", "full_gradient")


@dataclass
class UpdatePolicy:
    """How ``theta`` is refit on each selected subset.

    Parameters
    ----------
    mode : {"closed_form", "batch_sgd", "full_gradient"}
    eta : float
        Step size for the gradient modes.
    M : int
        Number of SGD steps per round (``batch_sgd``).
    N : int or None
        Batch size; ``None`` means the whole selected subset.
    reinit : bool
        Restart SGD from ``reinit_scale * N(0, I)`` every round.
    reinit_scale : float
    schedule : dict, optional
        ``{round: M}`` overrides, e.g. fewer steps during early rounds.
    """

    mode: str = "closed_form"
    eta: float = 0.1
    M: int = 1
    N: Optional[int] = None
    reinit: bool = False
    reinit_scale: float = 1.0
    schedule: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown update mode {self.mode!r}")
        if self.mode != "closed_form" and not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.M < 1 or any(m < 1 for m in self.schedule.values()):
            raise ConfigError("number of gradient steps M must be >= 1")
        if self.N is not None and self.N < 1:
            raise ConfigError("batch size N must be >= 1")
        if not self.reinit_scale > 0:
            raise ConfigError("reinit_scale must be positive")

    def steps_for_round(self, t):
        if t is None:
            return self.M
        return self.schedule.get(int(t), self.M)


def _as_subset(subset, n):
    subset = np.unique(np.asarray(subset, dtype=np.int64).reshape(-1))
    if subset.size and (subset[0] < 0 or subset[-1] >= n):
        raise ConfigError("subset index out of range")
    return subset


def gram_condition(X):
    """sigma_min / sigma_max of ``X.T @ X``."""
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0:
        return 0.0
    return float((s[-1] / s[0]) ** 2)


def closed_form_ls(dataset, subset):
    """Exact least-squares fit on the rows in ``subset``.

    Solved through a QR factorization of the selected rows; the Gram
    matrix is never formed.

    Raises
    ------
    ConfigError
        Non-identity link or fewer rows than features.
    RankDeficiencyError
        The selected Gram matrix has sigma_min / sigma_max below 1e-10.
    """
    if not dataset.link.is_identity:
        raise ConfigError("closed-form update requires the identity link")
    subset = _as_subset(subset, dataset.n)
    d = dataset.d
    if subset.size < d:
        raise ConfigError(f"closed-form update needs >= d={d} rows, got {subset.size}")
    X = dataset.features[subset]
    y = dataset.responses[subset]
    Q, R = np.linalg.qr(X, mode="reduced")
    ratio = gram_condition(R)
    if not ratio >= RANK_TOL:
        raise RankDeficiencyError(
            f"selected rows are rank deficient: sigma_min/sigma_max = {ratio:.3e}", ratio
        )
    return solve_triangular(R, Q.T @ y)


def batch_sgd_update(theta, dataset, subset, policy, rng, round_index=None):
    """Run ``M`` mini-batch gradient steps on ``subset``.

    Each batch is drawn uniformly without replacement from ``subset`` and
    summed in ascending index order, so ``N == len(subset)`` reproduces
    :func:`full_gradient_step` exactly.
    """
    if policy.mode != "batch_sgd":
        raise ConfigError(f"policy mode is {policy.mode!r}, expected 'batch_sgd'")
    subset = _as_subset(subset, dataset.n)
    N = subset.size if policy.N is None else policy.N
    if N > subset.size:
        raise ConfigError(f"batch size N={N} exceeds subset size {subset.size}")
    rng = make_rng(rng)
    if policy.reinit:
        theta = policy.reinit_scale * rng.standard_normal(dataset.d)
    else:
        theta = as_theta(theta, dataset.d).copy()
    for _ in range(policy.steps_for_round(round_index)):
        if N == subset.size:
            batch = subset
        else:
            batch = np.sort(rng.choice(subset, size=N, replace=False))
        theta = theta - policy.eta * mean_gradient(theta, dataset, batch)
    return theta


def full_gradient_step(theta, dataset, subset, eta):
    """One gradient step on the mean loss over ``subset``."""
    subset = _as_subset(subset, dataset.n)
    if subset.size == 0:
        raise ConfigError("empty subset")
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    theta = as_theta(theta, dataset.d)
    return theta - eta * mean_gradient(theta, dataset, subset)


def apply_update(theta, dataset, subset, policy, rng, round_index=None):
    """Dispatch on ``policy.mode``."""
    if policy.mode == "closed_form":
        return closed_form_ls(dataset, subset)
    if policy.mode == "full_gradient":
        return full_gradient_step(theta, dataset, subset, policy.eta)
    return batch_sgd_update(theta, dataset, subset, policy, rng, round_index)
