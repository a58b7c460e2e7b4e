"""Iterative trimmed loss minimization: alternate selection and refit."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import ConfigError, RankDeficiencyError
from .glm import as_theta, losses, trim_count
from .rng import make_rng
from .selection import select_k_smallest, selection_stats
from .update import UpdatePolicy, apply_update, closed_form_ls

INIT_MODES = ("fit_all", "zero", "random", "given")


@dataclass
class ItlmConfig:
    """Settings for :func:`run_itlm`.

    ``init=None`` picks ``"fit_all"`` for the closed-form and full-gradient
    updates and ``"random"`` for batch SGD.
    """

    alpha: float = 0.9
    rounds: int = 10
    init: Optional[str] = None
    init_scale: float = 1.0
    init_theta: Optional[np.ndarray] = None
    update: UpdatePolicy = field(default_factory=UpdatePolicy)
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.init is None:
            self.init = "random" if self.update.mode == "batch_sgd" else "fit_all"
        if self.init not in INIT_MODES:
            raise ConfigError(f"unknown init mode {self.init!r}")
        if self.init == "given" and self.init_theta is None:
            raise ConfigError("init='given' requires init_theta")
        if not self.init_scale > 0:
            raise ConfigError("init_scale must be positive")


@dataclass
class EstimationTrace:
    """Per-round record of a run.

    ``thetas[t]`` is the parameter entering round ``t`` (``thetas[0]`` is
    the initialization, ``thetas[-1]`` the returned estimate).
    ``selected[t]`` and ``trimmed_losses[t]`` are the lowest-loss subset
    and its loss at ``thetas[t]``; the last entry is the selection at the
    final estimate and is not followed by an update.
    """

    alpha: float
    k: int
    thetas: List[np.ndarray] = field(default_factory=list)
    selected: List[np.ndarray] = field(default_factory=list)
    trimmed_losses: List[float] = field(default_factory=list)
    theta_star: Optional[np.ndarray] = None
    clean_mask: Optional[np.ndarray] = None

    @property
    def rounds(self):
        return len(self.thetas) - 1

    @property
    def theta(self):
        return self.thetas[-1]

    @property
    def has_truth(self):
        return self.theta_star is not None

    def recovery_errors(self, target=None):
        """``||theta_t - target||_2`` per round; ``target`` defaults to theta*."""
        if target is None:
            if self.theta_star is None:
                raise ConfigError("trace has no ground truth")
            target = self.theta_star
        return np.linalg.norm(np.vstack(self.thetas) - np.asarray(target), axis=1)

    def contamination(self):
        """Number of bad rows in each selected subset."""
        if self.clean_mask is None:
            raise ConfigError("trace has no ground truth")
        return np.array([int((~self.clean_mask[s]).sum()) for s in self.selected])

    def clean_recovery_ratios(self):
        if self.clean_mask is None:
            raise ConfigError("trace has no ground truth")
        return np.array(
            [selection_stats(s, self.clean_mask).clean_recovery_ratio for s in self.selected]
        )

    def rows(self):
        """One dict per round, suitable for CSV output."""
        errors = self.recovery_errors() if self.has_truth else None
        contam = self.contamination() if self.clean_mask is not None else None
        ratios = self.clean_recovery_ratios() if self.clean_mask is not None else None
        out = []
        for t, theta in enumerate(self.thetas):
            row = {"round": t, "trimmed_loss": self.trimmed_losses[t]}
            if t < len(self.selected):
                row["n_selected"] = int(self.selected[t].size)
            if errors is not None:
                row["recovery_error"] = float(errors[t])
            if contam is not None and t < len(contam):
                row["contamination"] = int(contam[t])
                row["clean_recovery_ratio"] = float(ratios[t])
            for j, v in enumerate(theta):
                row[f"theta_{j}"] = float(v)
            out.append(row)
        return out


def initial_theta(dataset, config, rng):
    d = dataset.d
    if config.init == "zero":
        return np.zeros(d)
    if config.init == "random":
        return config.init_scale * rng.standard_normal(d)
    if config.init == "given":
        return as_theta(config.init_theta, d).copy()
    everything = np.arange(dataset.n)
    if config.update.mode == "closed_form":
        return closed_form_ls(dataset, everything)
    return apply_update(np.zeros(d), dataset, everything, config.update, rng, None)


def run_itlm(dataset, config):
    """Run ``config.rounds`` rounds of select-then-refit.

    Round ``t`` keeps the ``floor(alpha n)`` rows with the smallest loss
    at ``theta_t`` and refits on them to get ``theta_{t+1}``.

    Raises
    ------
    ConfigError
        Invalid configuration for this dataset.
    RankDeficiencyError
        A closed-form refit failed; the partial trace is attached as
        ``err.trace``.
    """
    k = trim_count(config.alpha, dataset.n)
    if config.update.mode == "closed_form":
        if not dataset.link.is_identity:
            raise ConfigError("closed-form update requires the identity link")
        if k < dataset.d:
            raise ConfigError(f"floor(alpha n) = {k} is below d = {dataset.d}")
    if config.update.N is not None and config.update.N > k:
        raise ConfigError(f"batch size N={config.update.N} exceeds floor(alpha n) = {k}")

    truth = dataset.truth
    trace = EstimationTrace(
        alpha=config.alpha,
        k=k,
        theta_star=None if truth is None else truth.theta_star[0].copy(),
        clean_mask=None if truth is None else truth.clean_mask.copy(),
    )
    rng = make_rng(config.seed)

    def record(theta):
        per_sample = losses(theta, dataset)
        subset = select_k_smallest(per_sample, k)
        trace.thetas.append(theta)
        trace.selected.append(subset)
        trace.trimmed_losses.append(float(per_sample[subset].sum()))
        return subset

    try:
        theta = initial_theta(dataset, config, rng)
        for t in range(config.rounds):
            subset = record(theta)
            theta = apply_update(theta, dataset, subset, config.update, rng, t)
        record(theta)
    except RankDeficiencyError as err:
        err.trace = trace
        raise
    return trace


def stopping_check(trace, tol):
    """True once the last two rounds agree in parameter (within ``tol``) or in subset."""
    if trace.rounds < 1:
        raise ConfigError("stopping_check needs at least two recorded rounds")
    if np.linalg.norm(trace.thetas[-1] - trace.thetas[-2]) <= tol:
        return True
    return np.array_equal(trace.selected[-1], trace.selected[-2])
