"""Choosing the lowest-loss samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError


def select_k_smallest(losses, k):
    """Indices of the ``k`` smallest losses, sorted ascending.

    Ties at the cut-off value are resolved in favour of smaller indices.
    Uses a partial partition, so the cost is linear in ``len(losses)``
    apart from sorting the ``k`` returned indices.

    Raises
    ------
    ConfigError
        If ``k`` is outside ``[1, n]`` or any loss is NaN or infinite.
    """
    losses = np.asarray(losses, dtype=np.float64).reshape(-1)
    n = losses.shape[0]
    if not (1 <= k <= n):
        raise ConfigError(f"k={k} outside [1, {n}]")
    if not np.all(np.isfinite(losses)):
        raise ConfigError("losses contain non-finite values")
    if k == n:
        return np.arange(n, dtype=np.int64)
    cutoff = np.partition(losses, k - 1)[k - 1]
    below = np.flatnonzero(losses < cutoff)
    at = np.flatnonzero(losses == cutoff)[: k - below.shape[0]]
    return np.sort(np.concatenate([below, at])).astype(np.int64)


@dataclass(frozen=True)
class SelectionStats:
    n_selected: int
    n_bad_selected: int
    clean_recovery_ratio: float


def selection_stats(subset, clean_mask):
    """How many bad rows a selection contains and what share of clean rows it keeps."""
    subset = np.asarray(subset, dtype=np.int64).reshape(-1)
    clean_mask = np.asarray(clean_mask, dtype=bool).reshape(-1)
    if subset.size == 0:
        raise ConfigError("empty subset")
    if subset.max() >= clean_mask.shape[0] or subset.min() < 0:
        raise ConfigError("subset index outside clean_mask")
    clean_selected = int(clean_mask[subset].sum())
    n_clean = int(clean_mask.sum())
    ratio = clean_selected / n_clean if n_clean else float("nan")
    return SelectionStats(int(subset.size), int(subset.size) - clean_selected, ratio)
