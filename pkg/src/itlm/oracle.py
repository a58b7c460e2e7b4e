"""Exhaustive small-scale oracles.

Everything here enumerates all ``k``-row subsets, so it is only usable for
tiny problems.  Enumeration guards are hard limits: exceeding one raises
:class:`EnumerationLimitError` rather than falling back to sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import ConfigError, EnumerationLimitError
from .glm import trim_count
from .rng import make_rng
from .selection import select_k_smallest
from .update import RANK_TOL

MAX_EXACT_N = 20
MAX_SUBSETS = 200_000
_CHUNK = 8192


def _subset_chunks(n, k):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def _batched_gram(X, idx):
    Xs = X[idx]
    return Xs, np.einsum("bki,bkj->bij", Xs, Xs)


@dataclass(frozen=True)
class ExactTrimmedLoss:
    theta: np.ndarray
    subset: np.ndarray
    value: float
    n_skipped: int


def exact_trimmed_loss(dataset, alpha, max_n=MAX_EXACT_N):
    """Global minimizer of the trimmed squared loss by full enumeration.

    For each subset of size ``floor(alpha n)`` the least-squares fit is
    obtained from the normal equations; the subset with the smallest
    residual sum wins, ties going to the lexicographically first subset.
    Subsets whose Gram matrix fails the 1e-10 conditioning test are
    skipped and counted in ``n_skipped``.
    """
    if not dataset.link.is_identity:
        raise ConfigError("exact trimmed loss is implemented for the identity link only")
    n, d = dataset.n, dataset.d
    if n > max_n:
        raise EnumerationLimitError(f"n={n} exceeds the enumeration guard {max_n}")
    k = trim_count(alpha, n)
    if k < d:
        raise ConfigError(f"floor(alpha n) = {k} is below d = {d}")
    X, y = dataset.features, dataset.responses

    best_value = np.inf
    best = None
    skipped = 0
    for idx in _subset_chunks(n, k):
        Xs, G = _batched_gram(X, idx)
        ys = y[idx]
        eig = np.linalg.eigvalsh(G)
        ok = eig[:, 0] >= RANK_TOL * eig[:, -1]
        ok &= eig[:, -1] > 0
        skipped += int((~ok).sum())
        if not ok.any():
            continue
        Xs, G, ys, idx = Xs[ok], G[ok], ys[ok], idx[ok]
        rhs = np.einsum("bki,bk->bi", Xs, ys)
        theta = np.linalg.solve(G, rhs[..., None])[..., 0]
        resid = ys - np.einsum("bki,bi->bk", Xs, theta)
        values = np.einsum("bk,bk->b", resid, resid)
        j = int(np.argmin(values))
        if values[j] < best_value:
            best_value = float(values[j])
            best = (theta[j].copy(), idx[j].copy())
    if best is None:
        raise ConfigError("every subset of the requested size is rank deficient")
    return ExactTrimmedLoss(best[0], best[1], best_value, skipped)


@dataclass(frozen=True)
class RegularityReport:
    k: int
    psi_minus: float
    psi_plus: float
    argmin_subset: np.ndarray
    argmax_subset: np.ndarray


def regularity_constants(features, k, max_subsets=MAX_SUBSETS):
    """Extreme eigenvalues of ``Phi_W^T Phi_W`` over every ``k``-row selection.

    ``psi_minus`` is the smallest minimum eigenvalue and ``psi_plus`` the
    largest maximum eigenvalue; the witnesses are the lexicographically
    first subsets attaining them.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n, d = X.shape
    if d > n:
        raise ConfigError(f"need d <= n, got d={d}, n={n}")
    if not (1 <= k <= n):
        raise ConfigError(f"k={k} outside [1, {n}]")
    total = comb(n, k)
    if total > max_subsets:
        raise EnumerationLimitError(f"C({n}, {k}) = {total} exceeds the guard {max_subsets}")

    lo, hi = np.inf, -np.inf
    lo_w = hi_w = None
    for idx in _subset_chunks(n, k):
        _, G = _batched_gram(X, idx)
        eig = np.linalg.eigvalsh(G)
        i = int(np.argmin(eig[:, 0]))
        j = int(np.argmax(eig[:, -1]))
        if eig[i, 0] < lo:
            lo, lo_w = float(eig[i, 0]), idx[i].copy()
        if eig[j, -1] > hi:
            hi, hi_w = float(eig[j, -1]), idx[j].copy()
    return RegularityReport(k, lo, hi, lo_w, hi_w)


def contamination_profile(dataset, trace):
    """``|S_t minus S*|`` for every recorded round."""
    if dataset.truth is None:
        raise ConfigError("contamination needs ground-truth metadata")
    clean = dataset.truth.clean_mask
    return np.array([int((~clean[s]).sum()) for s in trace.selected], dtype=np.int64)


def gaussian_contamination(n, alpha_star, alpha, delta, seed):
    """Bad rows kept when trimming a two-scale Gaussian residual sample.

    Draws ``floor(alpha_star n)`` clean residuals from ``N(0, delta^2)``
    and the rest from ``N(0, 1)``, keeps the ``floor(alpha n)`` smallest
    in absolute value, and returns how many of the kept ones are from the
    unit-variance group.
    """
    if not alpha < alpha_star:
        raise ConfigError("need alpha < alpha_star")
    rng = make_rng(seed)
    n_clean = trim_count(alpha_star, n)
    residuals = np.concatenate(
        [delta * rng.standard_normal(n_clean), rng.standard_normal(n - n_clean)]
    )
    kept = select_k_smallest(np.abs(residuals), trim_count(alpha, n))
    return int((kept >= n_clean).sum())
