"""Seeded random streams.

Every stream is a Philox-4x64 counter-based generator keyed by a 64-bit
integer.  Child streams are derived with a fixed splitting rule so that
(base seed, indices) always maps to the same key:

    derive_seed(seed, i1, ..., ik) = seed XOR h(i1, ..., ik)

where ``h`` folds the indices through SplitMix64::

    h = 0
    for i in indices:
        h = splitmix64(h XOR (i mod 2**64))

This rule is versioned as ``SEED_RULE`` and recorded in every sweep's
metadata sidecar.
"""

import numpy as np

SEED_RULE = "philox4x64/xor-splitmix64-v1"

_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """One SplitMix64 output step applied to the 64-bit state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed, *indices):
    """Derive a child 64-bit seed from ``seed`` and a tuple of indices."""
    h = 0
    for i in indices:
        h = splitmix64(h ^ (int(i) & _MASK64))
    return (int(seed) & _MASK64) ^ h


def make_rng(seed):
    """Return a :class:`numpy.random.Generator` on a Philox stream keyed by ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
