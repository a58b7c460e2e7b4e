"""Synthetic datasets with corrupted responses.

Features are i.i.d. standard Gaussian.  Clean rows follow
``y = link(phi @ theta_star) + e`` with ``e ~ N(0, sigma^2)``; bad rows
follow ``y = r + e`` where ``r`` comes from a :class:`CorruptionModel`.
Clean and bad counts are exact, and which rows are clean is a uniform
random shuffle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError
from .glm import Dataset, LinkFunction, Truth, trim_count
from .rng import make_rng

CORRUPTION_KINDS = ("none", "constant", "adversarial", "random_output", "mixture")

FORMAT_TAG = "itlm-dataset 1"


@dataclass
class CorruptionModel:
    """Rule generating the responses of bad rows.

    ``constant`` and ``adversarial`` are concrete instances of arbitrary
    corruption meant for tests: ``r = c`` and ``r = phi @ theta_adv + offset``.
    ``random_output`` draws ``r ~ N(0, std^2)`` independently of features.
    ``mixture`` draws responses from further linear components; if
    ``components`` is empty a single unit component orthogonal to
    ``theta_star`` is generated.
    """

    kind: str = "random_output"
    c: float = 10.0
    theta_adv: Optional[np.ndarray] = None
    offset: float = 0.0
    std: float = 1.0
    components: Sequence = ()
    weights: Sequence[float] = ()

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ConfigError(f"unknown corruption kind {self.kind!r}")
        if self.kind == "random_output" and not self.std > 0:
            raise ConfigError("random_output std must be positive")
        if self.kind == "mixture":
            w = np.asarray(self.weights, dtype=np.float64)
            if w.size < 2 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ConfigError("mixture weights must be >= 2 positive fractions summing to 1")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def constant(cls, c):
        return cls("constant", c=float(c))

    @classmethod
    def adversarial(cls, theta_adv, offset=0.0):
        return cls("adversarial", theta_adv=np.asarray(theta_adv, dtype=np.float64), offset=offset)

    @classmethod
    def random_output(cls, std=1.0):
        return cls("random_output", std=float(std))

    @classmethod
    def mixture(cls, weights, components=()):
        return cls("mixture", weights=tuple(float(w) for w in weights), components=components)


@dataclass
class GenConfig:
    """Generator settings.  ``theta_star=None`` draws a random unit vector."""

    n: int = 1000
    d: int = 100
    alpha_star: float = 0.8
    sigma: float = 0.2
    link: LinkFunction = field(default_factory=LinkFunction)
    corruption: CorruptionModel = field(default_factory=CorruptionModel)
    theta_star: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ConfigError("n and d must be >= 1")
        if not (0 < self.alpha_star <= 1):
            raise ConfigError(f"alpha_star must lie in (0, 1], got {self.alpha_star}")
        if not self.sigma >= 0:
            raise ConfigError("sigma must be >= 0")
        if self.theta_star is not None:
            self.theta_star = np.asarray(self.theta_star, dtype=np.float64).reshape(-1)
            if self.theta_star.shape[0] != self.d:
                raise ConfigError("theta_star length does not match d")


def random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def orthogonal_unit(rng, reference):
    """Random unit vector orthogonal to ``reference``."""
    d = reference.shape[0]
    if d < 2:
        raise ConfigError("an orthogonal component needs d >= 2")
    ref = reference / np.linalg.norm(reference)
    v = rng.standard_normal(d)
    for _ in range(2):
        v = v - (v @ ref) * ref
    return v / np.linalg.norm(v)


def generate(config):
    """Draw a dataset according to ``config`` (mixtures are delegated to :func:`generate_mixture`)."""
    if config.corruption.kind == "mixture":
        return generate_mixture(config)
    rng = make_rng(config.seed)
    n, d = config.n, config.d
    theta_star = config.theta_star if config.theta_star is not None else random_unit(rng, d)
    X = rng.standard_normal((n, d))
    n_clean = trim_count(config.alpha_star, n)
    if n_clean < n and config.corruption.kind == "none":
        raise ConfigError("alpha_star < 1 needs a corruption model other than 'none'")
    clean_mask = np.zeros(n, dtype=bool)
    clean_mask[rng.permutation(n)[:n_clean]] = True
    noise = config.sigma * rng.standard_normal(n)

    y = config.link.value(X @ theta_star)
    bad = ~clean_mask
    cm = config.corruption
    if cm.kind == "constant":
        r = np.full(n, cm.c)
    elif cm.kind == "adversarial":
        if cm.theta_adv is None:
            raise ConfigError("adversarial corruption needs theta_adv")
        theta_adv = np.asarray(cm.theta_adv, dtype=np.float64).reshape(-1)
        if theta_adv.shape[0] != d:
            raise ConfigError("theta_adv length does not match d")
        r = X @ theta_adv + cm.offset
    elif cm.kind == "random_output":
        r = cm.std * rng.standard_normal(n)
    else:
        r = np.zeros(n)
    y = np.where(bad, r, y) + noise

    # component ids only distinguish mixture components; clean_mask marks bad rows
    truth = Truth(theta_star[None, :].copy(), clean_mask, np.zeros(n, dtype=np.int64))
    return Dataset(X, y, config.link, truth)


def generate_mixture(config):
    """Mixed-regression dataset; component 0 (the clean one) is ``theta_star``.

    Component sizes are ``floor(w_j n)`` for every component but the last,
    which takes the remainder.
    """
    cm = config.corruption
    if cm.kind != "mixture":
        raise ConfigError("generate_mixture requires mixture corruption")
    rng = make_rng(config.seed)
    n, d = config.n, config.d
    weights = np.asarray(cm.weights, dtype=np.float64)
    m = weights.size
    theta_star = config.theta_star if config.theta_star is not None else random_unit(rng, d)
    thetas = [theta_star]
    if len(cm.components) == 0:
        if m != 2:
            raise ConfigError("auto-generated components support m = 2 only")
        thetas.append(orthogonal_unit(rng, theta_star))
    else:
        comps = [np.asarray(c, dtype=np.float64).reshape(-1) for c in cm.components]
        if len(comps) != m - 1 or any(c.shape[0] != d for c in comps):
            raise ConfigError("mixture needs m - 1 extra components of length d")
        thetas.extend(comps)
    thetas = np.vstack(thetas)

    counts = [trim_count(w, n) for w in weights[:-1]]
    counts.append(n - sum(counts))
    if counts[-1] < 0:
        raise ConfigError("mixture component counts exceed n")
    X = rng.standard_normal((n, d))
    order = rng.permutation(n)
    component_id = np.empty(n, dtype=np.int64)
    start = 0
    for j, c in enumerate(counts):
        component_id[order[start : start + c]] = j
        start += c
    noise = config.sigma * rng.standard_normal(n)
    u = np.einsum("ij,ij->i", X, thetas[component_id])
    y = config.link.value(u) + noise
    truth = Truth(thetas, component_id == 0, component_id)
    return Dataset(X, y, config.link, truth)


def save_dataset(dataset, path):
    """Write ``dataset`` as text with hexadecimal floats (lossless)."""
    lines = [FORMAT_TAG]
    truth = dataset.truth
    m = 0 if truth is None else truth.theta_star.shape[0]
    lines.append(f"d={dataset.d} n={dataset.n} truth={int(truth is not None)} m={m} link={dataset.link.to_string()}")
    if truth is not None:
        for j in range(m):
            lines.append("theta " + " ".join(float(v).hex() for v in truth.theta_star[j]))
    for i in range(dataset.n):
        cells = [float(v).hex() for v in dataset.features[i]]
        cells.append(float(dataset.responses[i]).hex())
        if truth is not None:
            cells.append(str(int(truth.clean_mask[i])))
            cells.append(str(int(truth.component_id[i])))
        lines.append(" ".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != FORMAT_TAG:
        raise ConfigError(f"{path}: not an itlm dataset file")
    try:
        header = dict(item.split("=", 1) for item in lines[1].split())
        d, n, has_truth, m = (int(header[k]) for k in ("d", "n", "truth", "m"))
        link = LinkFunction.from_string(header["link"])
        pos = 2
        thetas = []
        for _ in range(m if has_truth else 0):
            tag, *vals = lines[pos].split()
            if tag != "theta":
                raise ValueError("expected theta line")
            thetas.append([float.fromhex(v) for v in vals])
            pos += 1
        body = [line.split() for line in lines[pos : pos + n]]
        if len(body) != n:
            raise ValueError("row count does not match header")
        X = np.array([[float.fromhex(v) for v in row[:d]] for row in body])
        y = np.array([float.fromhex(row[d]) for row in body])
        truth = None
        if has_truth:
            clean = np.array([row[d + 1] == "1" for row in body])
            comp = np.array([int(row[d + 2]) for row in body])
            truth = Truth(np.array(thetas), clean, comp)
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed dataset file ({exc})") from exc
    return Dataset(X.reshape(n, d), y, link, truth)
