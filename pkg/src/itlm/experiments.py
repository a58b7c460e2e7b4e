"""Seeded Monte Carlo sweeps over the synthetic corruption settings.

Run ``r`` of grid point ``g`` uses ``derive_seed(base_seed, g, r)``; its
dataset is drawn from child stream 0 of that seed, the algorithm uses
child stream 1 and mixture initializations child stream 2.  Results are
assembled in (grid index, repeat) order whatever the worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .datagen import CorruptionModel, GenConfig, generate
from .driver import ItlmConfig, run_itlm
from .exceptions import ConfigError
from .glm import LinkFunction
from .rng import SEED_RULE, derive_seed, make_rng
from .update import UpdatePolicy, closed_form_ls, full_gradient_step

EXPERIMENTS = (
    "inconsistency",
    "recovery_vs_alpha_star",
    "misspecification",
    "convergence",
    "mixture_local",
    "nonlinear",
)

DEFAULT_GRIDS = {
    "inconsistency": {"n": [1000, 5000, 25000]},
    "recovery_vs_alpha_star": {"alpha_star": [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]},
    "misspecification": {"alpha_gap": [0.05, 0.1, 0.15]},
    "convergence": {"sigma": [0.01, 0.05, 0.1, 0.2], "variant": ["closed_form", "full_gradient"]},
    "mixture_local": {"rho": [0.0, 0.1, 0.5, 1.0]},
    "nonlinear": {"sigma": [0.01, 0.05, 0.1, 0.2]},
}

# extra grid keys that are not GenConfig / ItlmConfig fields
SPECIAL_KEYS = ("alpha_gap", "rho", "variant", "eta", "component")

_GEN_FIELDS = {f.name for f in dataclasses.fields(GenConfig)}
_ITLM_FIELDS = {f.name for f in dataclasses.fields(ItlmConfig)}


@dataclass
class Table:
    columns: List[str]
    rows: List[Dict] = field(default_factory=list)

    def column(self, name, **where):
        return [
            r[name] for r in self.rows if all(r.get(k) == v for k, v in where.items())
        ]


@dataclass
class SweepSpec:
    """A named experiment, its grid, and the base configurations.

    ``alpha=None`` means ``alpha = alpha_star - alpha_gap`` (or, for
    mixtures, the target component's weight minus ``alpha_gap``).
    ``rho`` is the distance of the mixture initialization from the target
    component.  ``eta`` is the step size of gradient variants.
    """

    experiment: str
    grid: Dict[str, list] = field(default_factory=dict)
    repeats: int = 100
    gen: GenConfig = field(default_factory=GenConfig)
    itlm: ItlmConfig = field(default_factory=ItlmConfig)
    alpha: Optional[float] = None
    alpha_gap: float = 0.05
    rho: float = 0.1
    eta: float = 0.3
    component: int = 0
    seed: int = 0
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.grid:
            self.grid = {k: list(v) for k, v in DEFAULT_GRIDS[self.experiment].items()}
        for key, values in self.grid.items():
            if key not in _GEN_FIELDS | _ITLM_FIELDS | set(SPECIAL_KEYS):
                raise ConfigError(f"grid parameter {key!r} names no config field")
            if not values:
                raise ConfigError(f"grid parameter {key!r} has no values")

    def grid_points(self):
        keys = list(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*self.grid.values())]


def _variant_policy(variant, eta, base):
    if variant == "closed_form":
        return UpdatePolicy("closed_form")
    if variant == "full_gradient":
        return UpdatePolicy("full_gradient", eta=eta)
    if variant == "batch_sgd":
        return dataclasses.replace(base, mode="batch_sgd", eta=eta)
    raise ConfigError(f"unknown variant {variant!r}")


def _resolve(spec, point):
    """Materialize the generator and ITLM configs for one grid point."""
    params = {k: getattr(spec, k) for k in SPECIAL_KEYS if k != "variant"}
    params.update({k: v for k, v in point.items() if k in SPECIAL_KEYS})
    gen_over = {k: v for k, v in point.items() if k in _GEN_FIELDS}
    itlm_over = {k: v for k, v in point.items() if k in _ITLM_FIELDS}

    gen = dataclasses.replace(spec.gen, **gen_over)
    if spec.experiment == "mixture_local" and gen.corruption.kind != "mixture":
        gen = dataclasses.replace(
            gen, corruption=CorruptionModel.mixture([gen.alpha_star, 1 - gen.alpha_star])
        )
    if spec.experiment == "nonlinear" and gen.link.is_identity:
        gen = dataclasses.replace(gen, link=LinkFunction.piecewise(1.0, 1.2))

    variant = point.get("variant")
    if variant is None and spec.experiment == "nonlinear":
        variant = "full_gradient"
    update = spec.itlm.update
    if variant is not None:
        update = _variant_policy(variant, params["eta"], update)
    elif not gen.link.is_identity and update.mode == "closed_form":
        update = UpdatePolicy("full_gradient", eta=params["eta"])

    if "alpha" in itlm_over:
        alpha = itlm_over.pop("alpha")
    elif spec.alpha is not None:
        alpha = spec.alpha
    elif gen.corruption.kind == "mixture":
        alpha = gen.corruption.weights[params["component"]] - params["alpha_gap"]
    else:
        alpha = gen.alpha_star - params["alpha_gap"]
    alpha = round(alpha, 12)
    itlm = dataclasses.replace(spec.itlm, alpha=alpha, update=update, **itlm_over)
    return gen, itlm, params, variant


def fit_subset(dataset, subset, eta=0.3, max_steps=5000, tol=1e-12):
    """Fit on ``subset``: exact least squares for the identity link, else gradient descent."""
    subset = np.asarray(subset, dtype=np.int64)
    if dataset.link.is_identity:
        return closed_form_ls(dataset, subset)
    theta = np.zeros(dataset.d)
    for _ in range(max_steps):
        new = full_gradient_step(theta, dataset, subset, eta)
        if np.linalg.norm(new - theta) <= tol:
            return new
        theta = new
    return theta


def rounds_to_plateau(errors, factor=1.1):
    """First round whose error is within ``factor`` of the final error."""
    errors = np.asarray(errors)
    return int(np.flatnonzero(errors <= factor * errors[-1])[0])


def _run_one(task):
    spec, g, r, point = task
    gen, itlm, params, variant = _resolve(spec, point)
    run_seed = derive_seed(spec.seed, g, r)
    gen = dataclasses.replace(gen, seed=derive_seed(run_seed, 0))
    itlm = dataclasses.replace(itlm, seed=derive_seed(run_seed, 1))
    ds = generate(gen)
    truth = ds.truth
    j = params["component"] if gen.corruption.kind == "mixture" else 0
    target = truth.theta_star[j]
    if spec.experiment == "mixture_local":
        direction = make_rng(derive_seed(run_seed, 2)).standard_normal(ds.d)
        direction /= np.linalg.norm(direction)
        itlm = dataclasses.replace(
            itlm, init="given", init_theta=target + params["rho"] * direction
        )
    trace = run_itlm(ds, itlm)
    errors = trace.recovery_errors(target)

    own_rows = np.flatnonzero(truth.component_id == j) if j else truth.clean_indices
    oracle = fit_subset(ds, own_rows, params["eta"])
    naive = fit_subset(ds, np.arange(ds.n), params["eta"])
    stats_bad = trace.contamination()[-1]
    row = {
        "row_type": "run",
        "experiment": spec.experiment,
        "grid_index": g,
        "repeat": r,
        "seed": run_seed,
    }
    row.update({k: point[k] for k in spec.grid})
    row.update(
        {
            "alpha": itlm.alpha,
            "update": itlm.update.mode,
            "itlm_error": float(errors[-1]),
            "oracle_error": float(np.linalg.norm(oracle - target)),
            "naive_error": float(np.linalg.norm(naive - target)),
            "clean_recovery_ratio": float(trace.clean_recovery_ratios()[-1]),
            "contamination": int(stats_bad),
            "rounds_to_plateau": rounds_to_plateau(errors),
        }
    )
    if spec.experiment == "mixture_local":
        row["rho"] = params["rho"]
        row["sigma"] = gen.sigma
        row["converged"] = int(errors[-1] <= 10 * gen.sigma + 0.01)
    return row, errors, variant


RUN_COLUMNS = [
    "row_type", "experiment", "grid_index", "repeat", "seed",
]
RESULT_COLUMNS = [
    "alpha", "update", "itlm_error", "oracle_error", "naive_error",
    "clean_recovery_ratio", "contamination", "rounds_to_plateau",
]
SUMMARY_COLUMNS = [
    "itlm_error_mean", "itlm_error_median", "itlm_error_std",
    "itlm_error_q25", "itlm_error_q75", "oracle_error_median",
    "oracle_error_mean", "oracle_error_std", "naive_error_median",
    "clean_recovery_ratio_mean", "converged_fraction",
]


@dataclass
class SweepResult:
    table: Table
    curves: Optional[Table]
    errors: List[List[np.ndarray]]


def _execute(tasks, workers):
    if workers <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def run_sweep(spec):
    """Run every (grid point, repeat) and summarize each grid point.

    Returns a :class:`SweepResult` whose ``table`` holds one ``run`` row per
    repeat followed by one ``summary`` row per grid point, and, for the
    convergence-type experiments, a per-round ``curves`` table.
    """
    points = spec.grid_points()
    tasks = [(spec, g, r, p) for g, p in enumerate(points) for r in range(spec.repeats)]
    results = _execute(tasks, spec.workers)

    grid_cols = list(spec.grid)
    extra = [c for c in ("rho", "sigma", "converged") if spec.experiment == "mixture_local" and c not in grid_cols]
    columns = RUN_COLUMNS + grid_cols + extra + RESULT_COLUMNS + SUMMARY_COLUMNS
    table = Table(columns)
    per_point_errors = [[] for _ in points]
    for row, errors, _ in results:
        table.rows.append(row)
        per_point_errors[row["grid_index"]].append(errors)

    for g, point in enumerate(points):
        runs = [row for row, _, _ in results if row["grid_index"] == g]
        itlm_err = np.array([x["itlm_error"] for x in runs])
        oracle_err = np.array([x["oracle_error"] for x in runs])
        summary = {
            "row_type": "summary",
            "experiment": spec.experiment,
            "grid_index": g,
            **{k: point[k] for k in grid_cols},
            "alpha": runs[0]["alpha"],
            "update": runs[0]["update"],
            "itlm_error_mean": float(itlm_err.mean()),
            "itlm_error_median": float(np.median(itlm_err)),
            "itlm_error_std": float(itlm_err.std(ddof=1)) if itlm_err.size > 1 else 0.0,
            "itlm_error_q25": float(np.quantile(itlm_err, 0.25)),
            "itlm_error_q75": float(np.quantile(itlm_err, 0.75)),
            "oracle_error_median": float(np.median(oracle_err)),
            "oracle_error_mean": float(oracle_err.mean()),
            "oracle_error_std": float(oracle_err.std(ddof=1)) if oracle_err.size > 1 else 0.0,
            "naive_error_median": float(np.median([x["naive_error"] for x in runs])),
            "clean_recovery_ratio_mean": float(np.mean([x["clean_recovery_ratio"] for x in runs])),
        }
        if spec.experiment == "mixture_local":
            summary["rho"] = runs[0]["rho"]
            summary["sigma"] = runs[0]["sigma"]
            summary["converged_fraction"] = float(np.mean([x["converged"] for x in runs]))
        table.rows.append(summary)

    curves = None
    if spec.experiment in ("convergence", "nonlinear"):
        curves = _curve_table(spec, points, per_point_errors)
    result = SweepResult(table, curves, per_point_errors)
    if spec.output_path:
        write_sweep(result, spec)
    return result


def _curve_table(spec, points, per_point_errors):
    curves = Table(["sigma", "variant", "round", "median_error", "q25_error", "q75_error"])
    for g, point in enumerate(points):
        gen, itlm, _, variant = _resolve(spec, point)
        E = np.vstack(per_point_errors[g])
        for t in range(E.shape[1]):
            col = E[:, t]
            curves.rows.append(
                {
                    "sigma": gen.sigma,
                    "variant": variant or itlm.update.mode,
                    "round": t,
                    "median_error": float(np.median(col)),
                    "q25_error": float(np.quantile(col, 0.25)),
                    "q75_error": float(np.quantile(col, 0.75)),
                }
            )
    return curves


def convergence_curve(gen, itlm, repeats, sigmas=(0.01, 0.05, 0.1, 0.2),
                      variants=("closed_form", "full_gradient"), eta=0.3, seed=0, workers=1):
    """Per-round error quartiles for each noise level and update variant."""
    spec = SweepSpec(
        "convergence",
        grid={"sigma": list(sigmas), "variant": list(variants)},
        repeats=repeats,
        gen=gen,
        itlm=itlm,
        eta=eta,
        seed=seed,
        workers=workers,
    )
    return run_sweep(spec).curves


def mixture_local_experiment(gen, itlm, repeats, rhos=(0.0, 0.1, 0.5, 1.0), sigmas=None,
                             alpha_gap=0.05, component=0, seed=0, workers=1):
    """Fraction of runs started ``rho`` away from a component that converge to it.

    A run counts as converged when its final distance to the component is
    at most ``10 sigma + 0.01``.
    """
    grid = {"rho": list(rhos)}
    if sigmas is not None:
        grid["sigma"] = list(sigmas)
    spec = SweepSpec(
        "mixture_local",
        grid=grid,
        repeats=repeats,
        gen=gen,
        itlm=itlm,
        alpha_gap=alpha_gap,
        component=component,
        seed=seed,
        workers=workers,
    )
    summaries = [r for r in run_sweep(spec).table.rows if r["row_type"] == "summary"]
    out = Table(["rho", "sigma", "converged_fraction", "itlm_error_median"])
    for s in summaries:
        out.rows.append({k: s[k] for k in out.columns})
    return out


def _format(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def emit_csv(table, path, metadata=None):
    """Write ``table`` as UTF-8 CSV with 17-significant-digit floats.

    A ``<path>.meta.json`` sidecar records ``metadata`` together with the
    package version and the seed-splitting rule.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format(row.get(c)) for c in table.columns])
    meta = {"version": __version__, "seed_rule": SEED_RULE}
    if metadata is not None:
        meta["config"] = _jsonable(metadata)
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv(path):
    """Read a table written by :func:`emit_csv`; numeric cells come back as float."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for cells in reader:
            row = {}
            for c, v in zip(columns, cells):
                if v == "":
                    row[c] = None
                    continue
                try:
                    row[c] = float(v)
                except ValueError:
                    row[c] = v
            rows.append(row)
    return Table(columns, rows)


def write_sweep(result, spec):
    # worker count and output directory do not affect results
    meta = dataclasses.replace(spec, workers=1, output_path=os.path.basename(spec.output_path))
    emit_csv(result.table, spec.output_path, meta)
    if result.curves is not None:
        root, ext = os.path.splitext(spec.output_path)
        emit_csv(result.curves, f"{root}_curve{ext or '.csv'}", meta)
