"""Command line interface.

Subcommands: ``generate``, ``fit``, ``oracle``, ``sweep``.  Every flag may
also be given in a plain ``key=value`` file passed with ``--config``;
flags on the command line take precedence.  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .datagen import CorruptionModel, GenConfig, generate, load_dataset, save_dataset
from .driver import ItlmConfig, run_itlm
from .exceptions import ConfigError, EnumerationLimitError, RankDeficiencyError
from .experiments import EXPERIMENTS, SweepSpec, Table, emit_csv, run_sweep
from .glm import LinkFunction
from .oracle import exact_trimmed_loss, regularity_constants
from .update import UpdatePolicy

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _schedule(text):
    """``"0:2,1:2"`` -> ``{0: 2, 1: 2}``."""
    out = {}
    for item in str(text).split(","):
        if item.strip():
            t, m = item.split(":")
            out[int(t)] = int(m)
    return out


GEN_OPTIONS = {
    "n": (int, 1000),
    "d": (int, 100),
    "alpha_star": (float, 0.8),
    "sigma": (float, 0.2),
    "link": (str, "identity"),
    "corruption": (str, "random_output"),
    "std": (float, 1.0),
    "c": (float, 10.0),
    "offset": (float, 0.0),
    "weights": (_floats, None),
}
ITLM_OPTIONS = {
    "alpha": (float, None),
    "rounds": (int, 10),
    "init": (str, None),
    "init_scale": (float, 1.0),
    "update": (str, "closed_form"),
    "eta": (float, 0.3),
    "M": (int, 1),
    "N": (int, None),
    "reinit": (_bool, False),
    "reinit_scale": (float, 1.0),
    "schedule": (_schedule, {}),
}
COMMANDS = {
    "generate": {**GEN_OPTIONS, "seed": (int, 0), "output": (str, None)},
    "fit": {**ITLM_OPTIONS, "input": (str, None), "seed": (int, 0), "output": (str, None)},
    "oracle": {
        "input": (str, None),
        "what": (str, "exact"),
        "alpha": (float, 0.5),
        "k": (int, None),
        "max_n": (int, 20),
        "max_subsets": (int, 200_000),
        "output": (str, None),
    },
    "sweep": {
        **GEN_OPTIONS,
        **ITLM_OPTIONS,
        "experiment": (str, None),
        "repeats": (int, 100),
        "alpha_gap": (float, 0.05),
        "rho": (float, 0.1),
        "component": (int, 0),
        "seed": (int, 0),
        "workers": (int, 1),
        "output": (str, None),
    },
}
REQUIRED = {"generate": ["output"], "fit": ["input"], "oracle": ["input"], "sweep": ["experiment", "output"]}


def build_parser():
    parser = argparse.ArgumentParser(prog="itlm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file supplying any flag")
        for key in options:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
        if name == "sweep":
            p.add_argument(
                "--grid", action="append", default=[],
                help="grid parameter as name=v1,v2,... (repeatable)",
            )
    return parser


def read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(command, args):
    """Merge defaults, config file and flags (in increasing precedence)."""
    options = COMMANDS[command]
    raw = {}
    if args.config:
        raw.update(read_config_file(args.config))
    unknown = set(raw) - set(options) - {"grid"}
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    raw.update({k: getattr(args, k) for k in options if getattr(args, k) is not None})
    out = {}
    for key, (conv, default) in options.items():
        if key in raw:
            try:
                out[key] = conv(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc
        else:
            out[key] = default
    for key in REQUIRED[command]:
        if out[key] is None:
            raise ConfigError(f"--{key.replace('_', '-')} is required")
    # a config file may list grid entries separated by ';'
    grid = raw.get("grid", "").split(";") + (getattr(args, "grid", None) or [])
    out["grid"] = [g for g in grid if g.strip()]
    return out


def _corruption(opts):
    kind = opts["corruption"]
    if kind == "none":
        return CorruptionModel.none()
    if kind == "constant":
        return CorruptionModel.constant(opts["c"])
    if kind == "adversarial":
        raise ConfigError("adversarial corruption needs theta_adv; use the Python API")
    if kind == "random_output":
        return CorruptionModel.random_output(opts["std"])
    if kind == "mixture":
        weights = opts["weights"] or [opts["alpha_star"], 1 - opts["alpha_star"]]
        return CorruptionModel.mixture(weights)
    raise ConfigError(f"unknown corruption {kind!r}")


def gen_config(opts, seed=0):
    corruption = _corruption(opts)
    alpha_star = opts["alpha_star"]
    if corruption.kind == "mixture":
        alpha_star = corruption.weights[0]
    return GenConfig(
        n=opts["n"], d=opts["d"], alpha_star=alpha_star, sigma=opts["sigma"],
        link=LinkFunction.from_string(opts["link"]), corruption=corruption, seed=seed,
    )


def itlm_config(opts, alpha, seed=0):
    policy = UpdatePolicy(
        opts["update"], eta=opts["eta"], M=opts["M"], N=opts["N"], reinit=opts["reinit"],
        reinit_scale=opts["reinit_scale"], schedule=opts["schedule"],
    )
    return ItlmConfig(
        alpha=alpha, rounds=opts["rounds"], init=opts["init"], init_scale=opts["init_scale"],
        update=policy, seed=seed,
    )


def _parse_grid(entries):
    grid = {}
    for entry in entries:
        if "=" not in entry:
            raise ConfigError(f"grid entry {entry!r} is not name=v1,v2,...")
        name, values = entry.split("=", 1)
        parsed = []
        for v in values.split(","):
            v = v.strip()
            try:
                parsed.append(int(v))
            except ValueError:
                try:
                    parsed.append(float(v))
                except ValueError:
                    parsed.append(v)
        grid[name.strip().replace("-", "_")] = parsed
    return grid


def cmd_generate(opts):
    dataset = generate(gen_config(opts, opts["seed"]))
    save_dataset(dataset, opts["output"])


def cmd_fit(opts):
    dataset = load_dataset(opts["input"])
    alpha = opts["alpha"] if opts["alpha"] is not None else 0.9
    config = itlm_config(opts, alpha, opts["seed"])
    try:
        trace = run_itlm(dataset, config)
    except RankDeficiencyError as err:
        if opts["output"] and err.trace is not None and err.trace.thetas:
            _write_trace(err.trace, opts["output"], config)
        raise
    if opts["output"]:
        _write_trace(trace, opts["output"], config)
    else:
        print(json.dumps({"theta": trace.theta.tolist(), "rounds": trace.rounds}))


def _write_trace(trace, path, config):
    rows = trace.rows()
    columns = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    emit_csv(Table(columns, rows), path, config)


def cmd_oracle(opts):
    dataset = load_dataset(opts["input"])
    if opts["what"] == "exact":
        res = exact_trimmed_loss(dataset, opts["alpha"], max_n=opts["max_n"])
        out = {
            "theta": res.theta.tolist(),
            "subset": res.subset.tolist(),
            "value": res.value,
            "n_skipped": res.n_skipped,
        }
    elif opts["what"] == "regularity":
        k = opts["k"] if opts["k"] is not None else dataset.n
        rep = regularity_constants(dataset.features, k, max_subsets=opts["max_subsets"])
        out = {
            "k": rep.k,
            "psi_minus": rep.psi_minus,
            "psi_plus": rep.psi_plus,
            "argmin_subset": rep.argmin_subset.tolist(),
            "argmax_subset": rep.argmax_subset.tolist(),
        }
    else:
        raise ConfigError(f"--what must be 'exact' or 'regularity', got {opts['what']!r}")
    text = json.dumps(out, indent=2, sort_keys=True)
    if opts["output"]:
        with open(opts["output"], "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_sweep(opts):
    if opts["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {opts['experiment']!r}; choose from {', '.join(EXPERIMENTS)}")
    gen = gen_config(opts)
    itlm = itlm_config(opts, 0.5)
    spec = SweepSpec(
        opts["experiment"],
        grid=_parse_grid(opts["grid"]),
        repeats=opts["repeats"],
        gen=gen,
        itlm=itlm,
        alpha=opts["alpha"],
        alpha_gap=opts["alpha_gap"],
        rho=opts["rho"],
        eta=opts["eta"],
        component=opts["component"],
        seed=opts["seed"],
        output_path=opts["output"],
        workers=opts["workers"],
    )
    run_sweep(spec)


HANDLERS = {"generate": cmd_generate, "fit": cmd_fit, "oracle": cmd_oracle, "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args.command, args)
        HANDLERS[args.command](opts)
    except (ConfigError, EnumerationLimitError) as err:
        print(f"itlm: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except RankDeficiencyError as err:
        print(f"itlm: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"itlm: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
