"""Command-line entry point.

    bipartite-rgd simulate   --variant multi --alpha 1 --beta 1 --L 100 --R 100 --t 500 --seed 7
    bipartite-rgd theory     --what giant --alpha 1 --beta 1 --L 1000 --R 1000 --epsilon 0.5
    bipartite-rgd experiment connectivity --alpha 1 --beta 2 --L 200 --R 200 --x 1 --replicas 400
    bipartite-rgd verify

Any flag may also come from ``--config FILE``, an INI-style document of
``key = value`` lines (a section header is optional).  Flags given on the
command line win over the file.  When ``--output`` is absent and
``BIPARTITE_RGD_OUT`` names a directory, outputs are written there.

Exit status: 0 on success, 1 when a verification gate fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

from . import experiments, oracle, samplers, theory
from .graph import Params

OUT_ENV = "BIPARTITE_RGD_OUT"

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "alpha": 1.0,
    "beta": 1.0,
    "L": 100,
    "R": 100,
    "t": None,
    "epsilon": None,
    "x": None,
    "delta": None,
    "side": "L",
    "replicas": 100,
    "seed": 0,
    "variant": None,
    "format": "json",
    "output": None,
    "what": "all",
    "workers": 1,
}

TYPES = {
    "alpha": float,
    "beta": float,
    "L": int,
    "R": int,
    "t": int,
    "epsilon": float,
    "x": float,
    "delta": float,
    "side": str,
    "replicas": int,
    "seed": int,
    "variant": str,
    "format": str,
    "output": str,
    "what": str,
    "workers": int,
}


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("model")
    g.add_argument("--alpha", type=float, help="left attachment offset (default 1)")
    g.add_argument("--beta", type=float, help="right attachment offset (default 1)")
    g.add_argument("--L", type=int, help="number of left vertices (default 100)")
    g.add_argument("--R", type=int, help="number of right vertices (default 100)")
    g.add_argument("--t", type=int, help="number of edges to add")
    g.add_argument("--epsilon", type=float, help="distance from the giant threshold, t = t_c (1+eps)(L+R)")
    g.add_argument("--x", type=float, help="scaled time t / (L+R)^(1+1/rho)")
    g.add_argument("--delta", type=float, help="exponent in t = (L+R)^(1+delta)")
    g.add_argument("--side", choices=["L", "R", "left", "right"], help="vertex side (default L)")
    g.add_argument("--variant", choices=["simple", "multi"], help="process variant")
    r = p.add_argument_group("run")
    r.add_argument("--seed", type=int, help="64-bit seed (default 0)")
    r.add_argument("--replicas", type=int, help="Monte Carlo replicas (default 100)")
    r.add_argument("--workers", type=int, help="worker processes for replicas (default 1)")
    r.add_argument("--output", help="output file path")
    r.add_argument("--format", choices=["csv", "json"], help="experiment output format (default json)")
    r.add_argument("--config", help="INI file of key = value defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipartite-rgd",
        description="Simulate and check the bipartite degree-driven random graph process.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample one trace and write it in trace format")
    _add_common(p)

    p = sub.add_parser("theory", help="print closed-form predictions as JSON")
    _add_common(p)
    p.add_argument(
        "--what",
        choices=["all", "giant", "connectivity", "isolated", "sg", "degrees"],
        help="which prediction (default all)",
    )

    p = sub.add_parser("experiment", help="run a seeded Monte Carlo campaign")
    p.add_argument("kind", choices=list(experiments.KINDS))
    _add_common(p)

    p = sub.add_parser("verify", help="run the exhaustive small-instance certificates")
    p.add_argument("--output", help="write the certificate table as JSON")
    p.add_argument("--config", help=argparse.SUPPRESS)
    return parser


def load_config(path: str) -> dict:
    text = Path(path).read_text()
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp.read_string(text)
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key not in TYPES:
                raise UsageError(f"unknown config key {key!r} in {path}")
            try:
                out[key] = TYPES[key](value)
            except ValueError:
                raise UsageError(f"config key {key!r}: cannot parse {value!r} as {TYPES[key].__name__}")
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        opts.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _params(opts) -> Params:
    try:
        return Params(opts["alpha"], opts["beta"], opts["L"], opts["R"])
    except ValueError as exc:
        raise UsageError(str(exc))


def _output_path(opts, default_name: str) -> Path | None:
    if opts.get("output"):
        return Path(opts["output"])
    out_dir = os.environ.get(OUT_ENV)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        return Path(out_dir) / default_name
    return None


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_simulate(opts) -> int:
    params = _params(opts)
    if opts["t"] is None:
        raise UsageError("simulate needs --t")
    variant = opts["variant"] or "multi"
    t = opts["t"]
    if variant == "simple":
        if t > params.left_count * params.right_count:
            raise UsageError(f"--t {t} exceeds L*R = {params.left_count * params.right_count}")
        trace = samplers.sample_simple_process(params, t, opts["seed"])
    else:
        trace = samplers.sample_multigraph_process(params, t, opts["seed"])
    _emit(trace.dumps(), _output_path(opts, f"trace-{variant}-{opts['seed']}.txt"))
    return EXIT_OK


def theory_payload(opts) -> dict:
    params = _params(opts)
    what = opts["what"]
    out: dict = {}
    if what in ("all", "giant"):
        out["t_c"] = theory.giant_threshold(params)
        if opts["epsilon"] is not None:
            if opts["epsilon"] > 0:
                out.update(theory.giant_fraction(params, opts["epsilon"]).as_dict())
            elif what == "giant":
                raise UsageError("--epsilon must be positive for the giant prediction")
    if what in ("all", "connectivity"):
        out["tau"] = theory.connectivity_threshold(params)
        if opts["x"] is not None:
            pred = theory.connectivity_prediction(params, opts["x"])
            out.update({"x": pred.x, "limit_prob": pred.limit_prob,
                        "lambda_left": pred.lambda_left, "lambda_right": pred.lambda_right})
    if what == "isolated":
        if opts["x"] is None:
            raise UsageError("--what isolated needs --x")
        out["lambda"] = theory.isolated_mean(params, opts["side"], opts["x"])
    if what in ("all", "sg"):
        out["Z"] = theory.sg_disconnect_exponent(params)
    if what == "degrees":
        if opts["t"] is None:
            raise UsageError("--what degrees needs --t")
        nb = theory.degree_model(params, opts["t"], opts["side"])
        out.update({"shape": nb.shape, "p": nb.p, "mean": nb.mean()})
    return out


def cmd_theory(opts) -> int:
    text = json.dumps(theory_payload(opts), indent=2, sort_keys=True) + "\n"
    _emit(text, _output_path(opts, f"theory-{opts['what']}.json"))
    return EXIT_OK


def cmd_experiment(kind: str, opts) -> int:
    try:
        config = experiments.ExperimentConfig(
            kind=kind,
            params=_params(opts),
            replicas=opts["replicas"],
            master_seed=opts["seed"],
            variant=opts["variant"],
            epsilon=opts["epsilon"],
            x=opts["x"],
            delta=opts["delta"],
            t=opts["t"],
            side=opts["side"],
            workers=opts["workers"],
        )
        config.steps()
    except ValueError as exc:
        raise UsageError(str(exc))
    report = experiments.run(config)
    text = report.to_csv() if opts["format"] == "csv" else report.to_json() + "\n"
    path = _output_path(opts, f"{kind}.{opts['format']}")
    _emit(text, path)
    if path is not None:
        sys.stdout.write(report.to_json() + "\n")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_verify(opts) -> int:
    results = oracle.run_certificates()
    width = max(len(r.name) for r in results)
    print(f"{'certificate':<{width}}  status  max_error  checks  seconds")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status:<6}  {r.max_error:9.2e}  {r.checks:6d}  {r.seconds:7.3f}  {r.detail}")
    if opts.get("output"):
        Path(opts["output"]).write_text(
            json.dumps([r.__dict__ for r in results], indent=2, sort_keys=True) + "\n"
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        opts = resolve(args)
        if args.command == "simulate":
            return cmd_simulate(opts)
        if args.command == "theory":
            return cmd_theory(opts)
        if args.command == "experiment":
            return cmd_experiment(args.kind, opts)
        return cmd_verify(opts)
    except (UsageError, FileNotFoundError, configparser.Error) as exc:
        parser.print_usage(sys.stderr)
        print(f"bipartite-rgd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def parse_and_dispatch(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
