"""Command-line surface: gen, profile, curvature, partition, audit, scaling.

Exit codes: 0 success, 1 usage/IO error, 2 assertion/certificate failure,
3 budget exceeded.  Output files are written atomically (temp + rename) and
every output records the root seed in its header.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import coupling, curvature, experiments, graphs, walks
from .errors import BudgetExceededError, RwisoError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERTION = 2
EXIT_BUDGET = 3


def _write_output(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rwiso-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _add_common_flags(sub):
    sub.add_argument("--config", help="key=value config file with sections")
    sub.add_argument("--graph", help="graph spec, e.g. torus:16,16 or edgelist:PATH")
    sub.add_argument("--n", type=int, help="walk horizon")
    sub.add_argument("--lambda", dest="lam", type=float,
                     help="good-event parameter (overrides calibration)")
    sub.add_argument("--calib-c", dest="calib_c", type=float,
                     help="calibration constant C in lambda = C log(1/TV_n)")
    sub.add_argument("--seeds", type=int, help="number of coupling seeds")
    sub.add_argument("--seed", type=int, help="64-bit root seed")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), help="output format")
    sub.add_argument("--transitive-pair", dest="transitive_pair",
                     help="edge 'u,v' asserting vertex-transitivity")
    sub.add_argument("--budget", type=int, help="state/enumeration budget override")
    sub.add_argument("--audits", help="comma-separated audit names (audit command)")


def _config_from_args(args) -> experiments.ExperimentConfig:
    overrides = {
        "graph": args.graph,
        "n": args.n,
        "lambda": args.lam,
        "calib_c": args.calib_c,
        "seeds": args.seeds,
        "seed": args.seed,
        "out": args.out,
        "format": args.format,
        "transitive_pair": args.transitive_pair,
        "budget": args.budget,
        "audits": args.audits,
    }
    cfg = experiments.load_config(args.config, overrides)
    return cfg.validate()


def cmd_gen(args) -> int:
    cfg = _config_from_args(args)
    g = experiments.build_graph(cfg.graph_spec, seed=cfg.seed)
    header = f"# graph: {cfg.graph_spec}\n# root_seed: {cfg.seed}\n"
    _write_output(header + graphs.to_edge_list(g), cfg.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    cfg = _config_from_args(args)
    g = experiments.build_graph(cfg.graph_spec, seed=cfg.seed,
                                transitive_pair=cfg.transitive_pair)
    hint = cfg.transitive_pair
    if hint is None and g.vertex_count > walks.ALL_PAIRS_TV_MAX_VERTICES:
        hint = experiments.default_hint(g)
    sources = [hint[0]] if hint is not None else None
    prof = walks.full_profile(g, cfg.n, transitive_hint=hint, sources=sources)
    if cfg.format == "json":
        payload = {
            "root_seed": cfg.seed,
            "graph": cfg.graph_spec,
            "tv_mode": prof.tv_mode,
            "profile": [
                {"m": m, "tv": float(prof.tv[m]), "dstar": float(prof.dstar[m]),
                 "hstar": float(prof.hstar[m])}
                for m in range(cfg.n + 1)
            ],
        }
        _write_output(_json_text(payload), cfg.out)
    else:
        text = f"# root_seed: {cfg.seed}\n# graph: {cfg.graph_spec}\n" + prof.to_csv()
        _write_output(text, cfg.out)
    print(f"profile {cfg.graph_spec} n={cfg.n}: TV_n={float(prof.tv[cfg.n]):.6g} "
          f"D*_n={float(prof.dstar[cfg.n]):.6g} H*_n={float(prof.hstar[cfg.n]):.6g}",
          file=sys.stderr)
    return EXIT_OK


def cmd_curvature(args) -> int:
    cfg = _config_from_args(args)
    g = experiments.build_graph(cfg.graph_spec, seed=cfg.seed)
    report = curvature.curvature_report(g)
    payload = {"root_seed": cfg.seed, "graph": cfg.graph_spec, **report.to_json()}
    _write_output(_json_text(payload), cfg.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    cfg = _config_from_args(args)
    g = experiments.build_graph(cfg.graph_spec, seed=cfg.seed,
                                transitive_pair=cfg.transitive_pair)
    cert = coupling.partition_certificate(
        g, cfg.n, lam=cfg.lam, calibration_c=cfg.calib_c,
        n_seeds=cfg.seeds, root_seed=cfg.seed)
    payload = {"root_seed": cfg.seed, "graph": cfg.graph_spec, **cert.to_json()}
    _write_output(_json_text(payload), cfg.out)
    return EXIT_OK if cert.passed else EXIT_ASSERTION


def cmd_audit(args) -> int:
    cfg = _config_from_args(args)
    payload = experiments.run_audits(cfg)
    _write_output(_json_text(payload), cfg.out)
    return EXIT_OK if payload["pass"] else EXIT_ASSERTION


def cmd_scaling(args) -> int:
    cfg = _config_from_args(args)
    payload = experiments.run_scaling(cfg)
    _write_output(_json_text(payload), cfg.out)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "profile": cmd_profile,
    "curvature": cmd_curvature,
    "partition": cmd_partition,
    "audit": cmd_audit,
    "scaling": cmd_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwiso",
        description="Random-walk profiles, curvature and coupling partitions on finite graphs",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen", "emit a generated graph as an edge list"),
        ("profile", "TV / displacement / entropy profile as CSV or JSON"),
        ("curvature", "exact per-edge curvature report as JSON"),
        ("partition", "search a small-boundary partition cell certificate"),
        ("audit", "run inequality audits and aggregate pass/fail"),
        ("scaling", "power-law fits of profile columns at dyadic horizons"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _add_common_flags(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (RwisoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
