"""Command-line front door.

Subcommands: solve, verify, figure1, sweep, orbit. Flag values override the
JSON config file given with --config; BBDYN_OUT_DIR is the output-directory
fallback when --out-dir is absent.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BBDynError, InputError, NumericError
from .harness import (
    ExperimentConfig,
    cmd_figure1,
    cmd_orbit,
    cmd_solve,
    cmd_sweep,
    cmd_verify,
)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "figure1": cmd_figure1,
    "sweep": cmd_sweep,
    "orbit": cmd_orbit,
}


def _csv_floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed_list(text: str) -> list:
    """Either comma-separated seeds '0,3,7' or an inclusive-exclusive range '0:20'."""
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi)))
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed spec {text!r}") from exc


def _add_shared(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--spectrum", type=_csv_floats, default=None,
                     help="ascending eigenvalues, e.g. 0.001,0.01,0.1,1 (identity eigenbasis)")
    sub.add_argument("--problem-file", default=None, help="JSON problem file")
    sub.add_argument("--seed", type=int, default=None, help="single seed (default 0)")
    sub.add_argument("--seeds", type=_seed_list, default=None,
                     help="seed list '0,1,2' or range '0:20'; overrides --seed")
    sub.add_argument("--iters", type=int, default=None, help="iteration budget")
    sub.add_argument("--tol", type=float, default=None, help="relative gradient tolerance")
    sub.add_argument("--solver", choices=("bb", "sd", "both"), default=None)
    sub.add_argument("--out-dir", default=None, help="output directory (env BBDYN_OUT_DIR is the fallback)")
    sub.add_argument("--format", dest="formats", action="append", choices=("csv", "json"),
                     default=None, help="output format; repeatable")
    sub.add_argument("--config", default=None, help="JSON config file; flags override it")
    sub.add_argument("--init", default=None, help="initial-point scheme (uniform01)")
    sub.add_argument("--worst-case", action="store_true", default=None,
                     help="start from the slow two-mode initializer instead of a random point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbdyn",
        description="Barzilai-Borwein dynamics: solvers, coefficient simulation, "
                    "and mechanical certification of the convergence bounds.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="run BB and/or SD, writing trajectories")
    verify = subs.add_parser("verify", help="run BB and certify every inequality family")
    figure1 = subs.add_parser("figure1", help="the 4-d coefficient-trajectory preset")
    sweep = subs.add_parser("sweep", help="condition-number grid of empirical rates")
    orbit = subs.add_parser("orbit", help="two-mode worst-case orbit, exact or float")
    for sub in (solve, verify, figure1, sweep, orbit):
        _add_shared(sub)
    sweep.add_argument("--kappas", type=_csv_floats, default=None,
                       help="condition numbers, e.g. 10,100,1000")
    sweep.add_argument("--n", dest="dim", type=int, default=None, help="problem dimension")
    orbit.add_argument("--lam-lo", type=float, default=None)
    orbit.add_argument("--lam-hi", type=float, default=None)
    mode = orbit.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=None,
                      help="exact rational arithmetic (default)")
    mode.add_argument("--float", dest="exact", action="store_false", default=None,
                      help="binary64 arithmetic, recording symmetry break")
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise InputError("config file must hold a JSON object")
        for key, value in file_values.items():
            if not hasattr(cfg, key):
                raise InputError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    overrides = {
        "spectrum": args.spectrum,
        "problem_file": args.problem_file,
        "iters": args.iters,
        "tol": args.tol,
        "solver": args.solver,
        "out_dir": args.out_dir,
        "formats": args.formats,
        "init": args.init,
        "worst_case_preset": args.worst_case,
        "kappas": getattr(args, "kappas", None),
        "dim": getattr(args, "dim", None),
        "lam_lo": getattr(args, "lam_lo", None),
        "lam_hi": getattr(args, "lam_hi", None),
        "exact": getattr(args, "exact", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.seeds is not None:
        cfg.seeds = args.seeds
    elif args.seed is not None:
        cfg.seeds = [args.seed]
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        cfg = _merge_config(args)
        _, code = _COMMANDS[args.command](cfg)
        return code
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, BBDynError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
