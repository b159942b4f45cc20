"""Command-line entry point.

Subcommands ``fig1``, ``fig2``, ``table``, ``verify`` and ``sweep`` each read a
JSON config (the built-in reference setup when ``--config`` is omitted) and
write CSV/JSON artifacts to the output directory.

Exit codes: 0 success, 1 verification failures, 2 invalid configuration,
3 numerical convergence failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace

from .config import OUTPUT_ENV, ExperimentConfig, load_config, reference_config
from .errors import ConfigError, ConvergenceError, DomainError, FarFieldWarning
from .harness import cmd_fig1, cmd_fig2, cmd_sweep, cmd_table, cmd_verify

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (default: built-in reference)")
    common.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV}, then config, then ./out)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for lattice evaluation")
    common.add_argument(
        "--resolution-check",
        action="store_true",
        help="recompute at doubled resolution and fail (exit 3) if any scalar drifts by >= 1e-8",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="weaktime", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fig1", parents=[common], help="arrival-time distribution, exact vs Gaussian estimate")
    sub.add_parser("fig2", parents=[common], help="weak-momentum deviations, exact vs steepest descent")
    sub.add_parser("table", parents=[common], help="time-averaged moments, uncertainty products, commutator")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    sw = sub.add_parser("sweep", parents=[common], help="table for each width parameter")
    sw.add_argument("--gammas", type=float, nargs="+", help="width parameters (default: config sweep_gammas)")
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else reference_config()
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg = replace(cfg, scenario=cfg.scenario.with_controls(workers=args.threads))
    return cfg


def _print_table(record) -> None:
    s = record.summary
    rows = [
        ("time-averaged weak momentum", s["mean_p"]),
        ("weak momentum std dev", s["std_p"]),
        ("arrival-time momentum", record.arrival_momentum),
        ("<H>", s["mean_H"]),
        ("<dH dH*>", s["var_H"]),
        ("<t>", s["mean_t"]),
        ("<dt^2>", s["var_t"]),
        ("<t^2><HH*>", s["product_second_moment"]),
        ("sqrt(<dt^2><dH dH*>)", s["product_stddev"]),
        ("stddev bound rhs", s["bound_rhs"]),
        ("Im commutator", s["commutator"][1]),
        ("N(x)", record.normalization),
    ]
    for label, value in rows:
        drift = record.resolution.get(_drift_key(label), {}).get("rel_drift") if record.resolution else None
        extra = f"   drift {drift:.1e}" if drift is not None else ""
        print(f"{label:32s} {value:.6g}{extra}")


def _drift_key(label):
    return {
        "time-averaged weak momentum": "mean_p",
        "weak momentum std dev": "std_p",
        "arrival-time momentum": "arrival_momentum",
        "<H>": "mean_H",
        "<dH dH*>": "var_H",
        "<t>": "mean_t",
        "<dt^2>": "var_t",
        "<t^2><HH*>": "product_second_moment",
        "sqrt(<dt^2><dH dH*>)": "product_stddev",
        "stddev bound rhs": "bound_rhs",
        "Im commutator": "commutator_im",
        "N(x)": "normalization",
    }[label]


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=file or sys.stderr)


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("default", FarFieldWarning)
        warnings.showwarning = _show_warning
        return _dispatch(args)


def _dispatch(args) -> int:
    try:
        cfg = _load(args)
        out = cfg.resolve_output_dir(args.out)
        rc = args.resolution_check
        if args.command == "fig1":
            print(cmd_fig1(cfg, out, resolution_check=rc))
        elif args.command == "fig2":
            print(cmd_fig2(cfg, out, resolution_check=rc))
        elif args.command == "table":
            record, path = cmd_table(cfg, out, resolution_check=True, enforce=rc)
            _print_table(record)
            print(path)
        elif args.command == "sweep":
            gammas = args.gammas or list(cfg.sweep_gammas) or [cfg.scenario.state.gamma]
            records, path = cmd_sweep(cfg, gammas, out, resolution_check=True, enforce=rc)
            for g, r in zip(gammas, records):
                print(f"gamma={g:g}: mean_p={r.summary['mean_p']:.6g} std_p={r.summary['std_p']:.6g} "
                      f"p_bar={r.arrival_momentum:.6g}")
            print(path)
        elif args.command == "verify":
            checks, path = cmd_verify(cfg, out, resolution_check=True)
            for c in checks:
                print(c.line())
            print(path)
            if not all(c.passed for c in checks):
                return EXIT_CHECKS
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())
