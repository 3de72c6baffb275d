"""
Updated on 2026-10
Created on 2026-10

@author: NewtCode Anna Burova

Command line entry point `teki`.

    teki run <config> [--seed S] [--output DIR]
    teki matrix <config> [--seed S] [--output DIR]
    teki check <run_dir>
    teki forward <eikonal|darcy|linear-toy> <field.csv> [--config FILE] [--output FILE]

Exit code 0 on success, 1 on any reported error or a failed run.

Functions:
    def build_parser(
        ) -> argparse.ArgumentParser
    def main(
        argv: list[str] | None = None
        ) -> int
"""

from __future__ import annotations

import argparse

import newteki.experiment as NewtExp


def build_parser(
        ) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teki",
        description="Ensemble Kalman inversion experiments with Tikhonov regularization."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    for name, text in (("run", "Run one method/initialization arm."),
                       ("matrix", "Run all four arms on shared data.")):
        command = commands.add_parser(name, help=text)
        command.add_argument("config", help="key=value config file")
        command.add_argument("--seed", type=int, default=None, help="override the master seed")
        command.add_argument("--output", default=None, help="override output_dir")
        command.add_argument("--log", action="store_true", help="also save console output to run_log.txt")

    check = commands.add_parser("check", help="Run theory checks on a saved run.")
    check.add_argument("run_dir", help="directory with manifest.txt and trajectory.npz")

    forward = commands.add_parser("forward", help="One forward solve on a grid field.")
    forward.add_argument("model", choices=NewtExp.MODEL_KINDS)
    forward.add_argument("field", help="grid field CSV (first row n=<n>)")
    forward.add_argument("--config", default=None, help="config for geometry and boundary data")
    forward.add_argument("--output", default=None, help="file for the observation vector")

    return parser


def _overrides(
        args: argparse.Namespace
        ) -> dict[str, str]:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.output is not None:
        overrides["output_dir"] = args.output
    return overrides


def main(
        argv: list[str] | None = None
        ) -> int:
    """ ## Parse arguments, dispatch the subcommand and return the exit code. """

    args = build_parser().parse_args(argv)

    try:
        if args.command == "run":
            cfg = NewtExp.load_config(args.config, _overrides(args))
            record, _ = NewtExp.run_experiment(cfg, capture_log=args.log)
            return 1 if record.failed else 0

        if args.command == "matrix":
            cfg = NewtExp.load_config(args.config, _overrides(args))
            summary = NewtExp.run_matrix(cfg)
            return 1 if any(row["status"] != "ok" for row in summary) else 0

        if args.command == "check":
            reports = NewtExp.check_trajectory(args.run_dir)
            return 0 if all(report.passed for report in reports) else 1

        cfg = NewtExp.load_config(args.config) if args.config else None
        NewtExp.forward_once(args.model, args.field, cfg, args.output)
        return 0

    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) and exc.code != 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
