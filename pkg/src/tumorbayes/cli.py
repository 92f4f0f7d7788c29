"""Command-line entry point.

Subcommands:
    forward  solve the PDE at the configured truth and dump snapshots
    synth    synthesize observation data only
    invert   full experiment: data, K-chain ensemble, tables, histograms
    mconv    posterior-convergence study over a list of m values

Exit codes: 0 success, 1 config/validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    resolve_config,
    run_experiment,
    run_forward_only,
    run_m_convergence,
    run_synth_only,
)
from .solver import SolverError


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True,
                     help="config file path or builtin name (test1a, test1b, "
                          "test2, test3, mconv_small)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the master seed from the config")
    sub.add_argument("--out", default=None, help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tumorbayes",
        description="Bayesian inversion of porous-medium tumor growth models")
    subs = parser.add_subparsers(dest="command", required=True)

    p_fwd = subs.add_parser("forward", help="forward solve + snapshot dump")
    _add_common(p_fwd)

    p_synth = subs.add_parser("synth", help="synthetic data generation")
    _add_common(p_synth)

    p_inv = subs.add_parser("invert", help="full inversion experiment")
    _add_common(p_inv)
    p_inv.add_argument("--paper-scale", action="store_true",
                       help="restore the publication-scale chain length and "
                            "run count from the config")
    p_inv.add_argument("--dry-run", action="store_true",
                       help="config echo and data synthesis only, no chains")

    p_mconv = subs.add_parser("mconv", help="posterior convergence in m")
    _add_common(p_mconv)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "forward":
            sol, manifest = run_forward_only(config, out_dir=args.out)
            print(f"forward solve: {sol.steps} steps, "
                  f"{len(sol.densities)} snapshots, "
                  f"clamped mass {sol.clamped_mass:.3e}")
            for path in manifest:
                print(path)
        elif args.command == "synth":
            report = run_synth_only(config, out_dir=args.out, seed=args.seed)
            print(f"experiment {report.experiment_id}: wrote "
                  f"{len(report.manifest)} files")
            for path in report.manifest:
                print(path)
        elif args.command == "invert":
            report = run_experiment(config, out_dir=args.out,
                                    paper_scale=args.paper_scale,
                                    dry_run=args.dry_run, seed=args.seed)
            print(f"experiment {report.experiment_id}: {len(report.rows)} "
                  f"sweep cells in {report.runtime:.1f}s")
            for row in report.rows:
                print("  " + ", ".join(f"{k}={_short(v)}" for k, v in row.items()))
        elif args.command == "mconv":
            reports, l1_rows, _ = run_m_convergence(config, out_dir=args.out,
                                                    seed=args.seed)
            print("m1,m2,N,Z1,Z2,dH,SE")
            for rep in reports:
                print(rep.csv_row())
            print("m1,m2,l1")
            for m1, m2, l1 in l1_rows:
                print(f"{m1:g},{m2:g},{l1:.6g}")
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
