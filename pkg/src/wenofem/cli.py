"""Command line interface: run benchmarks, convergence studies, self-tests."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .harness import (BenchmarkConfig, convergence, load_config, run,
                      serialize_config)
from .output import write_csv_table


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI config file; CLI flags override it")
    p.add_argument("--benchmark", help="benchmark id")
    p.add_argument("--space", choices=("cg", "dg"))
    p.add_argument("--scheme",
                   choices=("cc-weno", "cv-weno", "cv-weno-sc", "low-order", "none"))
    p.add_argument("--p", type=int, dest="p")
    p.add_argument("--cells", help="cells per axis, e.g. 128 or 192,48")
    p.add_argument("--dofs", type=int, help="per-axis DOF target (alternative to --cells)")
    p.add_argument("--tend", type=float, dest="t_end")
    p.add_argument("--cfl", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--output-every", type=int, default=0)
    p.add_argument("--limiter", action="store_true", default=None,
                   help="enable the positivity limiter (DG Euler)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("interp", "l2"))
    p.add_argument("--projection", choices=("l2", "scott-zhang", "lumped"))
    p.add_argument("--print-config", action="store_true",
                   help="print the effective config and exit")


def _config_from_args(args) -> BenchmarkConfig:
    if args.config:
        config = load_config(args.config)
    else:
        if not args.benchmark:
            raise SystemExit("error: --benchmark (or --config) is required")
        config = BenchmarkConfig(benchmark=args.benchmark)
    overrides = {}
    for key in ("benchmark", "space", "scheme", "p", "dofs", "t_end", "cfl",
                "out", "output_every", "limiter", "seed", "init", "projection"):
        v = getattr(args, key, None)
        if v is not None and not (key == "output_every" and v == 0):
            overrides[key] = v
    if args.cells:
        overrides["cells"] = tuple(int(c) for c in args.cells.split(","))
    return replace(config, **overrides)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    if args.print_config:
        print(serialize_config(config), end="")
        return 0
    report = run(config)
    print(report.summary())
    return 0


def cmd_convergence(args) -> int:
    config = _config_from_args(args)
    levels = [int(v) for v in args.levels.split(",")]
    rows = convergence(config, levels)
    print(f"{'cells':>8} {'h':>12} {'L1 error':>14} {'EOC':>6}")
    for cells, h, err, eoc in rows:
        eoc_s = f"{eoc:6.2f}" if eoc is not None else "     -"
        print(f"{cells:>8} {h:>12.4e} {err:>14.6e} {eoc_s}")
    if args.out:
        path = write_csv_table(f"{args.out}/convergence_{config.benchmark}.csv",
                               rows)
        print(f"wrote {path}")
    return 0


def cmd_selftest(args) -> int:
    """Quick invariant battery (a compressed version of the test suite)."""
    from . import selftest
    return selftest.run_selftest(verbose=not args.quiet)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wenofem",
        description="High-order CG/DG solver for hyperbolic conservation laws "
                    "with dissipation-based WENO stabilization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one benchmark")
    _add_run_args(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_conv = sub.add_parser("convergence", help="refinement study with EOC table")
    _add_run_args(p_conv)
    p_conv.add_argument("--levels", required=True,
                        help="comma-separated cell counts, e.g. 96,128,192")
    p_conv.set_defaults(fn=cmd_convergence)

    p_self = sub.add_parser("selftest", help="run the built-in property checks")
    p_self.add_argument("--quiet", action="store_true")
    p_self.set_defaults(fn=cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
