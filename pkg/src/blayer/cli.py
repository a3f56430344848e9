"""Command-line interface for the benchmark runners.

Every run writes a ``summary.txt`` into the output directory, even when
it fails; failures carry a category (config, geometry, solver or
acceptance) so batch drivers can triage them.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench
from .io import ConfigError, read_config, write_summary
from .nurbs import GeometryError
from .solve import SolverError


def _add_common(sub):
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker count for ladder levels (results are "
                          "identical to a serial run)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for the optimization-based offset solver")
    sub.add_argument("--strict", action="store_true",
                     help="exit nonzero when any acceptance check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blayer",
        description="boundary-layer meshing and embedded-contact benchmarks")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("offset-validate",
                        help="offset accuracy for the validation geometries")
    s.add_argument("--geometry", default="curve",
                   help="curve | surface | path to a patch file")
    s.add_argument("--distances", default=None,
                   help="comma-separated offset distances")
    _add_common(s)

    s = subs.add_parser("patch-test",
                        help="uniform-stress patch tests")
    s.add_argument("--variant", default="all",
                   choices=["all", "straight", "inclined", "curved"])
    _add_common(s)

    s = subs.add_parser("bending-beam",
                        help="embedded beam under end moments")
    s.add_argument("--configuration", type=int, default=0,
                   help="1, 2 or 3; 0 runs all three and the comparisons")
    _add_common(s)

    s = subs.add_parser("convergence-block",
                        help="h-convergence of the embedded block")
    s.add_argument("--levels", default=None,
                   help="comma-separated tangent span counts")
    _add_common(s)

    s = subs.add_parser("hertz", help="cylinder-on-plane contact ladder")
    s.add_argument("--load", type=float, default=0.3)
    s.add_argument("--levels", type=int, default=None)
    _add_common(s)

    s = subs.add_parser("run", help="run a benchmark from a config file")
    s.add_argument("config", help="path to an INI config file")
    _add_common(s)

    return parser


def _dispatch(args) -> dict:
    """Build the config and run the selected benchmark."""
    if args.command == "run":
        name, cfg = bench.config_from_tree(read_config(args.config))
        if args.out:
            cfg.out = args.out
        if name == "patch-test":
            return bench.run_patch_test(cfg)
        return bench.BENCHMARKS[name][1](cfg)

    out = args.out
    if args.command == "offset-validate":
        cfg = bench.OffsetValidateConfig(geometry=args.geometry,
                                         seed=args.seed)
        if args.distances:
            cfg.distances = args.distances
        if out:
            cfg.out = out
        return bench.run_offset_validate(cfg)
    if args.command == "patch-test":
        if args.variant == "all":
            return bench.run_patch_test_suite(out or "out/patch-test")
        cfg = bench.PatchTestConfig(variant=args.variant)
        if out:
            cfg.out = out
        return bench.run_patch_test(cfg)
    if args.command == "bending-beam":
        if args.configuration == 0:
            return bench.run_bending_beam_suite(out or "out/bending-beam")
        cfg = bench.BendingBeamConfig(configuration=args.configuration)
        if out:
            cfg.out = out
        return bench.run_bending_beam(cfg)
    if args.command == "convergence-block":
        cfg = bench.ConvergenceBlockConfig()
        if args.levels:
            cfg.levels = args.levels
        if out:
            cfg.out = out
        return bench.run_convergence_block(cfg)
    if args.command == "hertz":
        cfg = bench.HertzConfig(load=args.load)
        if args.levels:
            cfg.levels = args.levels
        if out:
            cfg.out = out
        return bench.run_hertz(cfg)
    raise ConfigError(f"unknown command {args.command!r}")


_CATEGORIES = [(ConfigError, "config"), (SolverError, "solver"),
               (GeometryError, "geometry")]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.random.seed(args.seed)
    out = args.out or os.path.join("out", args.command)
    try:
        result = _dispatch(args)
    except tuple(c for c, _ in _CATEGORIES) as exc:
        category = next(n for c, n in _CATEGORIES if isinstance(exc, c))
        os.makedirs(out, exist_ok=True)
        write_summary(os.path.join(out, "summary.txt"), args.command,
                      "error", {}, {"error": str(exc)},
                      failure_category=category)
        print(f"error ({category}): {exc}", file=sys.stderr)
        return 2
    checks = result.get("checks", {})
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    for name, value in result.get("metrics", {}).items():
        print(f"       {name} = {value}")
    failed = not all(checks.values())
    if failed:
        print("acceptance checks failed", file=sys.stderr)
    return 1 if (failed and args.strict) else 0


if __name__ == "__main__":
    sys.exit(main())
