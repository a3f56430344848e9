#!/usr/bin/env python3
"""Run every benchmark end to end and print a verdict table.

Results (CSV tables, VTK fields, summaries) are written under --out.
The contact ladder is the expensive part; expect several minutes total
on one core.
"""

import argparse
import time

from blayer.bench import (
    ConvergenceBlockConfig,
    HertzConfig,
    HertzSelectiveConfig,
    OffsetValidateConfig,
    run_bending_beam_suite,
    run_convergence_block,
    run_hertz,
    run_hertz_selective,
    run_offset_validate,
    run_patch_test_suite,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/all", help="output directory root")
    args = ap.parse_args()
    out = args.out

    jobs = [
        ("offset-validate (curve)",
         lambda: run_offset_validate(OffsetValidateConfig(
             out=f"{out}/offset-curve"))),
        ("offset-validate (surface)",
         lambda: run_offset_validate(OffsetValidateConfig(
             geometry="surface", out=f"{out}/offset-surface"))),
        ("patch-test suite",
         lambda: run_patch_test_suite(out=f"{out}/patch-test")),
        ("bending-beam suite",
         lambda: run_bending_beam_suite(out=f"{out}/bending-beam")),
        ("convergence-block",
         lambda: run_convergence_block(ConvergenceBlockConfig(
             out=f"{out}/convergence-block"))),
        ("hertz ladder",
         lambda: run_hertz(HertzConfig(out=f"{out}/hertz"))),
        ("hertz selective",
         lambda: run_hertz_selective(HertzSelectiveConfig(
             out=f"{out}/hertz-selective"))),
    ]
    failures = 0
    for name, job in jobs:
        t0 = time.monotonic()
        res = job()
        dt = time.monotonic() - t0
        checks = res.get("checks", {})
        ok = all(checks.values()) if checks else True
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:28s} {dt:7.1f}s")
        for key, val in checks.items():
            if not val:
                print(f"      failed: {key}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
