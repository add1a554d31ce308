#!/usr/bin/env python3
"""Run the disc spectral-efficiency experiment with the shipped defaults.

Usage: python scripts/run_fig3.py [OUT_DIR] [--snapshots N] [--jobs J]
"""

import argparse

from hetsim.config import fig3_defaults
from hetsim.harness import experiment_fig3
from hetsim.report import emit_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="results/fig3")
    ap.add_argument("--snapshots", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = fig3_defaults()
    if args.snapshots:
        cfg.snapshots = args.snapshots
    report = experiment_fig3(cfg.validate(), jobs=args.jobs)
    paths = emit_report(report, args.out)
    print(f"wrote {paths['csv']}")
    for row in report.rows:
        print(
            f"n={row.sweep_value:3d} scheme={row.scheme:9s} "
            f"spectral_eff={row.spectral_eff_bps_hz:.4f} bps/Hz"
        )


if __name__ == "__main__":
    main()
