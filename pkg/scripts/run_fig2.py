#!/usr/bin/env python3
"""Run the grid outage experiment with the shipped defaults.

Usage: python scripts/run_fig2.py [OUT_DIR] [--snapshots N] [--jobs J]
"""

import argparse

from hetsim.config import fig2_defaults
from hetsim.harness import experiment_fig2
from hetsim.report import emit_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="results/fig2")
    ap.add_argument("--snapshots", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = fig2_defaults()
    if args.snapshots:
        cfg.snapshots = args.snapshots
    report = experiment_fig2(cfg.validate(), jobs=args.jobs)
    paths = emit_report(report, args.out)
    print(f"wrote {paths['csv']}")
    for row in report.rows:
        print(
            f"n={row.sweep_value} alg={row.algorithm:8s} "
            f"hpue_outage={row.hpue_outage:.4f} lpue_outage={row.lpue_outage:.4f}"
        )


if __name__ == "__main__":
    main()
