#!/usr/bin/env python3
"""Run the controlled lab experiments under every router profile and
print the outcome matrix.

Each cell answers the experiment's question for that profile:
  exp1  duplicate announcement visible after a backup-link flap?
  exp2  community change visible at the collector?
  exp3  duplicate still visible when the upstream strips communities
        on egress?
  exp4  duplicate still visible when the upstream strips communities
        on ingress?
"""

from __future__ import annotations

import argparse
import csv
import sys

from bgpchurn.sim.lab import EXPERIMENTS, PROFILES, run_experiment_matrix


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", metavar="PATH", help="also write the matrix as CSV")
    args = parser.parse_args(argv)

    outcomes = run_experiment_matrix()
    width = max(len(p) for p in PROFILES) + 2
    header = "profile".ljust(width) + "  ".join(f"{e:>5}" for e in EXPERIMENTS)
    print(header)
    print("-" * len(header))
    for outcome in outcomes:
        cells = "  ".join(f"{str(v):>5}" for v in outcome.as_tuple())
        print(outcome.profile.ljust(width) + cells)

    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["profile", *EXPERIMENTS])
            for outcome in outcomes:
                writer.writerow([outcome.profile, *outcome.as_tuple()])
        print(f"\nwrote {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
