#!/usr/bin/env python3
"""Run one lab experiment, export the collector capture as MRT, and
classify the resulting stream; the round trip exercises the simulator,
the codec and the classifier in one pass.

Example:
    python3 scripts/simulate_and_classify.py --experiment exp2 \
        --profile default-forwarding --out /tmp/lab
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from bgpchurn.classify import classify_stream
from bgpchurn.model import expand_stream
from bgpchurn.mrt.codec import read_mrt_stream, write_mrt_stream
from bgpchurn.sim.export import capture_to_mrt_entries, write_log_jsonl
from bgpchurn.sim.lab import EXPERIMENTS, PROFILES, run_experiment


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--experiment", choices=sorted(EXPERIMENTS), default="exp2")
    parser.add_argument("--profile", choices=sorted(PROFILES), default="default-forwarding")
    parser.add_argument("--out", metavar="DIR", help="keep the capture artifacts here")
    args = parser.parse_args(argv)

    sim, log = run_experiment(args.experiment, PROFILES[args.profile])
    mrt_entries = capture_to_mrt_entries(sim, log, "X1", "C1")
    print(f"{args.experiment} under {args.profile}: "
          f"{len(log.entries)} simulator messages, "
          f"{len(mrt_entries)} at the collector edge")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        mrt_path = out / f"{args.experiment}_collector.mrt"
        write_mrt_stream(mrt_entries, mrt_path)
        write_log_jsonl(log, out / f"{args.experiment}_capture.jsonl")
        entries = read_mrt_stream(mrt_path)  # classify what landed on disk
    else:
        entries = iter(mrt_entries)

    records = expand_stream(entries, "lab")
    for labeled in classify_stream(records):
        rec = labeled.record
        comms = " ".join(f"{c >> 16}:{c & 0xFFFF}" for c in rec.communities())
        print(f"  t={rec.arrival_us / 1e6:10.3f}  {rec.prefix:<18} "
              f"{labeled.label.value:<7} path={'-'.join(map(str, rec.path_elements()))} "
              f"communities=[{comms}]")
    if args.out:
        print(f"artifacts in {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
