#!/usr/bin/env python3
"""Regenerate the extremity-width analytics CSVs (trajectories, convergence
grid, removal pmf, Monte-Carlo band) into one output directory.

Everything goes through the `meg` CLI so the artifacts are byte-identical to
what a by-hand invocation produces, seeds included in the file names.
"""

import argparse
import sys

from meg.cli import main as meg

JOBS = [
    # plateau approach from 3x the per-round injection, d = 5
    ["width", "expect", "--u0", "30", "--d", "5", "--k", "10", "--rounds", "40"],
    ["width", "expect", "--u0", "45", "--d", "5", "--k", "15", "--rounds", "40"],
    ["width", "expect", "--u0", "60", "--d", "5", "--k", "20", "--rounds", "40"],
    # settling-time grid over parent counts, both activity levels
    ["width", "rounds", "--d", "2..10", "--k", "10", "--u0-mult", "100"],
    ["width", "rounds", "--d", "2..10", "--k", "100", "--u0-mult", "100"],
    # one-round removal distribution at the worked example
    ["width", "pmf", "--u", "6", "--d", "2", "--k", "3"],
    # sampled trajectory with a 95% band against the mean-field curve
    ["width", "montecarlo", "--u0", "30", "--d", "5", "--k", "10",
     "--rounds", "40", "--trials", "2000", "--seed", "0"],
]


def run(out_dir: str) -> int:
    for job in JOBS:
        code = meg(job + ["--out", out_dir])
        if code != 0:
            print(f"failed ({code}): {' '.join(job)}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    args = parser.parse_args()
    sys.exit(run(args.out))
