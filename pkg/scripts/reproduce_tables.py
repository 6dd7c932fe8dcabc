#!/usr/bin/env python3
"""Reproduce the baseline-characteristics and significance tables.

Runs the CLI twice against the bundled replica (or a real export via
$ACTG175_CSV): a `summarize` pass for the baseline table and an `analyze`
pass with B=10,000 permutation replicates for the four-method results table.
Outputs land in results/tables/.

    python3 scripts/reproduce_tables.py [--replicates B] [--seed S]
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from multiendpoint.cli import main as cli_main  # noqa: E402


def run() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicates", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=20240201)
    ap.add_argument("--out", default=str(ROOT / "results" / "tables"))
    args = ap.parse_args()

    data = os.environ.get("ACTG175_CSV", str(ROOT / "data" / "actg175_replica.csv"))
    code = cli_main(["summarize", "--input", data, "--out", args.out])
    if code != 0:
        return code
    return cli_main(
        [
            "analyze",
            "--input", data,
            "--methods", "rank_sum,fs,win_ratio,multirank",
            "--replicates", str(args.replicates),
            "--seed", str(args.seed),
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
