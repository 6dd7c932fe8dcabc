"""Result tables: aligned text and exactly round-tripping CSV."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .results import InferenceMode, TestResult

P_FLOOR = 1e-4


def format_p(p: float) -> str:
    """Four significant digits, with a '<0.0001' floor for tiny values."""
    if math.isnan(p):
        return "n/a"
    if p < P_FLOOR:
        return "<0.0001"
    return f"{p:.4g}"


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "n/a"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.4g}"


def results_text_table(results: Sequence[TestResult]) -> str:
    headers = ["method", "statistic", "z", "p_two_sided", "inference", "seed", "replicates"]
    rows = []
    for r in results:
        rows.append(
            [
                r.method,
                _fmt(r.statistic),
                _fmt(r.z),
                format_p(r.p_two_sided),
                r.inference_mode.value,
                str(r.metadata.get("seed", "")),
                str(r.metadata.get("replicates_used", "")),
            ]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def write_results_csv(results: Sequence[TestResult], path: str | Path) -> None:
    """Full-precision CSV; floats are written with repr so parsing recovers
    every field exactly (metadata goes through JSON)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "statistic", "variance", "z", "p_two_sided",
                    "inference_mode", "metadata"])
        for r in results:
            w.writerow(
                [
                    r.method,
                    repr(r.statistic),
                    repr(r.variance),
                    repr(r.z),
                    repr(r.p_two_sided),
                    r.inference_mode.value,
                    json.dumps(r.metadata, sort_keys=True),
                ]
            )


def read_results_csv(path: str | Path) -> list[TestResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                TestResult(
                    method=row["method"],
                    statistic=float(row["statistic"]),
                    variance=float(row["variance"]),
                    z=float(row["z"]),
                    p_two_sided=float(row["p_two_sided"]),
                    inference_mode=InferenceMode(row["inference_mode"]),
                    metadata=json.loads(row["metadata"]),
                )
            )
    return out
