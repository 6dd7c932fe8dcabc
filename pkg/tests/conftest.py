from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from multiendpoint import derive_endpoints, load_trial_csv

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

REPO_ROOT = Path(__file__).resolve().parents[1]
BUNDLED_REPLICA = REPO_ROOT / "data" / "actg175_replica.csv"


@pytest.fixture(scope="session")
def actg_csv_path() -> Path:
    """The ACTG 175-shaped analysis file: a real export via $ACTG175_CSV if
    provided, otherwise the bundled calibrated replica."""
    env = os.environ.get("ACTG175_CSV")
    return Path(env) if env else BUNDLED_REPLICA


@pytest.fixture(scope="session")
def actg_raw(actg_csv_path):
    return load_trial_csv(actg_csv_path)


@pytest.fixture(scope="session")
def actg_derived(actg_raw):
    return derive_endpoints(actg_raw)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", None) != "call":
                continue
            if "test_acceptance.py" in rep.nodeid:
                rows.append((rep.nodeid.split("::")[-1], status))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(rows):
            mark = "PASS" if status == "passed" else "FAIL"
            terminalreporter.write_line(f"{mark}  {name}")
