"""Hierarchical pairwise comparison of subjects.

``compare_pair`` is the scalar reference rule; ``verdict_matrix`` is the
vectorized production path used by the O(N^2) sweeps. Property tests assert
the two agree, so keep any rule change mirrored in both.

Survival-level determinacy is Gehan-style: subject a beats subject b only
when b's event was observed and a's follow-up time strictly exceeds b's
event time. Equal observed event times, or two censored subjects, are
indeterminate and the walk proceeds to the next level.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import HierarchyMismatchError
from .trial_data import (
    Direction,
    EndpointKind,
    EndpointSpec,
    Subject,
    TimeToEventValue,
    TrialDataset,
    validate_hierarchy,
)


class Verdict(IntEnum):
    LOSS = -1
    TIE = 0
    WIN = 1


@dataclass(frozen=True)
class ComparisonOutcome:
    verdict: Verdict
    decided_at_level: int | None

    def __post_init__(self):
        if (self.verdict is Verdict.TIE) != (self.decided_at_level is None):
            raise ValueError("decided_at_level must be None exactly when the verdict is a tie")


def _compare_survival(a: TimeToEventValue, b: TimeToEventValue) -> int:
    if b.event_observed and a.time > b.time:
        return 1
    if a.event_observed and b.time > a.time:
        return -1
    return 0


def _compare_value(a, b, direction: Direction) -> int:
    if not (a.present and b.present):
        return 0
    if a.value == b.value:
        return 0
    better = a.value > b.value
    if direction is Direction.LOWER_IS_BETTER:
        better = not better
    return 1 if better else -1


def compare_pair(
    a: Subject, b: Subject, hierarchy: Sequence[EndpointSpec]
) -> ComparisonOutcome:
    """Walk the hierarchy in priority order and return the first determinate
    verdict from a's perspective; missing values leave a level indeterminate."""
    ordered = validate_hierarchy(hierarchy)
    for spec in ordered:
        for subj in (a, b):
            if spec.name not in subj.outcomes:
                raise HierarchyMismatchError(
                    f"subject {subj.id!r} lacks outcome for endpoint {spec.name!r}"
                )
    for spec in ordered:
        va = a.outcomes[spec.name]
        vb = b.outcomes[spec.name]
        if spec.kind is EndpointKind.TIME_TO_EVENT:
            s = _compare_survival(va, vb)
        else:
            s = _compare_value(va, vb, spec.direction)
        if s:
            return ComparisonOutcome(Verdict(s), spec.priority)
    return ComparisonOutcome(Verdict.TIE, None)


def _level_matrix(ds: TrialDataset, spec: EndpointSpec) -> np.ndarray:
    """Signed int8 matrix for one hierarchy level: entry (i, j) is the verdict
    of subject i versus subject j at that level."""
    if spec.kind is EndpointKind.TIME_TO_EVENT:
        t = ds.times(spec.name)
        e = ds.events_observed(spec.name)
        wins = (t[:, None] > t[None, :]) & e[None, :]
        return wins.astype(np.int8) - wins.T.astype(np.int8)
    v = ds.values(spec.name)
    p = ds.present(spec.name)
    both = p[:, None] & p[None, :]
    gt = (v[:, None] > v[None, :]) & both
    s = gt.astype(np.int8) - gt.T.astype(np.int8)
    if spec.direction is Direction.LOWER_IS_BETTER:
        s = -s
    return s


def verdict_matrix(
    ds: TrialDataset, hierarchy: Sequence[EndpointSpec] | None = None
) -> np.ndarray:
    """N x N int8 matrix of hierarchy verdicts; entry (i, j) = +1 when i beats j.

    Antisymmetric with zero diagonal.
    """
    ordered = validate_hierarchy(hierarchy if hierarchy is not None else ds.endpoint_specs)
    for spec in ordered:
        if not ds.has_endpoint(spec.name):
            raise HierarchyMismatchError(f"dataset lacks endpoint {spec.name!r}")
    out = np.zeros((ds.n, ds.n), dtype=np.int8)
    undecided = np.ones((ds.n, ds.n), dtype=bool)
    for spec in ordered:
        level = _level_matrix(ds, spec)
        newly = undecided & (level != 0)
        out[newly] = level[newly]
        undecided &= level == 0
        if not undecided.any():
            break
    np.fill_diagonal(out, 0)
    return out


def pairwise_score_vector(
    ds: TrialDataset, hierarchy: Sequence[EndpointSpec] | None = None
) -> np.ndarray:
    """Per-subject net score u_i = sum over j != i of the (i, j) verdict."""
    return verdict_matrix(ds, hierarchy).sum(axis=1, dtype=np.int64)


def gehan_score_vector(times: np.ndarray, events: np.ndarray) -> np.ndarray:
    """Censoring-aware survival score: (# subjects determinately outlived)
    minus (# subjects who determinately outlive this one)."""
    t = np.asarray(times, dtype=np.float64)
    e = np.asarray(events, dtype=bool)
    wins = (t[:, None] > t[None, :]) & e[None, :]
    return wins.sum(axis=1, dtype=np.int64) - wins.sum(axis=0, dtype=np.int64)
