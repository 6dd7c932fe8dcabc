"""Shared fixture-building helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np

from multiendpoint import (
    BinaryValue,
    ContinuousValue,
    EndpointKind,
    EndpointSpec,
    Group,
    Subject,
    TimeToEventValue,
    TrialDataset,
)

SURV = EndpointSpec("surv", EndpointKind.TIME_TO_EVENT, priority=1)
SCORE = EndpointSpec("score", EndpointKind.CONTINUOUS, priority=2)
FLAG = EndpointSpec("flag", EndpointKind.BINARY, priority=3)


def tte(time, event=True) -> TimeToEventValue:
    return TimeToEventValue(float(time), bool(event))


def cont(value=None) -> ContinuousValue:
    if value is None:
        return ContinuousValue.missing()
    return ContinuousValue(float(value))


def binary(value=None) -> BinaryValue:
    if value is None:
        return BinaryValue.missing()
    return BinaryValue(int(value))


def subject(sid, group, **outcomes) -> Subject:
    g = Group.TREATMENT if group in (1, "t", "treatment", Group.TREATMENT) else Group.CONTROL
    return Subject(str(sid), g, dict(outcomes))


def survival_cohort(times, events, groups) -> TrialDataset:
    """Single-endpoint time-to-event cohort."""
    subs = [
        subject(f"s{i}", g, surv=tte(t, e))
        for i, (t, e, g) in enumerate(zip(times, events, groups))
    ]
    return TrialDataset.from_subjects(subs, [SURV])


def results_equal(a, b) -> bool:
    """TestResult equality treating NaN fields as equal."""

    def feq(x, y):
        if isinstance(x, float) and isinstance(y, float):
            return (math.isnan(x) and math.isnan(y)) or x == y
        return x == y

    return (
        a.method == b.method
        and feq(a.statistic, b.statistic)
        and feq(a.variance, b.variance)
        and feq(a.z, b.z)
        and feq(a.p_two_sided, b.p_two_sided)
        and a.inference_mode == b.inference_mode
        and a.metadata == b.metadata
    )


def random_integer_cohort(rng: np.random.Generator, n: int, missing_prob: float = 0.15):
    """Random small cohort with integer-valued outcomes (keeps all downstream
    float arithmetic exact) and at least 2 complete cases per group.

    Returns (subjects, specs). Deterministic rejection sampling on the rng.
    """
    specs = [SURV, SCORE, FLAG]
    while True:
        n1 = int(rng.integers(2, n - 1))
        subs = []
        complete = {0: 0, 1: 0}
        for i in range(n):
            g = 1 if i < n1 else 0
            miss_score = rng.random() < missing_prob
            miss_flag = rng.random() < missing_prob
            subs.append(
                subject(
                    f"r{i}",
                    g,
                    surv=tte(int(rng.integers(1, 40)), bool(rng.random() < 0.7)),
                    score=cont(None if miss_score else int(rng.integers(-20, 21))),
                    flag=binary(None if miss_flag else int(rng.integers(0, 2))),
                )
            )
            if not (miss_score or miss_flag):
                complete[g] += 1
        if complete[0] >= 2 and complete[1] >= 2:
            return subs, specs
