"""Seeded label-permutation inference engine.

Every replicate's labels are derived only from ``(master_seed, replicate
index)``, so results are bit-identical no matter how the replicate range is
partitioned across workers or chunks. Two-sided extremeness is measured by
|T| against the observed |T| (never by doubling a tail), which stays well
defined for asymmetric null distributions. The Monte Carlo p-value uses the
add-one convention (1 + #extreme) / (B + 1) and is therefore always > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations, islice
from typing import Callable, Iterator

import numpy as np

from .errors import ExactTooLargeError
from .trial_data import TrialDataset

_MASK64 = (1 << 64) - 1

DEFAULT_REPLICATES = 10_000
DEFAULT_EXACT_CAP = 200_000
DEFAULT_BLOCK_SIZE = 1_024

MODE_MONTE_CARLO = "monte_carlo"
MODE_EXACT = "exact"


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_replicate_seed(master_seed: int, replicate_index: int) -> int:
    """Deterministic, platform-independent per-replicate seed.

    Injective in ``replicate_index`` for a fixed master seed: the index is
    added to a mixed master (a 64-bit bijection) and passed through another
    bijective mix.
    """
    if replicate_index < 0:
        raise ValueError("replicate_index must be >= 0")
    inner = (_splitmix64(master_seed & _MASK64) + replicate_index) & _MASK64
    return _splitmix64(inner)


@dataclass(frozen=True)
class PermutationPlan:
    """How to resample: Monte Carlo with B replicates, or exact enumeration
    of all C(N, n1) label assignments (only allowed under ``exact_cap``).
    Sidedness is fixed two-sided."""

    mode: str = MODE_MONTE_CARLO
    replicates: int = DEFAULT_REPLICATES
    master_seed: int = 0
    exact_cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self):
        if self.mode not in (MODE_MONTE_CARLO, MODE_EXACT):
            raise ValueError(f"unknown permutation mode {self.mode!r}")
        if self.mode == MODE_MONTE_CARLO and self.replicates < 1:
            raise ValueError("replicate count must be >= 1")

    @classmethod
    def monte_carlo(cls, replicates: int = DEFAULT_REPLICATES, seed: int = 0) -> "PermutationPlan":
        return cls(MODE_MONTE_CARLO, replicates, seed)

    @classmethod
    def exact(cls, cap: int = DEFAULT_EXACT_CAP) -> "PermutationPlan":
        return cls(MODE_EXACT, exact_cap=cap)

    def with_seed(self, seed: int) -> "PermutationPlan":
        return replace(self, master_seed=seed)


def n_assignments(plan: PermutationPlan, n: int, n1: int) -> int:
    if plan.mode == MODE_MONTE_CARLO:
        return plan.replicates
    total = math.comb(n, n1)
    if total > plan.exact_cap:
        raise ExactTooLargeError(
            f"C({n}, {n1}) = {total} exceeds the exact-enumeration cap {plan.exact_cap}"
        )
    return total


def iter_label_blocks(
    plan: PermutationPlan,
    group_codes: np.ndarray,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> Iterator[np.ndarray]:
    """Yield (b, N) int8 blocks of group-size-preserving label assignments.

    Monte Carlo: replicate b's labels are a permutation of ``group_codes``
    drawn from a generator seeded by ``derive_replicate_seed(master_seed, b)``.
    Exact: every treatment index set, in ``itertools.combinations`` order.
    """
    base = np.asarray(group_codes, dtype=np.int8)
    n = base.size
    n1 = int(base.sum())
    total = n_assignments(plan, n, n1)

    if plan.mode == MODE_MONTE_CARLO:
        done = 0
        while done < total:
            b = min(block_size, total - done)
            block = np.empty((b, n), dtype=np.int8)
            for k in range(b):
                rng = np.random.default_rng(derive_replicate_seed(plan.master_seed, done + k))
                block[k] = rng.permutation(base)
            yield block
            done += b
    else:
        combos = combinations(range(n), n1)
        while True:
            chunk = list(islice(combos, block_size))
            if not chunk:
                return
            block = np.zeros((len(chunk), n), dtype=np.int8)
            for k, treat_idx in enumerate(chunk):
                block[k, list(treat_idx)] = 1
            yield block


@dataclass(frozen=True)
class PermutationResult:
    p: float
    observed: float
    replicates_used: int
    mode: str
    n_extreme: int
    n_nonfinite: int
    null_mean: float
    null_sd: float
    master_seed: int


def pvalue_from_draws(
    observed: float, draws: np.ndarray, plan: PermutationPlan
) -> PermutationResult:
    """Apply the engine's counting conventions to a vector of null draws.

    Non-finite draws are counted as extreme and flagged; a NaN observed
    statistic (fully degenerate data) makes every draw extreme, so p = 1.
    """
    draws = np.asarray(draws, dtype=np.float64)
    nonfinite = ~np.isfinite(draws)
    if math.isnan(observed):
        extreme = np.ones_like(draws, dtype=bool)
    else:
        extreme = np.abs(draws) >= abs(observed)
        extreme |= np.isnan(draws)
    n_extreme = int(extreme.sum())
    total = draws.size
    if plan.mode == MODE_MONTE_CARLO:
        p = (1 + n_extreme) / (total + 1)
    else:
        p = n_extreme / total
    finite = draws[np.isfinite(draws)]
    return PermutationResult(
        p=float(p),
        observed=float(observed),
        replicates_used=total,
        mode=plan.mode,
        n_extreme=n_extreme,
        n_nonfinite=int(nonfinite.sum()),
        null_mean=float(finite.mean()) if finite.size else math.nan,
        null_sd=float(finite.std(ddof=1)) if finite.size > 1 else math.nan,
        master_seed=plan.master_seed,
    )


def permutation_pvalue(
    stat: Callable[[TrialDataset], float],
    ds: TrialDataset,
    plan: PermutationPlan,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> PermutationResult:
    """Permutation p-value of an arbitrary dataset statistic.

    The statistic must be deterministic given a dataset. Tests with a batch
    fast path consume :func:`iter_label_blocks` directly and finish with
    :func:`pvalue_from_draws`; both routes see identical label sequences.
    """
    observed = float(stat(ds))
    draws: list[float] = []
    for block in iter_label_blocks(plan, ds.group_codes, block_size):
        for labels in block:
            draws.append(float(stat(ds.with_groups(labels))))
    return pvalue_from_draws(observed, np.asarray(draws), plan)
