"""Weighted global U-statistic test over endpoint-specific two-sample kernels.

Each kernel scores an ordered (treatment, control) pair in {-1, 0, +1} with
+1 favoring treatment: a Mann-Whitney signed difference for continuous and
binary endpoints, or the censoring-aware Gehan survival rule for
time-to-event endpoints. The global statistic is the weight-normalized sum
of per-endpoint pair averages; its asymptotic variance comes from the
two-sample projection estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import KernelKindMismatchError
from .pairwise import _level_matrix
from .resampling import PermutationPlan, iter_label_blocks, pvalue_from_draws
from .results import InferenceMode, TestResult, clamp_p
from .trial_data import EndpointKind, TrialDataset


class KernelType(Enum):
    SIGNED_DIFFERENCE = "signed_difference"
    GEHAN_SURVIVAL = "gehan_survival"


@dataclass(frozen=True)
class KernelSpec:
    endpoint: str
    kernel: KernelType
    weight: float = 1.0

    def __post_init__(self):
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ValueError(f"kernel weight must be finite and >= 0, got {self.weight}")


def default_kernels(ds: TrialDataset) -> list[KernelSpec]:
    """Equal-weight kernel per endpoint: Gehan for time-to-event, signed
    difference otherwise."""
    out = []
    for spec in sorted(ds.endpoint_specs, key=lambda s: s.priority):
        kernel = (
            KernelType.GEHAN_SURVIVAL
            if spec.kind is EndpointKind.TIME_TO_EVENT
            else KernelType.SIGNED_DIFFERENCE
        )
        out.append(KernelSpec(spec.name, kernel, 1.0))
    return out


def kernel_matrix(ds: TrialDataset, spec: KernelSpec) -> np.ndarray:
    """Antisymmetric N x N int8 matrix of kernel values phi(i, j)."""
    ep = ds.spec(spec.endpoint)
    if spec.kernel is KernelType.GEHAN_SURVIVAL:
        if ep.kind is not EndpointKind.TIME_TO_EVENT:
            raise KernelKindMismatchError(
                f"GehanSurvival kernel requires a time-to-event endpoint, "
                f"{spec.endpoint!r} is {ep.kind.value}"
            )
    else:
        if ep.kind is EndpointKind.TIME_TO_EVENT:
            raise KernelKindMismatchError(
                f"SignedDifference kernel cannot apply to time-to-event "
                f"endpoint {spec.endpoint!r}"
            )
    return _level_matrix(ds, ep)


@dataclass(frozen=True)
class EndpointUStatistic:
    endpoint: str
    kernel: KernelType
    u: float
    pair_sum: int
    projection_treatment: np.ndarray  # mean kernel of each treatment subject vs controls
    projection_control: np.ndarray  # mean kernel (treatment perspective) vs each control


def endpoint_u(ds: TrialDataset, spec: KernelSpec) -> EndpointUStatistic:
    """Per-endpoint pair average U_k plus per-subject projection means."""
    phi = kernel_matrix(ds, spec)
    treat = ds.treatment_mask
    cross = phi[treat][:, ~treat].astype(np.float64)
    pair_sum = int(cross.sum())
    n_pairs = ds.n_treatment * ds.n_control
    return EndpointUStatistic(
        endpoint=spec.endpoint,
        kernel=spec.kernel,
        u=pair_sum / n_pairs,
        pair_sum=pair_sum,
        projection_treatment=cross.mean(axis=1),
        projection_control=cross.mean(axis=0),
    )


def _normalized_weights(kernels: Sequence[KernelSpec]) -> np.ndarray:
    w = np.asarray([k.weight for k in kernels], dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise ValueError("kernel weights must not all be zero")
    return w / total


def _combine(pair_sums: np.ndarray, weights: np.ndarray, n_pairs: int) -> np.ndarray:
    """Shared combiner so observed, replicate and relabeled paths use
    identical float operations: sum_k w_k * (count_k / n_pairs).

    Rows of a 2-D count matrix go through the same 1-D dot as a single count
    vector; a matrix-vector product would accumulate in a different order
    and perturb permutation tie counting at the ulp level.
    """
    scaled = np.asarray(pair_sums, dtype=np.float64) / n_pairs
    if scaled.ndim == 1:
        return scaled @ weights
    return np.array([row @ weights for row in scaled])


def global_u_test(
    ds: TrialDataset,
    kernels: Sequence[KernelSpec] | None = None,
    plan: PermutationPlan | None = None,
) -> TestResult:
    """Weight-normalized sum of endpoint U-statistics.

    Asymptotic variance: S1^2/n1 + S0^2/n0 with S^2 the sample variances of
    the weighted per-subject projection means within each group. With a
    plan, the p-value is a label permutation of the combined statistic.
    """
    if kernels is None:
        kernels = default_kernels(ds)
    if not kernels:
        raise ValueError("at least one kernel is required")
    weights = _normalized_weights(kernels)
    n1, n0 = ds.n_treatment, ds.n_control
    n_pairs = n1 * n0

    parts = [endpoint_u(ds, k) for k in kernels]
    pair_sums = np.asarray([p.pair_sum for p in parts], dtype=np.float64)
    statistic = float(_combine(pair_sums, weights, n_pairs))

    h_t = np.zeros(n1)
    h_c = np.zeros(n0)
    for w, p in zip(weights, parts):
        h_t += w * p.projection_treatment
        h_c += w * p.projection_control
    s1 = float(h_t.var(ddof=1)) if n1 >= 2 else math.nan
    s0 = float(h_c.var(ddof=1)) if n0 >= 2 else math.nan
    variance = s1 / n1 + s0 / n0

    metadata: dict = {
        "kernels": [(k.endpoint, k.kernel.value) for k in kernels],
        "weights": [float(w) for w in weights],
        "endpoint_u": {p.endpoint: p.u for p in parts},
        "n_treatment": n1,
        "n_control": n0,
    }

    if plan is None:
        if math.isnan(variance):
            raise ValueError(
                "asymptotic global-U inference needs at least 2 subjects per group"
            )
        if variance == 0.0:
            metadata["degenerate_variance"] = True
            p = 1.0 if statistic == 0.0 else clamp_p(0.0)
            z = 0.0 if statistic == 0.0 else math.copysign(math.inf, statistic)
            return TestResult("global_u", statistic, 0.0, z, p,
                              InferenceMode.ASYMPTOTIC, metadata)
        z = statistic / math.sqrt(variance)
        p = clamp_p(2.0 * float(sps.norm.sf(abs(z))))
        return TestResult("global_u", statistic, variance, z, p,
                          InferenceMode.ASYMPTOTIC, metadata)

    z = statistic / math.sqrt(variance) if variance and variance > 0 else math.nan
    # g' Phi (1 - g) = g . rowsum(Phi) because every kernel matrix is
    # antisymmetric, so each replicate costs K dot products over int64 counts.
    row_sums = np.column_stack(
        [kernel_matrix(ds, k).sum(axis=1, dtype=np.int64) for k in kernels]
    )
    draws = []
    for block in iter_label_blocks(plan, ds.group_codes):
        counts = block @ row_sums
        draws.append(_combine(counts, weights, n_pairs))
    res = pvalue_from_draws(statistic, np.concatenate(draws), plan)
    metadata.update(
        {
            "replicates_used": res.replicates_used,
            "seed": res.master_seed,
            "n_extreme": res.n_extreme,
            "n_nonfinite": res.n_nonfinite,
            "null_mean": res.null_mean,
            "null_sd": res.null_sd,
        }
    )
    mode = InferenceMode.EXACT if plan.mode == "exact" else InferenceMode.PERMUTATION
    return TestResult("global_u", statistic, variance, z, res.p, mode, metadata)
