"""Synthetic two-group trial generator with correlated mixed endpoints.

Dependence is imposed through a Gaussian copula: one latent multivariate
normal row per subject, mapped through marginal inverse CDFs to an
exponential event time (uniform administrative censoring), a normal
continuous value and a Bernoulli response. Used by the type-I-error and
power studies; everything is deterministic under the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import InvalidCorrelationError
from .resampling import PermutationPlan, derive_replicate_seed
from .trial_data import (
    BinaryValue,
    ContinuousValue,
    EndpointKind,
    EndpointSpec,
    Group,
    Subject,
    TimeToEventValue,
    TrialDataset,
)

SIM_EVENT = "event"
SIM_MARKER = "marker"
SIM_RESPONSE = "response"

SIM_ENDPOINT_SPECS = (
    EndpointSpec(SIM_EVENT, EndpointKind.TIME_TO_EVENT, priority=1),
    EndpointSpec(SIM_MARKER, EndpointKind.CONTINUOUS, priority=2),
    EndpointSpec(SIM_RESPONSE, EndpointKind.BINARY, priority=3),
)


@dataclass(frozen=True)
class SurvivalModel:
    hazard_treatment: float  # exponential event hazard per day
    hazard_control: float
    censor_horizon: float  # admin censoring ~ Uniform(0, horizon) days

    def __post_init__(self):
        if min(self.hazard_treatment, self.hazard_control) <= 0:
            raise ValueError("hazards must be strictly positive")
        if self.censor_horizon <= 0:
            raise ValueError("censoring horizon must be strictly positive")


@dataclass(frozen=True)
class ContinuousModel:
    mean_treatment: float
    mean_control: float
    sd_treatment: float = 1.0
    sd_control: float = 1.0

    def __post_init__(self):
        if min(self.sd_treatment, self.sd_control) <= 0:
            raise ValueError("SDs must be strictly positive")


@dataclass(frozen=True)
class BinaryModel:
    p_treatment: float
    p_control: float

    def __post_init__(self):
        for p in (self.p_treatment, self.p_control):
            if not 0.0 <= p <= 1.0:
                raise ValueError("event probabilities must lie in [0, 1]")


def _check_correlation(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=np.float64)
    if corr.shape != (3, 3):
        raise InvalidCorrelationError(f"correlation must be 3x3, got {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise InvalidCorrelationError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise InvalidCorrelationError("correlation matrix must have unit diagonal")
    eigvals, eigvecs = np.linalg.eigh(corr)
    if eigvals.min() < -1e-9:
        raise InvalidCorrelationError(
            f"correlation matrix is not PSD (min eigenvalue {eigvals.min():.3g})"
        )
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


@dataclass(frozen=True)
class SimConfig:
    """Generator parameters: one time-to-event, one continuous and one binary
    endpoint, with a 3x3 latent correlation."""

    n_per_group: int
    survival: SurvivalModel
    continuous: ContinuousModel
    binary: BinaryModel
    correlation: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
    )
    seed: int = 0

    def __post_init__(self):
        if self.n_per_group < 1:
            raise ValueError("n_per_group must be >= 1")
        _check_correlation(np.asarray(self.correlation))

    @classmethod
    def null(
        cls,
        n_per_group: int,
        seed: int = 0,
        hazard: float = 0.002,
        censor_horizon: float = 1000.0,
        correlation: Sequence[Sequence[float]] | None = None,
    ) -> "SimConfig":
        """Identical group parameters: the exchangeability null."""
        corr = (
            tuple(tuple(float(v) for v in row) for row in correlation)
            if correlation is not None
            else ((1.0, 0.3, 0.2), (0.3, 1.0, 0.25), (0.2, 0.25, 1.0))
        )
        return cls(
            n_per_group=n_per_group,
            survival=SurvivalModel(hazard, hazard, censor_horizon),
            continuous=ContinuousModel(0.0, 0.0, 1.0, 1.0),
            binary=BinaryModel(0.5, 0.5),
            correlation=corr,
            seed=seed,
        )


def simulate_trial(cfg: SimConfig) -> TrialDataset:
    """Draw one trial; deterministic under ``cfg.seed``."""
    factor = _check_correlation(np.asarray(cfg.correlation))
    rng = np.random.default_rng(cfg.seed)
    n = 2 * cfg.n_per_group
    treat = np.zeros(n, dtype=bool)
    treat[: cfg.n_per_group] = True

    z = rng.standard_normal((n, 3)) @ factor.T
    u_event = sps.norm.cdf(z[:, 0])
    censor = rng.uniform(0.0, cfg.survival.censor_horizon, size=n)

    hazard = np.where(treat, cfg.survival.hazard_treatment, cfg.survival.hazard_control)
    # Larger latent value => later event (better outcome).
    with np.errstate(divide="ignore"):
        t_event = -np.log1p(-u_event) / hazard
    time = np.minimum(t_event, censor)
    observed = t_event <= censor

    mean = np.where(treat, cfg.continuous.mean_treatment, cfg.continuous.mean_control)
    sd = np.where(treat, cfg.continuous.sd_treatment, cfg.continuous.sd_control)
    marker = mean + sd * z[:, 1]

    p_bin = np.where(treat, cfg.binary.p_treatment, cfg.binary.p_control)
    response = (sps.norm.cdf(z[:, 2]) < p_bin).astype(int)

    subjects = []
    for i in range(n):
        subjects.append(
            Subject(
                id=f"sim{i:05d}",
                group=Group.TREATMENT if treat[i] else Group.CONTROL,
                outcomes={
                    SIM_EVENT: TimeToEventValue(float(time[i]), bool(observed[i])),
                    SIM_MARKER: ContinuousValue(float(marker[i])),
                    SIM_RESPONSE: BinaryValue(int(response[i])),
                },
            )
        )
    return TrialDataset.from_subjects(subjects, SIM_ENDPOINT_SPECS)


@dataclass(frozen=True)
class RejectionReport:
    method: str
    alpha: float
    n_trials: int
    n_rejected: int
    rate: float
    ci_low: float
    ci_high: float
    seed: int
    metadata: dict = field(default_factory=dict)

    def in_band(self, target: float | None = None) -> bool:
        target = self.alpha if target is None else target
        return self.ci_low <= target <= self.ci_high


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact (Clopper-Pearson) binomial confidence interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = (1.0 - level) / 2.0
    low = 0.0 if successes == 0 else float(sps.beta.ppf(a, successes, trials - successes + 1))
    high = 1.0 if successes == trials else float(sps.beta.ppf(1 - a, successes + 1, trials - successes))
    return low, high


def binomial_band(p: float, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial acceptance band for an observed rate around a nominal
    probability: the central ``level`` quantile range of Binomial(trials, p),
    expressed as rates."""
    a = (1.0 - level) / 2.0
    low = float(sps.binom.ppf(a, trials, p)) / trials
    high = float(sps.binom.ppf(1.0 - a, trials, p)) / trials
    return low, high


def error_rate_study(
    cfg: SimConfig,
    method: str,
    alpha: float,
    n_trials: int,
    plan: PermutationPlan,
) -> RejectionReport:
    """Fraction of simulated trials a method rejects at ``alpha``.

    Trial t draws its data from a seed derived from ``cfg.seed`` and its
    permutation stream from one derived from ``plan.master_seed``; the two
    streams are tagged so they never coincide.
    """
    from .methods import run_method  # local import: methods depends on the test modules

    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")

    sim_stream = derive_replicate_seed(cfg.seed, 0)
    plan_stream = derive_replicate_seed(plan.master_seed, 1)
    n_rejected = 0
    for t in range(n_trials):
        ds = simulate_trial(replace(cfg, seed=derive_replicate_seed(sim_stream, t)))
        plan_t = plan.with_seed(derive_replicate_seed(plan_stream, t))
        result = run_method(method, ds, plan_t)
        if result.p_two_sided <= alpha:
            n_rejected += 1
    rate = n_rejected / n_trials
    low, high = binomial_ci(n_rejected, n_trials)
    return RejectionReport(
        method=method,
        alpha=alpha,
        n_trials=n_trials,
        n_rejected=n_rejected,
        rate=rate,
        ci_low=low,
        ci_high=high,
        seed=cfg.seed,
        metadata={"plan_seed": plan.master_seed, "replicates": plan.replicates,
                  "n_per_group": cfg.n_per_group},
    )
