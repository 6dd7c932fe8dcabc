from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multiendpoint import (
    ExactTooLargeError,
    PermutationPlan,
    derive_replicate_seed,
    permutation_pvalue,
    simulate_trial,
    SimConfig,
)
from multiendpoint.pairwise import pairwise_score_vector
from multiendpoint.resampling import iter_label_blocks, n_assignments, pvalue_from_draws
from support import SURV, survival_cohort


def fs_stat(ds) -> float:
    u = pairwise_score_vector(ds, [SURV])
    return float(u[ds.treatment_mask].sum())


@pytest.fixture
def ordered():
    return survival_cohort([30, 40, 10, 20], [1, 1, 1, 1], [1, 1, 0, 0])


class TestPlans:
    def test_monte_carlo_requires_replicates(self):
        with pytest.raises(ValueError):
            PermutationPlan.monte_carlo(0)

    def test_exact_cap_enforced(self, ordered):
        plan = PermutationPlan("exact", exact_cap=3)
        with pytest.raises(ExactTooLargeError):
            permutation_pvalue(fs_stat, ordered, plan)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            PermutationPlan("bootstrap")


class TestSeeds:
    def test_deterministic(self):
        assert derive_replicate_seed(123, 0) == derive_replicate_seed(123, 0)

    def test_distinct_across_indices(self):
        assert derive_replicate_seed(123, 0) != derive_replicate_seed(123, 1)

    @given(st.integers(0, 2**64 - 1), st.integers(0, 10_000), st.integers(0, 10_000))
    def test_injective_in_index(self, master, i, j):
        if i != j:
            assert derive_replicate_seed(master, i) != derive_replicate_seed(master, j)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            derive_replicate_seed(1, -1)


class TestPermutationPvalue:
    def test_constant_statistic_p_one_both_modes(self, ordered):
        for plan in (PermutationPlan.monte_carlo(200, seed=1), PermutationPlan.exact()):
            res = permutation_pvalue(lambda d: 0.0, ordered, plan)
            assert res.p == 1.0

    def test_exact_enumeration_on_ordered_fixture(self, ordered):
        res = permutation_pvalue(fs_stat, ordered, PermutationPlan.exact())
        assert res.replicates_used == 6
        assert res.p == pytest.approx(2.0 / 6.0)
        assert res.n_extreme == 2

    def test_monte_carlo_converges_to_exact(self, ordered):
        exact = permutation_pvalue(fs_stat, ordered, PermutationPlan.exact())
        mc = permutation_pvalue(fs_stat, ordered, PermutationPlan.monte_carlo(10_000, seed=3))
        assert abs(mc.p - exact.p) <= 0.02

    def test_monte_carlo_within_three_binomial_se(self):
        ds = survival_cohort(
            [3, 9, 14, 1, 7, 11, 2, 6, 12, 4], [1] * 10, [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        )
        exact = permutation_pvalue(fs_stat, ds, PermutationPlan.exact())
        b = 20_000
        mc = permutation_pvalue(fs_stat, ds, PermutationPlan.monte_carlo(b, seed=5))
        se = math.sqrt(exact.p * (1 - exact.p) / b)
        assert abs(mc.p - exact.p) <= 3 * se + 1 / b

    def test_reproducible_and_positive(self, ordered):
        plan = PermutationPlan.monte_carlo(97, seed=42)
        p1 = permutation_pvalue(fs_stat, ordered, plan).p
        p2 = permutation_pvalue(fs_stat, ordered, plan).p
        assert p1 == p2
        assert p1 >= 1.0 / 98.0

    def test_plus_one_convention_floor(self, ordered):
        res = permutation_pvalue(lambda d: 1e9 if d is ordered else 0.0, ordered,
                                 PermutationPlan.monte_carlo(49, seed=0))
        assert res.p == pytest.approx(1.0 / 50.0)

    def test_chunking_invariance(self, ordered):
        plan = PermutationPlan.monte_carlo(300, seed=9)
        whole = np.concatenate(
            [b @ np.arange(4) for b in iter_label_blocks(plan, ordered.group_codes, 300)]
        )
        chunked = np.concatenate(
            [b @ np.arange(4) for b in iter_label_blocks(plan, ordered.group_codes, 37)]
        )
        assert np.array_equal(whole, chunked)

    def test_nonfinite_replicates_flagged_extreme(self, ordered):
        calls = {"n": 0}

        def stat(d):
            calls["n"] += 1
            if calls["n"] == 1:
                return 1.0  # observed
            return math.nan if calls["n"] % 2 == 0 else 0.0

        res = permutation_pvalue(stat, ordered, PermutationPlan.monte_carlo(100, seed=2))
        assert res.n_nonfinite == 50
        assert res.n_extreme == 50
        assert res.p == pytest.approx(51 / 101)

    def test_nan_observed_gives_p_one(self, ordered):
        res = pvalue_from_draws(math.nan, np.array([0.0, 1.0, math.nan]),
                                PermutationPlan.exact())
        assert res.p == 1.0

    def test_label_blocks_preserve_group_sizes(self, ordered):
        for plan in (PermutationPlan.monte_carlo(50, seed=7), PermutationPlan.exact()):
            for block in iter_label_blocks(plan, ordered.group_codes, 16):
                assert (block.sum(axis=1) == ordered.n_treatment).all()

    def test_exact_assignment_count(self, ordered):
        assert n_assignments(PermutationPlan.exact(), 4, 2) == 6


class TestSuperUniformity:
    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.10])
    def test_null_p_super_uniform(self, alpha):
        # Null simulated data; statistic = FS over the pooled hierarchy.
        from multiendpoint import fs_test

        n_trials = 400
        b = 99
        rejections = 0
        for t in range(n_trials):
            ds = simulate_trial(SimConfig.null(8, seed=derive_replicate_seed(7, t)))
            plan = PermutationPlan.monte_carlo(b, seed=derive_replicate_seed(11, t))
            p = fs_test(ds, plan=plan).p_two_sided
            rejections += p <= alpha
        rate = rejections / n_trials
        slack = 3.0 * math.sqrt(alpha * (1 - alpha) / n_trials)
        assert rate <= alpha + slack
