"""The batch permutation kernels inside each test must be bit-identical to
routing the full statistic recomputation through the generic engine."""

from __future__ import annotations

import numpy as np
import pytest

from multiendpoint import (
    PermutationPlan,
    SimConfig,
    fs_test,
    global_u_test,
    multirank_test,
    obrien_test,
    permutation_pvalue,
    simulate_trial,
    win_ratio_test,
)
from multiendpoint.global_u import _combine, _normalized_weights, default_kernels, endpoint_u
from multiendpoint.pairwise import pairwise_score_vector, verdict_matrix
from multiendpoint.rank_tests import _quadform_stat, rank_matrix


@pytest.fixture(scope="module")
def ds():
    return simulate_trial(SimConfig.null(7, seed=7))


PLANS = [
    PermutationPlan.monte_carlo(500, seed=11),
    PermutationPlan.exact(),
]


def fs_stat(d):
    u = pairwise_score_vector(d)
    return float(u[d.treatment_mask].sum())


def wr_stat(d):
    s = verdict_matrix(d)
    t = d.treatment_mask
    cross = s[t][:, ~t]
    w = float((cross == 1).sum())
    l = float((cross == -1).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.log(np.float64(w)) - np.log(np.float64(l)))


def obrien_stat(d):
    rm = rank_matrix(d)
    sums = rm.ranks.sum(axis=1)
    m = rm.treatment_mask
    n1 = int(m.sum())
    total = float(sums.sum())
    s1 = float(sums[m].sum())
    return s1 / n1 - (total - s1) / (rm.n - n1)


def multirank_stat(d):
    rm = rank_matrix(d)
    t, _, _ = _quadform_stat(rm.ranks, rm.treatment_mask)
    return t


@pytest.mark.parametrize("plan", PLANS, ids=["monte_carlo", "exact"])
class TestFastPathsMatchGenericEngine:
    def test_fs(self, ds, plan):
        assert fs_test(ds, plan=plan).p_two_sided == permutation_pvalue(fs_stat, ds, plan).p

    def test_win_ratio(self, ds, plan):
        assert (
            win_ratio_test(ds, plan=plan).p_two_sided
            == permutation_pvalue(wr_stat, ds, plan).p
        )

    def test_obrien(self, ds, plan):
        assert (
            obrien_test(ds, plan=plan).p_two_sided
            == permutation_pvalue(obrien_stat, ds, plan).p
        )

    def test_multirank(self, ds, plan):
        assert (
            multirank_test(ds, plan=plan).p_two_sided
            == permutation_pvalue(multirank_stat, ds, plan).p
        )

    def test_global_u(self, ds, plan):
        kernels = default_kernels(ds)
        w = _normalized_weights(kernels)
        n_pairs = ds.n_treatment * ds.n_control

        def gu_stat(d):
            sums = np.asarray(
                [endpoint_u(d, k).pair_sum for k in kernels], dtype=np.float64
            )
            return float(_combine(sums, w, n_pairs))

        assert (
            global_u_test(ds, plan=plan).p_two_sided
            == permutation_pvalue(gu_stat, ds, plan).p
        )
