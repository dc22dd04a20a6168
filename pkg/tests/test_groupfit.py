import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import constrained_ls_bruteforce, mse_loops
from rfa import datagen, groupfit
from rfa.cluster import ahc_complete_linkage, loading_distance_matrix
from rfa.errors import InputError, NumericalError
from rfa.partition import Partition


def test_constrained_ls_frozen_instance():
    rng = np.random.default_rng(7)
    y = rng.standard_normal((12, 5))
    f = rng.standard_normal((12, 2))
    part = Partition.from_labels([1, 1, 2, 2, 2])
    lam = groupfit.grouped_loadings(y, f, part)
    np.testing.assert_allclose(lam, constrained_ls_bruteforce(y, f, [[0, 1], [2, 3, 4]]), atol=1e-12)
    np.testing.assert_allclose(lam[0], [-0.04425557, 0.2720815], atol=1e-8)
    np.testing.assert_allclose(lam[2], [-0.11337824, 0.01943444], atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 12), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_grouped_loadings_match_stacked_regression(n, m, seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((20, n))
    f = rng.standard_normal((20, m))
    labels = rng.integers(1, 4, size=n)
    part = Partition.from_labels(labels)
    lam = groupfit.grouped_loadings(y, f, part)
    ref = constrained_ls_bruteforce(y, f, [g.tolist() for g in part.groups()])
    np.testing.assert_allclose(lam, ref, atol=1e-10)
    # equal within groups
    for g in part.groups():
        assert np.ptp(lam[g], axis=0).max() == 0
    s = groupfit.goodness_of_fit(y, f, lam)
    assert s == pytest.approx(mse_loops(y, f @ lam.T), rel=1e-12)


def test_s_is_nonincreasing_along_the_path():
    p = datagen.gen_example2((30, 30, 30), 100, 0.5, seed=3)
    res = groupfit.rfa_pipeline(p.y, 2, k_bar=20)
    s = [pt.S for pt in res.ic.ic_curve]
    assert np.all(np.diff(s) <= 1e-12)


def test_rho_rules():
    T = 100
    assert groupfit.rho_rule(Partition.from_sizes([50, 50]), T) == pytest.approx(0.07824046010856292, abs=1e-15)
    assert groupfit.rho_rule(Partition.from_sizes([200]), T) == pytest.approx(np.log(100) / 100)
    assert groupfit.rho_rule(Partition.from_sizes([1, 5]), T) == 0.0
    assert groupfit.rho_rule_positive(Partition.from_sizes([1, 5]), T) == pytest.approx(np.log(2) / 2)
    assert groupfit.fixed_rho(0.3)(None, 5) == 0.3
    for n in range(2, 200):
        r = groupfit.rho_rule_positive(Partition.from_sizes([n]), 1000)
        assert 0 < r < 1


def test_ic_selects_k_by_hand():
    p = datagen.gen_example2((20, 20, 20), 150, 0.5, seed=2)
    f = p.true_factors
    d = loading_distance_matrix(groupfit.unit_ols_loadings(p.y, f))
    path = ahc_complete_linkage(d)
    ic = groupfit.select_group_number(p.y, f, path, k_bar=6)
    manual = [np.log(pt.S) + pt.K * pt.rho for pt in ic.ic_curve]
    np.testing.assert_allclose([pt.IC for pt in ic.ic_curve], manual, rtol=1e-14)
    assert ic.k_hat == int(np.argmin(manual)) + 1 == 3
    assert [r["K"] for r in ic.as_records()] == list(range(1, 7))


def test_ic_log_floor_for_perfect_fit():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((30, 1))
    y = f @ np.array([[1.0, 1.0, 3.0, 3.0]])
    path = ahc_complete_linkage(loading_distance_matrix(np.array([[1.0], [1.0], [3.0], [3.0]])))
    ic = groupfit.select_group_number(y, f, path, k_bar=4)
    assert all(np.isfinite(pt.IC) for pt in ic.ic_curve)
    assert ic.k_hat == 2


def test_refit_factors_cross_sectional_ols():
    rng = np.random.default_rng(3)
    lam = np.repeat(np.array([[2.0, 0.0], [0.0, 2.0], [1.0, 1.5]]), 5, axis=0)
    f = rng.standard_normal((40, 2))
    y = f @ lam.T
    np.testing.assert_allclose(groupfit.reestimate_factors(y, lam), f, atol=1e-12)


def test_refit_rank_deficiency_is_reported():
    lam = np.tile([[1.0, 2.0]], (6, 1))
    with pytest.raises(NumericalError, match="at least the number of factors"):
        groupfit.reestimate_factors(np.ones((10, 6)), lam)


def test_singular_factor_gram():
    f = np.ones((10, 2))
    with pytest.raises(NumericalError):
        groupfit.unit_ols_loadings(np.ones((10, 3)), f)


def test_pipeline_recovers_three_groups():
    p = datagen.gen_example2((30, 30, 30), 200, 0.5, seed=1)
    res = groupfit.rfa_pipeline(p.y, "auto-er")
    assert res.initial.num_factors == 2
    assert res.ic.k_hat == 3
    assert res.grouped.partition == p.true_partition
    assert res.m_selection["rule"] == "auto-er"


def test_pipeline_pca_has_no_kendall():
    p = datagen.gen_example2((10, 10, 10), 60, 0.5, seed=1)
    res = groupfit.rfa_pipeline(p.y, 2, method="pca")
    assert res.kendall is None
    assert res.initial.method == "pca"


def test_pipeline_deterministic():
    p = datagen.gen_example1(40, 60, 0.6, seed=8)
    a = groupfit.rfa_pipeline(p.y, 2)
    b = groupfit.rfa_pipeline(p.y, 2)
    assert a.grouped.grouped_loadings.tobytes() == b.grouped.grouped_loadings.tobytes()
    assert a.path.as_array().tobytes() == b.path.as_array().tobytes()


def test_resolve_num_factors_errors():
    y = np.random.default_rng(0).standard_normal((20, 5))
    assert groupfit.resolve_num_factors(y, 3)[0] == 3
    with pytest.raises(InputError):
        groupfit.resolve_num_factors(y, "auto")
    with pytest.raises(InputError):
        groupfit.select_group_number(y, y[:, :1], ahc_complete_linkage(1 - np.eye(4)))


def test_default_k_bar():
    assert groupfit.default_k_bar(1) == 1
    assert groupfit.default_k_bar(11) == 5
    assert groupfit.default_k_bar(500) == 20
