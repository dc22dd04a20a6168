import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import jacobi_eigh, matmul_loops
from rfa import datagen, factor
from rfa.errors import InputError
from rfa.kendall import spatial_kendall_tau


def _sym(seed, n):
    a = np.random.default_rng(seed).standard_normal((n, n))
    return a + a.T


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_top_eigen_matches_jacobi(n, seed):
    a = _sym(seed, n)
    vals, vecs = jacobi_eigh(a)
    m = max(1, n // 2)
    got = factor.top_eigen_sym(a, m)
    np.testing.assert_allclose(got.values, vals[::-1][:m], atol=1e-10)
    ref = factor.fix_signs(vecs[:, ::-1][:, :m])
    # compare only well separated eigenvalues
    gaps = np.abs(np.diff(vals[::-1][: m + 1])) if m < n else np.full(m, np.inf)
    for j in range(m):
        left = abs(vals[::-1][j - 1] - vals[::-1][j]) if j else np.inf
        if min(left, gaps[j] if j < gaps.size else np.inf) > 1e-6:
            np.testing.assert_allclose(got.vectors[:, j], ref[:, j], atol=1e-7)


def test_sign_rule():
    v = np.array([[0.1, -0.9], [-0.5, 0.2], [0.3, 0.1]])
    out = factor.fix_signs(v)
    assert np.array_equal(out[:, 0], -v[:, 0])
    assert np.array_equal(out[:, 1], -v[:, 1])
    assert np.all(np.abs(out).argmax(axis=0) == [1, 0])
    assert np.array_equal(factor.fix_signs(out), out)


def test_lanczos_path_agrees_with_dense():
    rng = np.random.default_rng(0)
    n = 600
    lam = rng.standard_normal((n, 3)) * [5, 3, 2]
    a = lam @ lam.T / n + np.diag(rng.uniform(0.1, 0.2, n))
    sparse = factor.top_eigen_sym(a, 3)
    vals, vecs = np.linalg.eigh(a)
    np.testing.assert_allclose(sparse.values, vals[::-1][:3], rtol=1e-9)
    np.testing.assert_allclose(sparse.vectors, factor.fix_signs(vecs[:, ::-1][:, :3]), atol=1e-7)


def test_rts_fit_shapes_and_orthogonality():
    p = datagen.gen_example1(40, 80, 0.6, seed=3)
    fit = factor.rts_fit(p.y, 2)
    assert fit.loadings.shape == (40, 2)
    assert fit.factors.shape == (80, 2)
    np.testing.assert_allclose(fit.loadings.T @ fit.loadings / 40, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(fit.factors, matmul_loops(p.y, fit.loadings) / 40, atol=1e-12)


def test_rts_accepts_precomputed_kendall():
    y = np.random.default_rng(1).standard_normal((30, 6))
    k = spatial_kendall_tau(y)
    assert np.array_equal(factor.rts_loadings(y, 2, k), factor.rts_loadings(y, 2))


def test_pca_matches_manual():
    y = np.random.default_rng(2).standard_normal((50, 7))
    fit = factor.pca_fit(y, 2)
    vals, vecs = jacobi_eigh(matmul_loops(y.T, y) / (7 * 50))
    np.testing.assert_allclose(fit.loadings, np.sqrt(7) * factor.fix_signs(vecs[:, ::-1][:, :2]),
                               atol=1e-8)


def test_rts_recovers_loading_space():
    p = datagen.gen_example1(200, 200, 0.6, seed=1)
    lam = factor.rts_loadings(p.y, 2)
    true = p.true_loadings
    proj = lam @ np.linalg.lstsq(lam, true, rcond=None)[0]
    assert np.linalg.norm(proj - true) / np.linalg.norm(true) < 0.1


def test_invalid_m():
    y = np.zeros((5, 3)) + np.arange(15).reshape(5, 3) ** 2
    with pytest.raises(InputError):
        factor.rts_fit(y, 0)
    with pytest.raises(InputError):
        factor.pca_fit(y, 4)
    with pytest.raises(InputError):
        factor.fit(y, 1, "ica")
    with pytest.raises(InputError):
        factor.top_eigen_sym(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_ic_picks_strong_factors():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((150, 3))
    lam = rng.standard_normal((100, 3)) * 2
    y = f @ lam.T + rng.standard_normal((150, 100))
    m_hat, ic = factor.select_num_factors_ic(y, 8)
    assert m_hat == 3
    assert ic.shape == (8,)
    assert np.argmin(ic) == 2


def test_ic_is_finite_for_exact_low_rank():
    rng = np.random.default_rng(5)
    y = rng.standard_normal((30, 1)) @ rng.standard_normal((1, 20))
    m_hat, ic = factor.select_num_factors_ic(y, 5)
    assert m_hat == 1
    assert np.all(np.isfinite(ic))


def test_er_picks_strong_factors():
    rng = np.random.default_rng(6)
    y = rng.standard_normal((200, 2)) @ (3 * rng.standard_normal((2, 60))) + rng.standard_normal((200, 60))
    assert factor.select_num_factors_er(spatial_kendall_tau(y), 8) == 2
    assert factor.select_num_factors_er(np.diag([5.0, 1.0, 0.9]), 2) == 1
    with pytest.raises(InputError):
        factor.select_num_factors_er(np.eye(3), 3)
