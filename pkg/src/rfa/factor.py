"""Loading and factor estimation (RTS and PCA) and factor-number selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh

from .errors import InputError
from .kendall import KendallTauMatrix, spatial_kendall_tau

RTS = "rts"
PCA = "pca"

DENSE_EIGEN_MAX_N = 512
LOG_FLOOR = 1e-15
RATIO_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True, eq=False)
class FactorFit:
    loadings: np.ndarray
    factors: np.ndarray
    method: str
    num_factors: int

    @property
    def common_component(self) -> np.ndarray:
        return self.factors @ self.loadings.T


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive.

    Ties in magnitude go to the lowest row index.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_eigen_sym(a, m: int) -> EigenPairs:
    """Leading ``m`` eigenpairs of the symmetric part of ``a``.

    Dense LAPACK for ``N <= 512``, ARPACK Lanczos above that.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix contains non-finite entries")
    n = a.shape[0]
    if not 1 <= m <= n:
        raise InputError(f"m must be in 1..{n}, got {m}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > 1e-8 * scale:
        raise InputError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if n <= DENSE_EIGEN_MAX_N or m >= n - 1:
        vals, vecs = np.linalg.eigh(a)
        vals, vecs = vals[::-1][:m], vecs[:, ::-1][:, :m]
    else:
        v0 = np.ones(n) / np.sqrt(n)
        vals, vecs = eigsh(a, k=m, which="LA", tol=1e-10, maxiter=10 * n, v0=v0)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
    return EigenPairs(vals.copy(), fix_signs(vecs))


def _check_m(y: np.ndarray, m: int):
    T, N = y.shape
    if not 1 <= m <= min(N, T):
        raise InputError(f"number of factors must be in 1..{min(N, T)}, got {m}")


def rts_loadings(y, m: int, kendall: KendallTauMatrix | None = None) -> np.ndarray:
    """``sqrt(N)`` times the leading ``m`` eigenvectors of Kendall's tau."""
    y = np.asarray(y, dtype=float)
    _check_m(y, m)
    if kendall is None:
        kendall = spatial_kendall_tau(y)
    N = y.shape[1]
    return np.sqrt(N) * top_eigen_sym(kendall.k, m).vectors


def rts_factors(y, loadings) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    loadings = np.asarray(loadings, dtype=float)
    if loadings.ndim != 2 or y.ndim != 2 or y.shape[1] != loadings.shape[0]:
        raise InputError(
            f"panel shape {y.shape} does not conform with loadings {loadings.shape}"
        )
    return y @ loadings / y.shape[1]


def rts_fit(y, m: int, kendall: KendallTauMatrix | None = None) -> FactorFit:
    lam = rts_loadings(y, m, kendall)
    return FactorFit(lam, rts_factors(y, lam), RTS, m)


def pca_fit(y, m: int) -> FactorFit:
    """Principal-components fit from the ``N x N`` second-moment matrix.

    The panel is used as given; centre or standardise it beforehand.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError(f"panel must be 2-D, got shape {y.shape}")
    _check_m(y, m)
    if not np.all(np.isfinite(y)):
        raise InputError("panel contains non-finite values")
    T, N = y.shape
    lam = np.sqrt(N) * top_eigen_sym(y.T @ y / (N * T), m).vectors
    return FactorFit(lam, rts_factors(y, lam), PCA, m)


def fit(y, m: int, method: str = RTS, kendall=None) -> FactorFit:
    if method == RTS:
        return rts_fit(y, m, kendall)
    if method == PCA:
        return pca_fit(y, m)
    raise InputError(f"unknown method {method!r}")


def select_num_factors_ic(y, m_max: int):
    """Bai and Ng's IC2 criterion over ``k = 1..m_max``.

    ``IC2(k) = ln V(k) + k (N + T)/(N T) ln min(N, T)`` where ``V(k)`` is the
    mean squared residual of the ``k``-factor PCA fit.

    Returns
    -------
    m_hat : int
    ic : ndarray of length ``m_max``
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError(f"panel must be 2-D, got shape {y.shape}")
    T, N = y.shape
    if not 1 <= m_max <= min(N, T) - 1:
        raise InputError(f"m_max must be in 1..{min(N, T) - 1}, got {m_max}")
    full = pca_fit(y, m_max)
    penalty = (N + T) / (N * T) * np.log(min(N, T))
    ic = np.empty(m_max)
    for k in range(1, m_max + 1):
        lam = full.loadings[:, :k]
        resid = y - full.factors[:, :k] @ lam.T
        v = np.mean(resid**2)
        ic[k - 1] = np.log(max(v, LOG_FLOOR)) + k * penalty
    return int(np.argmin(ic)) + 1, ic


def select_num_factors_er(kendall, m_max: int) -> int:
    """Eigenvalue-ratio estimate ``argmax_k lambda_k / lambda_{k+1}``."""
    k = kendall.k if isinstance(kendall, KendallTauMatrix) else np.asarray(kendall)
    n = k.shape[0]
    if not 1 <= m_max <= n - 1:
        raise InputError(f"m_max must be in 1..{n - 1}, got {m_max}")
    vals = top_eigen_sym(k, m_max + 1).values
    vals = np.maximum(vals, RATIO_EPS)
    ratios = vals[:-1] / vals[1:]
    return int(np.argmax(ratios)) + 1
