"""Group-constrained loadings, group-number selection and factor refit.

Given initial factors ``F`` (``T x m``) and a partition of the units, the
loadings constrained to be equal within each group minimise the pooled
least-squares loss. The minimiser is the within-group mean of the per-unit
OLS loadings ``(F'F)^{-1} F' y_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import factor as fc
from .cluster import MergePath, ahc_complete_linkage, cut_path, loading_distance_matrix
from .errors import InputError, NumericalError
from .kendall import KendallTauMatrix, spatial_kendall_tau
from .partition import Partition

LOG_FLOOR = 1e-15
COND_LIMIT = 1e12
DEFAULT_M_MAX = 8


@dataclass(frozen=True, eq=False)
class GroupedFit:
    partition: Partition
    grouped_loadings: np.ndarray
    refit_factors: np.ndarray
    s_value: float
    K: int

    @property
    def common_component(self) -> np.ndarray:
        return self.refit_factors @ self.grouped_loadings.T


@dataclass(frozen=True)
class ICPoint:
    K: int
    S: float
    rho: float
    IC: float
    min_group_size: int


@dataclass(frozen=True)
class ICResult:
    k_hat: int
    ic_curve: tuple
    k_bar: int

    def as_records(self) -> list[dict]:
        return [
            {"K": p.K, "S": p.S, "rho": p.rho, "IC": p.IC, "min_group_size": p.min_group_size}
            for p in self.ic_curve
        ]


@dataclass(frozen=True, eq=False)
class RFAResult:
    initial: fc.FactorFit
    kendall: Optional[KendallTauMatrix]
    distances: np.ndarray
    path: MergePath
    ic: ICResult
    grouped: GroupedFit
    m_selection: dict = field(default_factory=dict)


def _spd_solve(gram: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(gram)):
        raise NumericalError(f"{what} has non-finite entries")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        rank = np.linalg.matrix_rank(gram)
        raise NumericalError(
            f"{what} is singular or ill-conditioned "
            f"(condition number {cond:.3g}, rank {rank} of {gram.shape[0]})"
        )
    try:
        c = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite") from exc
    return cho_solve(c, rhs)


def unit_ols_loadings(y, f_tilde) -> np.ndarray:
    """Per-unit OLS loadings ``(F'F)^{-1} F' y_i`` as an ``N x m`` matrix."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f_tilde, dtype=float)
    if f.ndim != 2 or y.ndim != 2 or f.shape[0] != y.shape[0]:
        raise InputError(f"factors {f.shape} do not conform with panel {y.shape}")
    return _spd_solve(f.T @ f, f.T @ y, "F'F").T


def _check_partition(partition: Partition, n: int) -> Partition:
    if not isinstance(partition, Partition):
        partition = Partition(np.asarray(partition))
    if partition.N != n:
        raise InputError(f"partition covers {partition.N} units, panel has {n}")
    return partition


def grouped_loadings(y, f_tilde, partition: Partition) -> np.ndarray:
    """Loadings constrained to be equal within each group of ``partition``."""
    b = unit_ols_loadings(y, f_tilde)
    partition = _check_partition(partition, b.shape[0])
    labels = partition.labels - 1
    sums = np.zeros((partition.K, b.shape[1]))
    np.add.at(sums, labels, b)
    means = sums / partition.sizes[:, None]
    return means[labels]


def goodness_of_fit(y, f_tilde, lambda_hat) -> float:
    """Mean squared residual ``(NT)^{-1} sum (y_it - lambda_i' f_t)^2``."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f_tilde, dtype=float)
    lam = np.asarray(lambda_hat, dtype=float)
    if f.shape[0] != y.shape[0] or lam.shape[0] != y.shape[1] or f.shape[1] != lam.shape[1]:
        raise InputError(
            f"shapes do not conform: y {y.shape}, F {f.shape}, loadings {lam.shape}"
        )
    resid = y - f @ lam.T
    return float(np.mean(resid**2))


def rho_rule(partition: Partition, T: int) -> float:
    """``ln(n) / n`` with ``n = min(smallest group size, T)``.

    A candidate partition with a singleton group gets ``rho = 0``.
    """
    n = min(int(partition.sizes.min()), int(T))
    return float(np.log(n) / n)


def rho_rule_positive(partition: Partition, T: int) -> float:
    """As :func:`rho_rule` but with the group size floored at 2.

    Keeps ``rho`` strictly positive. Without the floor, every candidate
    that splits off a single unit is unpenalised and ``K_hat`` runs to
    ``k_bar`` as soon as the merge path isolates one unit.
    """
    n = min(max(int(partition.sizes.min()), 2), int(T))
    return float(np.log(n) / n)


def fixed_rho(value: float):
    """A ``rho_rule`` replacement that ignores the partition."""
    value = float(value)

    def rule(partition, T):
        return value

    return rule


def default_k_bar(N: int) -> int:
    return max(1, min(20, N // 2))


def select_group_number(y, f_tilde, path: MergePath, k_bar: Optional[int] = None,
                        rho=rho_rule_positive) -> ICResult:
    """Pick ``K`` in ``1..k_bar`` minimising ``ln S(K) + K rho(K)``.

    ``rho`` is a callable ``(partition, T) -> float``; the default uses the
    smallest group size of each candidate partition, floored at 2.
    """
    y = np.asarray(y, dtype=float)
    T, N = y.shape
    if path.N != N:
        raise InputError(f"merge path covers {path.N} units, panel has {N}")
    k_bar = default_k_bar(N) if k_bar is None else int(k_bar)
    if not 1 <= k_bar <= N:
        raise InputError(f"k_bar must be in 1..{N}, got {k_bar}")
    b = unit_ols_loadings(y, f_tilde)
    f = np.asarray(f_tilde, dtype=float)
    curve = []
    for K in range(1, k_bar + 1):
        part = cut_path(path, K)
        labels = part.labels - 1
        sums = np.zeros((K, b.shape[1]))
        np.add.at(sums, labels, b)
        lam = (sums / part.sizes[:, None])[labels]
        s = goodness_of_fit(y, f, lam)
        r = rho(part, T)
        ic = np.log(max(s, LOG_FLOOR)) + K * r
        curve.append(ICPoint(K, s, float(r), float(ic), int(part.sizes.min())))
    ics = np.array([p.IC for p in curve])
    return ICResult(int(np.argmin(ics)) + 1, tuple(curve), k_bar)


def reestimate_factors(y, lambda_hat) -> np.ndarray:
    """Cross-sectional OLS ``f_t = (L'L)^{-1} L' y_t`` for every period."""
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lambda_hat, dtype=float)
    if lam.ndim != 2 or lam.shape[0] != y.shape[1]:
        raise InputError(f"loadings {lam.shape} do not conform with panel {y.shape}")
    gram = lam.T @ lam
    try:
        return _spd_solve(gram, lam.T @ y.T, "grouped loading Gram matrix").T
    except NumericalError as exc:
        raise NumericalError(
            f"{exc}; the number of distinct grouped loading vectors must be at "
            f"least the number of factors ({lam.shape[1]})"
        ) from None


def fit_grouped(y, f_tilde, partition: Partition) -> GroupedFit:
    lam = grouped_loadings(y, f_tilde, partition)
    s = goodness_of_fit(y, f_tilde, lam)
    f_hat = reestimate_factors(y, lam)
    return GroupedFit(partition, lam, f_hat, s, partition.K)


def resolve_num_factors(y, num_factors: Union[int, str], m_max: Optional[int] = None,
                        kendall: Optional[KendallTauMatrix] = None):
    """Turn ``num_factors`` (an int, ``"auto-ic"`` or ``"auto-er"``) into ``m``.

    Returns ``(m, info)`` where ``info`` records how ``m`` was chosen.
    """
    y = np.asarray(y, dtype=float)
    T, N = y.shape
    if isinstance(num_factors, (int, np.integer)):
        return int(num_factors), {"rule": "fixed"}
    limit = min(N, T) - 1
    m_max = min(DEFAULT_M_MAX, limit) if m_max is None else int(m_max)
    if num_factors == "auto-ic":
        m, ic = fc.select_num_factors_ic(y, m_max)
        return m, {"rule": "auto-ic", "m_max": m_max, "ic": ic.tolist()}
    if num_factors == "auto-er":
        if kendall is None:
            kendall = spatial_kendall_tau(y)
        return fc.select_num_factors_er(kendall, m_max), {"rule": "auto-er", "m_max": m_max}
    raise InputError(f"num_factors must be an integer, 'auto-ic' or 'auto-er'; got {num_factors!r}")


def rfa_pipeline(y, m: Union[int, str] = "auto-ic", k_bar: Optional[int] = None, *,
                 method: str = fc.RTS, m_max: Optional[int] = None, rho=rho_rule_positive,
                 kendall: Optional[KendallTauMatrix] = None) -> RFAResult:
    """Initial fit, clustering, group-number selection and grouped refit.

    With ``method="rts"`` the initial loadings come from Kendall's tau;
    with ``"pca"`` from the sample second-moment matrix. Everything after
    the initial fit is shared.
    """
    y = np.asarray(y, dtype=float)
    if method == fc.RTS and kendall is None:
        kendall = spatial_kendall_tau(y)
    m_val, m_info = resolve_num_factors(y, m, m_max, kendall)
    initial = fc.fit(y, m_val, method, kendall)
    dist = loading_distance_matrix(initial.loadings)
    path = ahc_complete_linkage(dist)
    ic = select_group_number(y, initial.factors, path, k_bar, rho)
    grouped = fit_grouped(y, initial.factors, cut_path(path, ic.k_hat))
    return RFAResult(initial, kendall if method == fc.RTS else None, dist, path, ic,
                     grouped, m_info)
