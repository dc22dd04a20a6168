"""Evaluation metrics and VAR forecasting of estimated factors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError
from .partition import Partition


@dataclass(frozen=True)
class ClusterScore:
    nmi: Optional[float]
    purity: float

    @property
    def nmi_defined(self) -> bool:
        return self.nmi is not None


def common_component_mse(c_hat, c_true) -> float:
    c_hat = np.asarray(c_hat, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    if c_hat.shape != c_true.shape:
        raise InputError(f"shape mismatch: {c_hat.shape} vs {c_true.shape}")
    return float(np.mean((c_hat - c_true) ** 2))


def _labels(g) -> np.ndarray:
    if isinstance(g, Partition):
        return g.labels
    return Partition.from_labels(g).labels


def contingency(g, g_hat) -> np.ndarray:
    """``K0 x K_hat`` table of group overlaps ``|G_i & G_hat_j|``."""
    a, b = _labels(g), _labels(g_hat)
    if a.size != b.size:
        raise InputError(f"partitions cover {a.size} and {b.size} units")
    table = np.zeros((a.max(), b.max()), dtype=np.int64)
    np.add.at(table, (a - 1, b - 1), 1)
    return table


def _entropy2(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log2(p)))


def nmi(g, g_hat) -> Optional[float]:
    """Normalised mutual information with base-2 logs.

    Returns ``None`` when either partition is a single group: its entropy
    is zero, the mutual information is then identically zero and the score
    carries no information.
    """
    table = contingency(g, g_hat)
    n = int(table.sum())
    rows, cols = table.sum(axis=1), table.sum(axis=0)
    h_a, h_b = _entropy2(rows, n), _entropy2(cols, n)
    if h_a == 0 or h_b == 0:
        return None
    h = h_a + h_b
    i, j = np.nonzero(table)
    cell = table[i, j]
    mi = np.sum(cell / n * np.log2(n * cell / (rows[i] * cols[j])))
    return float(min(max(mi / (h / 2), 0.0), 1.0))


def purity(g, g_hat) -> float:
    table = contingency(g, g_hat)
    return float(table.max(axis=0).sum() / table.sum())


def cluster_score(g, g_hat) -> ClusterScore:
    return ClusterScore(nmi(g, g_hat), purity(g, g_hat))


@dataclass(frozen=True, eq=False)
class VarModel:
    """``f_t = c + A_1 f_{t-1} + ... + A_p f_{t-p} + u_t``."""

    coefs: np.ndarray  # (p, m, m)
    intercept: np.ndarray
    residual_cov: np.ndarray

    @property
    def order(self) -> int:
        return self.coefs.shape[0]

    @property
    def m(self) -> int:
        return self.coefs.shape[1]


def var_design(f: np.ndarray, p: int) -> np.ndarray:
    """Rows ``(1, f_{t-1}', ..., f_{t-p}')`` for ``t = p..T-1``."""
    T = f.shape[0]
    lags = [f[p - k : T - k] for k in range(1, p + 1)]
    return np.hstack([np.ones((T - p, 1))] + lags)


def fit_var(f, p: int = 3) -> VarModel:
    """Equation-by-equation OLS with an intercept."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    T, m = f.shape
    if p < 1:
        raise InputError(f"VAR order must be >= 1, got {p}")
    if T <= m * p + p + 1:
        raise InputError(f"need T > {m * p + p + 1} observations for VAR({p}) in {m} series, got {T}")
    x = var_design(f, p)
    target = f[p:]
    beta, _, rank, _ = np.linalg.lstsq(x, target, rcond=None)
    if rank < x.shape[1]:
        raise NumericalError(f"VAR design matrix is rank deficient ({rank} < {x.shape[1]})")
    resid = target - x @ beta
    coefs = beta[1:].reshape(p, m, m).transpose(0, 2, 1)
    return VarModel(coefs, beta[0], resid.T @ resid / (T - p))


def forecast_var(model: VarModel, history, steps: int) -> np.ndarray:
    """Iterated point forecasts for horizons ``1..steps``."""
    history = np.asarray(history, dtype=float)
    if history.ndim == 1:
        history = history[:, None]
    p, m = model.order, model.m
    if history.shape[0] < p or history.shape[1] != m:
        raise InputError(f"history must have at least {p} rows of {m} series")
    if steps < 0:
        raise InputError("steps must be non-negative")
    window = list(history[-p:])
    out = np.empty((steps, m))
    for h in range(steps):
        nxt = model.intercept.copy()
        for k in range(p):
            nxt = nxt + model.coefs[k] @ window[-1 - k]
        out[h] = nxt
        window.append(nxt)
    return out


def forecast_panel_mse(loadings, f_forecast, y_real) -> np.ndarray:
    """``|L f_k - y_k|^2 / N`` for each forecast horizon ``k``."""
    lam = np.asarray(loadings, dtype=float)
    f = np.atleast_2d(np.asarray(f_forecast, dtype=float))
    y = np.atleast_2d(np.asarray(y_real, dtype=float))
    if f.shape[0] != y.shape[0] or lam.shape != (y.shape[1], f.shape[1]):
        raise InputError(
            f"shapes do not conform: loadings {lam.shape}, forecasts {f.shape}, actual {y.shape}"
        )
    err = f @ lam.T - y
    return np.sum(err**2, axis=1) / lam.shape[0]
