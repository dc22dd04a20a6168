"""Sample spatial Kendall's tau matrix.

For a ``T x N`` panel the estimator averages the self-normalised outer
products of all pairwise differences ``y_t - y_s`` (``t < s``). Each term
has unit trace, so the result is PSD with trace one. Pairs with a zero
difference contribute ``0/0`` and are skipped; the average is then taken
over the remaining pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError


@dataclass(frozen=True, eq=False)
class KendallTauMatrix:
    k: np.ndarray
    included_pairs: int

    @property
    def N(self) -> int:
        return self.k.shape[0]


def _check_panel(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError(f"panel must be 2-D, got shape {y.shape}")
    if y.shape[0] < 2:
        raise InputError(f"need T >= 2 periods, got {y.shape[0]}")
    if y.shape[1] < 1:
        raise InputError("panel has no columns")
    if not np.all(np.isfinite(y)):
        raise InputError("panel contains non-finite values")
    return y


def _pair_block(y: np.ndarray, t: int, partners: np.ndarray):
    diff = y[partners] - y[t]
    norm2 = np.einsum("ij,ij->i", diff, diff)
    keep = norm2 > 0
    scaled = diff[keep] / np.sqrt(norm2[keep])[:, None]
    return scaled, int(keep.sum())


def spatial_kendall_tau(
    y,
    *,
    max_pairs: Optional[int] = None,
    seed: int = 0,
    block_rows: int = 4096,
) -> KendallTauMatrix:
    """Spatial Kendall's tau matrix of the rows of ``y``.

    Parameters
    ----------
    y : array_like, shape (T, N)
        Panel with one row per period.
    max_pairs : int, optional
        If given and smaller than ``T(T-1)/2``, average over a uniform
        sample of that many distinct pairs drawn without replacement.
    seed : int
        Seed for the pair subsample.
    block_rows : int
        Normalised differences are buffered into blocks of about this many
        rows before each rank-``k`` update. Blocks are filled in
        lexicographic ``(t, s)`` order, so the result does not depend on
        scheduling.

    Returns
    -------
    KendallTauMatrix
    """
    y = _check_panel(y)
    T, N = y.shape
    total = T * (T - 1) // 2
    if max_pairs is not None and max_pairs < total:
        if max_pairs < 1:
            raise InputError("max_pairs must be positive")
        from .datagen import make_rng

        chosen = np.sort(make_rng(seed).choice(total, size=max_pairs, replace=False))
        rows, cols = np.triu_indices(T, k=1)
        pairs = (rows[chosen], cols[chosen])
    else:
        pairs = None

    acc = np.zeros((N, N))
    count = 0
    if pairs is None:
        buf, filled = [], 0
        for t in range(T - 1):
            scaled, n = _pair_block(y, t, np.arange(t + 1, T))
            count += n
            buf.append(scaled)
            filled += scaled.shape[0]
            if filled >= block_rows:
                block = np.concatenate(buf)
                acc += block.T @ block
                buf, filled = [], 0
        if buf:
            block = np.concatenate(buf)
            acc += block.T @ block
    else:
        rows, cols = pairs
        for start in range(0, rows.size, block_rows):
            r = rows[start : start + block_rows]
            c = cols[start : start + block_rows]
            diff = y[r] - y[c]
            norm2 = np.einsum("ij,ij->i", diff, diff)
            keep = norm2 > 0
            block = diff[keep] / np.sqrt(norm2[keep])[:, None]
            count += int(keep.sum())
            acc += block.T @ block

    if count == 0:
        raise InputError("all periods are identical; Kendall's tau is undefined")
    k = acc / count
    k = 0.5 * (k + k.T)
    return KendallTauMatrix(k, count)
