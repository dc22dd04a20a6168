"""Complete-linkage agglomerative clustering of loading vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError
from .partition import Partition


class Merge(NamedTuple):
    a: int
    b: int
    height: float
    new_id: int


@dataclass(frozen=True, eq=False)
class MergePath:
    """The ``N - 1`` merges of an AHC run.

    Leaves have ids ``1..N``; the cluster created by merge ``s`` (0-based)
    gets id ``N + 1 + s``. Within each record ``a < b``.
    """

    merges: tuple
    N: int

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def as_array(self) -> np.ndarray:
        """``(N - 1) x 4`` array of ``a, b, height, new_id``."""
        return np.array([tuple(m) for m in self.merges], dtype=float).reshape(-1, 4)


def loading_distance_matrix(loadings) -> np.ndarray:
    """Mean absolute difference between every pair of loading rows."""
    lam = np.asarray(loadings, dtype=float)
    if lam.ndim == 1:
        lam = lam[:, None]
    if lam.ndim != 2 or lam.shape[0] < 1 or lam.shape[1] < 1:
        raise InputError(f"loadings must be N x m with N, m >= 1, got {lam.shape}")
    if not np.all(np.isfinite(lam)):
        raise InputError("loadings contain non-finite values")
    n, m = lam.shape
    d = np.zeros((n, n))
    for k in range(m):
        col = lam[:, k]
        d += np.abs(col[:, None] - col[None, :])
    return d / m


def _check_distance(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputError(f"distance matrix must be square, got {d.shape}")
    if d.shape[0] < 2:
        raise InputError("need at least two units to cluster")
    if not np.all(np.isfinite(d)):
        raise InputError("distance matrix contains non-finite values")
    if not np.array_equal(d, d.T):
        raise InputError("distance matrix is not symmetric")
    if np.any(d < 0):
        raise InputError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise InputError("distance matrix must have a zero diagonal")
    return d


def ahc_complete_linkage(d) -> MergePath:
    """Complete-linkage merge path for the distance matrix ``d``.

    At each step the closest pair of active clusters is merged; ties are
    broken by the smaller cluster id, then the larger one. Distances to the
    merged cluster are updated by the Lance-Williams rule
    ``D(A u B, C) = max(D(A, C), D(B, C))``.
    """
    d = _check_distance(d)
    n = d.shape[0]
    work = d.copy()
    np.fill_diagonal(work, np.inf)
    ids = np.arange(1, n + 1)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        idx = np.flatnonzero(active)
        sub = work[np.ix_(idx, idx)]
        best = sub.min()
        ri, ci = np.nonzero(np.triu(sub == best, k=1))
        ia, ib = ids[idx[ri]], ids[idx[ci]]
        lo, hi = np.minimum(ia, ib), np.maximum(ia, ib)
        pick = np.lexsort((hi, lo))[0]
        sa, sb = idx[ri[pick]], idx[ci[pick]]
        new_id = n + 1 + step
        merges.append(Merge(int(lo[pick]), int(hi[pick]), float(best), new_id))
        # the merged cluster takes over slot sa
        row = np.maximum(work[sa], work[sb])
        work[sa, :] = row
        work[:, sa] = row
        work[sa, sa] = np.inf
        active[sb] = False
        work[sb, :] = np.inf
        work[:, sb] = np.inf
        ids[sa] = new_id
    return MergePath(tuple(merges), n)


def cut_path(path: MergePath, K: int) -> Partition:
    """Partition after the first ``N - K`` merges of ``path``."""
    n = path.N
    if not 1 <= K <= n:
        raise InputError(f"K must be in 1..{n}, got {K}")
    # union-find over cluster ids; members of each id resolve to a root leaf
    parent = np.arange(2 * n)
    for a, b, _, new_id in path.merges[: n - K]:
        parent[a] = new_id
        parent[b] = new_id

    def root(i):
        while parent[i] != i:
            i = parent[i]
        return i

    roots = [root(i) for i in range(1, n + 1)]
    return Partition.from_labels(roots)


def cut_all(path: MergePath, k_max: int | None = None) -> list[Partition]:
    """Partitions for ``K = 1..k_max`` (index ``K - 1``)."""
    n = path.N
    k_max = n if k_max is None else k_max
    if not 1 <= k_max <= n:
        raise InputError(f"k_max must be in 1..{n}, got {k_max}")
    return [cut_path(path, K) for K in range(1, k_max + 1)]
