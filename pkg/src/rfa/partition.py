"""Partitions of the cross-sectional units into disjoint groups."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of ``N`` units to ``K`` nonempty groups.

    ``labels`` holds 1-based group labels. Every label in ``1..K`` must occur.
    """

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InputError("partition labels must be a nonempty 1-D array")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InputError("partition labels must be integers")
        labels = labels.astype(np.int64)
        k = int(labels.max())
        if labels.min() < 1 or np.unique(labels).size != k:
            raise InputError("partition labels must cover 1..K with no empty group")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def K(self) -> int:
        return int(self.labels.max())

    @property
    def N(self) -> int:
        return int(self.labels.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K + 1)[1:]

    def groups(self) -> list[np.ndarray]:
        """0-based member indices of each group, in label order."""
        return [np.flatnonzero(self.labels == k) for k in range(1, self.K + 1)]

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a partition from arbitrary hashable labels.

        Groups are renumbered 1..K by the order of their smallest member.
        """
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return cls(rank[inverse.ravel()] + 1)

    @classmethod
    def from_sizes(cls, sizes) -> "Partition":
        """Contiguous blocks with the given sizes; zero sizes are skipped."""
        sizes = [int(s) for s in sizes if int(s) > 0]
        if not sizes:
            raise InputError("at least one group must be nonempty")
        return cls(np.repeat(np.arange(1, len(sizes) + 1), sizes))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(K={self.K}, sizes={self.sizes.tolist()})"
