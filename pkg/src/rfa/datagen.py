"""Synthetic panels from elliptical factor models with latent group structure.

Two designs are provided:

- ``gen_example1``: two factors, four equal-sized loading groups, with
  factors and idiosyncratic errors drawn jointly from a heavy-tailed
  elliptical law (multivariate t with 3 degrees of freedom by default).
- ``gen_example2``: two AR(1) factors with Gaussian errors and up to three
  loading groups whose noise variance is scaled so that common and
  idiosyncratic variance are equal at ``kappa = 1``.

All randomness flows through :func:`make_rng`, a counter-based Philox
generator keyed by ``(seed, stream)`` so that Monte Carlo replications can
run in any order and still reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .partition import Partition

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"
SKEW_T = "skew_t"

AR_COEF = 0.5
BURN_IN = 100


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for substream ``stream`` of ``seed``."""
    if seed < 0 or stream < 0:
        raise ConfigError("seed and stream must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(int(seed))


@dataclass(frozen=True)
class RadialLaw:
    """Tail family of an elliptical law.

    ``kind`` is one of ``"gaussian"``, ``"student_t"`` or ``"skew_t"``.
    ``slant`` is only used by ``"skew_t"`` and must match the ambient
    dimension when sampling.
    """

    kind: str = GAUSSIAN
    df: Optional[float] = None
    slant: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, STUDENT_T, SKEW_T):
            raise ConfigError(f"unknown radial law {self.kind!r}")
        if self.kind != GAUSSIAN:
            if self.df is None or not np.isfinite(self.df) or self.df <= 0:
                raise ConfigError(f"{self.kind} requires df > 0, got {self.df!r}")
        if self.kind == SKEW_T:
            if self.slant is None:
                raise ConfigError("skew_t requires a slant vector")
            slant = np.asarray(self.slant, dtype=float)
            if slant.ndim != 1 or not np.all(np.isfinite(slant)):
                raise ConfigError("slant must be a finite 1-D vector")
            object.__setattr__(self, "slant", slant)

    @classmethod
    def gaussian(cls) -> "RadialLaw":
        return cls(GAUSSIAN)

    @classmethod
    def student_t(cls, df: float) -> "RadialLaw":
        return cls(STUDENT_T, df=df)

    @classmethod
    def skew_t(cls, df: float, slant) -> "RadialLaw":
        return cls(SKEW_T, df=df, slant=slant)


@dataclass(frozen=True)
class EllipticalSpec:
    """Location ``mu``, scatter root ``A`` (``d x q``) and radial law."""

    mu: np.ndarray
    scatter_root: np.ndarray
    radial: RadialLaw = field(default_factory=RadialLaw)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        a = np.atleast_2d(np.asarray(self.scatter_root, dtype=float))
        if mu.ndim != 1:
            raise ConfigError("mu must be a vector")
        if a.shape[0] != mu.size:
            raise ConfigError(
                f"scatter_root has {a.shape[0]} rows but mu has length {mu.size}"
            )
        if self.radial.kind == SKEW_T and self.radial.slant.size != mu.size:
            raise ConfigError(
                f"slant has length {self.radial.slant.size}, expected {mu.size}"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "scatter_root", a)

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def scatter(self) -> np.ndarray:
        return self.scatter_root @ self.scatter_root.T


@dataclass(frozen=True)
class GroupLoadingSpec:
    """Common loading vector and size of each latent group."""

    group_vectors: np.ndarray
    group_sizes: tuple

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.group_vectors, dtype=float))
        sizes = tuple(int(s) for s in self.group_sizes)
        if len(sizes) != vecs.shape[0] or len(sizes) < 1:
            raise ConfigError("need one positive size per group vector")
        if any(s < 1 for s in sizes):
            raise ConfigError("group sizes must be positive")
        if np.unique(vecs, axis=0).shape[0] != vecs.shape[0]:
            raise ConfigError("group loading vectors must be pairwise distinct")
        object.__setattr__(self, "group_vectors", vecs)
        object.__setattr__(self, "group_sizes", sizes)

    @property
    def N(self) -> int:
        return sum(self.group_sizes)

    def loadings(self) -> np.ndarray:
        return np.repeat(self.group_vectors, self.group_sizes, axis=0)

    def partition(self) -> Partition:
        return Partition.from_sizes(self.group_sizes)


@dataclass(frozen=True, eq=False)
class SimulatedPanel:
    y: np.ndarray
    true_loadings: np.ndarray
    true_factors: np.ndarray
    true_partition: Partition
    seed: int

    @property
    def common_component(self) -> np.ndarray:
        return self.true_factors @ self.true_loadings.T


def sample_elliptical(spec: EllipticalSpec, T: int, seed=0) -> np.ndarray:
    """Draw ``T`` i.i.d. rows from the elliptical law ``spec``.

    A Gaussian direction ``g`` splits as ``|g| * g/|g|`` with ``g/|g|``
    uniform on the sphere, so ``mu + A g / sqrt(w / df)`` with ``w`` a
    chi-square(df) draw is the required ``mu + xi * A * U``.

    For ``skew_t`` the Gaussian draw ``A g`` is first skewed by hidden
    truncation: it is reflected to ``-A g`` whenever an independent
    ``N(0, 1)`` variable exceeds ``slant @ (A g)``.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    rng = _as_rng(seed)
    d, q = spec.scatter_root.shape
    z = rng.standard_normal((T, q)) @ spec.scatter_root.T
    law = spec.radial
    if law.kind == SKEW_T:
        hidden = rng.standard_normal(T)
        flip = hidden > z @ law.slant
        z[flip] = -z[flip]
    if law.kind in (STUDENT_T, SKEW_T):
        w = rng.chisquare(law.df, size=T)
        z /= np.sqrt(w / law.df)[:, None]
    return spec.mu + z


def example1_loadings(delta: float) -> np.ndarray:
    return np.array(
        [[2.0, 0.0], [0.0, 2.0], [1.0, 2.0 + delta], [2.0 + delta, 1.0]]
    )


def gen_example1(
    N: int,
    T: int,
    delta: float,
    seed: int = 0,
    *,
    skew: bool = False,
    slant: Optional[Sequence[float]] = None,
    df: float = 3.0,
    stream: int = 0,
) -> SimulatedPanel:
    """Two-factor, four-group heavy-tailed design.

    ``(f_t, eps_t)`` is drawn jointly from a multivariate t law with scatter
    ``I_{2+N}``. With ``skew=True`` the hidden-truncation skew-t variant is
    used; ``slant`` defaults to ones on the error block and zeros on the
    factor block.
    """
    if N < 4 or N % 4:
        raise ConfigError(f"N must be a positive multiple of 4, got {N}")
    if not delta >= 0:
        raise ConfigError(f"delta must be >= 0, got {delta}")
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    m = 2
    groups = GroupLoadingSpec(example1_loadings(delta), (N // 4,) * 4)
    d = m + N
    if skew:
        if slant is None:
            slant = np.concatenate([np.zeros(m), np.ones(N)])
        radial = RadialLaw.skew_t(df, slant)
    else:
        radial = RadialLaw.student_t(df)
    spec = EllipticalSpec(np.zeros(d), np.eye(d), radial)
    draws = sample_elliptical(spec, T, make_rng(seed, stream))
    f, eps = draws[:, :m], draws[:, m:]
    lam = groups.loadings()
    return SimulatedPanel(f @ lam.T + eps, lam, f, groups.partition(), seed)


EXAMPLE2_LOADINGS = np.array([[2.0, 0.0], [0.0, 2.0], [2.4, 3.2]])


def ar1_factors(T: int, m: int, rng: np.random.Generator, burn_in: int = BURN_IN):
    """``f_t = 0.5 f_{t-1} + u_t`` from ``f_0 = 0``, first ``burn_in`` dropped."""
    u = rng.standard_normal((T + burn_in, m))
    f = np.empty_like(u)
    prev = np.zeros(m)
    for t in range(T + burn_in):
        prev = AR_COEF * prev + u[t]
        f[t] = prev
    return f[burn_in:]


def gen_example2(
    scenario: Sequence[int],
    T: int,
    kappa: float,
    seed: int = 0,
    *,
    stream: int = 0,
    burn_in: int = BURN_IN,
) -> SimulatedPanel:
    """Two AR(1) factors, groups of sizes ``scenario = (N1, N2, N3)``.

    Unit ``i`` follows ``y_it = lambda_i' f_t + sqrt(theta_i) eps_it`` with
    ``theta_i = 4 |lambda_i|^2 / 3`` and ``eps_it ~ N(0, kappa)``.
    Empty groups are dropped from the true partition.
    """
    sizes = [int(s) for s in scenario]
    if len(sizes) != 3 or any(s < 0 for s in sizes):
        raise ConfigError(f"scenario must be three non-negative sizes, got {scenario}")
    if sum(sizes) < 1:
        raise ConfigError("scenario sizes are all zero")
    if not kappa > 0:
        raise ConfigError(f"kappa must be > 0, got {kappa}")
    if T < 2:
        raise ConfigError(f"T must be >= 2, got {T}")
    rng = make_rng(seed, stream)
    f = ar1_factors(T, 2, rng, burn_in)
    present = [k for k in range(3) if sizes[k] > 0]
    groups = GroupLoadingSpec(
        EXAMPLE2_LOADINGS[present], tuple(sizes[k] for k in present)
    )
    lam = groups.loadings()
    theta = 4.0 * np.sum(lam**2, axis=1) / 3.0
    eps = np.sqrt(kappa) * rng.standard_normal((T, lam.shape[0]))
    y = f @ lam.T + eps * np.sqrt(theta)
    return SimulatedPanel(y, lam, f, groups.partition(), seed)
