"""Instance constructors: grids, Laplacians, projections, seeded random operators."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DependentBasis, NonContiguous
from .operators import (
    HermitianOperator,
    OrthogonalProjection,
    make_projection,
    operator_norm,
    unitary_propagator,
)
from .zeno import ProjectionFamily


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.n_points < 4:
            raise ValueError("a grid needs at least 4 points")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def length(self) -> float:
        return self.n_points * self.spacing

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing


@dataclass(frozen=True)
class RegionMask:
    grid: Grid1D
    inside: np.ndarray

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != (self.grid.n_points,):
            raise ValueError("mask length must match the grid")
        if inside.all() or not inside.any():
            raise ValueError("region must be a proper, nonempty subset of the grid")
        object.__setattr__(self, "inside", inside)

    @classmethod
    def interval(cls, grid: Grid1D, lo: int, hi: int) -> "RegionMask":
        """Indices ``lo..hi`` inclusive."""
        inside = np.zeros(grid.n_points, dtype=bool)
        inside[lo:hi + 1] = True
        return cls(grid, inside)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.inside)


class SeededGenerator:
    """Reproducible random streams.

    Wraps numpy's PCG64; each purpose tag gets its own stream seeded from
    ``(seed, crc32(tag))`` through ``SeedSequence``, so the draws for one
    purpose do not depend on how many draws another purpose made.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def stream(self, tag: str) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, zlib.crc32(tag.encode())])
        return np.random.Generator(np.random.PCG64(ss))


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def periodic_laplacian_1d(grid: Grid1D) -> HermitianOperator:
    n, h2 = grid.n_points, grid.spacing**2
    a = np.zeros((n, n))
    idx = np.arange(n)
    a[idx, idx] = 2.0 / h2
    a[idx, (idx + 1) % n] = -1.0 / h2
    a[idx, (idx - 1) % n] = -1.0 / h2
    return HermitianOperator(a)


def indicator_projection(mask: RegionMask) -> OrthogonalProjection:
    return OrthogonalProjection(np.diag(mask.inside.astype(float)))


def dirichlet_laplacian(mask: RegionMask) -> HermitianOperator:
    """Dirichlet stencil on the region, embedded in the full space (zero outside)."""
    idx = mask.indices
    if np.any(np.diff(idx) != 1):
        raise NonContiguous("region must be a single contiguous run")
    n, h2 = mask.grid.n_points, mask.grid.spacing**2
    a = np.zeros((n, n))
    a[idx, idx] = 2.0 / h2
    a[idx[:-1], idx[1:]] = -1.0 / h2
    a[idx[1:], idx[:-1]] = -1.0 / h2
    return HermitianOperator(a)


def rotating_family(p: OrthogonalProjection, a: HermitianOperator, tau_max: float = 1.0) -> ProjectionFamily:
    """``P(tau) = exp(i tau A) P exp(-i tau A)``."""
    if a.dim != p.dim:
        raise ValueError("dimension mismatch")
    if operator_norm(a.matrix) == 0:
        return ProjectionFamily.constant_family(p)

    def at(tau: float) -> OrthogonalProjection:
        u = unitary_propagator(a, -tau)
        return OrthogonalProjection(u @ p.matrix @ u.conj().T, tol=1e-10)

    return ProjectionFamily(p, at, tau_max=tau_max)


def random_psd(dim: int, gen: SeededGenerator, norm_cap: float = 1.0, tag: str = "psd") -> HermitianOperator:
    b = _complex_normal(gen.stream(tag), (dim, dim))
    m = b.conj().T @ b
    return HermitianOperator(m / operator_norm(m) * norm_cap)


def random_hermitian(dim: int, gen: SeededGenerator, norm_cap: float = 1.0, tag: str = "hermitian") -> HermitianOperator:
    b = _complex_normal(gen.stream(tag), (dim, dim))
    m = 0.5 * (b + b.conj().T)
    return HermitianOperator(m / operator_norm(m) * norm_cap)


def random_projection(dim: int, rank: int, gen: SeededGenerator, tag: str = "projection") -> OrthogonalProjection:
    if not 1 <= rank < dim:
        raise ValueError("need 1 <= rank < dim")
    rng = gen.stream(tag)
    for _ in range(3):
        vecs = _complex_normal(rng, (rank, dim))
        try:
            return make_projection(list(vecs))
        except DependentBasis:
            continue
    raise DependentBasis("could not draw an independent basis")


def random_state(dim: int, gen: SeededGenerator, tag: str = "state") -> np.ndarray:
    v = _complex_normal(gen.stream(tag), dim)
    return v / np.linalg.norm(v)


def gaussian_packet(grid: Grid1D, x0: float, sigma: float, k0: float = 0.0) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma**2))
    if k0 != 0.0:
        psi = psi * np.exp(1j * k0 * x)
    psi = psi.astype(complex)
    return psi / np.linalg.norm(psi)
