"""Dense complex linear algebra: Hermitian spectral calculus, exponentials, projections.

Matrices are plain ``numpy`` complex arrays; :class:`HermitianOperator` and
:class:`OrthogonalProjection` are thin validated wrappers that cache their
spectral decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    DependentBasis,
    FunctionUndefined,
    NoConvergence,
    NotHermitian,
    NotProjection,
    NotPSD,
    ScalingOverflow,
)

HERM_TOL = 1e-12
RECON_TOL = 1e-10
PROJ_TOL = 1e-12
PSD_CLAMP = 1e-12

_MATRIX_HEADER = "zlab-matrix v1"


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a square, finite complex matrix (unwrapping zlab types)."""
    if isinstance(a, (HermitianOperator, OrthogonalProjection)):
        return a.matrix
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(v) -> np.ndarray:
    """Return ``v`` as a finite complex vector."""
    s = np.asarray(v, dtype=complex)
    if s.ndim != 1:
        raise ValueError(f"expected a vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("state has non-finite entries")
    return s


def operator_norm(a) -> float:
    """Largest singular value, via the spectral radius of ``A* A``."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    gram = m.conj().T @ m
    gram = 0.5 * (gram + gram.conj().T)
    top = np.linalg.eigvalsh(gram)[-1]
    return float(np.sqrt(max(top, 0.0)))


def hermiticity_defect(a) -> float:
    m = as_matrix(a)
    return operator_norm(m - m.conj().T)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order and the unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decompose(a, herm_tol: float = HERM_TOL) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix.

    Raises
    ------
    NotHermitian
        If ``||A - A*|| > herm_tol * (1 + ||A||)``.
    NoConvergence
        If the LAPACK eigensolver fails or the reconstruction check does not hold.
    """
    m = as_matrix(a)
    scale = 1.0 + operator_norm(m)
    if hermiticity_defect(m) > herm_tol * scale:
        raise NotHermitian(f"Hermiticity defect exceeds {herm_tol:g} relative")
    m = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    dec = SpectralDecomposition(w, v)
    if operator_norm(m - dec.reconstruct()) > RECON_TOL * scale:
        raise NoConvergence("spectral reconstruction check failed")
    return dec


class HermitianOperator:
    """A validated dense Hermitian matrix with a lazily computed spectrum."""

    def __init__(self, matrix, herm_tol: float = HERM_TOL):
        m = np.array(as_matrix(matrix), dtype=complex)
        if hermiticity_defect(m) > herm_tol * (1.0 + operator_norm(m)):
            raise NotHermitian(f"Hermiticity defect exceeds {herm_tol:g} relative")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def from_spectrum(cls, dec: SpectralDecomposition) -> "HermitianOperator":
        op = cls(dec.reconstruct())
        op.__dict__["spectrum"] = dec
        return op

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral_decompose(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_psd(self) -> bool:
        return bool(self.spectrum.eigenvalues[0] >= -PSD_CLAMP)

    def norm(self) -> float:
        w = self.spectrum.eigenvalues
        return float(max(abs(w[0]), abs(w[-1]))) if len(w) else 0.0

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


Spectral = Union[HermitianOperator, SpectralDecomposition]


def _spectrum(d: Spectral) -> SpectralDecomposition:
    if isinstance(d, SpectralDecomposition):
        return d
    if isinstance(d, HermitianOperator):
        return d.spectrum
    return HermitianOperator(d).spectrum


def apply_function(d: Spectral, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Return ``V diag(f(lambda)) V*``.

    ``f`` is called once with the full eigenvalue array and must be vectorized.
    """
    dec = _spectrum(d)
    vals = np.asarray(f(dec.eigenvalues), dtype=complex)
    vals = np.broadcast_to(vals, dec.eigenvalues.shape)
    if not np.all(np.isfinite(vals)):
        raise FunctionUndefined("function is not finite on the spectrum")
    v = dec.eigenvectors
    return (v * vals) @ v.conj().T


def clamped_eigenvalues(d: Spectral) -> np.ndarray:
    """Eigenvalues with round-off negatives set to zero; raises NotPSD otherwise."""
    w = _spectrum(d).eigenvalues
    if len(w) and w[0] < -PSD_CLAMP:
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} < -{PSD_CLAMP:g}")
    return np.where(w < 0.0, 0.0, w)


def unitary_propagator(h: Spectral, t: float) -> np.ndarray:
    """``exp(-i t H)``."""
    if t == 0:
        return np.eye(_spectrum(h).dim, dtype=complex)
    return apply_function(h, lambda lam: np.exp(-1j * t * lam))


def psd_sqrt(h: Spectral) -> HermitianOperator:
    dec = _spectrum(h)
    w = np.sqrt(clamped_eigenvalues(dec))
    return HermitianOperator.from_spectrum(SpectralDecomposition(w, dec.eigenvectors))


# Pade(13) coefficients for the exponential.
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_MAX_SQUARINGS = 60


def expm_general(a) -> np.ndarray:
    """Matrix exponential of an arbitrary square matrix.

    Scales so that the 1-norm is at most 0.5, applies the diagonal (13, 13)
    Pade approximant and squares back.
    """
    m = as_matrix(a)
    n = m.shape[0]
    ident = np.eye(n, dtype=complex)
    norm1 = float(np.max(np.sum(np.abs(m), axis=0))) if n else 0.0
    s = 0
    if norm1 > 0.5:
        s = int(np.ceil(np.log2(norm1 / 0.5)))
    if s > _MAX_SQUARINGS:
        raise ScalingOverflow(f"scaling exponent {s} exceeds {_MAX_SQUARINGS}")
    x = m / 2.0**s
    b = _PADE13
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2)
             + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = (x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2)
         + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


class OrthogonalProjection:
    """A validated Hermitian idempotent matrix."""

    def __init__(self, matrix, tol: float = PROJ_TOL):
        m = np.array(as_matrix(matrix), dtype=complex)
        if operator_norm(m - m.conj().T) > tol:
            raise NotProjection("projection is not self-adjoint")
        if operator_norm(m @ m - m) > tol:
            raise NotProjection("projection is not idempotent")
        tr = float(np.trace(m).real)
        rank = int(round(tr))
        if abs(tr - rank) > RECON_TOL:
            raise NotProjection(f"trace {tr!r} is not an integer")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.matrix = m
        self.rank = rank

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def range_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the range, from the eigenvalues >= 0.5."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w >= 0.5]

    def complement(self) -> "OrthogonalProjection":
        return OrthogonalProjection(np.eye(self.dim) - self.matrix)

    def __repr__(self) -> str:
        return f"OrthogonalProjection(dim={self.dim}, rank={self.rank})"


def make_projection(basis: Sequence, dim: int | None = None) -> OrthogonalProjection:
    """Orthogonal projection onto the span of ``basis``.

    An empty basis needs ``dim`` and gives the zero projection.
    """
    vecs = [as_state(b) for b in basis]
    if not vecs:
        if dim is None:
            raise ValueError("dim is required for an empty basis")
        return OrthogonalProjection(np.zeros((dim, dim)))
    b = np.stack(vecs, axis=1)
    gram = b.conj().T @ b
    if not np.isfinite(np.linalg.cond(gram)) or np.linalg.cond(gram) > 1e12:
        raise DependentBasis("basis vectors are (numerically) linearly dependent")
    q, _ = np.linalg.qr(b)
    return OrthogonalProjection(q @ q.conj().T)


def write_matrix(path, a) -> None:
    """Write a matrix in the ``zlab-matrix v1`` text format."""
    m = as_matrix(a)
    lines = [f"{_MATRIX_HEADER} {m.shape[0]}"]
    for row in m:
        lines.append(" ".join(f"{z.real:.16e},{z.imag:.16e}" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_MATRIX_HEADER):
        raise ValueError(f"{path}: missing '{_MATRIX_HEADER}' header")
    dim = int(lines[0].split()[-1])
    if len(lines) != dim + 1:
        raise ValueError(f"{path}: expected {dim} rows, found {len(lines) - 1}")
    out = np.empty((dim, dim), dtype=complex)
    for i, ln in enumerate(lines[1:]):
        cells = ln.split()
        if len(cells) != dim:
            raise ValueError(f"{path}: row {i} has {len(cells)} entries")
        for j, cell in enumerate(cells):
            re, im = cell.split(",")
            out[i, j] = complex(float(re), float(im))
    return out
