"""Dense complex linear algebra used by the rest of the package.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype complex128 in
row-major (C) order.  Block matrices are a thin wrapper around a 4-D array
indexed ``blocks[m, n]`` for the d-by-d block in grid position (m, n).
Every function here is pure and every value is immutable by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "as_matrix",
    "adjoint",
    "kron",
    "operator_norm",
    "hs_norm",
    "is_hermitian",
    "hermitian_part",
    "psd_cholesky",
    "hermitian_basis",
    "BlockMatrix",
]


def as_matrix(m, square: bool = False) -> np.ndarray:
    """Validate and coerce input to a finite 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if a.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    if square and a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def kron(m, k) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(as_matrix(m), as_matrix(k))


def operator_norm(m) -> float:
    """Largest singular value of ``m``.

    Singular values come from LAPACK in descending order, so the result is
    deterministic for a fixed input.
    """
    a = as_matrix(m)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def hs_norm(m) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.complex128)))


def is_hermitian(m, tol: float = 1e-12) -> bool:
    a = as_matrix(m, square=True)
    scale = max(1.0, float(np.abs(a).max()))
    return bool(np.abs(a - a.conj().T).max() <= tol * scale)


def hermitian_part(m) -> np.ndarray:
    a = as_matrix(m, square=True)
    return 0.5 * (a + a.conj().T)


def psd_cholesky(m, tol: float = 1e-10):
    """Factor a PSD Hermitian matrix as ``L @ L.conj().T``.

    Returns ``None`` when the smallest eigenvalue is below ``-tol * ||m||``,
    i.e. the input is not positive semidefinite up to tolerance.  The factor
    is built from the eigendecomposition (columns scaled by sqrt of the
    clipped eigenvalues), so it is not triangular, only a valid square root
    factor.

    Raises:
        ValueError: if ``m`` is not Hermitian within ``tol``.
    """
    a = as_matrix(m, square=True)
    scale = max(float(np.abs(a).max()), np.finfo(float).tiny)
    if np.abs(a - a.conj().T).max() > tol * max(1.0, scale):
        raise ValueError("not Hermitian")
    a = 0.5 * (a + a.conj().T)
    evals, vecs = np.linalg.eigh(a)
    bound = operator_norm(a)
    if evals[0] < -tol * max(bound, 1e-300):
        return None
    clipped = np.clip(evals, 0.0, None)
    return vecs * np.sqrt(clipped)[None, :]


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal (Frobenius) basis of n-by-n Hermitian matrices.

    Returns an (n*n, n, n) array: first the n diagonal units E_kk, then for
    each pair k < l the real element (E_kl + E_lk)/sqrt(2) followed by the
    imaginary element i(E_kl - E_lk)/sqrt(2).  The ordering is fixed so that
    problem construction is deterministic.
    """
    basis = np.zeros((n * n, n, n), dtype=np.complex128)
    idx = 0
    for k in range(n):
        basis[idx, k, k] = 1.0
        idx += 1
    s = 1.0 / np.sqrt(2.0)
    for k in range(n):
        for l in range(k + 1, n):
            basis[idx, k, l] = s
            basis[idx, l, k] = s
            idx += 1
            basis[idx, k, l] = 1j * s
            basis[idx, l, k] = -1j * s
            idx += 1
    return basis


@dataclass(frozen=True)
class BlockMatrix:
    """An N-by-N grid of d-by-d complex blocks.

    Models a finite truncation of an operator matrix: ``blocks[m, n]`` is the
    block in row m, column n of the assembled (N*d)-by-(N*d) matrix.
    """

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=np.complex128)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3]:
            raise ValueError(f"expected (N, N, d, d) blocks, got shape {b.shape}")
        if not np.all(np.isfinite(b.real)) or not np.all(np.isfinite(b.imag)):
            raise ValueError("block entries must be finite")
        object.__setattr__(self, "blocks", b)

    @property
    def grid_size(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_dim(self) -> int:
        return self.blocks.shape[2]

    def block(self, m: int, n: int) -> np.ndarray:
        return self.blocks[m, n]

    def flatten(self) -> np.ndarray:
        """Assemble into the (N*d)-by-(N*d) matrix."""
        n, d = self.grid_size, self.block_dim
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d)

    @classmethod
    def from_flat(cls, m, grid_size: int, block_dim: int) -> "BlockMatrix":
        """Cut an (N*d)-by-(N*d) matrix back into its block grid."""
        a = as_matrix(m)
        n, d = grid_size, block_dim
        if a.shape != (n * d, n * d):
            raise ValueError(
                f"matrix of shape {a.shape} cannot be re-blocked as {n}x{n} grid "
                f"of {d}x{d} blocks"
            )
        return cls(a.reshape(n, d, n, d).transpose(0, 2, 1, 3))

    @classmethod
    def zeros(cls, grid_size: int, block_dim: int) -> "BlockMatrix":
        return cls(np.zeros((grid_size, grid_size, block_dim, block_dim), dtype=np.complex128))
