"""Dense symmetric linear-algebra primitives with fixed ordering and sign conventions.

Every routine in this module is a pure function of its inputs. Eigenvalues are
always reported in descending order; eigenvector signs are fixed so that each
column's entry of largest absolute value is nonnegative (ties broken by lowest
row index). All downstream modules rely on these conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenSolverError, NotPositiveDefiniteError

ORTHO_TOL = 1e-10
RECON_TOL = 1e-8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array and validate finiteness."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def ensure_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate exact symmetry (no tolerance) and return the array."""
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise ValueError(f"{name} is not exactly symmetric")
    return m


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Force exact symmetry on a numerically symmetric matrix."""
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Descending eigenvalues paired with column-orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return symmetrize((self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T)


def fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest |value| is nonnegative.

    Ties in |value| are broken by the lowest row index, which is what argmax
    returns; the convention is therefore deterministic.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(a) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, descending order.

    Raises EigenSolverError with a condition report if LAPACK fails to
    converge (pathological inputs only).
    """
    m = ensure_symmetric(a)
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        amax = float(np.max(np.abs(m))) if m.size else 0.0
        trace = float(np.trace(m))
        raise EigenSolverError(
            f"symmetric eigensolver failed to converge: dim={m.shape[0]}, "
            f"max|entry|={amax:.6g}, trace={trace:.6g}"
        ) from exc
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = fix_eigenvector_signs(vectors[:, order])
    return EigenDecomposition(eigenvalues=values, eigenvectors=vectors)


def sample_covariance(x) -> np.ndarray:
    """S = sum_i x_i x_i^T / n for zero-mean rows (no centering)."""
    m = as_matrix(x, "observations")
    n = m.shape[0]
    if n < 1:
        raise ValueError("need at least one observation row")
    return symmetrize(m.T @ m / n)


def cholesky_lower(a) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    m = ensure_symmetric(a)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"matrix of dim {m.shape[0]} is not positive definite"
        ) from exc
