"""First-order multiplicative eigenvalue expansion used as an independent oracle.

For an orthogonal rotation Gamma, the rotated covariance splits into a leading
K x K block and its complement. The k-th eigenvalue of the full matrix is the
block eigenvalue inflated by the squared coupling between the block eigenvector
and the off-block rows, up to a residual that shrinks cubically with the
off-block scale. Tests drive this against exact eigendecompositions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidConfigurationError
from .linalg import ensure_symmetric, sym_eigen, symmetrize

GAMMA_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks of Gamma^T Sigma Gamma with a K x K leading corner."""

    gamma: np.ndarray
    omega11: np.ndarray
    omega21: np.ndarray
    omega22: np.ndarray

    @property
    def k(self) -> int:
        return self.omega11.shape[0]

    def reassemble(self) -> np.ndarray:
        top = np.hstack([self.omega11, self.omega21.T])
        bottom = np.hstack([self.omega21, self.omega22])
        return np.vstack([top, bottom])


class ExpansionResult(NamedTuple):
    approx: float
    leading_correction: float


def block_decompose(sigma, gamma, K: int) -> BlockDecomposition:
    """Rotate sigma by an orthogonal gamma and partition at index K."""
    sigma = ensure_symmetric(sigma, "sigma")
    gamma = np.asarray(gamma, dtype=float)
    p = sigma.shape[0]
    if gamma.shape != (p, p):
        raise InvalidConfigurationError(f"gamma must be {p}x{p}, got {gamma.shape}")
    if not 1 <= K < p:
        raise InvalidConfigurationError(f"K must be in [1, p-1={p - 1}], got {K}")
    defect = float(np.max(np.abs(gamma.T @ gamma - np.eye(p))))
    if defect > GAMMA_ORTHO_TOL:
        raise InvalidConfigurationError(
            f"gamma is not orthogonal: max |G^T G - I| = {defect:.3g}"
        )
    omega = symmetrize(gamma.T @ sigma @ gamma)
    return BlockDecomposition(
        gamma=gamma,
        omega11=omega[:K, :K],
        omega21=omega[K:, :K],
        omega22=omega[K:, K:],
    )


def expansion_approx(bd: BlockDecomposition, k: int) -> ExpansionResult:
    """Multiplicative approximation of the k-th eigenvalue of the full matrix.

    approx = lambda_k(Omega11) * (1 + ||Omega21 xi_k||^2 / lambda_k(Omega11)^2)
    with xi_k the k-th eigenvector of Omega11. The expansion's accuracy
    guarantee assumes lambda_k(Omega11) > 1; below that the value is still
    returned but a warning is raised.
    """
    if not 1 <= k <= bd.k:
        raise InvalidConfigurationError(f"k must be in [1, K={bd.k}], got {k}")
    block = sym_eigen(symmetrize(bd.omega11))
    lam = block.eigenvalues[k - 1]
    if lam <= 1.0:
        warnings.warn(
            f"expansion hypothesis lambda_k(Omega11) > 1 unverifiable (got {lam:.6g}); "
            "proceeding without an accuracy guarantee",
            UserWarning,
            stacklevel=2,
        )
    xi = block.eigenvectors[:, k - 1]
    correction = float(np.linalg.norm(bd.omega21 @ xi) ** 2 / lam**2)
    return ExpansionResult(approx=float(lam * (1.0 + correction)), leading_correction=correction)
