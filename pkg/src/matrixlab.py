#!/usr/bin/env python3
"""
matrixlab.py - Tolerance-aware dense linear algebra.

Every rank decision in the toolkit goes through this module so that the
thresholds are reproducible and auditable:

- hankel: block Hankel matrix of a vector signal
- numerical_rank: SVD thresholding, returns the singular values as a certificate
- image / Subspace: orthonormal bases with inclusion and equality queries
- left_kernel_basis: orthonormal basis of {v : v^T M = 0}
- spectral_radius / is_schur: eigenvalue-modulus tests

Default rank tolerance is max(rows, cols) * eps * sigma_max. The relative
factor can be overridden through the PKDESIGN_RANK_RTOL environment variable.

Dependencies:
    - numpy: SVD, QR, sliding windows
    - scipy: dense nonsymmetric eigensolver, block_diag

Version: 1.0.0
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.lib.stride_tricks import sliding_window_view

try:
    from .validation import DimensionError
except ImportError:
    from validation import DimensionError

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

EPS = float(np.finfo(float).eps)

# Environment override for the relative factor of the default rank tolerance
RANK_RTOL_ENV = "PKDESIGN_RANK_RTOL"

# Residual threshold for unit basis vectors in subspace comparisons
CONTAINMENT_TOL = 1e-8

# Orthonormality slack per entry of basis^T basis - I
ORTHONORMAL_ATOL = 10 * EPS

MatrixLike = Union[np.ndarray, Sequence[Sequence[float]], Sequence[float], float]


# ============================================================================
# HELPERS
# ============================================================================

def as_matrix(M: MatrixLike) -> np.ndarray:
    """Convert to a 2-D float array (scalars become 1x1, vectors become rows)."""
    return np.atleast_2d(np.asarray(M, dtype=float))


def as_signal(signal: Any, m: Optional[int] = None) -> np.ndarray:
    """
    Convert a sequence of T vectors in R^m to a (T, m) float array.

    A flat sequence of scalars is read as a scalar signal (m = 1) unless m
    says otherwise, in which case it is reshaped row by row.
    """
    arr = np.asarray(signal, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if m is None or m == 1:
            arr = arr.reshape(-1, 1)
        else:
            if arr.size % m:
                raise DimensionError(f"signal of {arr.size} entries is not a sequence of R^{m} vectors")
            arr = arr.reshape(-1, m)
    elif arr.ndim != 2:
        raise DimensionError(f"signal must be a sequence of vectors, got array of ndim {arr.ndim}")
    if m is not None and arr.shape[1] != m:
        raise DimensionError(f"signal vectors have dimension {arr.shape[1]}, expected {m}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def rank_rtol() -> float:
    """Relative factor override from the environment, or 0.0 when unset."""
    raw = os.environ.get(RANK_RTOL_ENV)
    if not raw:
        return 0.0
    try:
        value = float(raw)
    except ValueError:
        logger.warning(f"Ignoring {RANK_RTOL_ENV}={raw!r}: not a number")
        return 0.0
    if value < 0 or not np.isfinite(value):
        logger.warning(f"Ignoring {RANK_RTOL_ENV}={raw!r}: must be a finite nonnegative number")
        return 0.0
    return value


def default_tolerance(shape: Tuple[int, int], sigma_max: float) -> float:
    """max(rows, cols) * eps * sigma_max, or rtol * sigma_max under the env override."""
    factor = rank_rtol() or max(shape) * EPS
    return factor * sigma_max


# ============================================================================
# RANK
# ============================================================================

@dataclass(frozen=True)
class RankReport:
    """Certificate of a numerical rank decision."""
    rank: int
    singular_values: Tuple[float, ...]
    tol_used: float

    @property
    def smallest_kept(self) -> Optional[float]:
        """Smallest singular value counted in the rank."""
        return self.singular_values[self.rank - 1] if self.rank else None

    @property
    def largest_dropped(self) -> Optional[float]:
        """Largest singular value treated as zero."""
        if self.rank < len(self.singular_values):
            return self.singular_values[self.rank]
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rank": self.rank,
            "singular_values": list(self.singular_values),
            "tol_used": self.tol_used,
        }


def numerical_rank(M: MatrixLike, tol: Optional[float] = None) -> RankReport:
    """
    Numerical rank by singular-value thresholding.

    Args:
        M: Nonempty matrix
        tol: Absolute threshold; singular values strictly above it count.
            Defaults to max(rows, cols) * eps * sigma_max.

    Returns:
        RankReport with rank, nonincreasing singular values and the threshold

    Raises:
        DimensionError: If M is empty
    """
    M = as_matrix(M)
    if M.size == 0:
        raise DimensionError("numerical_rank of an empty matrix")
    s = np.linalg.svd(M, compute_uv=False)
    sigma_max = float(s[0]) if s.size else 0.0
    if tol is None:
        tol = default_tolerance(M.shape, sigma_max)
    rank = int(np.count_nonzero(s > tol))
    return RankReport(rank=rank, singular_values=tuple(float(v) for v in s), tol_used=float(tol))


# ============================================================================
# SUBSPACES
# ============================================================================

@dataclass(frozen=True, eq=False)
class Subspace:
    """
    Subspace of R^n held as an orthonormal basis (n x r).

    Immutable; the basis array is read-only.
    """
    basis: np.ndarray
    ambient_dim: int
    tol: float = 0.0

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != self.ambient_dim:
            raise DimensionError(
                f"basis of shape {basis.shape} does not live in R^{self.ambient_dim}"
            )
        if basis.shape[1] > self.ambient_dim:
            raise DimensionError("more basis vectors than the ambient dimension")
        object.__setattr__(self, "basis", _frozen(basis))

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)), n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n), n)

    def project(self, v: MatrixLike) -> np.ndarray:
        """Orthogonal projection of a vector (or the columns of a matrix)."""
        v = np.asarray(v, dtype=float)
        return self.basis @ (self.basis.T @ v)

    def residual(self, v: MatrixLike) -> float:
        """Norm of the component of v orthogonal to the subspace."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape[0] != self.ambient_dim:
            raise DimensionError(f"vector of length {v.shape[0]} is not in R^{self.ambient_dim}")
        return float(np.linalg.norm(v - self.project(v)))

    def contains_vector(self, v: MatrixLike, tol: float = CONTAINMENT_TOL) -> bool:
        return self.residual(v) <= tol

    def complement(self) -> "Subspace":
        """Orthogonal complement in R^n."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim)
        q, _ = np.linalg.qr(self.basis, mode="complete")
        return Subspace(q[:, self.dim:], self.ambient_dim, self.tol)

    def times_full(self, m: int) -> "Subspace":
        """The product subspace S x R^m of R^(n+m)."""
        return Subspace(scipy.linalg.block_diag(self.basis, np.eye(m)), self.ambient_dim + m, self.tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ambient_dim": self.ambient_dim,
            "dim": self.dim,
            "basis": self.basis.tolist(),
            "tol": self.tol,
        }


def image(M: MatrixLike, tol: Optional[float] = None) -> Subspace:
    """
    Numerical column space of M.

    Args:
        M: Matrix with n rows (may have zero columns)
        tol: Rank threshold passed to the SVD cut (default as in numerical_rank)

    Returns:
        Subspace spanned by the dominant left singular vectors
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    n = M.shape[0]
    if M.shape[1] == 0 or not np.any(M):
        return Subspace(np.zeros((n, 0)), n, float(tol or 0.0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if tol is None:
        tol = default_tolerance(M.shape, float(s[0]))
    r = int(np.count_nonzero(s > tol))
    return Subspace(u[:, :r], n, float(tol))


def projection_residuals(S: Subspace, W: Subspace) -> List[float]:
    """Residual of each basis vector of W after projection onto S."""
    if S.ambient_dim != W.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: R^{S.ambient_dim} vs R^{W.ambient_dim}"
        )
    if W.dim == 0:
        return []
    R = W.basis - S.project(W.basis)
    return [float(v) for v in np.linalg.norm(R, axis=0)]


def subspace_contains(S: Subspace, W: Subspace, tol: float = CONTAINMENT_TOL) -> bool:
    """True iff W is a subspace of S (every basis vector of W within tol of S)."""
    return all(r <= tol for r in projection_residuals(S, W))


def subspace_equal(S: Subspace, W: Subspace, tol: float = CONTAINMENT_TOL) -> bool:
    """Mutual containment."""
    return S.dim == W.dim and subspace_contains(S, W, tol) and subspace_contains(W, S, tol)


# ============================================================================
# KERNELS, HANKEL MATRICES, SPECTRA
# ============================================================================

def left_kernel_basis(M: MatrixLike, tol: Optional[float] = None) -> List[np.ndarray]:
    """
    Orthonormal basis of the left kernel {v : v^T M = 0}.

    Returns:
        List of unit vectors of length rows(M); empty when M has full row rank
    """
    M = as_matrix(M)
    if M.size == 0:
        raise DimensionError("left_kernel_basis of an empty matrix")
    u, s, _ = np.linalg.svd(M, full_matrices=True)
    sigma_max = float(s[0]) if s.size else 0.0
    if tol is None:
        tol = default_tolerance(M.shape, sigma_max)
    r = int(np.count_nonzero(s > tol))
    return [u[:, j].copy() for j in range(r, M.shape[0])]


def hankel(signal: Any, depth: int, m: Optional[int] = None) -> np.ndarray:
    """
    Block Hankel matrix of depth k.

    Column j stacks v(j), v(j+1), ..., v(j+k-1); the result is km x (T-k+1).

    Raises:
        DimensionError: If depth < 1 or depth exceeds the signal length
    """
    v = as_signal(signal, m)
    T, m = v.shape
    if depth < 1:
        raise DimensionError(f"Hankel depth must be positive, got {depth}")
    if depth > T:
        raise DimensionError(f"Hankel depth {depth} exceeds signal length {T}")
    # windows: (T-k+1, m, k) -> stack each window time-major
    windows = sliding_window_view(v, depth, axis=0)
    return windows.transpose(0, 2, 1).reshape(T - depth + 1, depth * m).T.copy()


def spectral_radius(M: MatrixLike) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral radius of a non-square {M.shape} matrix")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(scipy.linalg.eigvals(M))))


def is_schur(M: MatrixLike, margin: float = 0.0) -> bool:
    """All eigenvalues strictly inside the circle of radius 1 - margin."""
    return spectral_radius(M) < 1.0 - margin
