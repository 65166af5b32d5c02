#!/usr/bin/env python3
"""
system.py - Discrete-time LTI plants: simulation, reachability, classification.

x(t+1) = A x(t) + B u(t), with state dimension n and input dimension m.

Provides:
- LtiSystem: immutable (A, B) pair with JSON round-trip
- simulate: state sequence x_[0,T] for an input u_[0,T-1]
- reachable_subspace: im [G, AG, ..., A^(n-1) G] by orthonormal Krylov sweeps
- classify: PBH-based controllable / stabilizable / not stabilizable split
- random_system: seeded generators for each class
- adversarial_initial_state: x0 with R(A, [B x0]) a proper subspace

Generator shapes:
| Class                          | Construction                                    |
|--------------------------------|-------------------------------------------------|
| controllable                   | Gaussian (A, B), A rescaled, rejection by class |
| stabilizable-not-controllable  | companion block + Schur uncontrollable block    |
| not-stabilizable               | uncontrollable block with a mode |lambda| >= 1.1 |

Dependencies:
    - numpy: arrays, seeded generators
    - scipy: eigenvalues, companion matrices, random orthogonal similarities

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.linalg
from scipy.stats import ortho_group

try:
    from .matrixlab import Subspace, as_matrix, as_signal, image, is_schur
    from .validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        InfeasibleRequestError,
        SystemClass,
        require_field,
    )
except ImportError:
    from matrixlab import Subspace, as_matrix, as_signal, image, is_schur
    from validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        InfeasibleRequestError,
        SystemClass,
        require_field,
    )

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# Eigenvalues with |lambda| >= 1 - band are treated as needing the PBH test
UNIT_CIRCLE_BAND = 1e-9

# PBH rank threshold, relative to max(1, ||[A B]||_2)
PBH_RTOL = 1e-8

# New Krylov directions below this (relative to max(1, ||A||_2)) are round-off
REACH_RTOL = 1e-9

# Rejection cap for class-constrained generators
MAX_GENERATION_ATTEMPTS = 50

# Eigenvalue-modulus ranges used by the generators
CONTROLLABLE_RADIUS = (0.5, 1.3)
CONTROLLABLE_BLOCK_MODULI = (0.3, 1.3)
STABLE_MODULI = (0.1, 0.9)
UNSTABLE_MODULI = (1.1, 1.6)


# ============================================================================
# SYSTEM MODEL
# ============================================================================

@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Input-state system x(t+1) = A x(t) + B u(t)."""
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A)
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if A.shape[0] < 1:
            raise DimensionError("state dimension must be at least 1")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has shape {B.shape}, expected {A.shape[0]} rows")
        if B.shape[1] < 1:
            raise DimensionError("input dimension must be at least 1")
        for name, arr in (("A", A), ("B", B)):
            arr = np.array(arr, dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def m(self) -> int:
        return int(self.B.shape[1])

    def closed_loop(self, K: Any) -> np.ndarray:
        """A + B K for a gain K of shape (m, n)."""
        K = as_matrix(K)
        if K.shape != (self.m, self.n):
            raise DimensionError(f"gain has shape {K.shape}, expected {(self.m, self.n)}")
        return self.A + self.B @ K

    def is_stabilized_by(self, K: Any) -> bool:
        return is_schur(self.closed_loop(K))

    def distance(self, other: "LtiSystem") -> float:
        """Frobenius distance between the stacked matrices [A B]."""
        if (self.n, self.m) != (other.n, other.m):
            raise DimensionError("systems have different dimensions")
        return float(np.linalg.norm(np.hstack([self.A - other.A, self.B - other.B])))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "n": self.n,
            "m": self.m,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LtiSystem":
        n = require_field(data, "n", "system")
        m = require_field(data, "m", "system")
        if not isinstance(n, int) or n < 1:
            raise DataFormatError(f"system field 'n' must be a positive integer, got {n!r}", field="n")
        if not isinstance(m, int) or m < 1:
            raise DataFormatError(f"system field 'm' must be a positive integer, got {m!r}", field="m")
        A = _parse_block(require_field(data, "A", "system"), "A", (n, n))
        B = _parse_block(require_field(data, "B", "system"), "B", (n, m))
        return cls(A, B)


def _parse_block(value: Any, field: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise DataFormatError(f"field '{field}' is not a numeric row-major array", field=field)
    if arr.ndim == 1 and shape[1] == 1 and arr.size == shape[0]:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise DataFormatError(f"field '{field}' has shape {arr.shape}, expected {shape}", field=field)
    if not np.all(np.isfinite(arr)):
        raise DataFormatError(f"field '{field}' contains non-finite entries", field=field)
    return arr


# ============================================================================
# SIMULATION AND REACHABILITY
# ============================================================================

def simulate(sys: LtiSystem, x0: Any, inputs: Any) -> np.ndarray:
    """
    Run the recursion x(t+1) = A x(t) + B u(t).

    Args:
        sys: Plant
        x0: Initial state in R^n
        inputs: Sequence of T input vectors in R^m

    Returns:
        (T+1, n) array of states x(0), ..., x(T)
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != sys.n:
        raise DimensionError(f"initial state has length {x0.shape[0]}, expected {sys.n}")
    u = as_signal(inputs, sys.m)
    states = np.empty((u.shape[0] + 1, sys.n))
    states[0] = x0
    for t in range(u.shape[0]):
        states[t + 1] = sys.A @ states[t] + sys.B @ u[t]
    return states


def reachable_subspace(A: Any, G: Any) -> Subspace:
    """
    R(A, G) = im [G, AG, ..., A^(n-1) G].

    Built as a staircase of orthonormal blocks: each sweep maps the newest
    block through A, removes what is already spanned and keeps the directions
    that survive the round-off threshold.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionError(f"A must be square, got {A.shape}")
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = G.reshape(-1, 1)
    if G.shape[0] != n:
        raise DimensionError(f"G has {G.shape[0]} rows, expected {n}")

    norms = np.linalg.norm(G, axis=0)
    G = G[:, norms > 0] / norms[norms > 0]
    if G.shape[1] == 0:
        return Subspace.zero(n)
    start = image(G, tol=REACH_RTOL * np.linalg.norm(G, 2))
    basis = start.basis
    frontier = basis
    threshold = REACH_RTOL * max(1.0, float(np.linalg.norm(A, 2)))
    while frontier.shape[1] and basis.shape[1] < n:
        W = A @ frontier
        for _ in range(2):
            W = W - basis @ (basis.T @ W)
        fresh = image(W, tol=threshold)
        if fresh.dim == 0:
            break
        frontier = fresh.basis
        basis = np.linalg.qr(np.hstack([basis, frontier]))[0]
    return Subspace(basis, n, threshold)


def reachable_dimension(sys: LtiSystem, x0: Optional[Any] = None) -> int:
    """dim R(A, B) or, with an initial state, dim R(A, [B x0])."""
    G = sys.B if x0 is None else np.hstack([sys.B, np.asarray(x0, dtype=float).reshape(-1, 1)])
    return reachable_subspace(sys.A, G).dim


# ============================================================================
# CLASSIFICATION
# ============================================================================

def uncontrollable_modes(sys: LtiSystem) -> List[complex]:
    """Eigenvalues of A at which the PBH matrix [A - lambda I, B] drops rank."""
    n = sys.n
    scale = max(1.0, float(np.linalg.norm(np.hstack([sys.A, sys.B]), 2)))
    modes = []
    for lam in scipy.linalg.eigvals(sys.A):
        pbh = np.hstack([sys.A - lam * np.eye(n), sys.B])
        # complex SVD directly; matrixlab works over the reals
        sigma_min = np.linalg.svd(pbh, compute_uv=False)[n - 1]
        if sigma_min <= PBH_RTOL * scale:
            modes.append(complex(lam))
    return modes


def classify(sys: LtiSystem) -> SystemClass:
    """PBH classification into exactly one SystemClass."""
    modes = uncontrollable_modes(sys)
    if not modes:
        return SystemClass.CONTROLLABLE
    if all(abs(lam) < 1.0 - UNIT_CIRCLE_BAND for lam in modes):
        return SystemClass.STABILIZABLE_NOT_CONTROLLABLE
    return SystemClass.NOT_STABILIZABLE


# ============================================================================
# GENERATORS
# ============================================================================

def _random_spectrum(rng: np.random.Generator, size: int, moduli: tuple) -> List[complex]:
    """Self-conjugate list of `size` eigenvalues with moduli in the given range."""
    roots: List[complex] = []
    while len(roots) < size:
        rho = rng.uniform(*moduli)
        if size - len(roots) >= 2 and rng.random() < 0.5:
            theta = rng.uniform(0.1, np.pi - 0.1)
            roots.extend([rho * np.exp(1j * theta), rho * np.exp(-1j * theta)])
        else:
            roots.append(complex(rng.choice([-1.0, 1.0]) * rho))
    return roots


def _real_block(roots: List[complex]) -> np.ndarray:
    """Real block-diagonal matrix with the given self-conjugate spectrum."""
    blocks = []
    i = 0
    while i < len(roots):
        lam = roots[i]
        if abs(lam.imag) > 0:
            blocks.append(np.array([[lam.real, -lam.imag], [lam.imag, lam.real]]))
            i += 2
        else:
            blocks.append(np.array([[lam.real]]))
            i += 1
    return scipy.linalg.block_diag(*blocks)


def _companion(roots: List[complex]) -> np.ndarray:
    return scipy.linalg.companion(np.real(np.poly(roots)))


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0]])
    return ortho_group.rvs(dim=n, random_state=rng)


def _structured(
    rng: np.random.Generator,
    n: int,
    m: int,
    r: int,
    uncontrollable_roots: List[complex],
) -> LtiSystem:
    """[[Ac, A12], [0, Au]], [[Bc], [0]] under a random orthogonal similarity."""
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    if r:
        A[:r, :r] = _companion(_random_spectrum(rng, r, CONTROLLABLE_BLOCK_MODULI))
        A[:r, r:] = 0.5 * rng.standard_normal((r, n - r))
        B[:r, 0] = np.eye(r)[:, 0]
        B[:r, 1:] = rng.standard_normal((r, m - 1))
    A[r:, r:] = _real_block(uncontrollable_roots)
    Q = _orthogonal(rng, n)
    return LtiSystem(Q @ A @ Q.T, Q @ B)


def _draw(rng: np.random.Generator, system_class: SystemClass, n: int, m: int) -> LtiSystem:
    if system_class is SystemClass.CONTROLLABLE:
        A = rng.standard_normal((n, n))
        radius = float(np.max(np.abs(scipy.linalg.eigvals(A))))
        if radius > 0:
            A *= rng.uniform(*CONTROLLABLE_RADIUS) / radius
        return LtiSystem(A, rng.standard_normal((n, m)))
    if system_class is SystemClass.STABILIZABLE_NOT_CONTROLLABLE:
        r = int(rng.integers(1, n))
        return _structured(rng, n, m, r, _random_spectrum(rng, n - r, STABLE_MODULI))
    r = int(rng.integers(0, n))
    unstable = complex(rng.choice([-1.0, 1.0]) * rng.uniform(*UNSTABLE_MODULI))
    others = _random_spectrum(rng, n - r - 1, (STABLE_MODULI[0], UNSTABLE_MODULI[1]))
    return _structured(rng, n, m, r, [unstable] + others)


def random_system(system_class: SystemClass, n: int, m: int, rng_seed: int = 0) -> LtiSystem:
    """
    Draw a random system of the requested class (deterministic in the seed).

    Raises:
        InfeasibleRequestError: For dimensions where the class is empty, or
            when the rejection cap is hit
    """
    if n < 1 or m < 1:
        raise InfeasibleRequestError(f"dimensions must be positive, got n={n}, m={m}")
    if system_class is SystemClass.STABILIZABLE_NOT_CONTROLLABLE and n < 2:
        raise InfeasibleRequestError(
            "a stabilizable, uncontrollable system needs a controllable part and an "
            "uncontrollable part, so n >= 2"
        )
    rng = np.random.default_rng(rng_seed)
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        candidate = _draw(rng, system_class, n, m)
        if classify(candidate) is system_class:
            return candidate
        logger.debug(f"random_system: draw {attempt} for {system_class.value} rejected")
    raise InfeasibleRequestError(
        f"no {system_class.value} system after {MAX_GENERATION_ATTEMPTS} draws (n={n}, m={m})"
    )


def adversarial_initial_state(sys: LtiSystem, rng_seed: int = 0) -> Optional[np.ndarray]:
    """
    An initial state with R(A, [B x0]) != R^n, or None for controllable plants.

    Draws from R(A, B); when two or more dimensions are unreachable, may add a
    real eigen-direction of A outside R(A, B). Zero is always a fallback.
    """
    reach = reachable_subspace(sys.A, sys.B)
    if reach.is_full:
        return None
    rng = np.random.default_rng(rng_seed)
    n = sys.n
    x0 = reach.basis @ rng.standard_normal(reach.dim) if reach.dim else np.zeros(n)

    if n - reach.dim >= 2 and rng.random() < 0.5:
        eigenvalues, eigenvectors = scipy.linalg.eig(sys.A)
        for i in rng.permutation(n):
            if abs(eigenvalues[i].imag) > 1e-12:
                continue
            v = np.real(eigenvectors[:, i])
            v = v / np.linalg.norm(v)
            if reach.residual(v) < 1e-6:
                continue
            candidate = x0 + rng.standard_normal() * v
            if reachable_dimension(sys, candidate) < n:
                x0 = candidate
                break

    if reachable_dimension(sys, x0) >= n:
        logger.warning("adversarial_initial_state: drawn state excites every mode, using zero")
        x0 = np.zeros(n)
    return x0
