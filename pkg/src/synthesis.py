#!/usr/bin/env python3
"""
synthesis.py - Identification and stabilizing gains from informative data.

Branches:
| Branch              | When                                  | Gain                                 |
|---------------------|---------------------------------------|--------------------------------------|
| full-rank           | X- has full row rank n                | K = U- Theta (X- Theta)^-1           |
| subspace-restricted | pk = stab, rank X- = r < n, conditions | K = K_r V^T on V = orthonormal im X- |

In the full-rank branch Theta is a witness of the feasibility problem

    X- Theta = P symmetric, P >= I,
    [[P, X+ Theta], [(X+ Theta)^T, P]] >= delta I

which holds exactly when X+ Theta P^-1 is Schur. When [X-; U-] has full row
rank the consistent set is a single system and the witness is built in
closed form from a Lyapunov solution; otherwise cvxpy solves the problem.
Every witness is re-checked in numpy before a certificate is issued.

Dependencies:
    - numpy: least squares, re-checks
    - scipy: discrete Riccati and Lyapunov solvers, pole placement
    - cvxpy: semidefinite feasibility

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import cvxpy as cp
import numpy as np
import scipy.linalg
from scipy.signal import place_poles

try:
    from .informativity import (
        TRAJECTORY_RTOL,
        Dataset,
        consistent_set,
        data_image,
        data_rank,
        stabilization_conditions,
    )
    from .matrixlab import as_matrix, image, is_schur, spectral_radius
    from .system import UNIT_CIRCLE_BAND, LtiSystem, classify, reachable_subspace
    from .validation import (
        FORMAT_VERSION,
        DimensionError,
        NotInformativeError,
        NotStabilizableError,
        PriorKnowledge,
        TrajectoryMismatchError,
        parse_enum,
    )
except ImportError:
    from informativity import (
        TRAJECTORY_RTOL,
        Dataset,
        consistent_set,
        data_image,
        data_rank,
        stabilization_conditions,
    )
    from matrixlab import as_matrix, image, is_schur, spectral_radius
    from system import UNIT_CIRCLE_BAND, LtiSystem, classify, reachable_subspace
    from validation import (
        FORMAT_VERSION,
        DimensionError,
        NotInformativeError,
        NotStabilizableError,
        PriorKnowledge,
        TrajectoryMismatchError,
        parse_enum,
    )

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# Strictness margin for the block inequality
SDP_MARGIN = 1e-7

# Tried in order, among the solvers cvxpy reports as installed
SDP_SOLVERS = ("CLARABEL", "SCS", "CVXOPT")

# Center of the fallback pole pattern and the spacing between poles
PLACEMENT_POLE = 0.5
PLACEMENT_SPREAD = 0.05

# Perturbation sizes (Frobenius) used when sampling the consistent set
SAMPLE_SCALES = (0.1, 1.0, 10.0)

# Sampling attempts allowed per requested sample (pk rejection)
SAMPLE_ATTEMPT_FACTOR = 100


# ============================================================================
# RESULT TYPES
# ============================================================================

class GainBranch(Enum):
    FULL_RANK = "full-rank"
    SUBSPACE_RESTRICTED = "subspace-restricted"


class SynthesisStatus(Enum):
    CERTIFIED = "certified"
    INFEASIBLE = "infeasible"
    NOT_INFORMATIVE = "not-informative"


@dataclass(frozen=True, eq=False)
class RestrictedDynamics:
    """Dynamics identified on im X-: V^T X+ = A_r V^T X- + B_r U-."""
    A_r: np.ndarray
    B_r: np.ndarray
    V: np.ndarray

    @property
    def r(self) -> int:
        return int(self.V.shape[1])

    def to_dict(self) -> Dict[str, Any]:
        return {"A_r": self.A_r.tolist(), "B_r": self.B_r.tolist(), "V": self.V.tolist()}


@dataclass(frozen=True, eq=False)
class GainCertificate:
    """A data-certified stabilizing gain and its witness."""
    K: np.ndarray
    closed_loop_radius_on_data: float
    branch: GainBranch
    witness: str                                   # analytic, sdp or restricted
    theta: Optional[np.ndarray] = None
    restricted: Optional[RestrictedDynamics] = None
    K_r: Optional[np.ndarray] = None
    solver: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "version": FORMAT_VERSION,
            "K": self.K.tolist(),
            "branch": self.branch.value,
            "radius": self.closed_loop_radius_on_data,
            "witness": self.witness,
        }
        if self.theta is not None:
            data["theta"] = self.theta.tolist()
        if self.solver:
            data["solver"] = self.solver
        if self.restricted is not None:
            data.update(self.restricted.to_dict())
            data["K_r"] = self.K_r.tolist()
        return data


@dataclass(frozen=True)
class SynthesisResult:
    status: SynthesisStatus
    certificate: Optional[GainCertificate] = None
    reason: str = ""

    @property
    def certified(self) -> bool:
        return self.status is SynthesisStatus.CERTIFIED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "status": self.status.value,
            "reason": self.reason,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


# ============================================================================
# IDENTIFICATION
# ============================================================================

def identify(data: Dataset) -> LtiSystem:
    """
    The unique (A, B) with A X- + B U- = X+.

    Raises:
        NotInformativeError: If [X-; U-] lacks full row rank (carries the rank report)
        TrajectoryMismatchError: If no system explains the data exactly
    """
    report = data_rank(data.stacked)
    if report.rank != data.n + data.m:
        raise NotInformativeError(
            f"data is not informative for identification: rank [X-; U-] = {report.rank}, "
            f"need {data.n + data.m}",
            rank_report=report,
        )
    solution, *_ = np.linalg.lstsq(data.stacked.T, data.X_plus.T, rcond=None)
    AB = solution.T
    residual = float(np.linalg.norm(AB @ data.stacked - data.X_plus))
    if residual > TRAJECTORY_RTOL * (1.0 + np.linalg.norm(data.X_plus)):
        raise TrajectoryMismatchError(
            f"no linear system reproduces the data (residual {residual:.3e})", residual=residual
        )
    return LtiSystem(AB[:, : data.n], AB[:, data.n:])


# ============================================================================
# MODEL-BASED GAINS
# ============================================================================

def _placement_gain(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """u = K x placing distinct poles around PLACEMENT_POLE; (A, B) controllable."""
    n = A.shape[0]
    poles = PLACEMENT_POLE + PLACEMENT_SPREAD * (np.arange(n) - (n - 1) / 2.0)
    # place on an orthonormal basis of im B so the input matrix has full column rank
    W = image(B).basis
    placed = place_poles(A, W, poles)
    return -np.linalg.pinv(B) @ W @ placed.gain_matrix


def stabilizing_gain(A: Any, B: Any) -> np.ndarray:
    """
    A gain K with A + B K Schur.

    The controllable part from the staircase split is stabilized by the
    discrete Riccati solution with Q = I, R = I; pole placement takes over
    when the Riccati solve fails.

    Raises:
        NotStabilizableError: If an uncontrollable mode is not Schur
    """
    A = as_matrix(A)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n, m = A.shape[0], B.shape[1]
    reach = reachable_subspace(A, B)
    if not reach.is_full:
        Qu = reach.complement().basis
        radius = spectral_radius(Qu.T @ A @ Qu)
        if radius >= 1.0 - UNIT_CIRCLE_BAND:
            raise NotStabilizableError(f"uncontrollable part has spectral radius {radius:.6g}")
    if reach.dim == 0:
        return np.zeros((m, n))

    Qc = reach.basis
    Ac, Bc = Qc.T @ A @ Qc, Qc.T @ B
    try:
        P = scipy.linalg.solve_discrete_are(Ac, Bc, np.eye(reach.dim), np.eye(m))
        Kc = -np.linalg.solve(np.eye(m) + Bc.T @ P @ Bc, Bc.T @ P @ Ac)
        if not is_schur(Ac + Bc @ Kc):
            raise np.linalg.LinAlgError("Riccati gain is not stabilizing")
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.warning(f"Riccati solve failed ({e}); placing poles around {PLACEMENT_POLE}")
        Kc = _placement_gain(Ac, Bc)

    K = Kc @ Qc.T
    if not is_schur(A + B @ K):
        raise NotStabilizableError(
            f"no stabilizing gain found (closed-loop radius {spectral_radius(A + B @ K):.6g})"
        )
    return K


# ============================================================================
# FULL-RANK BRANCH
# ============================================================================

def _analytic_witness(data: Dataset) -> Optional[np.ndarray]:
    """
    Theta from a Lyapunov solution of the least-squares closed loop.

    With [X-; U-] of full row rank, X+ Theta P^-1 is exactly the closed loop of
    the least-squares fit, so rounded or slightly inconsistent data still gets
    a witness that passes the numpy re-check.
    """
    fit = consistent_set(data)
    if not fit.is_consistent:
        logger.info(f"analytic witness on the least-squares fit (residual {fit.residual:.3e})")
    sys = fit.particular
    try:
        K = stabilizing_gain(sys.A, sys.B)
    except NotStabilizableError as e:
        logger.info(f"identified system cannot be stabilized: {e}")
        return None
    P = scipy.linalg.solve_discrete_lyapunov(sys.closed_loop(K), np.eye(data.n))
    return np.linalg.pinv(data.stacked) @ np.vstack([P, K @ P])


def _sdp_witness(data: Dataset, margin: float) -> Tuple[Optional[np.ndarray], Optional[str]]:
    """Solve the feasibility problem; (None, solver) when infeasible or unsolved."""
    n, T = data.n, data.T
    Xm, Xp = data.X_minus, data.X_plus
    theta = cp.Variable((T, n))
    P = cp.Variable((n, n), symmetric=True)
    S = cp.Variable((2 * n, 2 * n), symmetric=True)
    XpTheta = Xp @ theta
    constraints = [
        Xm @ theta == P,
        S == cp.bmat([[P, XpTheta], [XpTheta.T, P]]),
        P >> np.eye(n),
        S >> margin * np.eye(2 * n),
    ]
    problem = cp.Problem(cp.Minimize(cp.trace(P)), constraints)

    installed = set(cp.installed_solvers())
    for name in SDP_SOLVERS:
        if name not in installed:
            continue
        try:
            problem.solve(solver=name)
        except cp.error.SolverError as e:
            logger.debug(f"SDP solver {name} failed: {e}")
            continue
        logger.debug(f"SDP solver {name}: status {problem.status}")
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return None, name
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and theta.value is not None:
            return np.asarray(theta.value), name
    logger.warning(f"no SDP solver produced a result (installed: {sorted(installed)})")
    return None, None


def _certificate_from_theta(
    data: Dataset,
    theta: np.ndarray,
    witness: str,
    solver: Optional[str] = None,
) -> Optional[GainCertificate]:
    """Re-check a witness in numpy and build the certificate."""
    P = data.X_minus @ theta
    P = 0.5 * (P + P.T)
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        logger.warning(f"{witness} witness rejected: X- Theta is not positive definite")
        return None
    P_inv = np.linalg.inv(P)
    radius = spectral_radius(data.X_plus @ theta @ P_inv)
    if radius >= 1.0:
        logger.warning(f"{witness} witness rejected: X+ Theta (X- Theta)^-1 has radius {radius:.6g}")
        return None
    K = data.U_minus @ theta @ P_inv
    return GainCertificate(K, radius, GainBranch.FULL_RANK, witness, theta=theta, solver=solver)


def stabilize_fullrank(data: Dataset, margin: float = SDP_MARGIN) -> SynthesisResult:
    """
    Gain for every system consistent with data whose X- has full row rank.

    Raises:
        NotInformativeError: If X- is rank deficient
    """
    state = data_rank(data.X_minus)
    if state.rank != data.n:
        raise NotInformativeError(
            f"X- has rank {state.rank}, the full-rank branch needs {data.n}", rank_report=state
        )
    if data_rank(data.stacked).rank == data.n + data.m:
        witness, solver = "analytic", None
        theta = _analytic_witness(data)
    else:
        witness = "sdp"
        theta, solver = _sdp_witness(data, margin)

    if theta is None:
        return SynthesisResult(SynthesisStatus.INFEASIBLE, reason="no feasible witness Theta")
    certificate = _certificate_from_theta(data, theta, witness, solver)
    if certificate is None:
        return SynthesisResult(SynthesisStatus.INFEASIBLE, reason=f"{witness} witness failed the re-check")
    logger.info(f"full-rank gain certified ({witness}), radius on data {certificate.closed_loop_radius_on_data:.4f}")
    return SynthesisResult(SynthesisStatus.CERTIFIED, certificate)


# ============================================================================
# SUBSPACE-RESTRICTED BRANCH
# ============================================================================

def restricted_dynamics(data: Dataset) -> RestrictedDynamics:
    """
    Identify the dynamics on im X-.

    Raises:
        NotInformativeError: If im X+ is not in im X- or the product-image
            condition fails
    """
    conditions = stabilization_conditions(data)
    if not all(conditions.values()):
        failed = ", ".join(name for name, ok in conditions.items() if not ok)
        raise NotInformativeError(f"restricted dynamics undefined: {failed} does not hold",
                                  rank_report=data_rank(data.stacked))
    V = data_image(data.X_minus).basis.copy()
    # sign convention: the largest entry of each basis vector is positive
    for j in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] = -V[:, j]
    r = V.shape[1]
    Z = np.vstack([V.T @ data.X_minus, data.U_minus])
    target = V.T @ data.X_plus
    solution, *_ = np.linalg.lstsq(Z.T, target.T, rcond=None)
    AB = solution.T
    residual = float(np.linalg.norm(AB @ Z - target))
    if residual > TRAJECTORY_RTOL * (1.0 + np.linalg.norm(target)):
        raise TrajectoryMismatchError(
            f"restricted dynamics do not reproduce the data (residual {residual:.3e})", residual=residual
        )
    return RestrictedDynamics(AB[:, :r], AB[:, r:], V)


def stabilize_restricted(data: Dataset) -> SynthesisResult:
    """K = K_r V^T with A_r + B_r K_r Schur; needs the restricted conditions."""
    rd = restricted_dynamics(data)
    if rd.r == 0:
        K_r = np.zeros((data.m, 0))
        radius = 0.0
    else:
        try:
            K_r = stabilizing_gain(rd.A_r, rd.B_r)
        except NotStabilizableError as e:
            logger.warning(f"restricted pair cannot be stabilized: {e}")
            return SynthesisResult(SynthesisStatus.INFEASIBLE, reason=str(e))
        radius = spectral_radius(rd.A_r + rd.B_r @ K_r)
    K = K_r @ rd.V.T
    certificate = GainCertificate(
        K, radius, GainBranch.SUBSPACE_RESTRICTED, "restricted", restricted=rd, K_r=K_r
    )
    logger.info(f"restricted gain certified on a {rd.r}-dimensional image, radius {radius:.4f}")
    return SynthesisResult(SynthesisStatus.CERTIFIED, certificate)


def stabilize_with_prior(data: Dataset, pk: Any = PriorKnowledge.ALL) -> SynthesisResult:
    """Dispatch to the full-rank or the subspace-restricted branch."""
    pk = parse_enum(PriorKnowledge, pk, "pk")
    state = data_rank(data.X_minus)
    if pk is not PriorKnowledge.STABILIZABLE or state.rank == data.n:
        if state.rank < data.n:
            return SynthesisResult(
                SynthesisStatus.NOT_INFORMATIVE,
                reason=f"X- has rank {state.rank} < {data.n}",
            )
        return stabilize_fullrank(data)
    conditions = stabilization_conditions(data)
    if not all(conditions.values()):
        failed = ", ".join(name for name, ok in conditions.items() if not ok)
        return SynthesisResult(SynthesisStatus.NOT_INFORMATIVE, reason=f"{failed} does not hold")
    return stabilize_restricted(data)


# ============================================================================
# AUDIT
# ============================================================================

@dataclass(frozen=True)
class GainAuditReport:
    requested: int
    accepted: int
    stabilized: int
    max_radius: float
    attempts: int
    singleton: bool

    @property
    def all_stabilized(self) -> bool:
        return self.accepted > 0 and self.stabilized == self.accepted

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "requested": self.requested,
            "accepted": self.accepted,
            "stabilized": self.stabilized,
            "max_radius": self.max_radius,
            "attempts": self.attempts,
            "singleton": self.singleton,
            "all_stabilized": self.all_stabilized,
        }


def verify_gain_on_consistent_set(
    data: Dataset,
    pk: Any,
    K: Any,
    samples: int = 100,
    rng_seed: int = 0,
) -> GainAuditReport:
    """
    Check K against sampled members of the consistent set admitted by pk.

    Samples alternate between the perturbation sizes in SAMPLE_SCALES; members
    outside pk are rejected. A singleton set yields one deterministic sample.
    """
    pk = parse_enum(PriorKnowledge, pk, "pk")
    K = as_matrix(K)
    if K.shape != (data.m, data.n):
        raise DimensionError(f"gain has shape {K.shape}, expected {(data.m, data.n)}")
    cs = consistent_set(data)
    if not cs.is_consistent:
        logger.warning(f"auditing a gain on inconsistent data (residual {cs.residual:.3e})")

    if cs.is_singleton:
        sys = cs.particular
        admitted = pk.admits(classify(sys))
        radius = spectral_radius(sys.closed_loop(K))
        return GainAuditReport(
            requested=samples,
            accepted=int(admitted),
            stabilized=int(admitted and radius < 1.0),
            max_radius=radius if admitted else 0.0,
            attempts=1,
            singleton=True,
        )

    rng = np.random.default_rng(rng_seed)
    accepted = stabilized = attempts = 0
    max_radius = 0.0
    while accepted < samples and attempts < SAMPLE_ATTEMPT_FACTOR * samples:
        scale = SAMPLE_SCALES[attempts % len(SAMPLE_SCALES)]
        attempts += 1
        sys = cs.sample(rng, scale)
        if not pk.admits(classify(sys)):
            continue
        accepted += 1
        radius = spectral_radius(sys.closed_loop(K))
        max_radius = max(max_radius, radius)
        stabilized += int(radius < 1.0)
    if accepted < samples:
        logger.warning(f"only {accepted} of {samples} samples admitted by pk={pk.value}")
    return GainAuditReport(samples, accepted, stabilized, max_radius, attempts, False)
