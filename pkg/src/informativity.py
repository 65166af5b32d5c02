#!/usr/bin/env python3
"""
informativity.py - Datasets, the data-consistent set and informativity verdicts.

A dataset D = (u_[0,T-1], x_[0,T]) is summarized by the blocks

    U- = [u(0) ... u(T-1)]     (m x T)
    X- = [x(0) ... x(T-1)]     (n x T)
    X+ = [x(1) ... x(T)]       (n x T)

and every system consistent with it satisfies A X- + B U- = X+.

Verdicts:
- identification: rank [X-; U-] = n + m, for every supported prior knowledge
- stabilization, pk in {all, cont} or X- full row rank: X- full row rank and
  the semidefinite feasibility problem in synthesis is feasible
- stabilization, pk = stab with X- rank deficient: im X+ in im X- and
  rank [X-; U-] = rank X- + m

Not informative is a verdict value, never an exception.

Dependencies:
    - numpy: block views, least squares, CSV import

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

try:
    from .inputdesign import is_persistently_exciting
    from .matrixlab import (
        RankReport,
        Subspace,
        as_matrix,
        as_signal,
        image,
        left_kernel_basis,
        numerical_rank,
        subspace_contains,
        subspace_equal,
    )
    from .system import LtiSystem, reachable_subspace, simulate
    from .validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        Goal,
        PriorKnowledge,
        TrajectoryMismatchError,
        parse_enum,
        require_field,
    )
except ImportError:
    from inputdesign import is_persistently_exciting
    from matrixlab import (
        RankReport,
        Subspace,
        as_matrix,
        as_signal,
        image,
        left_kernel_basis,
        numerical_rank,
        subspace_contains,
        subspace_equal,
    )
    from system import LtiSystem, reachable_subspace, simulate
    from validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        Goal,
        PriorKnowledge,
        TrajectoryMismatchError,
        parse_enum,
        require_field,
    )

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# Relative rank threshold for data blocks (tol = rtol * sigma_max)
DATA_RANK_RTOL = 1e-10

# Data is a trajectory of (A, B) when ||A X- + B U- - X+||_F <= rtol * (1 + ||X+||_F)
TRAJECTORY_RTOL = 1e-8


# ============================================================================
# DATA TOLERANCES
# ============================================================================

def data_tolerance(M: Any) -> Optional[float]:
    """Rank threshold for a data block: never tighter than the numerical_rank default."""
    M = as_matrix(M)
    if M.size == 0:
        return None
    sigma_max = float(np.linalg.norm(M, 2))
    default = numerical_rank(M).tol_used
    return max(default, DATA_RANK_RTOL * sigma_max)


def data_rank(M: Any) -> RankReport:
    """numerical_rank under the data tolerance."""
    return numerical_rank(M, tol=data_tolerance(M))


def data_image(M: Any) -> Subspace:
    return image(M, tol=data_tolerance(M))


# ============================================================================
# DATASET
# ============================================================================

@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Input-state data: T inputs in R^m and T+1 states in R^n.

    Arrays are stored time-major ((T, m) and (T+1, n)) and read-only; the
    matrix blocks are recomputed views.
    """
    inputs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.inputs, dtype=float)
        x = np.asarray(self.states, dtype=float)
        if u.ndim == 1:
            u = u.reshape(-1, 1)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if u.ndim != 2 or x.ndim != 2:
            raise DimensionError("inputs and states must be sequences of vectors")
        if u.shape[0] < 1:
            raise DimensionError("a dataset needs at least one input sample")
        if x.shape[0] != u.shape[0] + 1:
            raise DimensionError(
                f"{u.shape[0]} inputs need {u.shape[0] + 1} states, got {x.shape[0]}"
            )
        if u.shape[1] < 1 or x.shape[1] < 1:
            raise DimensionError("input and state dimensions must be positive")
        for name, arr in (("inputs", u), ("states", x)):
            arr = np.array(arr, dtype=float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def T(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def n(self) -> int:
        return int(self.states.shape[1])

    @property
    def m(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def U_minus(self) -> np.ndarray:
        return self.inputs.T

    @property
    def X_minus(self) -> np.ndarray:
        return self.states[:-1].T

    @property
    def X_plus(self) -> np.ndarray:
        return self.states[1:].T

    @property
    def stacked(self) -> np.ndarray:
        """[X-; U-], shape (n + m, T)."""
        return np.vstack([self.X_minus, self.U_minus])

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0].copy()

    def prefix(self, length: int) -> "Dataset":
        """The first `length` samples: u_[0,length-1], x_[0,length]."""
        if not 1 <= length <= self.T:
            raise DimensionError(f"prefix length must be in [1, {self.T}], got {length}")
        return Dataset(self.inputs[:length], self.states[: length + 1])

    def scaled(self, factor: float) -> "Dataset":
        """The same experiment with inputs and states multiplied by a common scalar."""
        return Dataset(factor * self.inputs, factor * self.states)

    def residual(self, sys: LtiSystem) -> float:
        """||A X- + B U- - X+||_F."""
        if (sys.n, sys.m) != (self.n, self.m):
            raise DimensionError(
                f"system is ({sys.n}, {sys.m}) but the data is ({self.n}, {self.m})"
            )
        return float(np.linalg.norm(sys.A @ self.X_minus + sys.B @ self.U_minus - self.X_plus))

    def is_trajectory_of(self, sys: LtiSystem) -> bool:
        return bool(self.residual(sys) <= TRAJECTORY_RTOL * (1.0 + np.linalg.norm(self.X_plus)))

    @classmethod
    def from_trajectory(cls, sys: LtiSystem, x0: Any, inputs: Any) -> "Dataset":
        """Simulate sys from x0 under the inputs and record the result."""
        u = as_signal(inputs, sys.m)
        return cls(u, simulate(sys, x0, u))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "T": self.T,
            "n": self.n,
            "m": self.m,
            "inputs": self.inputs.tolist(),
            "states": self.states.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Dataset":
        inputs = _numeric(require_field(data, "inputs", "dataset"), "inputs")
        states = _numeric(require_field(data, "states", "dataset"), "states")
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        if "T" in data and data["T"] != inputs.shape[0]:
            raise DataFormatError(
                f"dataset field 'T' is {data['T']} but 'inputs' has {inputs.shape[0]} entries",
                field="T",
            )
        if states.shape[0] != inputs.shape[0] + 1:
            raise DataFormatError(
                f"'states' must have one more entry than 'inputs' "
                f"({states.shape[0]} vs {inputs.shape[0]})",
                field="states",
            )
        for name, expected, actual in (("n", states.shape[1], data.get("n")), ("m", inputs.shape[1], data.get("m"))):
            if actual is not None and actual != expected:
                raise DataFormatError(f"dataset field '{name}' is {actual}, data implies {expected}", field=name)
        try:
            return cls(inputs, states)
        except DimensionError as e:
            raise DataFormatError(str(e), field="inputs")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Dataset":
        """
        Import a trajectory from CSV.

        One header row naming the columns u1..um, x1..xn, then one row per
        time step t = 0..T. The input cells of the final row may be empty.
        """
        path = Path(path)
        if not path.exists():
            raise DataFormatError(f"file not found: {path}", field=str(path))
        try:
            table = np.genfromtxt(path, delimiter=",", names=True, dtype=float, ndmin=1)
        except ValueError as e:
            raise DataFormatError(f"{path}: {e}", field=str(path))
        names = table.dtype.names or ()
        u_cols = sorted((c for c in names if c.startswith("u")), key=_column_index)
        x_cols = sorted((c for c in names if c.startswith("x")), key=_column_index)
        if not u_cols:
            raise DataFormatError(f"{path}: no input columns (u1, u2, ...)", field="u1")
        if not x_cols:
            raise DataFormatError(f"{path}: no state columns (x1, x2, ...)", field="x1")
        states = np.column_stack([table[c] for c in x_cols])
        inputs = np.column_stack([table[c] for c in u_cols])[:-1]
        if states.shape[0] < 2:
            raise DataFormatError(f"{path}: need at least two rows (x(0) and x(1))", field="x1")
        if not np.all(np.isfinite(states)):
            raise DataFormatError(f"{path}: state columns contain empty or non-numeric cells", field=x_cols[0])
        if not np.all(np.isfinite(inputs)):
            raise DataFormatError(f"{path}: input columns contain empty or non-numeric cells", field=u_cols[0])
        return cls(inputs, states)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        header = ",".join([f"u{i + 1}" for i in range(self.m)] + [f"x{i + 1}" for i in range(self.n)])
        padded = np.vstack([self.inputs, np.full((1, self.m), np.nan)])
        np.savetxt(path, np.hstack([padded, self.states]), delimiter=",", header=header, comments="", fmt="%.17g")
        return path


def _numeric(value: Any, field: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise DataFormatError(f"dataset field '{field}' must be an array of numeric vectors", field=field)
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise DataFormatError(f"dataset field '{field}' must be a nonempty array of vectors", field=field)
    if not np.all(np.isfinite(arr)):
        raise DataFormatError(f"dataset field '{field}' contains non-finite entries", field=field)
    return arr


def _column_index(name: str) -> int:
    try:
        return int(name[1:])
    except ValueError:
        raise DataFormatError(f"unrecognized column '{name}'", field=name)


# ============================================================================
# DATA-CONSISTENT SET
# ============================================================================

@dataclass(frozen=True, eq=False)
class ConsistentSet:
    """
    All (A, B) with A X- + B U- = X+, as a particular solution plus a kernel.

    Kernel directions are e_i N_j^T, with N_j the left-kernel vectors of
    [X-; U-]; a member is [A0 B0] + C N^T for any n x k coefficient matrix C.
    """
    n: int
    m: int
    particular_matrix: np.ndarray   # [A0 B0], n x (n + m)
    kernel: np.ndarray              # N, (n + m) x k
    is_consistent: bool
    residual: float

    @property
    def particular(self) -> LtiSystem:
        return LtiSystem(self.particular_matrix[:, : self.n], self.particular_matrix[:, self.n:])

    @property
    def is_singleton(self) -> bool:
        return self.kernel.shape[1] == 0

    @property
    def dimension(self) -> int:
        """Dimension of the affine set: n times the left-kernel dimension."""
        return self.n * self.kernel.shape[1]

    @property
    def kernel_basis(self) -> List[np.ndarray]:
        """Directions (A_hat, B_hat) stacked as n x (n + m) matrices."""
        directions = []
        for j in range(self.kernel.shape[1]):
            for i in range(self.n):
                D = np.zeros((self.n, self.n + self.m))
                D[i] = self.kernel[:, j]
                directions.append(D)
        return directions

    def member(self, coefficients: Any) -> LtiSystem:
        """[A0 B0] + C N^T for an n x k coefficient matrix C."""
        C = np.asarray(coefficients, dtype=float).reshape(self.n, self.kernel.shape[1])
        AB = self.particular_matrix + C @ self.kernel.T
        return LtiSystem(AB[:, : self.n], AB[:, self.n:])

    def sample(self, rng: np.random.Generator, scale: float = 1.0) -> LtiSystem:
        """Random member at Frobenius distance `scale` from the particular solution."""
        if self.is_singleton:
            return self.particular
        C = rng.standard_normal((self.n, self.kernel.shape[1]))
        C *= scale / np.linalg.norm(C)
        return self.member(C)

    def contains(self, sys: LtiSystem) -> bool:
        """Whether sys differs from the particular solution by a kernel direction."""
        delta = np.hstack([sys.A, sys.B]) - self.particular_matrix
        if self.is_singleton:
            leak = delta
        else:
            leak = delta - (delta @ self.kernel) @ self.kernel.T
        return float(np.linalg.norm(leak)) <= TRAJECTORY_RTOL * (1.0 + np.linalg.norm(self.particular_matrix))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "n": self.n,
            "m": self.m,
            "is_consistent": self.is_consistent,
            "residual": self.residual,
            "particular": {"A": self.particular_matrix[:, : self.n].tolist(), "B": self.particular_matrix[:, self.n:].tolist()},
            "left_kernel": self.kernel.T.tolist(),
        }


def consistent_set(data: Dataset) -> ConsistentSet:
    """
    Parametrize every (A, B) that explains the data.

    Inconsistent data (no exact solution) is flagged through is_consistent;
    the particular solution is then the least-squares fit.
    """
    M = data.stacked
    solution, *_ = np.linalg.lstsq(M.T, data.X_plus.T, rcond=None)
    AB0 = solution.T
    residual = float(np.linalg.norm(AB0 @ M - data.X_plus))
    consistent = bool(residual <= TRAJECTORY_RTOL * (1.0 + np.linalg.norm(data.X_plus)))
    kernel = left_kernel_basis(M, tol=data_tolerance(M))
    N = np.column_stack(kernel) if kernel else np.zeros((data.n + data.m, 0))
    # drop the kernel component so the particular solution is the minimum-norm one
    if N.shape[1]:
        AB0 = AB0 - (AB0 @ N) @ N.T
    if not consistent:
        logger.info(f"consistent_set: data is not explained by any (A, B), residual {residual:.3e}")
    return ConsistentSet(data.n, data.m, AB0, N, consistent, residual)


# ============================================================================
# VERDICTS
# ============================================================================

@dataclass
class Verdict:
    """Informativity verdict with the rank diagnostics behind it."""
    goal: Goal
    pk: PriorKnowledge
    informative: bool
    rank_report: RankReport            # for [X-; U-]
    state_rank_report: RankReport      # for X-
    conditions: Dict[str, bool] = field(default_factory=dict)
    certificate: Optional[Any] = None  # LtiSystem or GainCertificate

    def to_dict(self) -> Dict[str, Any]:
        cert = self.certificate.to_dict() if self.certificate is not None else None
        return {
            "version": FORMAT_VERSION,
            "goal": self.goal.value,
            "pk": self.pk.value,
            "informative": self.informative,
            "rank_report": self.rank_report.to_dict(),
            "state_rank_report": self.state_rank_report.to_dict(),
            "conditions": dict(self.conditions),
            "certificate": cert,
        }


def minimum_samples(n: int, m: int, goal: Any, pk: Any) -> int:
    """Smallest T for which an informative dataset can exist."""
    goal = parse_enum(Goal, goal, "goal")
    pk = parse_enum(PriorKnowledge, pk, "pk")
    if goal is Goal.IDENTIFICATION:
        return n + m
    if pk is PriorKnowledge.STABILIZABLE:
        return min(n, m)
    return n


def informative_for_identification(data: Dataset, pk: Any = PriorKnowledge.ALL) -> Verdict:
    """
    Identification verdict: rank [X-; U-] = n + m.

    The verdict is the same for every supported pk; the certificate is the
    unique consistent system.
    """
    pk = parse_enum(PriorKnowledge, pk, "pk")
    stacked = data_rank(data.stacked)
    state = data_rank(data.X_minus)
    full = stacked.rank == data.n + data.m
    conditions = {
        "stacked_full_row_rank": full,
        "meets_sample_lower_bound": data.T >= minimum_samples(data.n, data.m, Goal.IDENTIFICATION, pk),
    }
    certificate = consistent_set(data).particular if full else None
    logger.debug(f"identification ({pk.value}): rank [X-; U-] = {stacked.rank} of {data.n + data.m}")
    return Verdict(Goal.IDENTIFICATION, pk, full, stacked, state, conditions, certificate)


def stabilization_conditions(data: Dataset) -> Dict[str, bool]:
    """
    Subspace conditions for the rank-deficient branch.

    image_product_condition: rank [X-; U-] = rank X- + m, which together with
    the always-true inclusion gives im [X-; U-] = im X- x R^m.
    """
    state = data_rank(data.X_minus)
    stacked = data_rank(data.stacked)
    return {
        "imXplus_in_imXminus": subspace_contains(data_image(data.X_minus), data_image(data.X_plus)),
        "image_product_condition": stacked.rank == state.rank + data.m,
    }


def informative_for_stabilization(data: Dataset, pk: Any = PriorKnowledge.ALL) -> Verdict:
    """
    Stabilization verdict under the given prior knowledge.

    The certificate is the GainCertificate found while deciding.
    """
    try:
        from .synthesis import stabilize_fullrank, stabilize_restricted
    except ImportError:
        from synthesis import stabilize_fullrank, stabilize_restricted

    pk = parse_enum(PriorKnowledge, pk, "pk")
    stacked = data_rank(data.stacked)
    state = data_rank(data.X_minus)
    full = state.rank == data.n
    conditions: Dict[str, bool] = {
        "Xminus_full_row_rank": full,
        "meets_sample_lower_bound": data.T >= minimum_samples(data.n, data.m, Goal.STABILIZATION, pk),
    }
    certificate = None

    if pk is not PriorKnowledge.STABILIZABLE or full:
        if full:
            result = stabilize_fullrank(data)
            conditions["sdp_feasible"] = result.certified
            certificate = result.certificate
        informative = full and certificate is not None
    else:
        conditions.update(stabilization_conditions(data))
        informative = conditions["imXplus_in_imXminus"] and conditions["image_product_condition"]
        if informative:
            result = stabilize_restricted(data)
            certificate = result.certificate
            conditions["reduced_pair_stabilized"] = result.certified
            # the restricted pair is fixed by the data
            informative = result.certified

    logger.info(
        f"stabilization ({pk.value}): {'informative' if informative else 'not informative'} "
        f"(rank X- = {state.rank}/{data.n}, rank [X-; U-] = {stacked.rank})"
    )
    return Verdict(Goal.STABILIZATION, pk, informative, stacked, state, conditions, certificate)


def informative_for(data: Dataset, goal: Any, pk: Any = PriorKnowledge.ALL) -> Verdict:
    goal = parse_enum(Goal, goal, "goal")
    if goal is Goal.IDENTIFICATION:
        return informative_for_identification(data, pk)
    return informative_for_stabilization(data, pk)


def shortest_informative_prefix(data: Dataset, goal: Any, pk: Any = PriorKnowledge.ALL) -> Optional[int]:
    """Smallest prefix length that is informative, or None if the whole dataset is not."""
    goal = parse_enum(Goal, goal, "goal")
    pk = parse_enum(PriorKnowledge, pk, "pk")
    start = max(1, minimum_samples(data.n, data.m, goal, pk))
    for length in range(start, data.T + 1):
        if informative_for(data.prefix(length), goal, pk).informative:
            return length
    return None


# ============================================================================
# EXCITATION CONDITIONS
# ============================================================================

def check_excitation_conditions(data: Dataset, sys: Optional[LtiSystem] = None) -> Dict[str, bool]:
    """
    Evaluate the three excitation conditions independently.

    - reachable_image: im [X-; U-] = R(A, [B x(0)]) x R^m (only when sys is given)
    - image_product_and_invariance: im [X-; U-] = im X- x R^m and im X+ in im X-
    - persistently_exciting: the input is PE of order n + 1

    The first two are equivalent for trajectories of sys, and the third
    implies both.

    Raises:
        TrajectoryMismatchError: If data is not a trajectory of sys
    """
    results: Dict[str, bool] = {}
    if sys is not None:
        residual = data.residual(sys)
        if residual > TRAJECTORY_RTOL * (1.0 + np.linalg.norm(data.X_plus)):
            raise TrajectoryMismatchError(
                f"data is not a trajectory of the given system (residual {residual:.3e})",
                residual=residual,
            )
        G = np.hstack([sys.B, data.initial_state.reshape(-1, 1)])
        reach = reachable_subspace(sys.A, G)
        results["reachable_image"] = subspace_equal(data_image(data.stacked), reach.times_full(data.m))

    conditions = stabilization_conditions(data)
    results["image_product_and_invariance"] = (
        conditions["imXplus_in_imXminus"] and conditions["image_product_condition"]
    )
    results["persistently_exciting"] = is_persistently_exciting(data.inputs, data.n + 1)
    return results


# Name used by campaign specs and older scripts.
check_lemma14_conditions = check_excitation_conditions
