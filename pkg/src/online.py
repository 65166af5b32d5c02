#!/usr/bin/env python3
"""
online.py - Online experiment design against a plant.

The experiment applies one input at a time and decides the next input from
the data collected so far:

    t = 0, apply u(0) != 0
    loop:
        measure x(t+1), t <- t + 1
        x(t) not in im X_[0,t-1]                -> any input (new direction)
        im [X; U] = im X x R^m                  -> stop, T = t
        otherwise                               -> u(t) = c eta for a left-kernel
                                                   vector (xi, eta) of [X; U], eta != 0,
                                                   with xi^T x(t) + eta^T u(t) != 0

Every step after the first raises rank [X; U] by exactly one, so the run stops
at T = dim R(A, [B x(0)]) + m <= n + m.

Dependencies:
    - numpy: data blocks, seeded policies

Version: 1.0.0
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

try:
    from .informativity import Dataset, data_image, data_rank, data_tolerance
    from .matrixlab import left_kernel_basis
    from .system import LtiSystem, classify, reachable_dimension, simulate
    from .validation import (
        FORMAT_VERSION,
        DimensionError,
        MaxStepsExceededError,
        NotStabilizableError,
        SystemClass,
        TrajectoryMismatchError,
    )
except ImportError:
    from informativity import Dataset, data_image, data_rank, data_tolerance
    from matrixlab import left_kernel_basis
    from system import LtiSystem, classify, reachable_dimension, simulate
    from validation import (
        FORMAT_VERSION,
        DimensionError,
        MaxStepsExceededError,
        NotStabilizableError,
        SystemClass,
        TrajectoryMismatchError,
    )

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# x(t) is in im X when its projection residual is <= rtol * (1 + ||x(t)||)
MEMBERSHIP_RTOL = 1e-8

# Inputs of a replayed recording must match the chosen inputs to this tolerance
REPLAY_ATOL = 1e-9


# ============================================================================
# PLANTS
# ============================================================================

class PlantOracle(ABC):
    """A plant that accepts one input at a time and reports the next state."""

    @property
    @abstractmethod
    def n(self) -> int: ...

    @property
    @abstractmethod
    def m(self) -> int: ...

    @abstractmethod
    def initial_state(self) -> np.ndarray:
        """x(0)."""

    @abstractmethod
    def step(self, u: np.ndarray) -> np.ndarray:
        """Apply u(t) and return x(t+1)."""


class SimulatedPlant(PlantOracle):
    """In-process plant driven by a known LtiSystem."""

    def __init__(self, sys: LtiSystem, x0: Optional[Any] = None):
        self.sys = sys
        x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape[0] != sys.n:
            raise DimensionError(f"initial state has length {x0.shape[0]}, expected {sys.n}")
        self._x0 = x0
        self._x = x0.copy()

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def m(self) -> int:
        return self.sys.m

    def initial_state(self) -> np.ndarray:
        return self._x0.copy()

    def step(self, u: np.ndarray) -> np.ndarray:
        self._x = simulate(self.sys, self._x, np.reshape(u, (1, self.m)))[1]
        return self._x.copy()


class ReplayPlant(PlantOracle):
    """
    Plant that replays a recorded trajectory.

    Raises TrajectoryMismatchError as soon as a requested input differs from
    the recording or the recording runs out.
    """

    def __init__(self, recording: Dataset):
        self.recording = recording
        self._t = 0

    @property
    def n(self) -> int:
        return self.recording.n

    @property
    def m(self) -> int:
        return self.recording.m

    def initial_state(self) -> np.ndarray:
        return self.recording.initial_state

    def step(self, u: np.ndarray) -> np.ndarray:
        t = self._t
        if t >= self.recording.T:
            raise TrajectoryMismatchError(f"recording exhausted after {self.recording.T} steps")
        expected = self.recording.inputs[t]
        deviation = float(np.max(np.abs(np.asarray(u, dtype=float).reshape(-1) - expected)))
        if deviation > REPLAY_ATOL * (1.0 + np.max(np.abs(expected))):
            logger.warning(f"replay diverged at t={t}: input off by {deviation:.3e}")
            raise TrajectoryMismatchError(
                f"input at t={t} differs from the recording by {deviation:.3e}", residual=deviation
            )
        self._t += 1
        return self.recording.states[t + 1].copy()


# ============================================================================
# POLICY AND TRACE
# ============================================================================

@dataclass
class InputPolicy:
    """
    Free input choices of the algorithm.

    By default u(0) = e_1 and every free input is zero. With `seed` set, both
    are standard Gaussian draws instead.
    """
    first_input: Optional[np.ndarray] = None
    seed: Optional[int] = None
    _rng: Optional[np.random.Generator] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.seed is not None:
            self._rng = np.random.default_rng(self.seed)

    def initial(self, m: int) -> np.ndarray:
        if self.first_input is not None:
            u = np.asarray(self.first_input, dtype=float).reshape(-1)
            if u.shape[0] != m:
                raise DimensionError(f"first input has length {u.shape[0]}, expected {m}")
            if not np.any(u):
                raise DimensionError("the first input must be nonzero")
            return u
        if self._rng is not None:
            return self._rng.standard_normal(m)
        return np.eye(m)[0]

    def arbitrary(self, m: int) -> np.ndarray:
        if self._rng is not None:
            return self._rng.standard_normal(m)
        return np.zeros(m)


class StepBranch(Enum):
    INITIAL = "initial"
    NEW_DIRECTION = "new-direction"
    KERNEL_STEERED = "kernel-steered"
    TERMINATED = "terminated"


@dataclass
class TraceRecord:
    t: int
    branch: StepBranch
    u: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    membership_residual: Optional[float] = None
    stacked_rank: Optional[int] = None           # rank [X_[0,t]; U_[0,t]] after choosing u(t)
    kernel_residual: Optional[float] = None      # ||xi^T X + eta^T U||
    steering_value: Optional[float] = None       # xi^T x(t) + eta^T u(t)
    stopping_rule_reduced: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"t": self.t, "branch": self.branch.value}
        for name in ("u", "xi", "eta"):
            value = getattr(self, name)
            if value is not None:
                record[name] = value.tolist()
        for name in ("membership_residual", "stacked_rank", "kernel_residual",
                     "steering_value", "stopping_rule_reduced"):
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        return record


@dataclass
class OnlineRun:
    dataset: Dataset
    trace: List[TraceRecord]

    @property
    def T(self) -> int:
        return self.dataset.T

    @property
    def termination(self) -> TraceRecord:
        return self.trace[-1]

    def rank_sequence(self) -> List[int]:
        """rank [X_[0,t]; U_[0,t]] for t = 0..T-1."""
        return [data_rank(self.dataset.prefix(t + 1).stacked).rank for t in range(self.T)]

    def exit_certificate(self) -> Dict[str, bool]:
        """The stopping conditions, re-evaluated on the final dataset."""
        data = self.dataset
        state = data_rank(data.X_minus)
        stacked = data_rank(data.stacked)
        x_T = data.states[-1]
        residual = data_image(data.X_minus).residual(x_T)
        return {
            "image_product_condition": stacked.rank == state.rank + data.m,
            "final_state_in_image": bool(residual <= MEMBERSHIP_RTOL * (1.0 + np.linalg.norm(x_T))),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "T": self.T,
            "dataset": self.dataset.to_dict(),
            "trace": [record.to_dict() for record in self.trace],
        }


# ============================================================================
# ALGORITHM
# ============================================================================

def run_online_design(
    plant: PlantOracle,
    policy: Optional[InputPolicy] = None,
    max_steps: Optional[int] = None,
) -> OnlineRun:
    """
    Run the online experiment until the collected data suffices.

    Args:
        plant: Plant to excite
        policy: Free input choices (default: u(0) = e_1, zeros elsewhere)
        max_steps: Step bound (default n + m + 2)

    Returns:
        OnlineRun with the dataset and one trace record per step plus the
        termination record

    Raises:
        MaxStepsExceededError: If the loop runs past max_steps
    """
    policy = policy or InputPolicy()
    n, m = plant.n, plant.m
    max_steps = n + m + 2 if max_steps is None else max_steps
    if max_steps < 1:
        raise DimensionError(f"max_steps must be at least 1, got {max_steps}")

    states = [np.asarray(plant.initial_state(), dtype=float).reshape(n)]
    inputs = [policy.initial(m)]
    trace = [TraceRecord(0, StepBranch.INITIAL, u=inputs[0].copy(), stacked_rank=_stacked_rank(states, inputs))]
    t = 0

    while True:
        states.append(np.asarray(plant.step(inputs[t]), dtype=float).reshape(n))
        t += 1
        X = np.column_stack(states[:t])
        U = np.column_stack(inputs[:t])
        x_t = states[t]
        scale = 1.0 + np.linalg.norm(x_t)

        residual = data_image(X).residual(x_t)
        if residual > MEMBERSHIP_RTOL * scale:
            u_t = policy.arbitrary(m)
            record = TraceRecord(t, StepBranch.NEW_DIRECTION, u=u_t.copy(), membership_residual=residual)
        else:
            stacked = np.vstack([X, U])
            if data_rank(stacked).rank == data_rank(X).rank + m:
                trace.append(TraceRecord(
                    t, StepBranch.TERMINATED, membership_residual=residual,
                    stacked_rank=data_rank(stacked).rank, stopping_rule_reduced=(t == n + m),
                ))
                break
            kernel = left_kernel_basis(stacked, tol=data_tolerance(stacked))
            v = max(kernel, key=lambda w: np.linalg.norm(w[n:]))
            xi, eta = v[:n], v[n:]
            c = 1.0 if abs(xi @ x_t + eta @ eta) > MEMBERSHIP_RTOL * scale else 2.0
            u_t = c * eta
            record = TraceRecord(
                t, StepBranch.KERNEL_STEERED, u=u_t.copy(), xi=xi.copy(), eta=eta.copy(),
                membership_residual=residual,
                kernel_residual=float(np.linalg.norm(xi @ X + eta @ U)),
                steering_value=float(xi @ x_t + eta @ u_t),
            )

        if t >= max_steps:
            raise MaxStepsExceededError(
                f"online design did not stop within {max_steps} steps", steps=t
            )
        inputs.append(u_t)
        record.stacked_rank = _stacked_rank(states, inputs)
        trace.append(record)
        logger.debug(f"online t={t}: {record.branch.value}")

    dataset = Dataset(np.vstack(inputs[:t]), np.vstack(states[: t + 1]))
    logger.info(f"online design stopped at T={t} (n={n}, m={m})")
    return OnlineRun(dataset, trace)


def _stacked_rank(states: List[np.ndarray], inputs: List[np.ndarray]) -> int:
    k = len(inputs)
    return data_rank(np.vstack([np.column_stack(states[:k]), np.column_stack(inputs)])).rank


# ============================================================================
# EXPERIMENT LENGTHS
# ============================================================================

def predicted_length(sys: LtiSystem, x0: Any) -> int:
    """Length of the online experiment: dim R(A, [B x0]) + m."""
    return reachable_dimension(sys, x0) + sys.m


@dataclass(frozen=True)
class ExperimentLength:
    """Shortest length of a stabilization-informative experiment, exact or bracketed."""
    lower: int
    upper: int
    exact: Optional[int] = None

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def to_dict(self) -> Dict[str, Any]:
        return {"exact": self.exact, "lower": self.lower, "upper": self.upper, "is_exact": self.is_exact}


def shortest_length_for_stabilization(sys: LtiSystem, x0: Any) -> ExperimentLength:
    """
    T*(x0) for a stabilizable plant.

    Exact for uncontrollable plants started where R(A, [B x0]) is proper;
    elsewhere only the bracket [min(n, m), n + m] is known.

    Raises:
        NotStabilizableError: For plants with an unstable uncontrollable mode
    """
    system_class = classify(sys)
    if not system_class.is_stabilizable:
        raise NotStabilizableError("T*(x0) is only defined for stabilizable plants")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if system_class is not SystemClass.CONTROLLABLE and reachable_dimension(sys, x0) < sys.n:
        exact = predicted_length(sys, x0)
        return ExperimentLength(exact, exact, exact)
    return ExperimentLength(min(sys.n, sys.m), sys.n + sys.m)
