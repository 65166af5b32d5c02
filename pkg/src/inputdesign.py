#!/usr/bin/env python3
"""
inputdesign.py - Offline (universal) experiment design.

An input is universal for a goal under some prior knowledge when it yields
informative data for every admitted system and every initial state. For the
supported prior-knowledge tags this comes down to persistency of excitation:

| Goal           | pk = all   | pk = cont          | pk = stab          |
|----------------|------------|--------------------|--------------------|
| identification | impossible | PE of order n + 1  | impossible         |
| stabilization  | impossible | PE of order n + 1  | PE of order n + 1  |

Dependencies:
    - numpy: seeded Gaussian draws

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

try:
    from .matrixlab import RankReport, as_signal, hankel, numerical_rank
    from .system import LtiSystem, reachable_dimension
    from .validation import Goal, InfeasibleRequestError, PriorKnowledge, Universality, parse_enum
except ImportError:
    from matrixlab import RankReport, as_signal, hankel, numerical_rank
    from system import LtiSystem, reachable_dimension
    from validation import Goal, InfeasibleRequestError, PriorKnowledge, Universality, parse_enum

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# Redraws before generate_pe_input gives up (a non-PE Gaussian draw has measure zero)
PE_REDRAW_CAP = 16


# ============================================================================
# PERSISTENCY OF EXCITATION
# ============================================================================

def is_persistently_exciting(u: Any, order: int, m: Optional[int] = None) -> bool:
    """Whether the depth-`order` Hankel matrix of u has full row rank (needs T >= order)."""
    signal = as_signal(u, m)
    T, m = signal.shape
    if order <= 0:
        return True
    if T < order or T - order + 1 < order * m:
        return False
    return numerical_rank(hankel(signal, order)).rank == order * m


def pe_order(u: Any, m: Optional[int] = None) -> int:
    """
    Largest k such that u is persistently exciting of order k.

    PE of order k implies PE of every lower order, so the search stops at the
    first failing depth.

    Returns:
        0 when the signal is not even PE of order 1 (e.g. all zeros)
    """
    signal = as_signal(u, m)
    T, m = signal.shape
    if T == 0:
        return 0
    k = 0
    while is_persistently_exciting(signal, k + 1):
        k += 1
    return k


def minimum_pe_length(m: int, order: int) -> int:
    """Shortest length admitting PE of the given order: order * (m + 1) - 1."""
    return order * (m + 1) - 1


def generate_pe_input(
    m: int,
    order: int,
    length: Optional[int] = None,
    rng_seed: int = 0,
) -> np.ndarray:
    """
    Gaussian input of the requested PE order.

    Args:
        m: Input dimension
        order: Required PE order k
        length: Signal length (default: the minimum k(m+1)-1)
        rng_seed: Seed; redraw number i uses the seed pair (rng_seed, i)

    Returns:
        (T, m) array with pe_order >= order

    Raises:
        InfeasibleRequestError: If the length is below k(m+1)-1 or the redraw
            cap is exhausted
    """
    if m < 1 or order < 1:
        raise InfeasibleRequestError(f"need m >= 1 and order >= 1, got m={m}, order={order}")
    bound = minimum_pe_length(m, order)
    T = bound if length is None else int(length)
    if T < bound:
        raise InfeasibleRequestError(
            f"length {T} is too short for PE of order {order} with m={m}; "
            f"the Hankel matrix needs at least {bound} samples"
        )
    for attempt in range(PE_REDRAW_CAP):
        rng = np.random.default_rng([rng_seed, attempt])
        u = rng.standard_normal((T, m))
        if is_persistently_exciting(u, order):
            return u
        logger.debug(f"generate_pe_input: draw {attempt} not PE of order {order}, redrawing")
    raise InfeasibleRequestError(f"no PE input of order {order} after {PE_REDRAW_CAP} draws")


# ============================================================================
# UNIVERSALITY
# ============================================================================

def universal_inputs_exist(goal: Goal, pk: PriorKnowledge) -> bool:
    """
    Whether any universal input exists for the goal under pk.

    Identification needs every admitted system controllable; stabilization
    needs every admitted system stabilizable.
    """
    if goal is Goal.IDENTIFICATION:
        return pk is PriorKnowledge.CONTROLLABLE
    return pk in (PriorKnowledge.CONTROLLABLE, PriorKnowledge.STABILIZABLE)


@dataclass(frozen=True)
class UniversalityVerdict:
    """Offline verdict on a candidate input."""
    goal: Goal
    pk: PriorKnowledge
    verdict: Universality
    pe_order_required: int
    pe_order: int
    hankel_rank_report: Optional[RankReport] = None

    @property
    def universal(self) -> bool:
        return self.verdict is Universality.UNIVERSAL

    @property
    def impossible(self) -> bool:
        return self.verdict is Universality.IMPOSSIBLE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "goal": self.goal.value,
            "pk": self.pk.value,
            "verdict": self.verdict.value,
            "pe_order_required": self.pe_order_required,
            "pe_order": self.pe_order,
            "hankel_rank_report": self.hankel_rank_report.to_dict() if self.hankel_rank_report else None,
        }


def universality_verdict(u: Any, m: int, n: int, goal: Any, pk: Any) -> UniversalityVerdict:
    """
    Decide whether u is universal for (goal, pk) on n-dimensional plants.

    Returns:
        UniversalityVerdict with the rank report of the depth-(n+1) Hankel
        matrix when that matrix is defined
    """
    goal = parse_enum(Goal, goal, "goal")
    pk = parse_enum(PriorKnowledge, pk, "pk")
    signal = as_signal(u, m)
    required = n + 1
    order = pe_order(signal)
    report = numerical_rank(hankel(signal, required)) if signal.shape[0] >= required else None

    if not universal_inputs_exist(goal, pk):
        verdict = Universality.IMPOSSIBLE
    elif order >= required:
        verdict = Universality.UNIVERSAL
    else:
        verdict = Universality.NOT_UNIVERSAL
    logger.info(f"universality ({goal.value}, {pk.value}): {verdict.value} (pe_order={order}, need {required})")
    return UniversalityVerdict(goal, pk, verdict, required, order, report)


# ============================================================================
# OFFLINE VS ONLINE
# ============================================================================

@dataclass(frozen=True)
class ExperimentComparison:
    """Universal offline length against the online length for a given plant and x0."""
    n: int
    m: int
    offline_length: int
    online_length: int

    @property
    def saved_samples(self) -> int:
        return self.offline_length - self.online_length

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "offline_length": self.offline_length,
            "online_length": self.online_length,
            "saved_samples": self.saved_samples,
        }


def compare_experiment_lengths(sys: LtiSystem, x0: Any) -> ExperimentComparison:
    """Offline length (n+1)(m+1)-1 against dim R(A, [B x0]) + m."""
    online = reachable_dimension(sys, x0) + sys.m
    return ExperimentComparison(sys.n, sys.m, minimum_pe_length(sys.m, sys.n + 1), online)
