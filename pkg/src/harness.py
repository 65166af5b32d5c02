#!/usr/bin/env python3
"""
harness.py - Monte-Carlo campaigns over random systems.

Each registered campaign is a trial procedure: draw a random system, initial
state and input from a per-trial generator, run the toolkit, and check one
family of properties. A campaign passes when every trial passes.

Campaign registry:
| Id                          | Property audited                                                  |
|-----------------------------|-------------------------------------------------------------------|
| identification-equivalence  | identification verdict identical across pk, equal to full rank    |
| pe-identification           | PE input of order n+1 identifies controllable plants              |
| identification-impossible   | adversarial x0 keeps rank X- < n for any input                    |
| universality-table          | offline verdicts follow the existence table and the PE order      |
| scalar-stabilization        | scalar stabilization cases and invariance under data scaling      |
| prior-knowledge-dispatch    | stabilization verdicts agree across pk when X- has full row rank  |
| reachable-image-equivalence | reachable-image condition <=> image-product condition; PE => both |
| pe-stabilization            | PE input of order n+1 gives stabilizing gains for stabilizable plants |
| online-length               | online runs stop at dim R(A, [B x0]) + m with strict rank growth  |
| online-shortest             | adversarial online runs have no informative proper prefix         |
| gain-soundness              | certified gains stabilize sampled consistent systems              |

Spec files may also name a campaign by its published alias (thm8-forward,
lemma17-length, ...); CAMPAIGN_ALIASES maps those to registry ids.

Trial seeds come from numpy SeedSequence.spawn, so results do not depend on
the number of workers.

Dependencies:
    - numpy: seed sequences, random draws
    - scipy: pole placement for closed-loop experiments

Version: 1.0.0
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.signal import place_poles

try:
    from .__version__ import __version__
    from .informativity import (
        Dataset,
        check_excitation_conditions,
        consistent_set,
        data_rank,
        informative_for_identification,
        informative_for_stabilization,
    )
    from .inputdesign import (
        generate_pe_input,
        is_persistently_exciting,
        pe_order,
        universal_inputs_exist,
        universality_verdict,
    )
    from .matrixlab import is_schur
    from .online import SimulatedPlant, predicted_length, run_online_design, shortest_length_for_stabilization
    from .synthesis import identify, stabilize_with_prior, stabilizing_gain, verify_gain_on_consistent_set
    from .system import LtiSystem, adversarial_initial_state, random_system, reachable_dimension
    from .validation import (
        FORMAT_VERSION,
        DataFormatError,
        Goal,
        PkDesignError,
        PriorKnowledge,
        SystemClass,
        UnknownCampaignError,
        Universality,
        require_field,
    )
except ImportError:
    from __version__ import __version__
    from informativity import (
        Dataset,
        check_excitation_conditions,
        consistent_set,
        data_rank,
        informative_for_identification,
        informative_for_stabilization,
    )
    from inputdesign import (
        generate_pe_input,
        is_persistently_exciting,
        pe_order,
        universal_inputs_exist,
        universality_verdict,
    )
    from matrixlab import is_schur
    from online import SimulatedPlant, predicted_length, run_online_design, shortest_length_for_stabilization
    from synthesis import identify, stabilize_with_prior, stabilizing_gain, verify_gain_on_consistent_set
    from system import LtiSystem, adversarial_initial_state, random_system, reachable_dimension
    from validation import (
        FORMAT_VERSION,
        DataFormatError,
        Goal,
        PkDesignError,
        PriorKnowledge,
        SystemClass,
        UnknownCampaignError,
        Universality,
        require_field,
    )

logger = logging.getLogger(__name__)


# ============================================================================
# CONSTANTS
# ============================================================================

# Identified systems must match the truth to this Frobenius distance
IDENTIFICATION_ATOL = 1e-8

# Samples drawn per certified gain in the soundness campaign
AUDIT_SAMPLES = 100

# Modulus of the closed-loop poles used for closed-loop experiments
CLOSED_LOOP_MODULUS = 0.8

DEFAULT_N_RANGE = (1, 4)
DEFAULT_M_RANGE = (1, 3)


# ============================================================================
# SPEC AND REPORT TYPES
# ============================================================================

@dataclass
class CampaignSpec:
    """What to run: campaign id, trial count, dimension ranges and seed."""
    name: str
    campaign: str
    trials: int = 100
    n_range: Tuple[int, int] = DEFAULT_N_RANGE
    m_range: Tuple[int, int] = DEFAULT_M_RANGE
    seed: int = 0
    workers: int = 1
    only_trial: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise DataFormatError(f"trials must be at least 1, got {self.trials}", field="trials")
        for name, (lo, hi) in (("n", self.n_range), ("m", self.m_range)):
            if not 1 <= lo <= hi:
                raise DataFormatError(f"invalid range for {name}: [{lo}, {hi}]", field="dims")
        if self.only_trial is not None and not 0 <= self.only_trial < self.trials:
            raise DataFormatError(
                f"only_trial must be in [0, {self.trials - 1}], got {self.only_trial}", field="only_trial"
            )
        if self.workers < 1:
            raise DataFormatError(f"workers must be at least 1, got {self.workers}", field="workers")

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "version": FORMAT_VERSION,
            "name": self.name,
            "campaign": self.campaign,
            "trials": self.trials,
            "dims": {"n": list(self.n_range), "m": list(self.m_range)},
            "seed": self.seed,
        }
        if self.only_trial is not None:
            data["only_trial"] = self.only_trial
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CampaignSpec":
        campaign = data.get("campaign", data.get("theorem")) if isinstance(data, dict) else None
        if campaign is None:
            require_field(data, "campaign", "campaign spec")
        dims = data.get("dims", {})
        if not isinstance(dims, dict):
            raise DataFormatError("campaign spec field 'dims' must be an object", field="dims")
        try:
            return cls(
                name=str(data.get("name", campaign)),
                campaign=str(campaign),
                trials=int(data.get("trials", 100)),
                n_range=_range(dims.get("n", DEFAULT_N_RANGE), "dims.n"),
                m_range=_range(dims.get("m", DEFAULT_M_RANGE), "dims.m"),
                seed=int(data.get("seed", 0)),
                workers=int(data.get("workers", 1)),
                only_trial=None if data.get("only_trial") is None else int(data["only_trial"]),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, DataFormatError):
                raise
            raise DataFormatError(f"campaign spec has a non-integer field: {e}", field="trials")


def _range(value: Any, field_name: str) -> Tuple[int, int]:
    if isinstance(value, int):
        return value, value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return int(value[0]), int(value[1])
    raise DataFormatError(f"campaign spec field '{field_name}' must be [lo, hi]", field=field_name)


@dataclass
class TrialOutcome:
    """What a trial procedure returns."""
    passed: bool
    system_class: Optional[str] = None
    verdicts: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    message: str = ""


@dataclass
class TrialRecord:
    index: int
    seed: int
    n: int
    m: int
    passed: bool
    system_class: Optional[str] = None
    verdicts: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "seed": self.seed,
            "n": self.n,
            "m": self.m,
            "passed": self.passed,
            "class": self.system_class,
            "verdicts": self.verdicts,
            "residuals": self.residuals,
            "message": self.message,
        }


@dataclass
class CampaignReport:
    spec: CampaignSpec
    records: List[TrialRecord]
    wall_time: float = 0.0

    @property
    def pass_count(self) -> int:
        return sum(1 for r in self.records if r.passed)

    @property
    def fail_count(self) -> int:
        return len(self.records) - self.pass_count

    @property
    def passed(self) -> bool:
        return self.fail_count == 0

    @property
    def failures(self) -> List[TrialRecord]:
        return [r for r in self.records if not r.passed]

    def to_dict(self, include_wall_time: bool = True) -> Dict[str, Any]:
        data = {
            "version": FORMAT_VERSION,
            "toolkit_version": __version__,
            "spec": self.spec.to_dict(),
            "pass_count": self.pass_count,
            "fail_count": self.fail_count,
            "trials": [r.to_dict() for r in self.records],
        }
        if include_wall_time:
            data["wall_time"] = self.wall_time
        return data


def repro_command(spec_path: Union[str, Path], index: int) -> str:
    """Command line that re-runs a single trial."""
    return f"pk-design campaign {spec_path} --only-trial {index}"


# ============================================================================
# TRIAL HELPERS
# ============================================================================

def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def _pick_class(rng: np.random.Generator, n: int, choices: Tuple[SystemClass, ...]) -> SystemClass:
    allowed = [c for c in choices if not (c is SystemClass.STABILIZABLE_NOT_CONTROLLABLE and n < 2)]
    return allowed[int(rng.integers(len(allowed)))]


def _initial_state(rng: np.random.Generator, sys: LtiSystem, adversarial_probability: float) -> Tuple[np.ndarray, bool]:
    """Gaussian x0, or an adversarial one (uncontrollable plants only) with the given probability."""
    if rng.random() < adversarial_probability:
        x0 = adversarial_initial_state(sys, _seed(rng))
        if x0 is not None:
            return x0, True
    return rng.standard_normal(sys.n), False


def _closed_loop_gain(rng: np.random.Generator, sys: LtiSystem) -> np.ndarray:
    """u = K0 x putting the closed-loop poles evenly on a circle inside the unit disc."""
    n = sys.n
    poles = CLOSED_LOOP_MODULUS * np.exp(1j * np.pi * (2 * np.arange(n) + 1) / n)
    poles = np.where(np.abs(poles.imag) < 1e-12, poles.real + 0j, poles)
    try:
        K0 = -place_poles(sys.A, sys.B, poles).gain_matrix
        if is_schur(sys.closed_loop(K0)):
            return K0
    except ValueError as e:
        logger.debug(f"pole placement failed: {e}")
    return stabilizing_gain(sys.A, sys.B)


# ============================================================================
# TRIAL PROCEDURES
# ============================================================================

ALL_CLASSES = tuple(SystemClass)
STABILIZABLE_CLASSES = (SystemClass.CONTROLLABLE, SystemClass.STABILIZABLE_NOT_CONTROLLABLE)
UNCONTROLLABLE_CLASSES = (SystemClass.STABILIZABLE_NOT_CONTROLLABLE, SystemClass.NOT_STABILIZABLE)


def trial_identification_equivalence(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    cls = _pick_class(rng, n, ALL_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    x0, adversarial = _initial_state(rng, sys, 0.3)
    u = rng.standard_normal((int(rng.integers(1, n + m + 4)), m))
    data = Dataset.from_trajectory(sys, x0, u)

    verdicts = {pk.value: informative_for_identification(data, pk).informative for pk in PriorKnowledge}
    full_rank = data_rank(data.stacked).rank == n + m
    singleton = consistent_set(data).is_singleton
    extended = Dataset.from_trajectory(sys, x0, np.vstack([u, rng.standard_normal((1, m))]))
    still = informative_for_identification(extended).informative

    agree = len(set(verdicts.values())) == 1
    verdict = verdicts["all"]
    passed = agree and verdict == full_rank == singleton and (still or not verdict)
    return TrialOutcome(
        passed,
        cls.value,
        {**verdicts, "full_rank": full_rank, "singleton": singleton, "extended": still, "adversarial": adversarial},
        message="" if passed else "identification verdicts disagree",
    )


def trial_pe_identification(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    sys = random_system(SystemClass.CONTROLLABLE, n, m, _seed(rng))
    u = generate_pe_input(m, n + 1, rng_seed=_seed(rng))
    data = Dataset.from_trajectory(sys, rng.standard_normal(n), u)
    verdict = informative_for_identification(data, PriorKnowledge.CONTROLLABLE)
    error = identify(data).distance(sys) if verdict.informative else float("inf")
    passed = verdict.informative and error <= IDENTIFICATION_ATOL
    return TrialOutcome(
        passed,
        SystemClass.CONTROLLABLE.value,
        {"informative": verdict.informative, "rank": verdict.rank_report.rank},
        {"identification_error": error},
        "" if passed else f"identification error {error:.3e}",
    )


def trial_identification_impossible(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    cls = _pick_class(rng, n, UNCONTROLLABLE_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    x0 = adversarial_initial_state(sys, _seed(rng))
    u = rng.standard_normal((int(rng.integers(n + m, 2 * (n + m) + 1)), m))
    data = Dataset.from_trajectory(sys, x0, u)
    state_rank = data_rank(data.X_minus).rank
    informative = any(informative_for_identification(data, pk).informative for pk in PriorKnowledge)
    impossible = all(
        universality_verdict(u, m, n, Goal.IDENTIFICATION, pk).impossible
        for pk in (PriorKnowledge.ALL, PriorKnowledge.STABILIZABLE)
    )
    passed = state_rank < n and not informative and impossible
    return TrialOutcome(
        passed,
        cls.value,
        {"state_rank": state_rank, "informative": informative, "offline_impossible": impossible},
        message="" if passed else f"rank X- = {state_rank} for n = {n}",
    )


def trial_universality_table(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    kind = ("pe", "constant", "short", "zero")[int(rng.integers(4))]
    bound = (n + 1) * (m + 1) - 1
    if kind == "pe":
        u = generate_pe_input(m, n + 1, rng_seed=_seed(rng))
    elif kind == "constant":
        u = np.tile(rng.standard_normal(m), (bound + 2, 1))
    elif kind == "short":
        u = rng.standard_normal((int(rng.integers(1, bound)), m))
    else:
        u = np.zeros((bound, m))

    exciting = is_persistently_exciting(u, n + 1)
    mismatches = []
    for goal in Goal:
        for pk in PriorKnowledge:
            verdict = universality_verdict(u, m, n, goal, pk)
            if not universal_inputs_exist(goal, pk):
                expected = Universality.IMPOSSIBLE
            else:
                expected = Universality.UNIVERSAL if exciting else Universality.NOT_UNIVERSAL
            if verdict.verdict is not expected:
                mismatches.append(f"{goal.value}/{pk.value}")
    order = pe_order(u)
    consistent_order = (order >= n + 1) == exciting and (kind != "pe" or order >= n + 1)
    passed = not mismatches and consistent_order
    return TrialOutcome(
        passed,
        None,
        {"input": kind, "pe_order": order, "exciting": exciting},
        message="" if passed else f"table mismatch at {', '.join(mismatches) or 'pe_order'}",
    )


def trial_scalar_stabilization(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    a = rng.uniform(-2.0, 2.0)
    while abs(abs(a) - 1.0) < 0.02:
        a = rng.uniform(-2.0, 2.0)
    scalar = Dataset(inputs=[[0.0]], states=[[1.0], [a]])
    verdict = informative_for_stabilization(scalar, PriorKnowledge.ALL)
    scalar_ok = verdict.informative == (abs(a) < 1.0)
    if verdict.informative:
        scalar_ok = scalar_ok and abs(float(verdict.certificate.K[0, 0])) <= 1e-8

    # invariance of verdicts and certificates under a common scaling of (u, x)
    cls = _pick_class(rng, n, STABILIZABLE_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    data = Dataset.from_trajectory(sys, rng.standard_normal(n), generate_pe_input(m, n + 1, rng_seed=_seed(rng)))
    factor = rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-1.0, 1.0)
    scaled = data.scaled(factor)
    same_verdicts = all(
        informative_for_identification(data, pk).informative == informative_for_identification(scaled, pk).informative
        and informative_for_stabilization(data, pk).informative == informative_for_stabilization(scaled, pk).informative
        for pk in PriorKnowledge
    )
    result = stabilize_with_prior(data, PriorKnowledge.STABILIZABLE)
    reverified = result.certified and verify_gain_on_consistent_set(
        scaled, PriorKnowledge.STABILIZABLE, result.certificate.K, samples=20, rng_seed=_seed(rng)
    ).all_stabilized
    passed = scalar_ok and same_verdicts and reverified
    return TrialOutcome(
        passed,
        cls.value,
        {"scalar_informative": verdict.informative, "same_verdicts": same_verdicts, "reverified": reverified},
        {"a": float(a), "factor": float(factor)},
        "" if passed else "scalar or scaling check failed",
    )


def trial_prior_knowledge_dispatch(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    cls = _pick_class(rng, n, STABILIZABLE_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    x0, adversarial = _initial_state(rng, sys, 0.3)
    u = rng.standard_normal((int(rng.integers(n, n + m + 2)), m))
    data = Dataset.from_trajectory(sys, x0, u)
    full = data_rank(data.X_minus).rank == n
    verdicts = {pk.value: informative_for_stabilization(data, pk).informative for pk in PriorKnowledge}
    cont_matches_all = verdicts["cont"] == verdicts["all"]
    if full:
        passed = cont_matches_all and verdicts["stab"] == verdicts["all"]
    else:
        passed = cont_matches_all and not verdicts["all"]
    return TrialOutcome(
        passed,
        cls.value,
        {**verdicts, "Xminus_full_row_rank": full, "adversarial": adversarial},
        message="" if passed else "stabilization verdicts disagree across pk",
    )


def trial_reachable_image_equivalence(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    cls = _pick_class(rng, n, ALL_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    x0, adversarial = _initial_state(rng, sys, 0.4)
    if rng.random() < 0.4:
        u = generate_pe_input(m, n + 1, rng_seed=_seed(rng))
    else:
        u = rng.standard_normal((int(rng.integers(1, n + m + 4)), m))
    conditions = check_excitation_conditions(Dataset.from_trajectory(sys, x0, u), sys)
    reach, product, exciting = (
        conditions["reachable_image"],
        conditions["image_product_and_invariance"],
        conditions["persistently_exciting"],
    )
    passed = reach == product and (not exciting or (reach and product))
    return TrialOutcome(
        passed,
        cls.value,
        {**conditions, "adversarial": adversarial},
        message="" if passed else f"conditions {conditions}",
    )


def trial_pe_stabilization(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    sys = random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, n, m, _seed(rng))
    u = generate_pe_input(m, n + 1, rng_seed=_seed(rng))
    data = Dataset.from_trajectory(sys, rng.standard_normal(n), u)
    verdict = informative_for_stabilization(data, PriorKnowledge.STABILIZABLE)
    stabilizes = verdict.informative and sys.is_stabilized_by(verdict.certificate.K)
    cross_check = True
    if stabilizes and informative_for_identification(data).informative:
        cross_check = identify(data).is_stabilized_by(verdict.certificate.K)
    radius = verdict.certificate.closed_loop_radius_on_data if verdict.certificate else float("nan")
    passed = stabilizes and cross_check
    return TrialOutcome(
        passed,
        SystemClass.STABILIZABLE_NOT_CONTROLLABLE.value,
        {"informative": verdict.informative, "stabilizes_truth": stabilizes, "stabilizes_identified": cross_check},
        {"radius_on_data": radius},
        "" if passed else "gain does not stabilize the true system",
    )


def trial_online_length(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    cls = _pick_class(rng, n, STABILIZABLE_CLASSES)
    sys = random_system(cls, n, m, _seed(rng))
    draw = rng.random()
    if draw < 0.15:
        x0, kind = np.zeros(n), "zero"
    else:
        x0, adversarial = _initial_state(rng, sys, 0.5)
        kind = "adversarial" if adversarial else "random"
    run = run_online_design(SimulatedPlant(sys, x0))
    expected = predicted_length(sys, x0)
    ranks = run.rank_sequence()
    growth = ranks[0] == 1 and all(b == a + 1 for a, b in zip(ranks, ranks[1:]))
    certificate = run.exit_certificate()
    trace_ok = len(run.trace) == run.T + 1

    if cls is SystemClass.CONTROLLABLE:
        informative = informative_for_identification(run.dataset).informative
        error = identify(run.dataset).distance(sys) if informative else float("inf")
        outcome = informative and error <= IDENTIFICATION_ATOL
    else:
        verdict = informative_for_stabilization(run.dataset, PriorKnowledge.STABILIZABLE)
        error = 0.0
        outcome = verdict.informative and sys.is_stabilized_by(verdict.certificate.K)

    passed = run.T == expected and growth and all(certificate.values()) and trace_ok and outcome
    return TrialOutcome(
        passed,
        cls.value,
        {"T": run.T, "predicted": expected, "strict_rank_growth": growth, "x0": kind,
         "exit_certificate": all(certificate.values()), "outcome": outcome},
        {"identification_error": error},
        "" if passed else f"T={run.T}, predicted {expected}, ranks {ranks}",
    )


def trial_online_shortest(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    sys = random_system(SystemClass.STABILIZABLE_NOT_CONTROLLABLE, n, m, _seed(rng))
    x0 = adversarial_initial_state(sys, _seed(rng))
    run = run_online_design(SimulatedPlant(sys, x0))
    shortest = reachable_dimension(sys, x0) + m
    bound = shortest_length_for_stabilization(sys, x0)
    full = informative_for_stabilization(run.dataset, PriorKnowledge.STABILIZABLE)
    prefixes = [
        informative_for_stabilization(run.dataset.prefix(t), PriorKnowledge.STABILIZABLE).informative
        for t in range(1, run.T)
    ]
    passed = (
        run.T == shortest < n + m
        and bound.exact == run.T
        and full.informative
        and not any(prefixes)
    )
    return TrialOutcome(
        passed,
        SystemClass.STABILIZABLE_NOT_CONTROLLABLE.value,
        {"T": run.T, "shortest": shortest, "informative": full.informative,
         "informative_prefix": any(prefixes)},
        message="" if passed else f"T={run.T}, expected {shortest} < {n + m}",
    )


def trial_gain_soundness(rng: np.random.Generator, n: int, m: int) -> TrialOutcome:
    variant = ("closed-loop", "identifying", "restricted")[int(rng.integers(3))]
    if variant == "restricted" and n < 2:
        variant = "identifying"

    if variant == "closed-loop":
        pk = PriorKnowledge.ALL
        sys = random_system(SystemClass.CONTROLLABLE, n, m, _seed(rng))
        K0 = _closed_loop_gain(rng, sys)
        x = [rng.standard_normal(n)]
        for _ in range(n + int(rng.integers(0, 2))):
            x.append(sys.closed_loop(K0) @ x[-1])
        states = np.array(x)
        data = Dataset(states[:-1] @ K0.T, states)
        cls = SystemClass.CONTROLLABLE
    elif variant == "identifying":
        pk = PriorKnowledge.STABILIZABLE
        cls = _pick_class(rng, n, STABILIZABLE_CLASSES)
        sys = random_system(cls, n, m, _seed(rng))
        data = Dataset.from_trajectory(sys, rng.standard_normal(n), generate_pe_input(m, n + 1, rng_seed=_seed(rng)))
    else:
        pk = PriorKnowledge.STABILIZABLE
        cls = SystemClass.STABILIZABLE_NOT_CONTROLLABLE
        sys = random_system(cls, n, m, _seed(rng))
        x0 = adversarial_initial_state(sys, _seed(rng))
        data = Dataset.from_trajectory(sys, x0, generate_pe_input(m, n + 1, rng_seed=_seed(rng)))

    result = stabilize_with_prior(data, pk)
    if not result.certified:
        return TrialOutcome(False, cls.value, {"variant": variant, "certified": False},
                            message=f"{variant} data not certified: {result.reason}")
    audit = verify_gain_on_consistent_set(data, pk, result.certificate.K, AUDIT_SAMPLES, _seed(rng))
    complete = audit.singleton or audit.accepted == AUDIT_SAMPLES
    passed = audit.all_stabilized and complete
    return TrialOutcome(
        passed,
        cls.value,
        {"variant": variant, "certified": True, "branch": result.certificate.branch.value,
         "accepted": audit.accepted, "stabilized": audit.stabilized},
        {"max_radius": audit.max_radius},
        "" if passed else f"{audit.stabilized}/{audit.accepted} sampled systems stabilized",
    )


@dataclass(frozen=True)
class CampaignEntry:
    procedure: Callable[[np.random.Generator, int, int], TrialOutcome]
    description: str
    min_n: int = 1   # trials draw n >= min_n


CAMPAIGN_REGISTRY: Dict[str, CampaignEntry] = {
    "identification-equivalence": CampaignEntry(
        trial_identification_equivalence,
        "identification verdict is the same for all pk and equals rank [X-; U-] = n + m"),
    "pe-identification": CampaignEntry(
        trial_pe_identification,
        "PE input of order n + 1 at minimal length identifies controllable plants"),
    "identification-impossible": CampaignEntry(
        trial_identification_impossible,
        "adversarial initial state keeps rank X- < n for uncontrollable plants"),
    "universality-table": CampaignEntry(
        trial_universality_table,
        "offline verdicts follow the existence table and the PE order"),
    "scalar-stabilization": CampaignEntry(
        trial_scalar_stabilization,
        "scalar stabilization cases and invariance under scaling of the data"),
    "prior-knowledge-dispatch": CampaignEntry(
        trial_prior_knowledge_dispatch,
        "stabilization verdicts coincide across pk when X- has full row rank"),
    "reachable-image-equivalence": CampaignEntry(
        trial_reachable_image_equivalence,
        "reachable-image condition is equivalent to the image-product condition"),
    "pe-stabilization": CampaignEntry(
        trial_pe_stabilization,
        "PE input of order n + 1 yields gains stabilizing stabilizable plants", min_n=2),
    "online-length": CampaignEntry(
        trial_online_length,
        "online runs stop at dim R(A, [B x0]) + m with strict rank growth"),
    "online-shortest": CampaignEntry(
        trial_online_shortest,
        "adversarial online runs are the shortest stabilization experiments", min_n=2),
    "gain-soundness": CampaignEntry(
        trial_gain_soundness,
        "certified gains stabilize every sampled consistent system"),
}


# Published campaign identifiers accepted in spec files.
CAMPAIGN_ALIASES: Dict[str, str] = {
    "thm4-equivalence": "identification-equivalence",
    "thm8-forward": "pe-identification",
    "thm9-impossibility": "identification-impossible",
    "prop13-dispatch": "prior-knowledge-dispatch",
    "lemma14-equivalence": "reachable-image-equivalence",
    "lemma17-length": "online-length",
    "thm18-shortest": "online-shortest",
}


def resolve_campaign(campaign: str) -> CampaignEntry:
    """
    Look up a campaign by registry id or published alias.

    Raises:
        UnknownCampaignError: If neither table knows the id
    """
    entry = CAMPAIGN_REGISTRY.get(CAMPAIGN_ALIASES.get(campaign, campaign))
    if entry is None:
        known = sorted(CAMPAIGN_REGISTRY) + sorted(CAMPAIGN_ALIASES)
        raise UnknownCampaignError(f"unknown campaign '{campaign}' (known: {', '.join(known)})")
    return entry


# ============================================================================
# RUNNER
# ============================================================================

def _run_trial(entry: CampaignEntry, spec: CampaignSpec, index: int, seq: np.random.SeedSequence) -> TrialRecord:
    rng = np.random.default_rng(seq)
    n = max(int(rng.integers(spec.n_range[0], spec.n_range[1] + 1)), entry.min_n)
    m = int(rng.integers(spec.m_range[0], spec.m_range[1] + 1))
    trial_seed = int(seq.generate_state(1)[0])
    try:
        outcome = entry.procedure(rng, n, m)
    except (PkDesignError, np.linalg.LinAlgError, ValueError) as e:
        outcome = TrialOutcome(False, message=f"{type(e).__name__}: {e}")
    record = TrialRecord(
        index, trial_seed, n, m, outcome.passed, outcome.system_class,
        _jsonable(outcome.verdicts), _jsonable(outcome.residuals), outcome.message,
    )
    if not record.passed:
        logger.error(f"{spec.campaign} trial {index} failed (n={n}, m={m}): {record.message}")
    return record


def _jsonable(values: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in values.items():
        if isinstance(value, (np.bool_, bool)):
            out[key] = bool(value)
        elif isinstance(value, (np.integer, int)):
            out[key] = int(value)
        elif isinstance(value, (np.floating, float)):
            value = float(value)
            out[key] = value if np.isfinite(value) else None
        else:
            out[key] = value
    return out


def run_campaign(
    spec: CampaignSpec,
    progress: Optional[Callable[[TrialRecord], None]] = None,
) -> CampaignReport:
    """
    Run every trial of a registered campaign.

    Args:
        spec: Campaign spec; only_trial restricts the run to one trial index
        progress: Called with each finished trial record

    Returns:
        CampaignReport, deterministic in the spec apart from wall_time

    Raises:
        UnknownCampaignError: If the campaign id is neither registered nor an alias
    """
    entry = resolve_campaign(spec.campaign)
    sequences = np.random.SeedSequence(spec.seed).spawn(spec.trials)
    indices = [spec.only_trial] if spec.only_trial is not None else list(range(spec.trials))
    logger.info(f"campaign {spec.name}: {len(indices)} trial(s) of {spec.campaign}")

    start = time.perf_counter()

    def job(index: int) -> TrialRecord:
        record = _run_trial(entry, spec, index, sequences[index])
        if progress is not None:
            progress(record)
        return record

    if spec.workers > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(job, indices))
    else:
        records = [job(i) for i in indices]

    report = CampaignReport(spec, records, time.perf_counter() - start)
    logger.info(f"campaign {spec.name}: {report.pass_count} passed, {report.fail_count} failed")
    return report
