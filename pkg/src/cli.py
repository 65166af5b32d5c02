#!/usr/bin/env python3
"""
cli.py - pk-design command-line interface

Experiment design and informativity checks for LTI systems x(t+1) = Ax(t) + Bu(t).

Usage:
    pk-design pe-check u.json --order 3
    pk-design design-offline --n 3 --m 1 --output u.json
    pk-design design-online --system sys.json --x0 adversarial --output run.json
    pk-design informativity data.json --goal stab --pk all
    pk-design identify data.json
    pk-design stabilize data.json --pk stab
    pk-design verify-gain data.json --gain gain.json --pk stab
    pk-design classify sys.json
    pk-design campaign spec.json --output report.json

Exit codes: 0 success or pass, 1 not informative or failed verdict,
2 usage errors and malformed files.

Dependencies:
    - rich: terminal tables and reports

Version: 1.0.0
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
from rich.console import Console
from rich.markup import escape
from rich.table import Table

try:
    from .__version__ import __version__
    from .harness import CAMPAIGN_ALIASES, CAMPAIGN_REGISTRY, CampaignSpec, repro_command, run_campaign
    from .informativity import Dataset, informative_for
    from .inputdesign import compare_experiment_lengths, generate_pe_input, pe_order, universality_verdict
    from .online import InputPolicy, SimulatedPlant, run_online_design, shortest_length_for_stabilization
    from .synthesis import identify, stabilize_with_prior, verify_gain_on_consistent_set
    from .system import LtiSystem, adversarial_initial_state, classify, reachable_dimension
    from .validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        Goal,
        InfeasibleRequestError,
        MaxStepsExceededError,
        NotInformativeError,
        NotStabilizableError,
        PkDesignError,
        PriorKnowledge,
        TrajectoryMismatchError,
        UnknownCampaignError,
        dump_json,
        load_json,
        parse_enum,
    )
except ImportError:
    from __version__ import __version__
    from harness import CAMPAIGN_ALIASES, CAMPAIGN_REGISTRY, CampaignSpec, repro_command, run_campaign
    from informativity import Dataset, informative_for
    from inputdesign import compare_experiment_lengths, generate_pe_input, pe_order, universality_verdict
    from online import InputPolicy, SimulatedPlant, run_online_design, shortest_length_for_stabilization
    from synthesis import identify, stabilize_with_prior, verify_gain_on_consistent_set
    from system import LtiSystem, adversarial_initial_state, classify, reachable_dimension
    from validation import (
        FORMAT_VERSION,
        DataFormatError,
        DimensionError,
        Goal,
        InfeasibleRequestError,
        MaxStepsExceededError,
        NotInformativeError,
        NotStabilizableError,
        PkDesignError,
        PriorKnowledge,
        TrajectoryMismatchError,
        UnknownCampaignError,
        dump_json,
        load_json,
        parse_enum,
    )

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


# ============================================================================
# FILE HELPERS
# ============================================================================

def load_dataset(path: str) -> Dataset:
    """Dataset from a JSON document or, for .csv files, a trajectory table."""
    if Path(path).suffix.lower() == ".csv":
        return Dataset.from_csv(path)
    return Dataset.from_dict(load_json(path))


def load_system(path: str) -> LtiSystem:
    return LtiSystem.from_dict(load_json(path))


def load_inputs(path: str, m: Optional[int] = None) -> np.ndarray:
    """Input signal from {"inputs": [...]} or a bare JSON array."""
    doc = load_json(path)
    values = doc.get("inputs") if isinstance(doc, dict) else doc
    if values is None:
        raise DataFormatError(f"{path}: missing required field 'inputs'", field="inputs")
    try:
        u = np.asarray(values, dtype=float)
    except (TypeError, ValueError):
        raise DataFormatError(f"{path}: 'inputs' must be an array of numbers or vectors", field="inputs")
    if u.size == 0 or u.ndim > 2 or not np.all(np.isfinite(u)):
        raise DataFormatError(f"{path}: 'inputs' must be a nonempty finite array", field="inputs")
    if u.ndim == 1:
        u = u.reshape(-1, 1) if m in (None, 1) else u.reshape(-1, m)
    return u


def load_matrix(path: str, field: str) -> np.ndarray:
    """Matrix from {field: [[...]]} or a bare nested array."""
    doc = load_json(path)
    values = doc.get(field) if isinstance(doc, dict) else doc
    if values is None:
        raise DataFormatError(f"{path}: missing required field '{field}'", field=field)
    try:
        return np.atleast_2d(np.asarray(values, dtype=float))
    except (TypeError, ValueError):
        raise DataFormatError(f"{path}: '{field}' must be a numeric array", field=field)


def resolve_x0(value: str, plant: LtiSystem, seed: int) -> np.ndarray:
    if value == "zero":
        return np.zeros(plant.n)
    if value == "adversarial":
        x0 = adversarial_initial_state(plant, seed)
        if x0 is None:
            raise DataFormatError("the system is controllable; no adversarial initial state exists", field="x0")
        return x0
    if value == "random":
        return np.random.default_rng(seed).standard_normal(plant.n)
    x0 = load_matrix(value, "x0").reshape(-1)
    if x0.shape[0] != plant.n:
        raise DataFormatError(f"{value}: 'x0' has length {x0.shape[0]}, expected {plant.n}", field="x0")
    return x0


def _matrix_text(M: np.ndarray) -> str:
    return np.array2string(np.asarray(M), precision=6, suppress_small=True)


def _write(data: Any, output: Optional[Union[str, Path]], console: Console) -> None:
    if output:
        path = dump_json(data, output)
        console.print(f"Wrote {path}")


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_pe_check(args, console: Console) -> int:
    u = load_inputs(args.file, args.m)
    order = pe_order(u)
    ok = order >= args.order
    console.print(f"pe_order = {order} (T = {u.shape[0]}, m = {u.shape[1]})")
    console.print(f"[{'green' if ok else 'red'}]{'PE' if ok else 'NOT PE'} of order {args.order}[/]")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_design_offline(args, console: Console) -> int:
    order = args.n + 1
    u = generate_pe_input(args.m, order, args.length, args.seed)
    table = Table(title=f"Offline input: T = {u.shape[0]}, PE order {pe_order(u)} (n = {args.n}, m = {args.m})")
    table.add_column("goal")
    table.add_column("pk")
    table.add_column("verdict")
    for goal in Goal:
        for pk in PriorKnowledge:
            verdict = universality_verdict(u, args.m, args.n, goal, pk)
            table.add_row(goal.value, pk.value, verdict.verdict.value)
    console.print(table)
    _write({"version": FORMAT_VERSION, "m": args.m, "order": order, "inputs": u.tolist()}, args.output, console)
    return EXIT_OK


def cmd_design_online(args, console: Console) -> int:
    sys_ = load_system(args.system)
    x0 = resolve_x0(args.x0, sys_, args.seed)
    policy = InputPolicy(seed=args.policy_seed) if args.policy_seed is not None else InputPolicy()
    run = run_online_design(SimulatedPlant(sys_, x0), policy, args.max_steps)

    table = Table(title=f"Online experiment: T = {run.T}")
    table.add_column("t", justify="right")
    table.add_column("branch")
    table.add_column("u(t)")
    table.add_column("rank [X; U]", justify="right")
    for record in run.trace:
        u = _matrix_text(record.u) if record.u is not None else "-"
        rank = str(record.stacked_rank) if record.stacked_rank is not None else "-"
        table.add_row(str(record.t), record.branch.value, u, rank)
    console.print(table)

    comparison = compare_experiment_lengths(sys_, x0)
    console.print(
        f"offline (universal) length {comparison.offline_length}, "
        f"online length {comparison.online_length}"
    )
    if classify(sys_).is_stabilizable:
        bound = shortest_length_for_stabilization(sys_, x0)
        text = str(bound.exact) if bound.is_exact else f"in [{bound.lower}, {bound.upper}]"
        console.print(f"shortest stabilization experiment: {text}")
    _write(run.to_dict(), args.output, console)
    return EXIT_OK


def cmd_informativity(args, console: Console) -> int:
    data = load_dataset(args.file)
    verdict = informative_for(data, args.goal, args.pk)
    color = "green" if verdict.informative else "red"
    label = "informative" if verdict.informative else "not informative"
    console.print(f"[{color}]{label}[/] for {verdict.goal.value} under pk={verdict.pk.value}")
    table = Table(title="Conditions")
    table.add_column("condition")
    table.add_column("holds")
    for name, value in verdict.conditions.items():
        table.add_row(name, str(value))
    console.print(table)
    console.print(
        f"rank [X-; U-] = {verdict.rank_report.rank} (tol {verdict.rank_report.tol_used:.3e}), "
        f"rank X- = {verdict.state_rank_report.rank}"
    )
    _write(verdict.to_dict(), args.output, console)
    return EXIT_OK if verdict.informative else EXIT_FAIL


def cmd_identify(args, console: Console) -> int:
    data = load_dataset(args.file)
    sys_ = identify(data)
    console.print(f"A =\n{_matrix_text(sys_.A)}")
    console.print(f"B =\n{_matrix_text(sys_.B)}")
    _write(sys_.to_dict(), args.output, console)
    return EXIT_OK


def cmd_stabilize(args, console: Console) -> int:
    data = load_dataset(args.file)
    result = stabilize_with_prior(data, args.pk)
    if not result.certified:
        console.print(f"[red]{result.status.value}[/]: {escape(result.reason)}")
        return EXIT_FAIL
    cert = result.certificate
    console.print(f"[green]certified[/] ({cert.branch.value}, {cert.witness})")
    console.print(f"K =\n{_matrix_text(cert.K)}")
    console.print(f"closed-loop spectral radius on data: {cert.closed_loop_radius_on_data:.6f}")
    _write(cert.to_dict(), args.output, console)
    return EXIT_OK


def cmd_verify_gain(args, console: Console) -> int:
    data = load_dataset(args.file)
    K = load_matrix(args.gain, "K")
    audit = verify_gain_on_consistent_set(data, args.pk, K, args.samples, args.seed)
    ok = audit.all_stabilized
    console.print(
        f"[{'green' if ok else 'red'}]{audit.stabilized}/{audit.accepted}[/] sampled systems stabilized "
        f"(max spectral radius {audit.max_radius:.6f}, {audit.attempts} draws)"
    )
    _write(audit.to_dict(), args.output, console)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_classify(args, console: Console) -> int:
    sys_ = load_system(args.file)
    console.print(f"class: {classify(sys_).value}")
    console.print(f"dim R(A, B) = {reachable_dimension(sys_)} of n = {sys_.n}")
    return EXIT_OK


def default_report_path(spec_path: str) -> Path:
    """spec.json -> spec.report.json next to the spec."""
    path = Path(spec_path)
    return path.with_name(f"{path.stem}.report.json")


def cmd_campaign(args, console: Console) -> int:
    spec = CampaignSpec.from_dict(load_json(args.file))
    if args.only_trial is not None:
        spec = replace(spec, only_trial=args.only_trial)
    if args.workers is not None:
        spec = replace(spec, workers=args.workers)
    report = run_campaign(spec)

    ok = report.passed
    console.print(
        f"[{'green' if ok else 'red'}]{spec.campaign}[/]: "
        f"{report.pass_count} passed, {report.fail_count} failed ({report.wall_time:.1f}s)"
    )
    for record in report.failures:
        console.print(f"  trial {record.index} (n={record.n}, m={record.m}): {escape(record.message)}")
        console.print(f"    reproduce: {repro_command(args.file, record.index)}")
    output = args.output or default_report_path(args.file)
    _write(report.to_dict(include_wall_time=not args.no_wall_time), output, console)
    return EXIT_OK if ok else EXIT_FAIL


# ============================================================================
# ENTRY POINT
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pk-design",
        description="pk-design - experiment design and informativity for LTI systems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(f"Campaigns: {', '.join(sorted(CAMPAIGN_REGISTRY))}\n"
                f"Aliases: {', '.join(sorted(CAMPAIGN_ALIASES))}"),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Commands")

    def pk_arg(p, default="all"):
        p.add_argument("--pk", default=default, type=lambda v: parse_enum(PriorKnowledge, v, "pk"),
                       help="Prior knowledge: all, cont or stab")

    def output_arg(p):
        p.add_argument("--output", "-o", help="Write the result as JSON")

    p = subparsers.add_parser("pe-check", help="Persistency-of-excitation order of an input")
    p.add_argument("file", help="JSON input signal")
    p.add_argument("--order", type=int, required=True, help="Required PE order")
    p.add_argument("--m", type=int, help="Input dimension for flat signals")
    p.set_defaults(func=cmd_pe_check)

    p = subparsers.add_parser("design-offline", help="Generate a universal (PE) input")
    p.add_argument("--n", type=int, required=True, help="State dimension")
    p.add_argument("--m", type=int, required=True, help="Input dimension")
    p.add_argument("--length", type=int, help="Signal length (default: minimal)")
    p.add_argument("--seed", type=int, default=0)
    output_arg(p)
    p.set_defaults(func=cmd_design_offline)

    p = subparsers.add_parser("design-online", help="Run the online experiment on a simulated plant")
    p.add_argument("--system", required=True, help="JSON system file")
    p.add_argument("--x0", default="zero", help="x0 file, or zero, random, adversarial")
    p.add_argument("--seed", type=int, default=0, help="Seed for random or adversarial x0")
    p.add_argument("--policy-seed", type=int, help="Use Gaussian free inputs with this seed")
    p.add_argument("--max-steps", type=int, help="Step bound (default n + m + 2)")
    output_arg(p)
    p.set_defaults(func=cmd_design_online)

    p = subparsers.add_parser("informativity", help="Informativity verdict for a dataset")
    p.add_argument("file", help="JSON or CSV dataset")
    p.add_argument("--goal", default="id", type=lambda v: parse_enum(Goal, v, "goal"), help="id or stab")
    pk_arg(p)
    output_arg(p)
    p.set_defaults(func=cmd_informativity)

    p = subparsers.add_parser("identify", help="Identify (A, B) from informative data")
    p.add_argument("file", help="JSON or CSV dataset")
    output_arg(p)
    p.set_defaults(func=cmd_identify)

    p = subparsers.add_parser("stabilize", help="Certified stabilizing gain from data")
    p.add_argument("file", help="JSON or CSV dataset")
    pk_arg(p)
    output_arg(p)
    p.set_defaults(func=cmd_stabilize)

    p = subparsers.add_parser("verify-gain", help="Audit a gain on sampled consistent systems")
    p.add_argument("file", help="JSON or CSV dataset")
    p.add_argument("--gain", required=True, help="JSON file with K")
    pk_arg(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    output_arg(p)
    p.set_defaults(func=cmd_verify_gain)

    p = subparsers.add_parser("classify", help="Controllability class of a system")
    p.add_argument("file", help="JSON system file")
    p.set_defaults(func=cmd_classify)

    p = subparsers.add_parser("campaign", help="Run a Monte-Carlo campaign")
    p.add_argument("file", help="JSON campaign spec")
    p.add_argument("--only-trial", type=int, help="Run a single trial index")
    p.add_argument("--workers", type=int, help="Parallel trials")
    p.add_argument("--no-wall-time", action="store_true", help="Leave wall_time out of the report")
    p.add_argument("--output", "-o", help="Report path (default: <spec>.report.json)")
    p.set_defaults(func=cmd_campaign)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    console = Console()
    try:
        return args.func(args, console)
    except (DataFormatError, UnknownCampaignError, DimensionError, InfeasibleRequestError,
            TrajectoryMismatchError) as e:
        field = getattr(e, "field", None)
        console.print(f"[red]Error:[/] {escape(str(e))}" + (f" (field: {field})" if field else ""))
        return EXIT_USAGE
    except (NotInformativeError, NotStabilizableError, MaxStepsExceededError) as e:
        console.print(f"[red]{escape(str(e))}[/]")
        return EXIT_FAIL
    except PkDesignError as e:
        console.print(f"[red]Error:[/] {escape(str(e))}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
