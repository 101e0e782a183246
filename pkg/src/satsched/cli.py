"""Command line front end.

One subcommand per workflow step: generate an instance, dump its orbit
graph, validate or score a schedule file, run the tree search (or the
oracle / greedy baselines), and drive benchmark sweeps from a plan file.
Run ``satsched <subcommand> --help`` for the flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from ._backend import available_backends
from .baselines import SearchSpaceTooLarge, greedy, oracle_optimal
from .feasibility import validate_schedule
from .graph import build_graph
from .instance import (
    GeneratorParams,
    InstanceDataError,
    InstanceFormatError,
    ParameterError,
    generate,
    load_instance,
    save_instance,
)
from .mcts import VARIANTS, SearchConfig, search
from .scoring import ScheduleFormatError, load_schedule, save_schedule


def _cmd_generate(args: argparse.Namespace) -> int:
    overrides = {
        name: value
        for name, value in (
            ("orbit_horizon", args.horizon),
            ("visibility_rate", args.visibility),
            ("capacity_tightness", args.tightness),
        )
        if value is not None
    }
    inst = generate(
        GeneratorParams(
            num_tasks=args.tasks,
            num_orbits=args.orbits,
            seed=args.seed,
            **overrides,
        )
    )
    save_instance(inst, args.out)
    print(f"wrote {args.out} ({inst.num_tasks} tasks, {inst.num_orbits} orbits)")
    return 0


def _cmd_dump_graph(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    text = build_graph(inst).to_dot()
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    schedule = load_schedule(inst, args.schedule)
    violations = validate_schedule(inst, schedule)
    if args.json:
        doc = {
            "valid": not violations,
            "violations": [
                {"kind": v.kind, "orbit": v.orbit, "detail": v.detail}
                for v in violations
            ],
        }
        print(json.dumps(doc, indent=2))
    elif not violations:
        print("schedule is feasible")
    else:
        for v in violations:
            where = f"orbit {v.orbit}" if v.orbit is not None else "schedule"
            print(f"{where}: {v.kind}: {v.detail}")
        print(f"{len(violations)} violation(s)")
    return 0 if not violations else 1


def _cmd_score(args: argparse.Namespace) -> int:
    from .scoring import expected_value

    inst = load_instance(args.instance)
    schedule = load_schedule(inst, args.schedule)
    print(f"{expected_value(inst, schedule):.6f}")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    graph = build_graph(inst)
    config = SearchConfig(
        variant=args.variant,
        exploration_coefficient=args.c,
        num_simulations=args.sims,
        seed=args.seed,
        time_limit=args.time_limit,
        backend=args.backend,
    )
    result = search(inst, graph, config)
    rate = result.simulations_run / result.wall_time if result.wall_time > 0 else 0.0
    print(f"expected value: {result.expected_value:.6f}")
    print(f"wall time: {result.wall_time:.3f} s")
    print(f"simulations: {result.simulations_run} ({rate:.0f}/s, {result.backend} backend)")
    if result.extraction_completed_randomly:
        print("note: extraction left the explored tree and finished randomly")
    if args.out is not None:
        save_schedule(inst, result.schedule, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    graph = build_graph(inst)
    schedule, value = oracle_optimal(inst, graph)
    print(f"optimal value: {value:.6f}")
    save_schedule(inst, schedule, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_greedy(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    graph = build_graph(inst)
    schedule, value = greedy(inst, graph)
    print(f"greedy value: {value:.6f}")
    save_schedule(inst, schedule, args.out)
    print(f"wrote {args.out}")
    return 0


def _baseline_values(plan: harness.ExperimentPlan, which: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for label, source in plan.instances:
        inst, graph = harness._load_source(source)
        if which == "oracle":
            try:
                _, values[label] = oracle_optimal(inst, graph)
            except SearchSpaceTooLarge as e:
                print(
                    f"warning: oracle refused instance {label!r} ({e}); "
                    "percentage column omitted",
                    file=sys.stderr,
                )
        else:
            _, values[label] = greedy(inst, graph)
    return values


def _cmd_benchmark(args: argparse.Namespace) -> int:
    plan = harness.plan_from_file(args.plan)
    baseline = None
    if args.baseline != "none":
        baseline = _baseline_values(plan, args.baseline)
    report = harness.run_experiment(plan, workers=args.workers)
    harness.write_report_csv(report, args.out)
    print(f"wrote {args.out} ({len(report.rows)} rows, {len(report.errors)} errors)")
    for message in report.errors:
        print(f"error: {message}", file=sys.stderr)
    summary_path = args.summary
    if summary_path is None:
        out = Path(args.out)
        summary_path = out.with_name(out.stem + "_summary" + out.suffix)
    tables = harness.summarize(plan, report, baseline_values=baseline)
    harness.write_summary_csv(tables, summary_path)
    print(f"wrote {summary_path}")
    return 0 if not report.errors else 1


def _cmd_bench_backends(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    graph = build_graph(inst)
    backends = available_backends()
    if len(backends) < 2:
        print("only the pure-Python backend is built; nothing to compare")
    results = {}
    for backend in backends:
        best = None
        for _ in range(args.reps):
            result = search(
                inst,
                graph,
                SearchConfig(
                    variant=args.variant,
                    exploration_coefficient=args.c,
                    num_simulations=args.sims,
                    seed=args.seed,
                    backend=backend,
                ),
            )
            if best is None or result.wall_time < best.wall_time:
                best = result
        results[backend] = best
        rate = best.simulations_run / best.wall_time
        print(
            f"{backend:>8}: {best.wall_time:.3f} s, {rate:,.0f} sims/s, "
            f"value {best.expected_value:.6f}"
        )
    values = {r.expected_value for r in results.values()}
    schedules = {r.schedule.per_orbit for r in results.values()}
    if len(values) > 1 or len(schedules) > 1:
        print("MISMATCH: backends disagree on the result", file=sys.stderr)
        return 1
    if len(results) == 2:
        py = results["python"].wall_time
        comp = results["compiled"].wall_time
        print(f"speedup: {py / comp:.1f}x (backends agree exactly)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satsched",
        description="Multi-orbit satellite collection scheduling toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random problem instance")
    p.add_argument("--tasks", type=int, required=True)
    p.add_argument("--orbits", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="instance JSON path")
    p.add_argument("--horizon", type=float, default=None, help="orbit duration")
    p.add_argument("--visibility", type=float, default=None,
                   help="probability a task is visible on an orbit")
    p.add_argument("--tightness", type=float, default=None,
                   help="capacity tightness in (0, 1]")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("dump-graph", help="print the orbit graph as DOT")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None, help="write DOT here instead of stdout")
    p.set_defaults(func=_cmd_dump_graph)

    p = sub.add_parser("validate", help="check a schedule file for violations")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("score", help="print a schedule's expected value")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("solve", help="run the tree search on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--c", type=float, required=True, help="exploration coefficient")
    p.add_argument("--sims", type=int, required=True, help="simulation budget")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None, help="write the schedule here")
    p.add_argument("--time-limit", type=float, default=None,
                   help="stop early after this many seconds")
    p.add_argument("--backend", default="auto",
                   help="auto, python, or compiled")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive optimum (small instances only)")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default="oracle_schedule.json")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("greedy", help="constructive baseline schedule")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default="greedy_schedule.json")
    p.set_defaults(func=_cmd_greedy)

    p = sub.add_parser("benchmark", help="run an experiment plan")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", default=None,
                   help="summary CSV path (default: <out>_summary.csv)")
    p.add_argument("--baseline", choices=("none", "oracle", "greedy"),
                   default="none",
                   help="also report value as a percentage of this baseline")
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("bench-backends",
                       help="time the compiled core against the pure-Python engine")
    p.add_argument("--instance", required=True)
    p.add_argument("--sims", type=int, default=100_000)
    p.add_argument("--variant", choices=VARIANTS, default="max")
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=3, help="take the best of this many runs")
    p.set_defaults(func=_cmd_bench_backends)

    return parser


_USER_ERRORS = (
    FileNotFoundError,
    ParameterError,
    InstanceFormatError,
    InstanceDataError,
    ScheduleFormatError,
    SearchSpaceTooLarge,
    harness.PlanError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
