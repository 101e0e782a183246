"""Multi-orbit satellite collection scheduling.

A satellite passes over a set of observation targets on consecutive
orbits; each target is visible through a time window, costs memory and
energy to collect, and succeeds only with some probability.  This
package models the problem, searches for high-reward schedules with two
Monte Carlo tree search variants, and checks results against exhaustive
and greedy baselines.

The search runs on a compiled core when the extension is built and on a
pure-Python engine otherwise; both produce bit-identical results for
the same seed.
"""

from ._backend import DEFAULT_BACKEND, available_backends
from .baselines import (
    ORACLE_PATH_LIMIT,
    SearchSpaceTooLarge,
    estimate_path_count,
    greedy,
    oracle_optimal,
)
from .feasibility import (
    OrbitResourceState,
    Violation,
    extend,
    is_valid,
    legal_successors,
    validate_schedule,
)
from .graph import NodeId, NodeKind, ScheduleGraph, build_graph
from .harness import (
    ExperimentPlan,
    ExperimentReport,
    PlanError,
    make_plan,
    plan_from_file,
    run_experiment,
    summarize,
    write_report_csv,
    write_summary_csv,
)
from .instance import (
    GeneratorParams,
    InstanceDataError,
    InstanceFormatError,
    Opportunity,
    OrbitSpec,
    ParameterError,
    ProblemInstance,
    Schedule,
    TaskDef,
    Transition,
    generate,
    load_instance,
    save_instance,
)
from .mcts import VARIANTS, SearchConfig, SearchResult, search, uct_score
from .scoring import (
    ScheduleFormatError,
    assignment_value,
    expected_value,
    load_schedule,
    save_schedule,
    schedule_to_assignment,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BACKEND",
    "ExperimentPlan",
    "ExperimentReport",
    "GeneratorParams",
    "InstanceDataError",
    "InstanceFormatError",
    "NodeId",
    "NodeKind",
    "ORACLE_PATH_LIMIT",
    "Opportunity",
    "OrbitSpec",
    "OrbitResourceState",
    "ParameterError",
    "PlanError",
    "ProblemInstance",
    "Schedule",
    "ScheduleFormatError",
    "ScheduleGraph",
    "SearchConfig",
    "SearchResult",
    "SearchSpaceTooLarge",
    "TaskDef",
    "Transition",
    "VARIANTS",
    "Violation",
    "available_backends",
    "assignment_value",
    "build_graph",
    "estimate_path_count",
    "expected_value",
    "extend",
    "generate",
    "greedy",
    "is_valid",
    "legal_successors",
    "load_instance",
    "load_schedule",
    "make_plan",
    "oracle_optimal",
    "plan_from_file",
    "run_experiment",
    "save_instance",
    "save_schedule",
    "schedule_to_assignment",
    "search",
    "summarize",
    "uct_score",
    "validate_schedule",
    "write_report_csv",
    "write_summary_csv",
]
