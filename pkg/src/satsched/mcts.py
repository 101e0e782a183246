"""Monte Carlo tree search over the scheduling graph.

Two variants share one loop.  The average variant scores a child by its
mean rollout value plus the exploration bonus and extracts the final
schedule by following maximum visit counts.  The max variant scores a
child by the best rollout value seen through it plus the same bonus,
backpropagates by replace-if-greater, and extracts by best value.  Each
iteration descends the tree by UCT, expands the reached leaf by creating
all resource-legal children at once, simulates one uniformly chosen child
to the end of the last orbit with uniform-random legal moves, and
backpropagates the walk's objective value along the path.

Everything downstream of the seed is deterministic: exact-tie selection,
the expansion choice, and rollout moves consume the per-search RNG in a
fixed order, so one (instance, config) pair always yields one schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf, isfinite, log, sqrt
from time import perf_counter

from . import _backend, scoring
from .graph import ScheduleGraph
from .instance import ProblemInstance, Schedule

VARIANTS = ("average", "max")
_VARIANT_CODE = {"average": 0, "max": 1}


@dataclass(frozen=True)
class SearchConfig:
    """Search hyperparameters.

    ``time_limit`` optionally stops early after the wall-clock budget (the
    simulation count then records what actually ran; timed runs are not
    reproducible across machines).  ``backend`` picks the engine: "auto"
    takes the compiled core when built, else the pure-Python reference.
    """

    variant: str
    exploration_coefficient: float
    num_simulations: int
    seed: int
    time_limit: float | None = None
    backend: str = "auto"


@dataclass(frozen=True)
class SearchResult:
    schedule: Schedule
    expected_value: float
    simulations_run: int
    wall_time: float
    best_rollout_value: float
    extraction_completed_randomly: bool
    backend: str
    tree_nodes: int


def _check_config(config: SearchConfig) -> None:
    if config.variant not in VARIANTS:
        raise ValueError(
            f"variant {config.variant!r} is not one of {', '.join(VARIANTS)}"
        )
    c = config.exploration_coefficient
    if not isfinite(c) or c <= 0:
        raise ValueError(f"exploration_coefficient must be finite and > 0, got {c}")
    if config.num_simulations < 1:
        raise ValueError(
            f"num_simulations must be >= 1, got {config.num_simulations}"
        )
    if config.seed < 0 or config.seed >= 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {config.seed}")
    if config.time_limit is not None and not config.time_limit > 0:
        raise ValueError(f"time_limit must be positive, got {config.time_limit}")


def uct_score(
    variant: str,
    value: float,
    visits: int,
    parent_visits: int,
    exploration_coefficient: float,
) -> float:
    """Selection score of a child node.

    ``value`` is the node's stored value: the rollout sum for the average
    variant (so value / visits is the mean) and the best rollout value for
    the max variant.  Unvisited nodes score positive infinity so each
    child is tried before any child is repeated.
    """
    if variant not in VARIANTS:
        raise ValueError(
            f"variant {variant!r} is not one of {', '.join(VARIANTS)}"
        )
    if visits < 0 or parent_visits < visits:
        raise ValueError(
            f"need parent_visits >= visits >= 0, got {parent_visits}, {visits}"
        )
    if visits == 0:
        return inf
    bonus = exploration_coefficient * sqrt(log(parent_visits) / visits)
    if variant == "average":
        return value / visits + bonus
    return value + bonus


def search(
    instance: ProblemInstance, graph: ScheduleGraph, config: SearchConfig
) -> SearchResult:
    """Run one full search and return the extracted schedule.

    The reported expected value is recomputed from the final schedule, the
    wall time covers the search loop and extraction only, and the
    extraction flag records whether descent fell off the explored tree and
    had to finish with random legal moves.
    """
    _check_config(config)
    if graph.instance is not instance and graph.instance != instance:
        raise ValueError("graph was built for a different instance")
    t0 = perf_counter()
    raw = _backend.run_search(
        config.backend,
        graph,
        _VARIANT_CODE[config.variant],
        config.exploration_coefficient,
        config.num_simulations,
        config.seed,
        config.time_limit,
    )
    wall = perf_counter() - t0
    schedule = Schedule.from_lists(raw["per_orbit"])
    return SearchResult(
        schedule=schedule,
        expected_value=scoring.expected_value(instance, schedule),
        simulations_run=int(raw["simulations_run"]),
        wall_time=wall,
        best_rollout_value=float(raw["best_rollout_value"]),
        extraction_completed_randomly=bool(raw["completed_randomly"]),
        backend=_backend.resolve_backend(config.backend),
        tree_nodes=int(raw["node_count"]),
    )
