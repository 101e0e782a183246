"""Ground-truth oracle and greedy baseline.

The oracle enumerates the complete multi-orbit path space.  Per-orbit
enumeration would not be sound: the objective couples orbits because a
task collected on several orbits compounds its success probability, so
the optimum over the whole horizon is not a concatenation of per-orbit
optima.  Enumeration is guarded by a path-count estimate; density rather
than task count is what makes it blow up.

The greedy baseline walks the orbits in order and keeps appending the
reachable task with the largest marginal gain in expected value, which
accounts for collections already made on earlier orbits.
"""

from __future__ import annotations

from math import prod

from . import scoring
from .feasibility import OrbitResourceState, extend, legal_successors
from .graph import NodeId, NodeKind, ScheduleGraph
from .instance import ProblemInstance, Schedule

ORACLE_PATH_LIMIT = 10_000_000


class SearchSpaceTooLarge(ValueError):
    """The instance's path space is too big to enumerate exhaustively."""

    def __init__(self, message: str, estimate: int | None = None) -> None:
        super().__init__(message)
        self.estimate = estimate


def estimate_path_count(graph: ScheduleGraph) -> int | None:
    """Exact number of boundary-to-boundary walk combinations, or None when
    an orbit layer is cyclic and the count is unbounded."""
    counts = graph.orbit_path_counts()
    if any(c is None for c in counts):
        return None
    return prod(counts)


def oracle_optimal(
    instance: ProblemInstance,
    graph: ScheduleGraph,
    path_limit: int = ORACLE_PATH_LIMIT,
) -> tuple[Schedule, float]:
    """Exhaustive optimum by depth-first enumeration of every legal path.

    Returns one optimal schedule and its expected value; among equal-value
    optima the lowest lexicographic flat task-id sequence wins, so the
    result is reproducible.  Refuses instances whose estimated path count
    exceeds ``path_limit``.
    """
    estimate = estimate_path_count(graph)
    if estimate is None:
        raise SearchSpaceTooLarge(
            "an orbit layer contains a cycle; the path space is unbounded"
        )
    if estimate > path_limit:
        raise SearchSpaceTooLarge(
            f"estimated {estimate} paths exceed the limit of {path_limit}",
            estimate=estimate,
        )

    inst = instance
    n, m = inst.num_tasks, inst.num_orbits
    profit = graph.profit.tolist()
    ids = graph.task_ids.tolist()
    dur = inst.duration.tolist()
    prob = inst.probability.tolist()
    slew = inst.slew_energy.tolist()
    m_rate = graph.memory_rate.tolist()
    e_rate = graph.energy_rate.tolist()
    mem_cap = graph.memory_capacity.tolist()
    e_cap = graph.energy_capacity.tolist()
    nrow = n + 1
    rows = [
        graph.succ_data[graph.succ_indptr[r] : graph.succ_indptr[r + 1]].tolist()
        for r in range(m * nrow)
    ]

    fail = [1.0] * n
    sched: list[list[int]] = [[] for _ in range(m)]
    key: list[int] = []
    best = {"value": -1.0, "key": None, "sched": None}

    def visit_terminal(value: float) -> None:
        if value > best["value"] or (
            value == best["value"] and tuple(key) < best["key"]
        ):
            best["value"] = value
            best["key"] = tuple(key)
            best["sched"] = [list(orbit) for orbit in sched]

    def rec(t: int, orb: int, mem: float, en: float, last: int, value: float) -> None:
        # t == -1 is the boundary with `orb` completed orbits; otherwise a
        # task position on 0-based orbit `orb`.
        if t == -1 and orb == m:
            visit_terminal(value)
            return
        q = orb
        row = rows[q * nrow + (n if t == -1 else t)]
        for j in row:
            mem2 = mem + dur[q][j] * m_rate[q]
            if mem2 > mem_cap[q]:
                continue
            en2 = en + dur[q][j] * e_rate[q]
            if last >= 0:
                en2 = en2 + slew[q][last][j]
            if en2 > e_cap[q]:
                continue
            old = fail[j]
            gain = profit[j] * old * prob[q][j]
            fail[j] = old * (1.0 - prob[q][j])
            sched[q].append(ids[j])
            key.append(ids[j])
            rec(j, q, mem2, en2, j, value + gain)
            key.pop()
            sched[q].pop()
            fail[j] = old
        rec(-1, orb + 1, 0.0, 0.0, -1, value)

    rec(-1, 0, 0.0, 0.0, -1, 0.0)
    schedule = Schedule.from_lists(best["sched"])
    return schedule, scoring.expected_value(instance, schedule)


def greedy(
    instance: ProblemInstance, graph: ScheduleGraph
) -> tuple[Schedule, float]:
    """Constructive baseline: per orbit, repeatedly append the reachable
    task with the largest marginal expected-value gain (ties to the lowest
    task id), stopping when no reachable task improves the objective."""
    fail = {t.id: 1.0 for t in instance.tasks}
    per_orbit: list[list[int]] = []
    for orbit_no in range(1, instance.num_orbits + 1):
        chosen: list[int] = []
        taken: set[int] = set()
        node = NodeId.end(orbit_no - 1) if orbit_no > 1 else NodeId.start()
        state = OrbitResourceState.fresh(orbit_no)
        while True:
            options = [
                succ
                for succ in legal_successors(graph, node, state)
                if succ.kind is NodeKind.TASK and succ.task not in taken
            ]
            best_gain = 0.0
            best_succ = None
            for succ in options:
                opp = instance.opportunity(succ.task, orbit_no)
                gain = (
                    instance.tasks[instance.index_of(succ.task)].profit
                    * fail[succ.task]
                    * opp.success_probability
                )
                if gain > best_gain or (
                    gain == best_gain
                    and best_succ is not None
                    and gain > 0.0
                    and succ.task < best_succ.task
                ):
                    best_gain = gain
                    best_succ = succ
            if best_succ is None or best_gain <= 0.0:
                break
            nxt = extend(instance, state, best_succ.task)
            if nxt is None:
                raise RuntimeError(
                    f"task {best_succ.task} was offered as legal but does not fit"
                )
            state = nxt
            opp = instance.opportunity(best_succ.task, orbit_no)
            fail[best_succ.task] *= 1.0 - opp.success_probability
            chosen.append(best_succ.task)
            taken.add(best_succ.task)
            node = best_succ
        per_orbit.append(chosen)
    schedule = Schedule.from_lists(per_orbit)
    return schedule, scoring.expected_value(instance, schedule)
