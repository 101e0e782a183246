"""Resource bookkeeping and schedule validation.

Memory and energy are consumed within an orbit and recharge fully at the
boundary, so feasibility state is per orbit: memory used so far, energy
used so far, and the previously collected task (slew energy depends on the
ordered task pair).  Collecting a task costs its window duration times the
orbit's memory rate in memory, and its window duration times the energy
rate plus the slew from the previous task in energy.  All comparisons
against the budgets are exact float comparisons; a path that lands exactly
on a budget is feasible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .graph import NodeId, NodeKind, ScheduleGraph
from .instance import ProblemInstance, Schedule


@dataclass(frozen=True)
class OrbitResourceState:
    """Consumption along one orbit of a partial walk."""

    orbit: int
    memory_used: float = 0.0
    energy_used: float = 0.0
    last_task: int | None = None

    @classmethod
    def fresh(cls, orbit: int) -> "OrbitResourceState":
        return cls(orbit=orbit)


def extend(
    instance: ProblemInstance, state: OrbitResourceState, task_id: int
) -> OrbitResourceState | None:
    """State after also collecting ``task_id`` on the state's orbit, or
    None when the orbit's memory or energy budget would be exceeded."""
    k = state.orbit - 1
    if not 0 <= k < instance.num_orbits:
        raise ValueError(f"state orbit {state.orbit} outside 1..{instance.num_orbits}")
    i = instance.index_of(task_id)
    if not instance.available[k, i]:
        raise ValueError(f"task {task_id} is not available on orbit {state.orbit}")
    spec = instance.orbits[k]
    dur = instance.duration[k, i]
    memory = state.memory_used + dur * spec.memory_rate
    energy = state.energy_used + dur * spec.energy_rate
    if state.last_task is not None:
        j = instance.index_of(state.last_task)
        energy += instance.slew_energy[k, j, i]
    if memory <= spec.memory_capacity and energy <= spec.energy_capacity:
        return replace(
            state, memory_used=memory, energy_used=energy, last_task=task_id
        )
    return None


def legal_successors(
    graph: ScheduleGraph, node: NodeId, state: OrbitResourceState | None = None
) -> list[NodeId]:
    """Static successors of ``node`` that the resource budgets still admit.

    ``state`` is the walk state at the node.  For start and boundary nodes
    the following orbit begins fresh, so ``state`` may be omitted; for task
    nodes it is required and must sit on the node's orbit.  The move to the
    closing boundary never costs resources and is always last in the
    returned list.
    """
    inst = graph.instance
    static = graph.static_successors(node)
    if not static:
        return []
    next_orbit = static[-1].orbit
    if node.kind is NodeKind.TASK:
        if state is None:
            raise ValueError("task nodes need the walk's resource state")
        if state.orbit != node.orbit or state.last_task != node.task:
            raise ValueError(
                f"state {state} does not describe a walk sitting on {node}"
            )
    elif state is None:
        state = OrbitResourceState.fresh(next_orbit)
    elif state.orbit != next_orbit or state.last_task is not None:
        raise ValueError(
            f"state {state} is not a fresh state for orbit {next_orbit}"
        )
    out = [
        succ
        for succ in static[:-1]
        if extend(inst, state, succ.task) is not None
    ]
    out.append(static[-1])
    return out


@dataclass(frozen=True)
class Violation:
    kind: str
    orbit: int | None
    detail: str


def validate_schedule(instance: ProblemInstance, schedule: Schedule) -> list[Violation]:
    """Every way the schedule breaks the model, or an empty list.

    Checked per orbit: task ids exist, tasks are available, no task repeats
    within the orbit, consecutive windows are reachable
    (window_end + setup_time <= window_start, exact comparison), and the
    memory and energy budgets hold.  A task may recur on different orbits;
    that is the model's redundancy mechanism, not an error.
    """
    violations: list[Violation] = []
    m = instance.num_orbits
    if len(schedule.per_orbit) != m:
        violations.append(
            Violation(
                kind="orbit_count",
                orbit=None,
                detail=f"schedule has {len(schedule.per_orbit)} orbits, instance has {m}",
            )
        )
    for k, chosen in enumerate(schedule.per_orbit[:m]):
        orbit_no = k + 1
        spec = instance.orbits[k]
        seen: set[int] = set()
        usable: list[int] = []
        for tid in chosen:
            try:
                i = instance.index_of(tid)
            except KeyError:
                violations.append(
                    Violation("unknown_task", orbit_no, f"task id {tid} does not exist")
                )
                continue
            if tid in seen:
                violations.append(
                    Violation(
                        "duplicate",
                        orbit_no,
                        f"task {tid} appears twice on orbit {orbit_no}",
                    )
                )
                continue
            seen.add(tid)
            if not instance.available[k, i]:
                violations.append(
                    Violation(
                        "availability",
                        orbit_no,
                        f"task {tid} has no opportunity on orbit {orbit_no}",
                    )
                )
                continue
            usable.append(i)
        for a, b in zip(usable, usable[1:]):
            gap = (
                instance.window_end[k, a]
                + instance.setup_time[k, a, b]
                - instance.window_start[k, b]
            )
            if gap > 0:
                violations.append(
                    Violation(
                        "time_window",
                        orbit_no,
                        f"task {instance.tasks[b].id} starts {gap:.6g} too early "
                        f"after task {instance.tasks[a].id} on orbit {orbit_no}",
                    )
                )
        memory = sum(instance.duration[k, i] for i in usable) * spec.memory_rate
        if memory > spec.memory_capacity:
            violations.append(
                Violation(
                    "memory",
                    orbit_no,
                    f"memory {memory:.6g} exceeds capacity "
                    f"{spec.memory_capacity:.6g} on orbit {orbit_no}",
                )
            )
        energy = sum(instance.duration[k, i] for i in usable) * spec.energy_rate
        energy += sum(
            instance.slew_energy[k, a, b] for a, b in zip(usable, usable[1:])
        )
        if energy > spec.energy_capacity:
            violations.append(
                Violation(
                    "energy",
                    orbit_no,
                    f"energy {energy:.6g} exceeds capacity "
                    f"{spec.energy_capacity:.6g} on orbit {orbit_no}",
                )
            )
    return violations


def is_valid(instance: ProblemInstance, schedule: Schedule) -> bool:
    return not validate_schedule(instance, schedule)
