"""Directed acyclic scheduling graph over collection opportunities.

Each orbit contributes one layer: an edge connects task i to task j within
an orbit when j's window can still be reached after finishing i, that is
``window_end(i) + setup_time(i, j) <= window_start(j)`` (equality admits
the edge).  Consecutive orbits are joined through a single merged boundary
node, so the end of orbit k and the start of orbit k + 1 are the same
vertex.  A walk from the global start to the final boundary therefore
selects an ordered subset of tasks per orbit.

Positions on the graph are written as (task, completed) internally: task
-1 with ``completed = g`` is the boundary after g finished orbits (the
root is boundary 0, the terminal is boundary M), and a task index with a
0-based orbit is a task position.  The public API deals in ``NodeId``
values instead.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .instance import ProblemInstance


class NodeKind(Enum):
    START = "start"
    TASK = "task"
    END = "end"


@dataclass(frozen=True)
class NodeId:
    """Graph vertex: the global start, a (task, orbit) visit, or the
    boundary closing an orbit.  ``orbit`` is 1-based; ``task`` is a task id
    and only present for TASK nodes."""

    kind: NodeKind
    orbit: int
    task: int | None = None

    @classmethod
    def start(cls) -> "NodeId":
        return cls(NodeKind.START, 1)

    @classmethod
    def task_visit(cls, task: int, orbit: int) -> "NodeId":
        return cls(NodeKind.TASK, orbit, task)

    @classmethod
    def end(cls, orbit: int) -> "NodeId":
        return cls(NodeKind.END, orbit)


def _tie_key(node: NodeId) -> tuple[int, int]:
    """Order used to break exact ties among sibling candidates: tasks by
    ascending id, the boundary after every task."""
    if node.kind is NodeKind.TASK:
        return (0, node.task)
    return (1, 0)


class ScheduleGraph:
    """Successor structure for one instance.

    Adjacency is stored in compressed sparse rows over task indices; row
    ``q * (n + 1) + i`` lists the within-orbit successors of task i in
    0-based orbit q and row ``q * (n + 1) + n`` lists the entry moves of
    orbit q (tasks reachable directly from the preceding boundary).  Rows
    are sorted by (window_start, task id).  The always-legal move to the
    orbit's closing boundary is implicit and not stored.
    """

    def __init__(self, instance: ProblemInstance) -> None:
        self.instance = instance
        n = instance.num_tasks
        m = instance.num_orbits
        ids = np.array(instance.task_ids, dtype=np.int64)

        rows: list[np.ndarray] = []
        for q in range(m):
            avail = instance.available[q]
            ws = instance.window_start[q]
            we = instance.window_end[q]
            st = instance.setup_time[q]
            idx = np.nonzero(avail)[0]
            order = idx[np.lexsort((ids[idx], ws[idx]))].astype(np.int32)
            task_rows = [np.empty(0, dtype=np.int32)] * n
            for i in idx:
                ok = avail & (we[i] + st[i] <= ws)
                ok[i] = False
                task_rows[i] = order[ok[order]]
            rows.extend(task_rows)
            rows.append(order)

        self.succ_indptr = np.zeros(m * (n + 1) + 1, dtype=np.int32)
        np.cumsum([len(r) for r in rows], out=self.succ_indptr[1:])
        self.succ_data = (
            np.concatenate(rows).astype(np.int32)
            if self.succ_indptr[-1]
            else np.empty(0, dtype=np.int32)
        )
        self.task_ids = ids
        self.profit = np.ascontiguousarray(instance.profits)
        self.memory_capacity = np.array([o.memory_capacity for o in instance.orbits])
        self.energy_capacity = np.array([o.energy_capacity for o in instance.orbits])
        self.memory_rate = np.array([o.memory_rate for o in instance.orbits])
        self.energy_rate = np.array([o.energy_rate for o in instance.orbits])
        for arr in (self.succ_indptr, self.succ_data, self.task_ids, self.profit,
                    self.memory_capacity, self.energy_capacity,
                    self.memory_rate, self.energy_rate):
            arr.flags.writeable = False

    @property
    def num_tasks(self) -> int:
        return self.instance.num_tasks

    @property
    def num_orbits(self) -> int:
        return self.instance.num_orbits

    def _row(self, row: int) -> np.ndarray:
        lo, hi = self.succ_indptr[row], self.succ_indptr[row + 1]
        return self.succ_data[lo:hi]

    def task_row(self, q: int, i: int) -> np.ndarray:
        """Successor task indices of task index i within 0-based orbit q."""
        return self._row(q * (self.num_tasks + 1) + i)

    def entry_row(self, q: int) -> np.ndarray:
        """Task indices reachable as the first move of 0-based orbit q."""
        return self._row(q * (self.num_tasks + 1) + self.num_tasks)

    def _check_node(self, node: NodeId) -> None:
        m = self.num_orbits
        if node.kind is NodeKind.START:
            if node.orbit != 1:
                raise ValueError(f"start node must have orbit 1, got {node.orbit}")
            if node.task is not None:
                raise ValueError("start node carries no task")
        elif node.kind is NodeKind.END:
            if not 1 <= node.orbit <= m:
                raise ValueError(f"end node orbit {node.orbit} outside 1..{m}")
            if node.task is not None:
                raise ValueError("end node carries no task")
        else:
            if not 1 <= node.orbit <= m:
                raise ValueError(f"task node orbit {node.orbit} outside 1..{m}")
            if node.task is None:
                raise ValueError("task node needs a task id")
            i = self.instance.index_of(node.task)
            if not self.instance.available[node.orbit - 1, i]:
                raise ValueError(
                    f"task {node.task} is not available on orbit {node.orbit}"
                )

    def static_successors(self, node: NodeId) -> list[NodeId]:
        """All outgoing edges of a vertex, ignoring resource state.

        Task successors come first, sorted by (window_start, task id);
        the closing boundary of the orbit is always last.  The terminal
        boundary has no successors.
        """
        self._check_node(node)
        if node.kind is NodeKind.START:
            tasks, orbit = self.entry_row(0), 1
        elif node.kind is NodeKind.END:
            if node.orbit == self.num_orbits:
                return []
            tasks, orbit = self.entry_row(node.orbit), node.orbit + 1
        else:
            q = node.orbit - 1
            i = self.instance.index_of(node.task)
            tasks, orbit = self.task_row(q, i), node.orbit
        out = [
            NodeId.task_visit(int(self.task_ids[j]), orbit) for j in tasks
        ]
        out.append(NodeId.end(orbit))
        return out

    def edge_count(self) -> int:
        """Stored task-to-task and entry edges plus the implicit boundary
        edges (one per task node and one per non-terminal boundary)."""
        n_task_nodes = int(self.instance.available.sum())
        return int(self.succ_indptr[-1]) + n_task_nodes + self.num_orbits

    def orbit_path_counts(self) -> list[int | None]:
        """Number of distinct walks across each orbit layer, boundary to
        boundary, the skip walk included.  ``None`` marks an orbit whose
        task edges form a cycle (possible only in degenerate hand-built
        data), where the count is unbounded."""
        counts: list[int | None] = []
        for q in range(self.num_orbits):
            idx = np.nonzero(self.instance.available[q])[0]
            adj = {int(i): [int(j) for j in self.task_row(q, int(i))] for i in idx}
            ts = graphlib.TopologicalSorter(adj)
            try:
                topo = list(ts.static_order())
            except graphlib.CycleError:
                counts.append(None)
                continue
            paths: dict[int, int] = {}
            for i in topo:
                paths[i] = 1 + sum(paths[j] for j in adj.get(i, ()))
            counts.append(1 + sum(paths[int(i)] for i in self.entry_row(q)))
        return counts

    def to_dot(self) -> str:
        """Graphviz rendering of the layered graph, for desk inspection."""
        inst = self.instance
        lines = ["digraph schedule {", "  rankdir=LR;"]
        m = self.num_orbits
        lines.append('  b0 [shape=box, label="start"];')
        for g in range(1, m + 1):
            label = "end" if g == m else f"boundary {g}"
            lines.append(f'  b{g} [shape=box, label="{label}"];')
        for q in range(m):
            lines.append(f"  subgraph cluster_orbit{q + 1} {{")
            lines.append(f'    label="orbit {q + 1}";')
            for i in np.nonzero(inst.available[q])[0]:
                tid = int(self.task_ids[i])
                ws = inst.window_start[q, i]
                we = inst.window_end[q, i]
                lines.append(
                    f'    o{q + 1}t{tid} [label="task {tid}\\n'
                    f'[{ws:.6g}, {we:.6g}]"];'
                )
            lines.append("  }")
        for q in range(m):
            for j in self.entry_row(q):
                lines.append(f"  b{q} -> o{q + 1}t{int(self.task_ids[j])};")
            for i in np.nonzero(inst.available[q])[0]:
                tid = int(self.task_ids[i])
                for j in self.task_row(q, int(i)):
                    lines.append(
                        f"  o{q + 1}t{tid} -> o{q + 1}t{int(self.task_ids[j])};"
                    )
                lines.append(f"  o{q + 1}t{tid} -> b{q + 1};")
            lines.append(f"  b{q} -> b{q + 1};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(instance: ProblemInstance) -> ScheduleGraph:
    return ScheduleGraph(instance)
