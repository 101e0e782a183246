"""Pure-Python tree search engine.

This is the reference implementation of the solver loop; the compiled
engine in ``_core`` is a transliteration of it and must reproduce its
output bit for bit.  Keep the two in lockstep when changing anything
here, in particular:

* random draws: selection draws once iff an exact score tie involves two
  or more children, expansion always draws once over the new children,
  every rollout step draws once over the legal candidates;
* float arithmetic: resource updates happen in two statements (collection
  cost, then slew), UCT terms are evaluated in the order written here, and
  comparisons are exact.

The search tree is built over walk prefixes, not graph vertices: the same
graph vertex reached along two different prefixes has different remaining
resources, so each prefix gets its own node.  Within an iteration the walk
state is a handful of scalars (memory, energy, previous task) plus two
persistent per-task arrays, the running failure product for incremental
objective updates and an iteration-tagged visited mark that stops a task
from repeating within one orbit without any per-iteration reset cost.
"""

from __future__ import annotations

from math import inf, log, sqrt
from time import perf_counter

import numpy as np

from .feasibility import OrbitResourceState
from .graph import ScheduleGraph
from .rng import Xoshiro256pp

VARIANT_AVERAGE = 0
VARIANT_MAX = 1


class TreeNode:
    """One walk prefix.  ``task`` is a task index, or -1 for a boundary;
    ``orbit`` is the 0-based orbit of the task, or for boundaries the
    number of completed orbits.  ``children`` stays None until expansion;
    ``value`` is the rollout sum (average variant) or the best rollout seen
    through the node (max variant)."""

    __slots__ = (
        "index",
        "task",
        "orbit",
        "value",
        "visits",
        "children",
        "endpoint_count",
        "resource_state",
    )

    def __init__(self, index: int, task: int, orbit: int, resource_state) -> None:
        self.index = index
        self.task = task
        self.orbit = orbit
        self.value = 0.0
        self.visits = 0
        self.children: list[TreeNode] | None = None
        self.endpoint_count = 0
        self.resource_state = resource_state


class PySearchEngine:
    def __init__(self, graph: ScheduleGraph, variant: int, c: float, seed: int) -> None:
        inst = graph.instance
        self.graph = graph
        self.n = inst.num_tasks
        self.m = inst.num_orbits
        self.variant = variant
        self.c = c
        # Plain lists index much faster than numpy scalars in this loop.
        self.profit = graph.profit.tolist()
        self.dur = inst.duration.tolist()
        self.prob = inst.probability.tolist()
        self.slew = inst.slew_energy.tolist()
        self.m_rate = graph.memory_rate.tolist()
        self.e_rate = graph.energy_rate.tolist()
        self.mem_cap = graph.memory_capacity.tolist()
        self.e_cap = graph.energy_capacity.tolist()
        self.task_ids = graph.task_ids.tolist()
        nrow = self.n + 1
        self.rows = [
            graph.succ_data[graph.succ_indptr[r] : graph.succ_indptr[r + 1]].tolist()
            for r in range(self.m * nrow)
        ]
        self.rng = Xoshiro256pp(seed)
        root = TreeNode(0, -1, 0, OrbitResourceState.fresh(1))
        self.nodes: list[TreeNode] = [root]
        self.root = root
        self.fail = [1.0] * self.n
        self.visited = [0] * self.n
        self.best_rollout = -inf

    def _child_state(self, t: int, q: int, mem: float, en: float):
        if t == -1:
            g = q
            if g >= self.m:
                return None
            return OrbitResourceState.fresh(g + 1)
        return OrbitResourceState(
            orbit=q + 1,
            memory_used=mem,
            energy_used=en,
            last_task=self.task_ids[t],
        )

    def _iterate(self, it: int) -> None:
        n, m = self.n, self.m
        variant, c = self.variant, self.c
        dur, prob, slew, profit = self.dur, self.prob, self.slew, self.profit
        m_rate, e_rate = self.m_rate, self.e_rate
        mem_cap, e_cap = self.mem_cap, self.e_cap
        fail, visited = self.fail, self.visited
        rows, nrow = self.rows, n + 1
        rng = self.rng
        undo_i: list[int] = []
        undo_f: list[float] = []

        mem = 0.0
        en = 0.0
        last = -1
        tag_base = it * (m + 1)
        tag = tag_base + 1
        val = 0.0

        def candidates(t: int, orb: int) -> tuple[int, list[int], int]:
            # (orbit of task candidates, feasible task indices, boundary orbit)
            q = orb
            row = rows[q * nrow + (n if t == -1 else t)]
            feas = []
            for j in row:
                if visited[j] == tag:
                    continue
                mem2 = mem + dur[q][j] * m_rate[q]
                if mem2 > mem_cap[q]:
                    continue
                en2 = en + dur[q][j] * e_rate[q]
                if last >= 0:
                    en2 = en2 + slew[q][last][j]
                if en2 > e_cap[q]:
                    continue
                feas.append(j)
            return q, feas, orb + 1

        def apply_move(ct: int, corb: int) -> None:
            nonlocal mem, en, last, tag, val
            if ct == -1:
                mem = 0.0
                en = 0.0
                last = -1
                tag = tag_base + corb + 1
            else:
                q2 = corb
                mem = mem + dur[q2][ct] * m_rate[q2]
                en = en + dur[q2][ct] * e_rate[q2]
                if last >= 0:
                    en = en + slew[q2][last][ct]
                old = fail[ct]
                undo_i.append(ct)
                undo_f.append(old)
                p = prob[q2][ct]
                val = val + profit[ct] * old * p
                fail[ct] = old * (1.0 - p)
                visited[ct] = tag
                last = ct

        node = self.root
        path = [node]
        value = 0.0
        while True:
            t, orb = node.task, node.orbit
            if t == -1 and orb == m:
                value = val
                break
            if node.children is None:
                q, feas, g2 = candidates(t, orb)
                children = []
                for j in feas:
                    mem2 = mem + dur[q][j] * m_rate[q]
                    en2 = en + dur[q][j] * e_rate[q]
                    if last >= 0:
                        en2 = en2 + slew[q][last][j]
                    ch = TreeNode(
                        len(self.nodes), j, q, self._child_state(j, q, mem2, en2)
                    )
                    self.nodes.append(ch)
                    children.append(ch)
                bch = TreeNode(
                    len(self.nodes), -1, g2, self._child_state(-1, g2, 0.0, 0.0)
                )
                self.nodes.append(bch)
                children.append(bch)
                node.children = children
                k = rng.randbelow(len(children))
                child = children[k]
                apply_move(child.task, child.orbit)
                path.append(child)
                pos_t, pos_o = child.task, child.orbit
                while not (pos_t == -1 and pos_o == m):
                    q, feas, g2 = candidates(pos_t, pos_o)
                    k = rng.randbelow(len(feas) + 1)
                    if k == len(feas):
                        apply_move(-1, g2)
                        pos_t, pos_o = -1, g2
                    else:
                        j = feas[k]
                        apply_move(j, q)
                        pos_t, pos_o = j, q
                value = val
                break
            children = node.children
            logpv = log(node.visits)
            best = -inf
            best_children: list[TreeNode] = []
            for ch in children:
                nv = ch.visits
                if nv == 0:
                    s = inf
                elif variant == VARIANT_AVERAGE:
                    s = ch.value / nv + c * sqrt(logpv / nv)
                else:
                    s = ch.value + c * sqrt(logpv / nv)
                if s > best:
                    best = s
                    best_children = [ch]
                elif s == best:
                    best_children.append(ch)
            if len(best_children) > 1:
                child = best_children[rng.randbelow(len(best_children))]
            else:
                child = best_children[0]
            apply_move(child.task, child.orbit)
            path.append(child)
            node = child

        if variant == VARIANT_AVERAGE:
            for nd in path:
                nd.visits += 1
                nd.value += value
        else:
            for nd in path:
                nd.visits += 1
                if value > nd.value:
                    nd.value = value
        path[-1].endpoint_count += 1
        if value > self.best_rollout:
            self.best_rollout = value
        for idx in range(len(undo_i) - 1, -1, -1):
            fail[undo_i[idx]] = undo_f[idx]

    def _extract(self, it: int) -> tuple[list[list[int]], bool]:
        n, m = self.n, self.m
        variant = self.variant
        dur, slew = self.dur, self.slew
        m_rate, e_rate = self.m_rate, self.e_rate
        mem_cap, e_cap = self.mem_cap, self.e_cap
        visited = self.visited
        rows, nrow = self.rows, n + 1
        task_ids = self.task_ids
        rng = self.rng

        sched: list[list[int]] = [[] for _ in range(m)]
        mem = 0.0
        en = 0.0
        last = -1
        tag_base = it * (m + 1)
        tag = tag_base + 1
        completed = False

        def candidates(t: int, orb: int) -> tuple[int, list[int], int]:
            q = orb
            row = rows[q * nrow + (n if t == -1 else t)]
            feas = []
            for j in row:
                if visited[j] == tag:
                    continue
                mem2 = mem + dur[q][j] * m_rate[q]
                if mem2 > mem_cap[q]:
                    continue
                en2 = en + dur[q][j] * e_rate[q]
                if last >= 0:
                    en2 = en2 + slew[q][last][j]
                if en2 > e_cap[q]:
                    continue
                feas.append(j)
            return q, feas, orb + 1

        def apply_move(ct: int, corb: int) -> None:
            nonlocal mem, en, last, tag
            if ct == -1:
                mem = 0.0
                en = 0.0
                last = -1
                tag = tag_base + corb + 1
            else:
                q2 = corb
                mem = mem + dur[q2][ct] * m_rate[q2]
                en = en + dur[q2][ct] * e_rate[q2]
                if last >= 0:
                    en = en + slew[q2][last][ct]
                visited[ct] = tag
                last = ct
                sched[q2].append(task_ids[ct])

        node: TreeNode | None = self.root
        pos_t, pos_o = -1, 0
        while not (pos_t == -1 and pos_o == m):
            if node is None or node.children is None:
                completed = True
                while not (pos_t == -1 and pos_o == m):
                    q, feas, g2 = candidates(pos_t, pos_o)
                    k = rng.randbelow(len(feas) + 1)
                    if k == len(feas):
                        apply_move(-1, g2)
                        pos_t, pos_o = -1, g2
                    else:
                        j = feas[k]
                        apply_move(j, q)
                        pos_t, pos_o = j, q
                break
            # Only children that carried at least one rollout have a
            # meaningful statistic; an unvisited sibling's zeros must not
            # win a tie.  Expansion always simulates one new child, so an
            # expanded node has a visited child.
            best: TreeNode | None = None
            for ch in node.children:
                if ch.visits == 0:
                    continue
                if best is None:
                    best = ch
                    continue
                if variant == VARIANT_AVERAGE:
                    better = ch.visits > best.visits
                    tied = ch.visits == best.visits
                else:
                    better = ch.value > best.value
                    tied = ch.value == best.value
                if better:
                    best = ch
                elif tied and self._tie_key(ch) < self._tie_key(best):
                    best = ch
            if best is None:
                node = None
                continue
            apply_move(best.task, best.orbit)
            if best.task == -1:
                pos_t, pos_o = -1, best.orbit
            else:
                pos_t, pos_o = best.task, best.orbit
            node = best
        return sched, completed

    def _tie_key(self, node: TreeNode) -> tuple[int, int]:
        if node.task == -1:
            return (1, 0)
        return (0, self.task_ids[node.task])

    def run(self, num_simulations: int, time_limit: float | None = None) -> dict:
        t0 = perf_counter()
        sims = 0
        for it in range(1, num_simulations + 1):
            if (
                time_limit is not None
                and sims > 0
                and perf_counter() - t0 >= time_limit
            ):
                break
            self._iterate(it)
            sims += 1
        per_orbit, completed = self._extract(sims + 1)
        return {
            "per_orbit": per_orbit,
            "best_rollout_value": self.best_rollout,
            "simulations_run": sims,
            "completed_randomly": completed,
            "node_count": len(self.nodes),
        }

    def tree_arrays(self) -> dict[str, np.ndarray]:
        """Tree in creation order as parallel arrays, for equivalence
        checks against the compiled engine."""
        count = len(self.nodes)
        task = np.empty(count, dtype=np.int32)
        orbit = np.empty(count, dtype=np.int32)
        visits = np.empty(count, dtype=np.int64)
        value = np.empty(count, dtype=np.float64)
        endpoint = np.empty(count, dtype=np.int64)
        first_child = np.full(count, -1, dtype=np.int64)
        n_children = np.zeros(count, dtype=np.int64)
        for i, nd in enumerate(self.nodes):
            task[i] = nd.task
            orbit[i] = nd.orbit
            visits[i] = nd.visits
            value[i] = nd.value
            endpoint[i] = nd.endpoint_count
            if nd.children is not None:
                first_child[i] = nd.children[0].index
                n_children[i] = len(nd.children)
        return {
            "task": task,
            "orbit": orbit,
            "visits": visits,
            "value": value,
            "endpoint_count": endpoint,
            "first_child": first_child,
            "n_children": n_children,
        }


def run_search(
    graph: ScheduleGraph,
    variant: int,
    c: float,
    num_simulations: int,
    seed: int,
    time_limit: float | None = None,
    want_tree: bool = False,
) -> dict:
    engine = PySearchEngine(graph, variant, c, seed)
    out = engine.run(num_simulations, time_limit)
    out["per_orbit"] = [
        [int(t) for t in orbit] for orbit in out["per_orbit"]
    ]
    if want_tree:
        out["tree"] = engine.tree_arrays()
    out["engine"] = engine
    return out
