"""Problem model: tasks, orbits, visibility windows, and instance files.

A problem instance couples ``n`` observation tasks with ``M`` orbital
passes.  Each (task, orbit) pair may offer a collection opportunity: a time
window during which the task can be observed on that orbit, together with
the probability that the observation succeeds (cloud cover makes success
uncertain).  Ordered task pairs within an orbit carry a setup time and a
slew energy cost.  Each orbit has memory and energy budgets that recharge
between orbits.

Instances are value objects: all arrays are frozen at construction and
entries that can never influence scheduling (windows of unavailable tasks,
transitions touching an unavailable task) are normalised to zero so that
structural equality and the canonical JSON form agree exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FILE_FORMAT_INSTANCE = "satsched-instance"
FILE_FORMAT_VERSION = 1


class ParameterError(ValueError):
    """Invalid generator parameters."""


class InstanceFormatError(ValueError):
    """An instance file is malformed: bad JSON, wrong schema, or an
    incomplete opportunity/transition table."""


class InstanceDataError(ValueError):
    """Instance data violates a model invariant (for example a probability
    outside [0, 1]); the message names the offending task, orbit, and
    field."""


@dataclass(frozen=True)
class TaskDef:
    id: int
    profit: float


@dataclass(frozen=True)
class OrbitSpec:
    index: int
    memory_capacity: float
    energy_capacity: float
    memory_rate: float
    energy_rate: float


@dataclass(frozen=True)
class Opportunity:
    available: bool
    window_start: float
    window_end: float
    success_probability: float

    @property
    def duration(self) -> float:
        return self.window_end - self.window_start


@dataclass(frozen=True)
class Transition:
    setup_time: float
    slew_energy: float


@dataclass(frozen=True)
class Schedule:
    """Selected task ids per orbit, in execution order."""

    per_orbit: tuple[tuple[int, ...], ...]

    @classmethod
    def from_lists(cls, lists) -> "Schedule":
        return cls(tuple(tuple(int(t) for t in orbit) for orbit in lists))

    def task_count(self) -> int:
        return sum(len(orbit) for orbit in self.per_orbit)


class ProblemInstance:
    """Immutable scheduling instance backed by orbit-major numpy arrays.

    Tasks are exposed by their external ids but stored by positional index;
    ``index_of`` maps between the two.  Array tables are indexed
    ``[orbit - 1, task_index]`` (and ``[orbit - 1, from, to]`` for
    transitions).
    """

    def __init__(
        self,
        tasks,
        orbits,
        available,
        window_start,
        window_end,
        probability,
        setup_time,
        slew_energy,
    ) -> None:
        self.tasks: tuple[TaskDef, ...] = tuple(tasks)
        self.orbits: tuple[OrbitSpec, ...] = tuple(orbits)
        n = len(self.tasks)
        m = len(self.orbits)

        available = np.ascontiguousarray(available, dtype=bool)
        window_start = np.ascontiguousarray(window_start, dtype=np.float64)
        window_end = np.ascontiguousarray(window_end, dtype=np.float64)
        probability = np.ascontiguousarray(probability, dtype=np.float64)
        setup_time = np.ascontiguousarray(setup_time, dtype=np.float64)
        slew_energy = np.ascontiguousarray(slew_energy, dtype=np.float64)

        if m == 0:
            raise InstanceDataError("instance has no orbits")
        for name, arr, shape in (
            ("available", available, (m, n)),
            ("window_start", window_start, (m, n)),
            ("window_end", window_end, (m, n)),
            ("probability", probability, (m, n)),
            ("setup_time", setup_time, (m, n, n)),
            ("slew_energy", slew_energy, (m, n, n)),
        ):
            if arr.shape != shape:
                raise InstanceDataError(
                    f"{name} has shape {arr.shape}, expected {shape}"
                )

        errors: list[str] = []
        seen_ids: set[int] = set()
        for t in self.tasks:
            if not isinstance(t.id, int) or t.id < 0:
                errors.append(f"task id {t.id!r} is not a nonnegative integer")
            elif t.id in seen_ids:
                errors.append(f"task id {t.id} appears more than once")
            else:
                seen_ids.add(t.id)
            if not np.isfinite(t.profit) or t.profit < 0:
                errors.append(f"task {t.id}: profit {t.profit} must be finite and >= 0")
        for pos, o in enumerate(self.orbits):
            if o.index != pos + 1:
                errors.append(
                    f"orbit at position {pos}: index {o.index}, expected {pos + 1}"
                )
            for field in ("memory_capacity", "energy_capacity", "memory_rate", "energy_rate"):
                v = getattr(o, field)
                if not np.isfinite(v) or v < 0:
                    errors.append(
                        f"orbit {o.index}: {field} {v} must be finite and >= 0"
                    )

        for k in range(m):
            orbit_no = k + 1
            for i in range(n):
                if not available[k, i]:
                    continue
                tid = self.tasks[i].id
                ws, we = window_start[k, i], window_end[k, i]
                p = probability[k, i]
                if not (np.isfinite(ws) and np.isfinite(we)):
                    errors.append(
                        f"task {tid} orbit {orbit_no}: window [{ws}, {we}] must be finite"
                    )
                elif we < ws:
                    errors.append(
                        f"task {tid} orbit {orbit_no}: window_end {we} before window_start {ws}"
                    )
                if not np.isfinite(p) or p < 0.0 or p > 1.0:
                    errors.append(
                        f"task {tid} orbit {orbit_no}: probability {p} outside [0, 1]"
                    )
            pair_ok = np.outer(available[k], available[k])
            np.fill_diagonal(pair_ok, False)
            for name, arr in (("setup_time", setup_time[k]), ("slew_energy", slew_energy[k])):
                bad = pair_ok & (~np.isfinite(arr) | (arr < 0))
                for i, j in zip(*np.nonzero(bad)):
                    errors.append(
                        f"transition {self.tasks[i].id}->{self.tasks[j].id} orbit {orbit_no}: "
                        f"{name} {arr[i, j]} must be finite and >= 0"
                    )
        if errors:
            raise InstanceDataError(
                f"{len(errors)} invariant violation(s):\n  " + "\n  ".join(errors)
            )

        # Normalise entries no consumer may read, so equal instances are
        # bitwise equal and serialise to identical bytes.
        window_start = np.where(available, window_start, 0.0)
        window_end = np.where(available, window_end, 0.0)
        probability = np.where(available, probability, 0.0)
        pair_ok = available[:, None, :] & available[:, :, None]
        for k in range(m):
            np.fill_diagonal(pair_ok[k], False)
        setup_time = np.where(pair_ok, setup_time, 0.0)
        slew_energy = np.where(pair_ok, slew_energy, 0.0)

        self.available = available
        self.window_start = window_start
        self.window_end = window_end
        self.probability = probability
        self.setup_time = setup_time
        self.slew_energy = slew_energy
        self.duration = window_end - window_start
        for arr in (
            self.available,
            self.window_start,
            self.window_end,
            self.probability,
            self.setup_time,
            self.slew_energy,
            self.duration,
        ):
            arr.flags.writeable = False
        self._id_to_index = {t.id: i for i, t in enumerate(self.tasks)}

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def num_orbits(self) -> int:
        return len(self.orbits)

    @property
    def task_ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tasks)

    @property
    def profits(self) -> np.ndarray:
        arr = np.array([t.profit for t in self.tasks])
        arr.flags.writeable = False
        return arr

    def index_of(self, task_id: int) -> int:
        try:
            return self._id_to_index[task_id]
        except KeyError:
            raise KeyError(f"unknown task id {task_id}") from None

    def opportunity(self, task_id: int, orbit: int) -> Opportunity:
        i = self.index_of(task_id)
        k = self._orbit_index(orbit)
        return Opportunity(
            available=bool(self.available[k, i]),
            window_start=float(self.window_start[k, i]),
            window_end=float(self.window_end[k, i]),
            success_probability=float(self.probability[k, i]),
        )

    def transition(self, from_id: int, to_id: int, orbit: int) -> Transition:
        i = self.index_of(from_id)
        j = self.index_of(to_id)
        k = self._orbit_index(orbit)
        return Transition(
            setup_time=float(self.setup_time[k, i, j]),
            slew_energy=float(self.slew_energy[k, i, j]),
        )

    def _orbit_index(self, orbit: int) -> int:
        if not 1 <= orbit <= self.num_orbits:
            raise KeyError(f"orbit {orbit} outside 1..{self.num_orbits}")
        return orbit - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.tasks == other.tasks
            and self.orbits == other.orbits
            and np.array_equal(self.available, other.available)
            and np.array_equal(self.window_start, other.window_start)
            and np.array_equal(self.window_end, other.window_end)
            and np.array_equal(self.probability, other.probability)
            and np.array_equal(self.setup_time, other.setup_time)
            and np.array_equal(self.slew_energy, other.slew_energy)
        )

    def __repr__(self) -> str:
        return (
            f"ProblemInstance(num_tasks={self.num_tasks}, "
            f"num_orbits={self.num_orbits}, id={self.digest()})"
        )

    def digest(self) -> str:
        """Short content hash of the canonical form; used to pair schedule
        files with the instance they were computed for."""
        blob = to_canonical_json(self).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for the random instance generator.

    Capacities are derived rather than drawn: each orbit's memory budget is
    ``capacity_tightness`` times the memory needed to collect every task
    visible on that orbit, and the energy budget scales the analogous total
    (collection energy plus an average slew per scheduled transition), so
    tightness below 1 makes the resource constraints bind.
    """

    num_tasks: int
    num_orbits: int
    seed: int
    orbit_horizon: float = 100.0
    visibility_rate: float = 0.7
    window_duration_range: tuple[float, float] = (2.0, 8.0)
    profit_range: tuple[float, float] = (1.0, 10.0)
    probability_range: tuple[float, float] = (0.3, 0.9)
    setup_time_range: tuple[float, float] = (0.5, 3.0)
    slew_energy_range: tuple[float, float] = (0.5, 3.0)
    memory_rate: float = 1.0
    energy_rate: float = 1.0
    capacity_tightness: float = 0.6


def _check_params(p: GeneratorParams) -> None:
    errors = []
    if p.num_tasks < 0:
        errors.append(f"num_tasks must be >= 0, got {p.num_tasks}")
    if p.num_orbits < 1:
        errors.append(f"num_orbits must be >= 1, got {p.num_orbits}")
    if p.seed < 0:
        errors.append(f"seed must be >= 0, got {p.seed}")
    if not 0.0 < p.visibility_rate <= 1.0:
        errors.append(f"visibility_rate must be in (0, 1], got {p.visibility_rate}")
    for name in ("window_duration_range", "profit_range", "probability_range",
                 "setup_time_range", "slew_energy_range"):
        lo, hi = getattr(p, name)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi < lo:
            errors.append(f"{name} must satisfy 0 <= lo <= hi, got ({lo}, {hi})")
    plo, phi = p.probability_range
    if phi > 1.0:
        errors.append(f"probability_range upper bound {phi} exceeds 1")
    if not np.isfinite(p.orbit_horizon) or p.orbit_horizon <= p.window_duration_range[1]:
        errors.append(
            f"orbit_horizon {p.orbit_horizon} must exceed the longest window "
            f"{p.window_duration_range[1]}"
        )
    if p.memory_rate < 0 or p.energy_rate < 0:
        errors.append("memory_rate and energy_rate must be >= 0")
    if not np.isfinite(p.capacity_tightness) or not 0.0 < p.capacity_tightness <= 1.0:
        errors.append(
            f"capacity_tightness must be in (0, 1], got {p.capacity_tightness}"
        )
    if errors:
        raise ParameterError("; ".join(errors))


def generate(params: GeneratorParams) -> ProblemInstance:
    """Draw a random instance; identical parameters give identical instances."""
    _check_params(params)
    n, m = params.num_tasks, params.num_orbits
    rng = np.random.default_rng(params.seed)

    profits = rng.uniform(*params.profit_range, size=n)
    tasks = [TaskDef(id=i, profit=float(profits[i])) for i in range(n)]

    available = np.zeros((m, n), dtype=bool)
    window_start = np.zeros((m, n))
    window_end = np.zeros((m, n))
    probability = np.zeros((m, n))
    setup_time = np.zeros((m, n, n))
    slew_energy = np.zeros((m, n, n))
    orbits = []
    dlo, dhi = params.window_duration_range
    for k in range(m):
        avail = rng.random(n) < params.visibility_rate
        if n > 0 and not avail.any():
            avail[int(rng.integers(n))] = True
        dur = rng.uniform(dlo, dhi, size=n)
        start = rng.uniform(0.0, params.orbit_horizon - dur)
        prob = rng.uniform(*params.probability_range, size=n)
        setup = rng.uniform(*params.setup_time_range, size=(n, n))
        slew = rng.uniform(*params.slew_energy_range, size=(n, n))

        available[k] = avail
        window_start[k] = start
        window_end[k] = start + dur
        probability[k] = prob
        setup_time[k] = setup
        slew_energy[k] = slew

        visible_time = float(dur[avail].sum())
        n_avail = int(avail.sum())
        pair_ok = np.outer(avail, avail)
        np.fill_diagonal(pair_ok, False)
        mean_slew = float(slew[pair_ok].mean()) if pair_ok.any() else 0.0
        mem_cap = params.capacity_tightness * visible_time * params.memory_rate
        energy_cap = params.capacity_tightness * (
            visible_time * params.energy_rate + mean_slew * max(0, n_avail - 1)
        )
        orbits.append(
            OrbitSpec(
                index=k + 1,
                memory_capacity=float(mem_cap),
                energy_capacity=float(energy_cap),
                memory_rate=params.memory_rate,
                energy_rate=params.energy_rate,
            )
        )

    return ProblemInstance(
        tasks=tasks,
        orbits=orbits,
        available=available,
        window_start=window_start,
        window_end=window_end,
        probability=probability,
        setup_time=setup_time,
        slew_energy=slew_energy,
    )


def canonical_document(inst: ProblemInstance) -> dict:
    """Plain-data form of an instance with a fixed entry order."""
    opportunities = []
    for k in range(inst.num_orbits):
        for i, t in enumerate(inst.tasks):
            opportunities.append(
                {
                    "task": t.id,
                    "orbit": k + 1,
                    "available": bool(inst.available[k, i]),
                    "window_start": float(inst.window_start[k, i]),
                    "window_end": float(inst.window_end[k, i]),
                    "probability": float(inst.probability[k, i]),
                }
            )
    transitions = []
    for k in range(inst.num_orbits):
        for i, ti in enumerate(inst.tasks):
            for j, tj in enumerate(inst.tasks):
                if i == j:
                    continue
                transitions.append(
                    {
                        "orbit": k + 1,
                        "from": ti.id,
                        "to": tj.id,
                        "setup_time": float(inst.setup_time[k, i, j]),
                        "slew_energy": float(inst.slew_energy[k, i, j]),
                    }
                )
    return {
        "format": FILE_FORMAT_INSTANCE,
        "version": FILE_FORMAT_VERSION,
        "tasks": [{"id": t.id, "profit": t.profit} for t in inst.tasks],
        "orbits": [
            {
                "index": o.index,
                "memory_capacity": o.memory_capacity,
                "energy_capacity": o.energy_capacity,
                "memory_rate": o.memory_rate,
                "energy_rate": o.energy_rate,
            }
            for o in inst.orbits
        ],
        "opportunities": opportunities,
        "transitions": transitions,
    }


def to_canonical_json(inst: ProblemInstance) -> str:
    return json.dumps(canonical_document(inst), indent=2, sort_keys=True) + "\n"


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(to_canonical_json(inst), encoding="utf-8")


def _format_error(msg: str) -> InstanceFormatError:
    return InstanceFormatError(f"bad instance file: {msg}")


def _get(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise _format_error(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise _format_error(f"{where}: field {key!r} has wrong type {type(v).__name__}")
    if not isinstance(v, types):
        raise _format_error(f"{where}: field {key!r} has wrong type {type(v).__name__}")
    return v


def load_instance(path) -> ProblemInstance:
    """Parse and validate an instance file.

    Raises FileNotFoundError for a missing path, InstanceFormatError for
    malformed JSON or schema problems, and InstanceDataError when the file
    parses but the data breaks a model invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise _format_error(f"not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise _format_error("top level is not an object")
    fmt = _get(doc, "format", str, "top level")
    if fmt != FILE_FORMAT_INSTANCE:
        raise _format_error(f"format {fmt!r} is not {FILE_FORMAT_INSTANCE!r}")
    version = _get(doc, "version", int, "top level")
    if version != FILE_FORMAT_VERSION:
        raise _format_error(f"unsupported version {version}")

    raw_tasks = _get(doc, "tasks", list, "top level")
    raw_orbits = _get(doc, "orbits", list, "top level")
    raw_opps = _get(doc, "opportunities", list, "top level")
    raw_trans = _get(doc, "transitions", list, "top level")
    if not raw_orbits:
        raise _format_error("orbits list is empty")

    tasks = []
    for pos, entry in enumerate(raw_tasks):
        if not isinstance(entry, dict):
            raise _format_error(f"tasks[{pos}] is not an object")
        tid = _get(entry, "id", int, f"tasks[{pos}]")
        profit = float(_get(entry, "profit", (int, float), f"tasks[{pos}]"))
        tasks.append(TaskDef(id=tid, profit=profit))
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise _format_error(f"duplicate task ids {dup}")
    id_to_index = {t.id: i for i, t in enumerate(tasks)}
    n = len(tasks)

    orbits = []
    for pos, entry in enumerate(raw_orbits):
        if not isinstance(entry, dict):
            raise _format_error(f"orbits[{pos}] is not an object")
        where = f"orbits[{pos}]"
        orbits.append(
            OrbitSpec(
                index=_get(entry, "index", int, where),
                memory_capacity=float(_get(entry, "memory_capacity", (int, float), where)),
                energy_capacity=float(_get(entry, "energy_capacity", (int, float), where)),
                memory_rate=float(_get(entry, "memory_rate", (int, float), where)),
                energy_rate=float(_get(entry, "energy_rate", (int, float), where)),
            )
        )
    m = len(orbits)

    available = np.zeros((m, n), dtype=bool)
    window_start = np.zeros((m, n))
    window_end = np.zeros((m, n))
    probability = np.zeros((m, n))
    seen_opp = set()
    for pos, entry in enumerate(raw_opps):
        if not isinstance(entry, dict):
            raise _format_error(f"opportunities[{pos}] is not an object")
        where = f"opportunities[{pos}]"
        tid = _get(entry, "task", int, where)
        orbit = _get(entry, "orbit", int, where)
        if tid not in id_to_index:
            raise _format_error(f"{where}: unknown task id {tid}")
        if not 1 <= orbit <= m:
            raise _format_error(f"{where}: orbit {orbit} outside 1..{m}")
        key = (tid, orbit)
        if key in seen_opp:
            raise _format_error(f"{where}: duplicate entry for task {tid} orbit {orbit}")
        seen_opp.add(key)
        i, k = id_to_index[tid], orbit - 1
        available[k, i] = _get(entry, "available", bool, where)
        window_start[k, i] = float(_get(entry, "window_start", (int, float), where))
        window_end[k, i] = float(_get(entry, "window_end", (int, float), where))
        probability[k, i] = float(_get(entry, "probability", (int, float), where))
    if len(seen_opp) != m * n:
        missing = [
            (t.id, k + 1)
            for k in range(m)
            for t in tasks
            if (t.id, k + 1) not in seen_opp
        ]
        raise _format_error(
            f"opportunities table incomplete, missing (task, orbit) {missing[:5]}"
            + ("..." if len(missing) > 5 else "")
        )

    setup_time = np.zeros((m, n, n))
    slew_energy = np.zeros((m, n, n))
    got_tr = np.zeros((m, n, n), dtype=bool)
    for pos, entry in enumerate(raw_trans):
        if not isinstance(entry, dict):
            raise _format_error(f"transitions[{pos}] is not an object")
        where = f"transitions[{pos}]"
        src = _get(entry, "from", int, where)
        dst = _get(entry, "to", int, where)
        orbit = _get(entry, "orbit", int, where)
        for tid in (src, dst):
            if tid not in id_to_index:
                raise _format_error(f"{where}: unknown task id {tid}")
        if not 1 <= orbit <= m:
            raise _format_error(f"{where}: orbit {orbit} outside 1..{m}")
        if src == dst:
            raise _format_error(f"{where}: transition from task {src} to itself")
        i, j, k = id_to_index[src], id_to_index[dst], orbit - 1
        if got_tr[k, i, j]:
            raise _format_error(
                f"{where}: duplicate entry for {src}->{dst} orbit {orbit}"
            )
        got_tr[k, i, j] = True
        setup_time[k, i, j] = float(_get(entry, "setup_time", (int, float), where))
        slew_energy[k, i, j] = float(_get(entry, "slew_energy", (int, float), where))
    # Entries are mandatory only where both endpoints are available; other
    # pairs may appear but are ignored.
    required = available[:, :, None] & available[:, None, :]
    for k in range(m):
        np.fill_diagonal(required[k], False)
    gaps = required & ~got_tr
    if gaps.any():
        missing = [
            (tasks[i].id, tasks[j].id, k + 1)
            for k, i, j in zip(*np.nonzero(gaps))
        ]
        raise _format_error(
            f"transitions table missing (from, to, orbit) {missing[:5]}"
            + ("..." if len(missing) > 5 else "")
        )

    return ProblemInstance(
        tasks=tasks,
        orbits=orbits,
        available=available,
        window_start=window_start,
        window_end=window_end,
        probability=probability,
        setup_time=setup_time,
        slew_energy=slew_energy,
    )
