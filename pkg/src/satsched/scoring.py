"""Objective evaluation and schedule files.

A task pays its full profit if at least one of its scheduled observations
succeeds, so the expected reward of a schedule is

    sum_i profit_i * (1 - prod_k (1 - p_ik * x_ik))

with x_ik = 1 when task i is collected on orbit k.  ``expected_value``
walks the schedule directly; ``assignment_value`` evaluates the same
objective from the binary assignment matrix with vectorised numpy
arithmetic.  The two routes are kept separate on purpose: the test suite
uses their agreement as a correctness check, so neither may be expressed
in terms of the other.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .instance import ProblemInstance, Schedule

FILE_FORMAT_SCHEDULE = "satsched-schedule"
FILE_FORMAT_VERSION = 1


class ScheduleFormatError(ValueError):
    """A schedule file is malformed or does not belong to the instance."""


def expected_value(instance: ProblemInstance, schedule: Schedule) -> float:
    """Expected total reward of a schedule.

    Listing a task twice on one orbit counts it once; collecting the same
    task on several orbits compounds the success probability.  Raises
    KeyError for task ids the instance does not define.
    """
    if len(schedule.per_orbit) != instance.num_orbits:
        raise ValueError(
            f"schedule covers {len(schedule.per_orbit)} orbits, "
            f"instance has {instance.num_orbits}"
        )
    failure: dict[int, float] = {}
    for k, chosen in enumerate(schedule.per_orbit):
        for tid in set(chosen):
            i = instance.index_of(tid)
            p = float(instance.probability[k, i])
            failure[i] = failure.get(i, 1.0) * (1.0 - p)
    total = 0.0
    for i, fail in sorted(failure.items()):
        total += instance.tasks[i].profit * (1.0 - fail)
    return total


def schedule_to_assignment(
    instance: ProblemInstance, schedule: Schedule
) -> np.ndarray:
    """Binary assignment matrix x[orbit - 1, task_index] for a schedule."""
    if len(schedule.per_orbit) != instance.num_orbits:
        raise ValueError(
            f"schedule covers {len(schedule.per_orbit)} orbits, "
            f"instance has {instance.num_orbits}"
        )
    x = np.zeros((instance.num_orbits, instance.num_tasks), dtype=bool)
    for k, chosen in enumerate(schedule.per_orbit):
        for tid in chosen:
            x[k, instance.index_of(tid)] = True
    return x


def assignment_value(instance: ProblemInstance, x: np.ndarray) -> float:
    """Objective value of a binary assignment matrix."""
    x = np.asarray(x)
    shape = (instance.num_orbits, instance.num_tasks)
    if x.shape != shape:
        raise ValueError(f"assignment has shape {x.shape}, expected {shape}")
    if x.dtype != bool:
        if not np.isin(x, (0, 1)).all():
            raise ValueError("assignment entries must be 0 or 1")
        x = x.astype(bool)
    fail = np.prod(1.0 - instance.probability * x, axis=0)
    profits = np.array([t.profit for t in instance.tasks])
    return float(np.sum(profits * (1.0 - fail)))


def save_schedule(instance: ProblemInstance, schedule: Schedule, path) -> None:
    doc = {
        "format": FILE_FORMAT_SCHEDULE,
        "version": FILE_FORMAT_VERSION,
        "instance_id": instance.digest(),
        "per_orbit": [list(orbit) for orbit in schedule.per_orbit],
        "expected_value": expected_value(instance, schedule),
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_schedule(instance: ProblemInstance, path) -> Schedule:
    """Read a schedule file back, verifying it matches the instance.

    Rejects files whose instance id differs from the instance's digest and
    files whose stored expected value disagrees with recomputation.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScheduleFormatError(f"bad schedule file: not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise ScheduleFormatError("bad schedule file: top level is not an object")
    if doc.get("format") != FILE_FORMAT_SCHEDULE:
        raise ScheduleFormatError(
            f"bad schedule file: format {doc.get('format')!r}"
        )
    if doc.get("version") != FILE_FORMAT_VERSION:
        raise ScheduleFormatError(
            f"bad schedule file: unsupported version {doc.get('version')!r}"
        )
    stored_id = doc.get("instance_id")
    if stored_id != instance.digest():
        raise ScheduleFormatError(
            f"schedule belongs to instance {stored_id}, not {instance.digest()}"
        )
    per_orbit = doc.get("per_orbit")
    if not isinstance(per_orbit, list) or not all(
        isinstance(orbit, list) for orbit in per_orbit
    ):
        raise ScheduleFormatError("bad schedule file: per_orbit must be a list of lists")
    for orbit in per_orbit:
        for tid in orbit:
            if isinstance(tid, bool) or not isinstance(tid, int):
                raise ScheduleFormatError(
                    f"bad schedule file: task id {tid!r} is not an integer"
                )
    schedule = Schedule.from_lists(per_orbit)
    try:
        value = expected_value(instance, schedule)
    except (KeyError, ValueError) as e:
        raise ScheduleFormatError(f"bad schedule file: {e}") from e
    stored_value = doc.get("expected_value")
    if not isinstance(stored_value, (int, float)) or isinstance(stored_value, bool):
        raise ScheduleFormatError("bad schedule file: expected_value missing")
    if abs(float(stored_value) - value) > 1e-9 * max(1.0, abs(value)):
        raise ScheduleFormatError(
            f"stored expected_value {stored_value} disagrees with "
            f"recomputed {value}"
        )
    return schedule
