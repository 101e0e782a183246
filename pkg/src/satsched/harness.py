"""Experiment driver: sweeps, repetitions, and CSV reports.

A plan crosses instances with search variants, exploration coefficients,
and simulation budgets, repeating each cell several times.  Every cell's
seed derives from a stable hash of the base seed and the cell's indices,
so extending a plan never changes the seeds of existing cells and any
cell can be reproduced in isolation.  Cells are independent and may run
in worker processes; rows are sorted into plan order afterwards, so the
worker count never affects the report's value columns.

Reported wall time covers the search call only, not instance loading or
graph construction; summary tables state means per (variant, coefficient)
column with one row per instance followed by per-column averages of value
and time, plus percent-of-baseline rows when baselines are supplied.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .graph import build_graph
from .instance import GeneratorParams, ProblemInstance, generate, load_instance
from .mcts import VARIANTS, SearchConfig, search

log = logging.getLogger(__name__)

REPORT_HEADER = "instance,variant,c,sims,rep,seed,value,time_s,sims_per_s"


class PlanError(ValueError):
    """An experiment plan is malformed."""


@dataclass(frozen=True)
class ExperimentPlan:
    """One sweep: instances x variants x c values x budgets x repetitions.

    ``instances`` entries are either instance file paths or generator
    parameter sets (with an optional ``label``); labels must be unique
    because they key the report rows.
    """

    instances: tuple[tuple[str, tuple], ...]
    variants: tuple[str, ...]
    c_values: tuple[float, ...]
    sim_budgets: tuple[int, ...]
    repetitions: int
    base_seed: int
    time_limit: float | None = None
    backend: str = "auto"


@dataclass(frozen=True)
class ReportRow:
    instance: str
    variant: str
    c: float
    sims: int
    rep: int
    seed: int
    value: float
    time_s: float
    sims_per_s: float


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        """Mean value and mean time per (instance, variant, c, sims) cell,
        recomputed from the rows."""
        cells: dict[tuple, list[ReportRow]] = {}
        for row in self.rows:
            cells.setdefault((row.instance, row.variant, row.c, row.sims), []).append(row)
        return {
            key: {
                "mean_value": sum(r.value for r in rows) / len(rows),
                "mean_time_s": sum(r.time_s for r in rows) / len(rows),
                "repetitions": len(rows),
            }
            for key, rows in cells.items()
        }


def _normalize_instance_entry(entry, position: int) -> tuple[str, tuple]:
    if isinstance(entry, str):
        return (Path(entry).stem, ("file", entry))
    if isinstance(entry, dict):
        fields = dict(entry)
        label = fields.pop("label", None)
        try:
            params = GeneratorParams(**{
                k: tuple(v) if isinstance(v, list) else v for k, v in fields.items()
            })
        except TypeError as e:
            raise PlanError(f"instances[{position}]: bad generator parameters ({e})")
        if label is None:
            label = f"g{params.num_orbits}x{params.num_tasks}-s{params.seed}"
        return (str(label), ("gen", json.dumps(asdict(params), sort_keys=True)))
    raise PlanError(
        f"instances[{position}] must be a path or a generator parameter object"
    )


def make_plan(
    instances,
    variants,
    c_values,
    sim_budgets,
    repetitions: int,
    base_seed: int,
    time_limit: float | None = None,
    backend: str = "auto",
) -> ExperimentPlan:
    entries = tuple(
        _normalize_instance_entry(e, i) for i, e in enumerate(instances)
    )
    labels = [label for label, _ in entries]
    if len(set(labels)) != len(labels):
        dup = sorted({x for x in labels if labels.count(x) > 1})
        raise PlanError(f"duplicate instance labels {dup}")
    if not entries:
        raise PlanError("instances list is empty")
    variants = tuple(variants)
    if not variants or any(v not in VARIANTS for v in variants):
        raise PlanError(f"variants must be a nonempty subset of {VARIANTS}")
    c_values = tuple(float(c) for c in c_values)
    if not c_values or any(not c > 0 for c in c_values):
        raise PlanError("c_values must be nonempty positive reals")
    sim_budgets = tuple(int(s) for s in sim_budgets)
    if not sim_budgets or any(s < 1 for s in sim_budgets):
        raise PlanError("sim_budgets must be nonempty counts >= 1")
    if repetitions < 1:
        raise PlanError(f"repetitions must be >= 1, got {repetitions}")
    return ExperimentPlan(
        instances=entries,
        variants=variants,
        c_values=c_values,
        sim_budgets=sim_budgets,
        repetitions=int(repetitions),
        base_seed=int(base_seed),
        time_limit=time_limit,
        backend=backend,
    )


def plan_from_file(path) -> ExperimentPlan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PlanError(f"plan file is not valid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise PlanError("plan file top level must be an object")
    required = {"instances", "variants", "c_values", "sim_budgets", "repetitions", "base_seed"}
    missing = sorted(required - doc.keys())
    if missing:
        raise PlanError(f"plan file missing fields {missing}")
    return make_plan(
        instances=doc["instances"],
        variants=doc["variants"],
        c_values=doc["c_values"],
        sim_budgets=doc["sim_budgets"],
        repetitions=doc["repetitions"],
        base_seed=doc["base_seed"],
        time_limit=doc.get("time_limit"),
        backend=doc.get("backend", "auto"),
    )


def derive_seed(
    base_seed: int, instance_index: int, variant: str, c_index: int,
    sims_index: int, repetition: int,
) -> int:
    """Stable per-cell seed; independent of every other cell."""
    blob = (
        f"{base_seed}:{instance_index}:{variant}:{c_index}:{sims_index}:{repetition}"
    ).encode("ascii")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


_INSTANCE_CACHE: dict[tuple, tuple[ProblemInstance, object]] = {}


def _load_source(source: tuple) -> tuple[ProblemInstance, object]:
    cached = _INSTANCE_CACHE.get(source)
    if cached is not None:
        return cached
    kind, payload = source
    if kind == "file":
        inst = load_instance(payload)
    else:
        fields = json.loads(payload)
        fields = {
            k: tuple(v) if isinstance(v, list) else v for k, v in fields.items()
        }
        inst = generate(GeneratorParams(**fields))
    graph = build_graph(inst)
    _INSTANCE_CACHE[source] = (inst, graph)
    return inst, graph


def _run_cell(cell: tuple):
    label, source, variant, c, sims, rep, seed, time_limit, backend = cell
    try:
        inst, graph = _load_source(source)
        config = SearchConfig(
            variant=variant,
            exploration_coefficient=c,
            num_simulations=sims,
            seed=seed,
            time_limit=time_limit,
            backend=backend,
        )
        result = search(inst, graph, config)
        return ReportRow(
            instance=label,
            variant=variant,
            c=c,
            sims=sims,
            rep=rep,
            seed=seed,
            value=result.expected_value,
            time_s=result.wall_time,
            sims_per_s=(
                result.simulations_run / result.wall_time
                if result.wall_time > 0
                else float("inf")
            ),
        )
    except Exception as e:
        return (
            f"{label}/{variant}/c={c:g}/sims={sims}/rep={rep}: "
            f"{type(e).__name__}: {e}"
        )


def run_experiment(plan: ExperimentPlan, workers: int = 1) -> ExperimentReport:
    """Execute every cell; failures are recorded, never fatal."""
    cells = []
    for i_idx, (label, source) in enumerate(plan.instances):
        for variant in plan.variants:
            for c_idx, c in enumerate(plan.c_values):
                for s_idx, sims in enumerate(plan.sim_budgets):
                    for rep in range(plan.repetitions):
                        seed = derive_seed(
                            plan.base_seed, i_idx, variant, c_idx, s_idx, rep
                        )
                        cells.append(
                            (label, source, variant, c, sims, rep, seed,
                             plan.time_limit, plan.backend)
                        )
    report = ExperimentReport(
        metadata={
            "timing": "search_only",
            "backend": plan.backend,
            "workers": int(workers),
            "base_seed": plan.base_seed,
        }
    )
    if workers <= 1:
        outcomes = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    order = {
        (cell[0], cell[2], cell[3], cell[4], cell[5]): pos
        for pos, cell in enumerate(cells)
    }
    rows = []
    for outcome in outcomes:
        if isinstance(outcome, ReportRow):
            rows.append(outcome)
        else:
            report.errors.append(outcome)
            log.warning("cell failed: %s", outcome)
    rows.sort(key=lambda r: order[(r.instance, r.variant, r.c, r.sims, r.rep)])
    report.rows = rows
    return report


def write_report_csv(report: ExperimentReport, path) -> None:
    lines = [REPORT_HEADER]
    for r in report.rows:
        lines.append(
            f"{r.instance},{r.variant},{r.c!r},{r.sims},{r.rep},{r.seed},"
            f"{r.value!r},{r.time_s!r},{r.sims_per_s!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class SummaryTable:
    """Mean values per instance in a variant-major column grid, one table
    per simulation budget, in the style of a results table whose rows are
    instances and whose columns sweep (variant, c)."""

    sims: int
    columns: list[str]
    value_rows: list[tuple[str, dict[str, float]]]
    average_row: dict[str, float]
    average_time_row: dict[str, float]
    percent_rows: list[tuple[str, dict[str, float]]] | None = None
    average_percent_row: dict[str, float] | None = None


def column_name(variant: str, c: float) -> str:
    return f"{variant}_c{c:g}"


def summarize(
    plan: ExperimentPlan,
    report: ExperimentReport,
    baseline_values: dict[str, float] | None = None,
) -> list[SummaryTable]:
    aggregates = report.aggregates()
    columns = [
        column_name(v, c) for v in plan.variants for c in plan.c_values
    ]
    keys = [(v, c) for v in plan.variants for c in plan.c_values]
    tables = []
    for sims in plan.sim_budgets:
        value_rows = []
        time_cells: dict[str, list[float]] = {col: [] for col in columns}
        for label, _ in plan.instances:
            row: dict[str, float] = {}
            for col, (variant, c) in zip(columns, keys):
                agg = aggregates.get((label, variant, c, sims))
                if agg is None:
                    continue
                row[col] = agg["mean_value"]
                time_cells[col].append(agg["mean_time_s"])
            value_rows.append((label, row))
        average_row = {}
        average_time_row = {}
        for col in columns:
            values = [row[col] for _, row in value_rows if col in row]
            if values:
                average_row[col] = sum(values) / len(values)
            if time_cells[col]:
                average_time_row[col] = sum(time_cells[col]) / len(time_cells[col])
        table = SummaryTable(
            sims=sims,
            columns=columns,
            value_rows=value_rows,
            average_row=average_row,
            average_time_row=average_time_row,
        )
        if baseline_values is not None:
            percent_rows = []
            for label, row in value_rows:
                baseline = baseline_values.get(label)
                if baseline is None:
                    log.warning("no baseline value for instance %r; skipping", label)
                    continue
                if baseline <= 0:
                    log.warning("baseline for %r is not positive; skipping", label)
                    continue
                percent_rows.append(
                    (label, {col: row[col] / baseline * 100.0 for col in row})
                )
            table.percent_rows = percent_rows
            avg_pct = {}
            for col in columns:
                values = [row[col] for _, row in percent_rows if col in row]
                if values:
                    avg_pct[col] = sum(values) / len(values)
            table.average_percent_row = avg_pct
        tables.append(table)
    return tables


def write_summary_csv(tables: list[SummaryTable], path) -> None:
    if not tables:
        raise ValueError("no summary tables to write")
    columns = tables[0].columns
    lines = ["sims,instance," + ",".join(columns)]

    def cell(row: dict[str, float], col: str) -> str:
        return f"{row[col]:.6f}" if col in row else ""

    for table in tables:
        for label, row in table.value_rows:
            lines.append(
                f"{table.sims},{label}," + ",".join(cell(row, c) for c in columns)
            )
        lines.append(
            f"{table.sims},average,"
            + ",".join(cell(table.average_row, c) for c in columns)
        )
        lines.append(
            f"{table.sims},average_time_s,"
            + ",".join(cell(table.average_time_row, c) for c in columns)
        )
        if table.percent_rows is not None:
            for label, row in table.percent_rows:
                lines.append(
                    f"{table.sims},{label}_pct,"
                    + ",".join(cell(row, c) for c in columns)
                )
            lines.append(
                f"{table.sims},average_pct,"
                + ",".join(cell(table.average_percent_row, c) for c in columns)
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
