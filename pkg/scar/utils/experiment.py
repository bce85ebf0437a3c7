# utils/experiment.py
"""
Objective x horizon x seed sweeps over the simulator.

Run r of every (kind, horizon) cell uses seed base_seed + r, so all kinds are
compared on the same initial fleet states. Cells are independent and may run
in a process pool; rows are sorted back into plan order before aggregation.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import pandas as pd
from rest_framework.renderers import JSONRenderer

from ..models import AggregateResult, ExperimentResults, ObjectiveKind, RunRow
from ..serializers import AggregateResultSerializer
from .exceptions import ExperimentError, ExperimentInterrupted
from .scenario import read_config, with_users
from .simulator import compute_metrics, run_simulation

logger = logging.getLogger(__name__)

CSV_NAME = "runs.csv"
JSON_NAME = "aggregates.json"


def prepare_config(plan):
    """Scenario of the plan, cut to `plan.users` agents and `plan.sim_duration` seconds."""
    config = read_config(plan.scenario)
    if plan.users:
        config = with_users(config, plan.users)
    return replace(config, sim_duration=float(plan.sim_duration))


def validate_plan(plan):
    if plan.repeats < 1:
        raise ExperimentError(f"repeats must be at least 1, got {plan.repeats}")
    if not plan.kinds:
        raise ExperimentError("At least one objective kind is required")
    if not plan.horizons or any(h < 1 for h in plan.horizons):
        raise ExperimentError(f"Horizons must all be at least 1, got {list(plan.horizons)}")
    if plan.sim_duration <= 0:
        raise ExperimentError("Simulation duration must be positive")
    if plan.workers < 1:
        raise ExperimentError(f"workers must be at least 1, got {plan.workers}")


def run_cell(config, scenario, kind, h, seed) -> RunRow:
    """One simulation run; re-running the same cell reproduces the row."""
    kind = ObjectiveKind(kind)
    started = time.perf_counter()
    record = run_simulation(config, kind, h, seed)
    metrics = compute_metrics(record, config.n, config.sim_duration)
    return RunRow(
        scenario=scenario,
        users=config.n,
        objective=kind.value,
        horizon=h,
        seed=seed,
        percent_uptime=metrics.percent_uptime,
        full_uptime=metrics.full_uptime,
        per_agent_uptime=metrics.per_agent_uptime,
        nodes_expanded=record.nodes_expanded,
        wall_time_s=time.perf_counter() - started,
    )


def _cells(plan):
    for kind in plan.kinds:
        for h in plan.horizons:
            for r in range(plan.repeats):
                yield ObjectiveKind(kind), h, plan.base_seed + r


def _results(plan, rows, scenario, users):
    order = {ObjectiveKind(kind).value: index for index, kind in enumerate(plan.kinds)}
    rows = tuple(sorted(rows, key=lambda row: (order[row.objective], row.horizon, row.seed)))
    return ExperimentResults(
        rows=rows, aggregates=aggregate(rows), scenario=scenario, users=users
    )


def run_experiment(plan, config=None) -> ExperimentResults:
    validate_plan(plan)
    if config is None:
        config = prepare_config(plan)
    scenario = Path(plan.scenario).stem
    cells = list(_cells(plan))
    logger.info(
        "Running %d simulations (%d users, %d workers)", len(cells), config.n, plan.workers
    )

    rows = []
    try:
        if plan.workers == 1:
            for kind, h, seed in cells:
                rows.append(run_cell(config, scenario, kind, h, seed))
                logger.debug("%s h=%d seed=%d done", kind.value, h, seed)
        else:
            with ProcessPoolExecutor(max_workers=plan.workers) as executor:
                futures = [
                    executor.submit(run_cell, config, scenario, kind, h, seed)
                    for kind, h, seed in cells
                ]
                try:
                    for future in futures:
                        rows.append(future.result())
                except KeyboardInterrupt:
                    executor.shutdown(wait=False, cancel_futures=True)
                    raise
    except KeyboardInterrupt:
        logger.warning("Interrupted after %d of %d runs", len(rows), len(cells))
        raise ExperimentInterrupted(_results(plan, rows, scenario, config.n))

    results = _results(plan, rows, scenario, config.n)
    for result in results.aggregates:
        logger.info(
            "%s h=%d: median uptime %.2f%%, full uptime in %.1f%% of runs",
            result.objective, result.horizon, result.median, result.full_uptime_percent,
        )
    return results


# ============================================================================
# AGGREGATION & OUTPUT
# ============================================================================

def runs_frame(rows) -> pd.DataFrame:
    """One row per run; per-agent uptimes as uptime_0, uptime_1, ..."""
    records = []
    for row in rows:
        record = {
            "scenario": row.scenario,
            "users": row.users,
            "objective": row.objective,
            "horizon": row.horizon,
            "seed": row.seed,
            "percent_uptime": row.percent_uptime,
            "full_uptime": row.full_uptime,
        }
        for i, uptime in enumerate(row.per_agent_uptime):
            record[f"uptime_{i}"] = uptime
        record["nodes_expanded"] = row.nodes_expanded
        records.append(record)
    return pd.DataFrame.from_records(records)


def aggregate(rows) -> tuple:
    if not rows:
        return ()
    frame = runs_frame(rows)
    frame["wall_time_s"] = [row.wall_time_s for row in rows]

    results = []
    for (objective, horizon), group in frame.groupby(["objective", "horizon"], sort=False):
        uptime = group["percent_uptime"]
        results.append(AggregateResult(
            objective=objective,
            horizon=int(horizon),
            runs=len(group),
            median=float(uptime.median()),
            q1=float(uptime.quantile(0.25)),
            q3=float(uptime.quantile(0.75)),
            minimum=float(uptime.min()),
            maximum=float(uptime.max()),
            full_uptime_percent=100.0 * float(group["full_uptime"].mean()),
            mean_nodes_expanded=float(group["nodes_expanded"].mean()),
            wall_time_s=float(group["wall_time_s"].sum()),
        ))
    return tuple(results)


def emit_results(results: ExperimentResults, fmt, out_dir) -> Path:
    """
    Writes runs.csv (one row per run) or aggregates.json (one entry per
    objective/horizon cell) into `out_dir` and returns the file path.
    """
    if not results.rows:
        raise ExperimentError("No results to write")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out_dir / CSV_NAME
            runs_frame(results.rows).to_csv(path, index=False)
        elif fmt == "json":
            path = out_dir / JSON_NAME
            document = {
                "scenario": results.scenario,
                "users": results.users,
                "pairing": results.pairing,
                "aggregates": AggregateResultSerializer(results.aggregates, many=True).data,
            }
            path.write_bytes(JSONRenderer().render(document))
        else:
            raise ExperimentError(f"Unknown format {fmt!r}; expected csv or json")
    except OSError as exc:
        raise ExperimentError(f"Cannot write results to {out_dir}: {exc.strerror}")
    logger.info("Wrote %s", path)
    return path
