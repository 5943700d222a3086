"""Execute an experiment matrix, optionally in parallel, and aggregate medians."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baselines import DEConfig, PSOConfig, run_de, run_pso
from ..core import RunRecord
from ..optimizers import DRIVERS, OptimizerConfig
from .config import ExperimentConfig, RunSpec

log = logging.getLogger(__name__)


def build_config(oid: str, params: dict, seed: int):
    p = dict(params)
    if oid in DRIVERS:
        return OptimizerConfig(seed=seed, **p)
    if "M" in p:
        p["it_max"] = p.pop("M")
    if oid == "de":
        return DEConfig(seed=seed, **p)
    if oid == "pso":
        return PSOConfig(seed=seed, **p)
    raise ValueError(f"unknown optimizer id {oid!r}")


@dataclass
class RunResult:
    spec: RunSpec
    record: RunRecord | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.record is not None


def execute(spec: RunSpec) -> RunResult:
    """Run one unit of work; any exception is captured instead of raised."""
    try:
        objective = spec.benchmark.instance(spec.seed).objective()
        objective.name = spec.benchmark.label
        cfg = build_config(spec.optimizer.id, spec.optimizer.param_dict(), spec.seed)
        if spec.optimizer.id == "de":
            record = run_de(objective, cfg)
        elif spec.optimizer.id == "pso":
            record = run_pso(objective, cfg)
        else:
            record = DRIVERS[spec.optimizer.id](objective, cfg)
        record.optimizer = spec.optimizer.label
        return RunResult(spec, record)
    except Exception as exc:  # one failed run must not sink the batch
        log.error("run %s seed %d failed: %s", spec.case_id, spec.seed, exc)
        return RunResult(spec, None, f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class SummaryRow:
    case_id: str
    objective: str
    optimizer: str
    runs: int
    reached: int
    failed: int
    # median over seeds, unreached runs counted as infinite
    median_iterations: float
    median_final_error: float
    median_evals: float
    median_wall_time: float


def summarize(results: list[RunResult]) -> list[SummaryRow]:
    """One row per case, in case order. Failed runs are counted but excluded from the medians."""
    by_case: dict[int, list[RunResult]] = {}
    for r in results:
        by_case.setdefault(r.spec.case_index, []).append(r)
    rows = []
    for idx in sorted(by_case):
        group = sorted(by_case[idx], key=lambda r: r.spec.seed)
        spec = group[0].spec
        done = [r.record for r in group if r.ok]
        its = [rec.iterations_to_target if rec.iterations_to_target is not None else math.inf for rec in done]

        def med(vals):
            return float(np.median(vals)) if vals else math.nan

        rows.append(
            SummaryRow(
                case_id=spec.case_id,
                objective=spec.benchmark.label,
                optimizer=spec.optimizer.label,
                runs=len(group),
                reached=sum(rec.iterations_to_target is not None for rec in done),
                failed=len(group) - len(done),
                median_iterations=med(its),
                median_final_error=med([rec.final_error for rec in done]),
                median_evals=med([rec.evals[-1] for rec in done]),
                median_wall_time=med([rec.wall_time for rec in done]),
            )
        )
    return rows


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> tuple[list[RunResult], list[SummaryRow]]:
    """Run every (case, seed) and return results sorted by (case, seed) plus the per-case summary.

    ``jobs > 1`` uses a process pool. Each run owns its RNG stream, so the
    results do not depend on scheduling order.
    """
    specs = sorted(config.runs, key=lambda s: s.sort_key)
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    if jobs == 1 or len(specs) <= 1:
        results = [execute(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute, specs, chunksize=1))
    results.sort(key=lambda r: r.spec.sort_key)
    return results, summarize(results)
