"""Result files: per-run traces, per-seed and median summaries, instances, manifest.

Only ``timing.csv`` carries wall-clock numbers; everything else is a pure
function of the config, so repeated runs produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

from .. import __version__
from ..core import RunRecord
from .config import ExperimentConfig
from .runner import RunResult, SummaryRow

TRACE_COLUMNS = ("iteration", "tau", "best_cost", "mean_error", "evals")
SUMMARY_COLUMNS = ("case_id", "objective", "optimizer", "runs", "reached", "failed",
                   "median_iterations", "median_final_error", "median_evals")
RUNS_COLUMNS = ("case_id", "objective", "optimizer", "seed", "status", "termination", "iterations",
                "iterations_to_target", "final_error", "final_best_cost", "evals", "trace")


class ResultsWriteError(OSError):
    pass


def fmt(value) -> str:
    """17 significant digits for floats, plain text for ints; 'inf'/'nan' spelled out."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return f"{v:.17g}"


def trace_rows(record: RunRecord):
    for row in zip(record.iteration, record.tau, record.best_cost, record.mean_error, record.evals):
        yield [fmt(v) for v in row]


def write_trace(record: RunRecord, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(record))
    return path


def read_trace(path) -> dict[str, list]:
    """Parse a trace CSV back into columns (ints for iteration/evals, floats otherwise)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {c: [] for c in TRACE_COLUMNS}
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        cols: dict[str, list] = {c: [] for c in TRACE_COLUMNS}
        for row in reader:
            for c, v in zip(TRACE_COLUMNS, row):
                cols[c].append(int(v) if c in ("iteration", "evals") else float(v))
    return cols


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label)


def trace_name(result: RunResult) -> str:
    return f"traces/{_safe(result.spec.case_id)}__seed{result.spec.seed}.csv"


def instance_name(result: RunResult) -> str:
    b = result.spec.benchmark
    seed = result.spec.seed if b.instance_seed is None else b.instance_seed
    return f"instances/{_safe(b.label)}__seed{seed}.json"


def _run_entry(r: RunResult) -> dict:
    e = {
        "case_id": r.spec.case_id,
        "benchmark": r.spec.benchmark.to_dict(),
        "optimizer": r.spec.optimizer.to_dict(),
        "seed": r.spec.seed,
        "instance": instance_name(r),
        "status": "ok" if r.ok else "failed",
    }
    if r.ok:
        e["trace"] = trace_name(r)
        e["termination"] = r.record.termination
    else:
        e["error"] = r.error
    return e


def write_results(config: ExperimentConfig, results: list[RunResult], rows: list[SummaryRow], outdir) -> list[Path]:
    """Write every output file under ``outdir`` and return their paths (manifest last)."""
    out = Path(outdir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "instances").mkdir(exist_ok=True)
    except OSError as exc:
        raise ResultsWriteError(f"cannot create output directory {out}: {exc.strerror}") from exc
    written: list[Path] = []

    def _open(rel: str):
        p = out / rel
        try:
            return p, open(p, "w", newline="")
        except OSError as exc:
            raise ResultsWriteError(f"cannot write {p}: {exc.strerror}") from exc

    instances_done: set[str] = set()
    for r in results:
        inst_rel = instance_name(r)
        if inst_rel not in instances_done:
            instances_done.add(inst_rel)
            try:
                text = r.spec.benchmark.instance(r.spec.seed).to_json()
            except Exception:  # the run itself already recorded this failure
                text = None
            if text is not None:
                p, fh = _open(inst_rel)
                with fh:
                    fh.write(text + "\n")
                written.append(p)
        if r.ok:
            rel = trace_name(r)
            try:
                written.append(write_trace(r.record, out / rel))
            except OSError as exc:
                raise ResultsWriteError(f"cannot write {out / rel}: {exc.strerror}") from exc

    p, fh = _open("summary.csv")
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([fmt(getattr(row, c)) for c in SUMMARY_COLUMNS])
    written.append(p)

    p, fh = _open("runs.csv")
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_COLUMNS)
        for r in results:
            rec = r.record
            w.writerow([
                r.spec.case_id, r.spec.benchmark.label, r.spec.optimizer.label, r.spec.seed,
                "ok" if r.ok else "failed",
                rec.termination if rec else "",
                fmt(rec.iterations) if rec else "",
                fmt(rec.iterations_to_target) if rec else "",
                fmt(rec.final_error) if rec else "",
                fmt(rec.final_best_cost) if rec else "",
                fmt(rec.evals[-1]) if rec else "",
                trace_name(r) if r.ok else "",
            ])
    written.append(p)

    p, fh = _open("timing.csv")
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("case_id", "seed", "wall_time_s"))
        for r in results:
            w.writerow([r.spec.case_id, r.spec.seed, fmt(r.record.wall_time) if r.ok else ""])
    written.append(p)
    if config.plot:
        from .plotting import render_plot

        traces = [out / trace_name(r) for r in results if r.ok]
        svg = render_plot(traces, out / "convergence.svg", log_scale=True) if traces else None
        if svg is not None:
            written.append(svg)
    written.append(write_manifest(config, results, written, out))
    return written


def write_manifest(config: ExperimentConfig, results: list[RunResult], files: list[Path], outdir) -> Path:
    out = Path(outdir)
    path = out / "manifest.json"
    rels = sorted({str(f.relative_to(out)) for f in files} | {"manifest.json"})
    canonical = json.dumps(config.raw, sort_keys=True, separators=(",", ":"))
    runs = [_run_entry(r) for r in results]
    doc = {
        "package_version": __version__,
        "experiment": config.name,
        "config": config.raw,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "summary_columns": list(SUMMARY_COLUMNS),
        "trace_columns": list(TRACE_COLUMNS),
        "runs": runs,
        "files": rels,
    }
    try:
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise ResultsWriteError(f"cannot write {path}: {exc.strerror}") from exc
    return path

