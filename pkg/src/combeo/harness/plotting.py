"""Static SVG convergence plots rendered with matplotlib's Agg backend."""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import read_trace  # noqa: E402

log = logging.getLogger(__name__)

METRICS = ("best_cost", "mean_error")


def render_plot(traces, outpath, metric: str = "best_cost", log_scale: bool = False, labels=None) -> Path | None:
    """Draw one line per trace CSV (``metric`` against iteration) into an SVG file.

    Each series is wrapped in an SVG group with id ``series-<k>``. The axis
    ticks sit exactly at the data minimum and maximum. Traces with no rows are
    skipped; if nothing is left the call logs a warning and returns None.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    series = []
    for k, path in enumerate(traces):
        cols = read_trace(path)
        xs, ys = cols["iteration"], cols[metric]
        if log_scale:
            keep = [i for i, y in enumerate(ys) if y > 0]
            if len(keep) < len(ys):
                log.warning("%s: dropping %d non-positive values on a log axis", path, len(ys) - len(keep))
            xs, ys = [xs[i] for i in keep], [ys[i] for i in keep]
        if not xs:
            log.warning("%s: empty trace, skipped", path)
            continue
        name = labels[k] if labels else Path(path).stem
        series.append((name, xs, ys))
    if not series:
        log.warning("no data to plot; %s not written", outpath)
        return None

    plt.rcParams["svg.hashsalt"] = "combeo"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        for k, (name, xs, ys) in enumerate(series):
            (line,) = ax.plot(xs, ys, label=name, linewidth=1.2)
            line.set_gid(f"series-{k}")
        if log_scale:
            ax.set_yscale("log")
        all_x = [x for _, xs, _ in series for x in xs]
        all_y = [y for _, _, ys in series for y in ys]
        xlo, xhi, ylo, yhi = min(all_x), max(all_x), min(all_y), max(all_y)
        ax.set_xticks(sorted({xlo, xhi}))
        ax.set_yticks(sorted({ylo, yhi}))
        ax.minorticks_off()
        ax.set_xticklabels([f"{v:.6g}" for v in sorted({xlo, xhi})])
        ax.set_yticklabels([f"{v:.6g}" for v in sorted({ylo, yhi})])
        if xlo == xhi:
            ax.set_xlim(xlo - 0.5, xhi + 0.5)
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric.replace("_", " "))
        if len(series) <= 12:
            ax.legend(fontsize=7)
        fig.tight_layout()
        out = Path(outpath)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return out
