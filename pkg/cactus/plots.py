"""Static SVG rendering of rank, confidence and study reports.

Figures are built with the object-oriented matplotlib API (no pyplot state)
and saved with a fixed hash salt and no date stamp, so identical inputs give
byte-identical files. Every series carries a ``gid`` so the SVG can be
inspected by element id.
"""

import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

if TYPE_CHECKING:
    from cactus.explain import ConfidenceReport, RankReport

logger = logging.getLogger(__name__)

SVG_RC = {
    "svg.hashsalt": "cactus",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
}
PANEL_COLUMNS = 3


def _save(fig: Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("Wrote %s", path)
    return path


def plot_rank_report(report: "RankReport", path: Union[str, Path]) -> Path:
    """One panel per feature: normalized flip significance per class.

    Panels are ordered by descending average rank; each is titled with the
    feature's average rank.
    """
    with matplotlib.rc_context(SVG_RC):
        n = len(report.features)
        if n == 0:
            fig = Figure(figsize=(4, 2))
            ax = fig.add_subplot()
            ax.set_axis_off()
            ax.text(0.5, 0.5, "no features", ha="center", va="center")
            return _save(fig, path)

        cols = min(PANEL_COLUMNS, n)
        rows = math.ceil(n / cols)
        fig = Figure(figsize=(cols * 3.6, rows * 2.8), layout="constrained")
        axes = fig.subplots(rows, cols, squeeze=False)
        n_classes = len(report.class_names)
        width = 0.8 / max(len(f.flips) for f in report.features)
        x = np.arange(n_classes)

        for ax, feature in zip(axes.flat, report.features):
            ax.set_gid(f"feature-{feature.feature}")
            for k, flip in enumerate(feature.flips):
                ax.bar(
                    x + (k - (len(feature.flips) - 1) / 2) * width,
                    flip.normalized,
                    width=width,
                    label=flip.level,
                )
            ax.set_title(f"{feature.feature} (rank {feature.avg_rank:.3g})")
            ax.set_xticks(x, report.class_names)
            ax.set_ylim(0, 1)
            ax.legend(loc="upper right")
        for ax in list(axes.flat)[n:]:
            ax.set_axis_off()
        fig.suptitle(f"Feature ranks ({report.metric.value})")
        return _save(fig, path)


def plot_confidence_report(report: "ConfidenceReport", path: Union[str, Path]) -> Path:
    """Balanced accuracy and population against confidence.

    Each panel has one histogram series (per-bin values) and one cumulative
    polyline over the right bin edges. Coverage thresholds are drawn as
    vertical lines on the accuracy panel.
    """
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(9, 3.6), layout="constrained")
        ba_ax, pop_ax = fig.subplots(1, 2)
        edges = report.bin_edges
        right = edges[1:]

        hist = ba_ax.stairs(np.nan_to_num(report.balanced_accuracy), edges, fill=True, alpha=0.4)
        hist.set_gid("histogram-ba")
        (line,) = ba_ax.plot(right, report.cum_weighted_ba, marker="o")
        line.set_gid("cumulative-ba")
        ba_ax.axhline(report.chance_line, linestyle="--", color="grey").set_gid("chance-line")
        for c in report.coverage:
            ba_ax.axvline(c.threshold, linestyle=":", color="black").set_gid(
                f"coverage-{c.coverage}"
            )
        ba_ax.set_xlim(0, 100)
        ba_ax.set_ylim(0, 1)
        ba_ax.set_xlabel("confidence")
        ba_ax.set_ylabel("balanced accuracy")

        total = report.population.sum()
        fractions = report.population / total if total else report.population.astype(float)
        hist = pop_ax.stairs(fractions, edges, fill=True, alpha=0.4)
        hist.set_gid("histogram-population")
        (line,) = pop_ax.plot(right, report.cum_population_fraction, marker="o")
        line.set_gid("cumulative-population")
        pop_ax.set_xlim(0, 100)
        pop_ax.set_ylim(0, 1)
        pop_ax.set_xlabel("confidence")
        pop_ax.set_ylabel("population fraction")

        if report.metric is not None:
            fig.suptitle(f"Confidence ({report.metric.value})")
        return _save(fig, path)


def plot_study(
    summary: pd.DataFrame, path: Union[str, Path], chance_line: Optional[float] = None
) -> Path:
    """Mean balanced accuracy (± std) per fragmentation level, one line per series.

    Args:
        summary: Frame with columns metric, level, mean, std (one series per metric)
        path: Output SVG path
        chance_line: Optional horizontal reference (1/K)
    """
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(6, 4), layout="constrained")
        ax = fig.add_subplot()
        for name, group in summary.groupby("metric", sort=True):
            group = group.sort_values("level")
            container = ax.errorbar(
                group["level"], group["mean"], yerr=group["std"], marker="o", capsize=3, label=name
            )
            container.lines[0].set_gid(f"series-{name}")
        if chance_line is not None:
            ax.axhline(chance_line, linestyle="--", color="grey").set_gid("chance-line")
        ax.set_xlabel("fragmentation level (% removed)")
        ax.set_ylabel("balanced accuracy")
        ax.set_ylim(0, 1)
        ax.legend(loc="lower left")
        return _save(fig, path)
