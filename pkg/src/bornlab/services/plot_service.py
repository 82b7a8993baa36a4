"""Minimal SVG line plots of experiment artifacts."""

import io
import logging
from typing import Dict, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update(
    {
        "svg.hashsalt": "bornlab",
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 7,
        "figure.figsize": (5.0, 3.2),
    }
)

Series = Dict[str, Tuple[Sequence[float], Sequence[float]]]


class PlotService:
    """Render labelled (x, y) series to SVG bytes."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def line_plot(
        self,
        series: Series,
        xlabel: str,
        ylabel: str,
        title: str = "",
        logy: bool = False,
        markers: bool = False,
    ) -> bytes:
        fig, ax = plt.subplots()
        try:
            for label, (xs, ys) in series.items():
                ax.plot(xs, ys, marker="o" if markers else None, markersize=3, linewidth=1.0, label=label)
            if logy:
                ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            if len(series) > 1:
                ax.legend(frameon=False)
            fig.tight_layout()
            buffer = io.BytesIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
        self.logger.debug("Rendered plot '%s' with %d series", title or ylabel, len(series))
        return buffer.getvalue()

    def scatter_plot(self, series: Series, xlabel: str, ylabel: str, title: str = "", logy: bool = False) -> bytes:
        fig, ax = plt.subplots()
        try:
            for label, (xs, ys) in series.items():
                ax.scatter(xs, ys, s=6, label=label)
            if logy:
                ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            fig.tight_layout()
            buffer = io.BytesIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
        return buffer.getvalue()
