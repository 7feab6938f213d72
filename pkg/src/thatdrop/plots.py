"""Figure rendering for the report stage (PNG files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import KdeCurve, LemmaDistribution

# Stable metadata keeps repeated runs byte-identical.
_PNG_METADATA = {"Software": "thatdrop"}

LABEL_COLORS = {"explicit": "#d1495b", "implicit": "#1f6f8b"}


def render_lemma_figure(dist: LemmaDistribution, path: Union[str, Path]) -> None:
    """Stacked bars: per-lemma share of all constructions, split by label."""
    fig, ax = plt.subplots(figsize=(8, 4))
    lemmas = [e.lemma for e in dist.entries]
    total = dist.total_constructions or 1
    explicit = [e.explicit / total for e in dist.entries]
    implicit = [e.implicit / total for e in dist.entries]
    ax.bar(lemmas, implicit, label="implicit", color=LABEL_COLORS["implicit"])
    ax.bar(lemmas, explicit, bottom=implicit, label="explicit", color=LABEL_COLORS["explicit"])
    ax.set_ylabel("share of all constructions")
    ax.set_xlabel("main verb lemma")
    ax.legend()
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def render_kde_figure(
    curves: Mapping[str, KdeCurve], path: Union[str, Path], xlabel: str
) -> None:
    """Overlaid per-label density curves for one predictor."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curve in sorted(curves.items()):
        ax.plot(
            curve.grid,
            curve.density,
            label=f"{label} (h={curve.bandwidth:.3f})",
            color=LABEL_COLORS.get(label),
        )
    ax.set_xlabel(xlabel)
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
