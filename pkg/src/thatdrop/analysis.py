"""Descriptive statistics and figure data: dataset summary, lemma
distribution, correlations, kernel density estimates, annotation sampling.

Everything here emits numbers, not images; rendering lives in
:mod:`thatdrop.plots`.
"""

from __future__ import annotations

import csv
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import SentenceRecord
from .extraction import ConstructionRecord, Label


@dataclass(frozen=True)
class LabelSummary:
    label: str
    count: int
    mean_sentence_length: Optional[float]


def dataset_summary(
    constructions: Sequence[ConstructionRecord],
    corpus: Mapping[str, SentenceRecord],
) -> list[LabelSummary]:
    """Per label: construction count and mean source-sentence word length."""
    lengths: dict[Label, list[int]] = {Label.EXPLICIT: [], Label.IMPLICIT: []}
    for c in constructions:
        lengths[c.label].append(corpus[c.sentence_id].word_count())
    return [
        LabelSummary(
            label.value,
            len(values),
            (sum(values) / len(values)) if values else None,
        )
        for label, values in lengths.items()
    ]


@dataclass(frozen=True)
class LemmaEntry:
    lemma: str
    total: int
    explicit: int
    implicit: int
    share: float  # of all constructions, not only the listed ones


@dataclass(frozen=True)
class LemmaDistribution:
    entries: list[LemmaEntry]  # top_k lemmas, by total desc then lemma asc
    distinct_lemmas: int
    total_constructions: int
    cumulative_share: float  # summed share of the listed entries


def lemma_distribution(
    constructions: Sequence[ConstructionRecord], top_k: int
) -> LemmaDistribution:
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    totals: dict[str, list[int]] = defaultdict(lambda: [0, 0])  # [explicit, implicit]
    for c in constructions:
        totals[c.main_verb_lemma][0 if c.label is Label.EXPLICIT else 1] += 1
    n = len(constructions)
    ranked = sorted(totals.items(), key=lambda item: (-(item[1][0] + item[1][1]), item[0]))
    entries = [
        LemmaEntry(
            lemma=lemma,
            total=expl + impl,
            explicit=expl,
            implicit=impl,
            share=(expl + impl) / n if n else 0.0,
        )
        for lemma, (expl, impl) in ranked[:top_k]
    ]
    return LemmaDistribution(
        entries=entries,
        distinct_lemmas=len(totals),
        total_constructions=n,
        cumulative_share=sum(e.share for e in entries),
    )


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation; errors on unequal lengths or zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_r needs two equal-length vectors")
    if len(x) < 2:
        raise ValueError("pearson_r needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sum(dx * dx))
    sy = float(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise ValueError("pearson_r undefined for zero-variance input")
    return float(np.sum(dx * dy) / math.sqrt(sx * sy))


@dataclass(frozen=True)
class KdeCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def scott_bandwidth(values: Sequence[float]) -> float:
    """h = sigma_hat * n^(-1/5) with the sample (n-1) standard deviation."""
    values = np.asarray(values, dtype=float)
    sigma = float(values.std(ddof=1))
    if sigma == 0:
        raise ValueError(
            "degenerate (all-equal) values; pass an explicit bandwidth"
        )
    return sigma * len(values) ** (-1 / 5)


def kde(
    values: Sequence[float],
    grid: Sequence[float],
    bandwidth: Optional[float] = None,
) -> KdeCurve:
    """Gaussian-kernel density estimate on ``grid``."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if len(values) < 2:
        raise ValueError("kde needs at least 2 values")
    if bandwidth is None:
        bandwidth = scott_bandwidth(values)
    elif bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    z = (grid[:, None] - values[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (len(values) * bandwidth * math.sqrt(2 * math.pi))
    return KdeCurve(grid=grid, density=density, bandwidth=bandwidth)


def annotation_sample(
    constructions: Sequence[ConstructionRecord], n: int, seed: int
) -> list[ConstructionRecord]:
    """n/2 explicit + n/2 implicit, without replacement, deterministic under seed."""
    if n < 2 or n % 2:
        raise ValueError(f"sample size must be even and >= 2, got {n}")
    half = n // 2
    by_label = {Label.EXPLICIT: [], Label.IMPLICIT: []}
    for c in constructions:
        by_label[c.label].append(c)
    for label, pool in by_label.items():
        pool.sort(key=lambda c: (c.sentence_id, c.main_verb_index))
        if len(pool) < half:
            raise ValueError(
                f"{label.value} class has {len(pool)} constructions, need {half}"
            )
    rng = random.Random(seed)
    sample = rng.sample(by_label[Label.EXPLICIT], half)
    sample += rng.sample(by_label[Label.IMPLICIT], half)
    return sample


# --- CSV emitters used by the report stage ---------------------------------


def write_summary_csv(summaries: Iterable[LabelSummary], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label", "count", "mean_sentence_length"])
        for s in summaries:
            mean = "" if s.mean_sentence_length is None else repr(s.mean_sentence_length)
            writer.writerow([s.label, s.count, mean])


def write_lemmas_csv(dist: LemmaDistribution, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["lemma", "total", "explicit", "implicit", "share"])
        for e in dist.entries:
            writer.writerow([e.lemma, e.total, e.explicit, e.implicit, repr(e.share)])


def write_kde_csv(curve: KdeCurve, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["grid", "density"])
        for g, d in zip(curve.grid, curve.density):
            writer.writerow([repr(float(g)), repr(float(d))])


def write_correlations_csv(
    pairs: Iterable[tuple[str, str, float]], path: Union[str, Path]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y", "pearson_r"])
        for x_name, y_name, r in pairs:
            writer.writerow([x_name, y_name, repr(r)])


def write_annotation_csv(
    sample: Sequence[ConstructionRecord],
    corpus: Mapping[str, SentenceRecord],
    path: Union[str, Path],
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sentence_id", "label", "main_verb_index", "main_verb_lemma", "text"])
        for c in sample:
            tokens = corpus[c.sentence_id].tokens
            writer.writerow(
                [c.sentence_id, c.label.value, c.main_verb_index, c.main_verb_lemma, " ".join(tokens)]
            )
