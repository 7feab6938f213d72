"""The six omission predictors, computed per construction.

Lengths count non-punctuation tokens.  The main-clause prefix handed to the
provider is the token span up to and including the main verb for *both*
labels: the explicit "that" never enters the prefix, so explicit and
implicit rows are measured identically.  The onset surprisal marginalizes
the connector out: -ln( p(onset | MC) + p(onset | MC + "that") ).
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import SentenceRecord, is_word
from .extraction import ConstructionRecord, Label
from .lm import Provider

VERBAL_POS = {"VERB", "AUX"}

FEATURE_COLUMNS = (
    "mc_length",
    "mc_verb_frequency",
    "sc_length",
    "sc_subject_distance",
    "sc_onset_surprisal",
    "sc_onset_entropy",
)
DETAIL_COLUMNS = (
    "sentence_id",
    "main_verb_index",
    "main_verb_lemma",
    "sc_onset_word",
    "sc_onset_frequency",
    "sc_subject_missing",
)


class FeaturizeError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusStats:
    """Lemma and surface counts over the full corpus (not only extracted sentences)."""

    verb_lemma_counts: Mapping[str, int]
    total_verb_tokens: int
    token_counts: Mapping[str, int]
    total_tokens: int
    total_sentences: int

    @classmethod
    def from_records(cls, records: Iterable[SentenceRecord]) -> "CorpusStats":
        verb_counts: Counter = Counter()
        token_counts: Counter = Counter()
        n_sentences = 0
        for rec in records:
            n_sentences += 1
            for tok, lemma, pos in zip(rec.tokens, rec.lemmas, rec.pos):
                token_counts[tok.lower()] += 1
                if pos in VERBAL_POS:
                    verb_counts[lemma.lower()] += 1
        return cls(
            verb_lemma_counts=dict(verb_counts),
            total_verb_tokens=sum(verb_counts.values()),
            token_counts=dict(token_counts),
            total_tokens=sum(token_counts.values()),
            total_sentences=n_sentences,
        )

    def verb_frequency(self, lemma: str) -> float:
        count = self.verb_lemma_counts.get(lemma.lower())
        if not count:
            raise FeaturizeError(
                f"lemma {lemma!r} absent from corpus verb counts; stats must cover the corpus"
            )
        return count / self.total_verb_tokens

    def word_frequency(self, word: str) -> float:
        return self.token_counts.get(word.lower(), 0) / self.total_tokens


@dataclass
class FeatureRow:
    sentence_id: str
    main_verb_index: int
    main_verb_lemma: str
    mc_length: int
    sc_length: int
    main_verb_frequency: float
    sc_subject_distance: Optional[float]
    sc_subject_missing: bool
    sc_onset_word: str
    sc_onset_frequency: float
    sc_onset_surprisal: float = math.nan
    sc_onset_entropy: float = math.nan
    label: int = 0

    @property
    def key(self) -> tuple[str, int]:
        return (self.sentence_id, self.main_verb_index)


def mc_prefix(construction: ConstructionRecord, sentence: SentenceRecord) -> tuple[str, ...]:
    """Tokens up to and including the main verb (never the explicit "that")."""
    return sentence.tokens[: construction.main_verb_index + 1]


def _word_span_count(sentence: SentenceRecord, start: int, end: int) -> int:
    return sum(1 for tok in sentence.tokens[start : end + 1] if is_word(tok))


def compute_structural_features(
    construction: ConstructionRecord,
    sentence: SentenceRecord,
    stats: CorpusStats,
) -> FeatureRow:
    """The four count-based predictors; provider measurements left unset."""
    if construction.sentence_id != sentence.id:
        raise FeaturizeError(
            f"construction {construction.sentence_id!r} paired with sentence {sentence.id!r}"
        )
    boundary = (
        construction.sconj_index
        if construction.label is Label.EXPLICIT
        else construction.sc_onset_index
    )
    mc_length = _word_span_count(sentence, 0, boundary - 1)
    sc_length = _word_span_count(
        sentence, construction.sc_onset_index, construction.sc_end_index
    )
    if construction.sc_subject_index is not None:
        distance: Optional[float] = float(
            construction.sc_subject_index - construction.sc_onset_index + 1
        )
    else:
        distance = None
    onset_word = sentence.tokens[construction.sc_onset_index]
    return FeatureRow(
        sentence_id=sentence.id,
        main_verb_index=construction.main_verb_index,
        main_verb_lemma=construction.main_verb_lemma,
        mc_length=mc_length,
        sc_length=sc_length,
        main_verb_frequency=stats.verb_frequency(construction.main_verb_lemma),
        sc_subject_distance=distance,
        sc_subject_missing=distance is None,
        sc_onset_word=onset_word,
        sc_onset_frequency=stats.word_frequency(onset_word),
        label=1 if construction.label is Label.EXPLICIT else 0,
    )


def _neg_logaddexp(l1: float, l2: float) -> float:
    """-ln(e^l1 + e^l2), stable for very negative log-probabilities."""
    m = max(l1, l2)
    if m == float("-inf"):
        return float("inf")
    return -(m + math.log(math.exp(l1 - m) + math.exp(l2 - m)))


def sc_onset_surprisal(
    provider: Provider,
    construction: ConstructionRecord,
    sentence: SentenceRecord,
) -> float:
    """Marginalized onset surprisal, identical for explicit and implicit rows."""
    prefix = mc_prefix(construction, sentence)
    onset = sentence.tokens[construction.sc_onset_index]
    l1 = provider.continuation_logprob(prefix, onset)
    l2 = provider.continuation_logprob(tuple(prefix) + ("that",), onset)
    return _neg_logaddexp(l1, l2)


def sc_onset_entropy(
    provider: Provider,
    construction: ConstructionRecord,
    sentence: SentenceRecord,
) -> float:
    """Entropy of the next-token distribution conditioned on the main clause."""
    return provider.next_token_entropy(mc_prefix(construction, sentence))


def _measure(
    provider: Provider,
    construction: ConstructionRecord,
    sentence: SentenceRecord,
) -> tuple[float, float]:
    prefix = mc_prefix(construction, sentence)
    onset = sentence.tokens[construction.sc_onset_index]
    combined = getattr(provider, "score_with_entropy", None)
    if combined is not None:
        l1, h = combined(prefix, onset)
    else:
        l1 = provider.continuation_logprob(prefix, onset)
        h = provider.next_token_entropy(prefix)
    l2 = provider.continuation_logprob(tuple(prefix) + ("that",), onset)
    return _neg_logaddexp(l1, l2), h


def featurize(
    constructions: Sequence[ConstructionRecord],
    corpus: Mapping[str, SentenceRecord],
    stats: CorpusStats,
    provider: Provider,
    *,
    log_frequency: bool = False,
    jobs: int = 1,
) -> list[FeatureRow]:
    """One FeatureRow per construction, ordered by (sentence_id, main_verb_index).

    Rows without an SC subject get the table-mean distance and a missing
    flag.  Provider queries may run concurrently; the output order is
    deterministic regardless of completion order.
    """
    dangling = sorted({c.sentence_id for c in constructions} - set(corpus))
    if dangling:
        raise FeaturizeError(f"constructions reference unknown sentences: {', '.join(dangling)}")
    ordered = sorted(constructions, key=lambda c: (c.sentence_id, c.main_verb_index))

    def build(construction: ConstructionRecord) -> FeatureRow:
        sentence = corpus[construction.sentence_id]
        row = compute_structural_features(construction, sentence, stats)
        surprisal, h = _measure(provider, construction, sentence)
        row.sc_onset_surprisal = surprisal
        row.sc_onset_entropy = h
        return row

    if jobs > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(build, ordered))
    else:
        rows = [build(c) for c in ordered]

    present = [row.sc_subject_distance for row in rows if row.sc_subject_distance is not None]
    missing = [row for row in rows if row.sc_subject_distance is None]
    if missing:
        if not present:
            raise FeaturizeError("sc_subject_distance missing for every row; cannot impute")
        mean_distance = sum(present) / len(present)
        for row in missing:
            row.sc_subject_distance = mean_distance
    if log_frequency:
        for row in rows:
            row.main_verb_frequency = math.log(row.main_verb_frequency)
    return rows


def design_matrix(rows: Sequence[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) in FEATURE_COLUMNS order; y is the explicit/implicit label."""
    X = np.array(
        [
            [
                row.mc_length,
                row.main_verb_frequency,
                row.sc_length,
                row.sc_subject_distance,
                row.sc_onset_surprisal,
                row.sc_onset_entropy,
            ]
            for row in rows
        ],
        dtype=float,
    )
    y = np.array([row.label for row in rows], dtype=float)
    return X, y


def write_feature_csv(rows: Sequence[FeatureRow], path: Union[str, Path]) -> None:
    """The fixed-header feature CSV consumed by the regression stage."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(FEATURE_COLUMNS + ("label",))
        for row in rows:
            writer.writerow(
                [
                    row.mc_length,
                    repr(row.main_verb_frequency),
                    row.sc_length,
                    repr(row.sc_subject_distance),
                    repr(row.sc_onset_surprisal),
                    repr(row.sc_onset_entropy),
                    row.label,
                ]
            )


def write_feature_detail_csv(rows: Sequence[FeatureRow], path: Union[str, Path]) -> None:
    """Row-aligned construction refs and flags for the feature CSV."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(DETAIL_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.sentence_id,
                    row.main_verb_index,
                    row.main_verb_lemma,
                    row.sc_onset_word,
                    repr(row.sc_onset_frequency),
                    int(row.sc_subject_missing),
                ]
            )


def read_feature_csv(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray]:
    """Read back a feature CSV as (X, y)."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        expected = list(FEATURE_COLUMNS + ("label",))
        if header != expected:
            raise FeaturizeError(f"unexpected feature CSV header: {header}")
        data = [[float(cell) for cell in line] for line in reader if line]
    if not data:
        return np.empty((0, len(FEATURE_COLUMNS))), np.empty(0)
    arr = np.array(data, dtype=float)
    return arr[:, :-1], arr[:, -1]


def read_feature_detail_csv(path: Union[str, Path]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        return list(reader)
