"""Next-token-distribution providers: built-in n-gram model and shared types.

All log quantities are natural (nats).  Providers answer two query kinds:
the log-probability of a continuation word given a token prefix, and the
entropy of the next-token distribution after a prefix.  Word-level providers
additionally expose the full distribution.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import SentenceRecord

UNK = "<unk>"
_BOS = -1  # context-only marker; never an outcome


class UnsupportedQueryError(RuntimeError):
    """The provider cannot answer this query kind."""


class ProviderError(RuntimeError):
    """Provider failure; ``retryable`` marks transient transport errors."""

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


@dataclass
class Distribution:
    """Normalized probability vector over a provider's vocabulary."""

    vocab_ids: np.ndarray
    probs: np.ndarray
    uniform_fallback: bool = False

    def validate(self, tol: float = 1e-9) -> None:
        if len(self.vocab_ids) != len(self.probs):
            raise ValueError("vocab_ids and probs lengths differ")
        if np.any(self.probs < 0):
            raise ValueError("negative probability")
        total = float(self.probs.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total}, not 1")


def entropy(dist: "Distribution | np.ndarray | Sequence[float]") -> float:
    """Shannon entropy -sum p ln p in nats, with 0 ln 0 := 0."""
    probs = dist.probs if isinstance(dist, Distribution) else np.asarray(dist, dtype=float)
    nonzero = probs[probs > 0]
    return float(-(nonzero * np.log(nonzero)).sum())


class Provider(ABC):
    """Uniform surface over next-token-distribution sources."""

    kind: str
    tokenizer_contract: str  # "word" or "subword"

    @abstractmethod
    def continuation_logprob(self, prefix: Sequence[str], word: str) -> float:
        """ln p(word | prefix); for subword providers the sum over the word's
        subword sequence (a lower bound on the word-level value)."""

    @abstractmethod
    def next_token_entropy(self, prefix: Sequence[str]) -> float:
        """Entropy in nats of the next-token distribution after ``prefix``."""

    def next_token_distribution(self, prefix: Sequence[str]) -> Distribution:
        raise UnsupportedQueryError(f"{self.kind} provider does not expose full distributions")

    def describe(self) -> dict:
        return {"kind": self.kind, "tokenizer": self.tokenizer_contract}


@dataclass
class NgramModel(Provider):
    """Additively smoothed n-gram model counted from the corpus itself.

    The vocabulary holds every lowercased word with count >= ``min_count``
    plus a reserved UNK (id 0).  Contexts shorter than order-1 are padded
    with a BOS marker that is never a predictable outcome.  With
    ``smoothing_k`` = 0, an unseen context falls back to the uniform
    distribution and the result is flagged.
    """

    order: int
    smoothing_k: float
    min_count: int
    vocab: dict[str, int]
    words: list[str]
    counts: dict[tuple[int, ...], dict[int, int]]
    context_totals: dict[tuple[int, ...], int] = field(default_factory=dict)

    kind = "ngram"
    tokenizer_contract = "word"

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    def word_id(self, word: str) -> int:
        return self.vocab.get(word.lower(), self.vocab[UNK])

    def _context(self, prefix: Sequence[str]) -> tuple[int, ...]:
        width = self.order - 1
        ids = [self.word_id(tok) for tok in prefix]
        padded = [_BOS] * width + ids
        return tuple(padded[len(padded) - width :])

    def next_token_distribution(self, prefix: Sequence[str]) -> Distribution:
        ctx = self._context(prefix)
        seen = self.counts.get(ctx, {})
        total = self.context_totals.get(ctx, 0)
        size = self.vocab_size
        if self.smoothing_k > 0:
            probs = np.full(size, self.smoothing_k, dtype=float)
            for wid, count in seen.items():
                probs[wid] += count
            probs /= total + self.smoothing_k * size
            fallback = False
        elif total > 0:
            probs = np.zeros(size, dtype=float)
            for wid, count in seen.items():
                probs[wid] = count / total
            fallback = False
        else:
            probs = np.full(size, 1.0 / size, dtype=float)
            fallback = True
        return Distribution(np.arange(size), probs, uniform_fallback=fallback)

    def continuation_probability(self, prefix: Sequence[str], word: str) -> float:
        ctx = self._context(prefix)
        wid = self.word_id(word)
        count = self.counts.get(ctx, {}).get(wid, 0)
        total = self.context_totals.get(ctx, 0)
        if self.smoothing_k > 0:
            return (count + self.smoothing_k) / (total + self.smoothing_k * self.vocab_size)
        if total > 0:
            return count / total
        return 1.0 / self.vocab_size

    def continuation_logprob(self, prefix: Sequence[str], word: str) -> float:
        if not word:
            raise ValueError("empty continuation word")
        p = self.continuation_probability(prefix, word)
        return math.log(p) if p > 0 else float("-inf")

    def next_token_entropy(self, prefix: Sequence[str]) -> float:
        # Closed form over seen words; the (V - seen) unseen words share one term.
        ctx = self._context(prefix)
        seen = self.counts.get(ctx, {})
        total = self.context_totals.get(ctx, 0)
        size = self.vocab_size
        if self.smoothing_k > 0:
            denom = total + self.smoothing_k * size
            h = 0.0
            for count in seen.values():
                p = (count + self.smoothing_k) / denom
                h -= p * math.log(p)
            p_unseen = self.smoothing_k / denom
            h -= (size - len(seen)) * p_unseen * math.log(p_unseen)
            return h
        if total > 0:
            h = 0.0
            for count in seen.values():
                p = count / total
                h -= p * math.log(p)
            return h
        return math.log(size)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "tokenizer": self.tokenizer_contract,
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "min_count": self.min_count,
            "vocab_size": self.vocab_size,
        }


def train_ngram(
    corpus: Iterable[SentenceRecord],
    *,
    order: int = 2,
    smoothing_k: float = 0.01,
    min_count: int = 2,
) -> NgramModel:
    """Count an n-gram model from the corpus; deterministic and
    permutation-invariant over sentences (counts commute)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if smoothing_k < 0:
        raise ValueError("smoothing_k must be >= 0")
    sentences = [[tok.lower() for tok in rec.tokens] for rec in corpus]
    if not sentences:
        raise ValueError("empty corpus")
    raw = Counter(tok for sent in sentences for tok in sent)
    words = [UNK] + sorted(w for w, c in raw.items() if c >= min_count)
    vocab = {w: i for i, w in enumerate(words)}
    unk_id = vocab[UNK]
    width = order - 1
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    totals: dict[tuple[int, ...], int] = {}
    for sent in sentences:
        ids = [vocab.get(tok, unk_id) for tok in sent]
        padded = [_BOS] * width + ids
        for i, wid in enumerate(ids):
            ctx = tuple(padded[i : i + width])
            bucket = counts.setdefault(ctx, {})
            bucket[wid] = bucket.get(wid, 0) + 1
            totals[ctx] = totals.get(ctx, 0) + 1
    return NgramModel(
        order=order,
        smoothing_k=smoothing_k,
        min_count=min_count,
        vocab=vocab,
        words=words,
        counts=counts,
        context_totals=totals,
    )
