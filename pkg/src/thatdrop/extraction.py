"""Classify "that" usages and detect explicit/implicit complement constructions.

A construction is a main verb whose VP immediately dominates, as the verb's
next sibling, a complement clause starting right after the verb: explicit
when the clause opens with a complementizer "that" (IN directly under SBAR),
implicit when the clause is an S (or an SBAR with an empty complementizer)
that is finite and does not itself open with "that".
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

from .corpus import ParseTree, SentenceRecord, is_word

VERB_TAGS = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"}
NOMINAL_TAGS = {"NN", "NNS", "NNP", "NNPS"}
NP_LABELS = {"NP", "NML", "WHNP"}
MIN_WORDS = 5
MAX_WORDS = 50


class ThatRole(Enum):
    SCONJ = "sconj"
    DEMONSTRATIVE_DETERMINER = "demonstrative_determiner"
    DEMONSTRATIVE_PRONOUN = "demonstrative_pronoun"
    RELATIVE_PRONOUN = "relative_pronoun"
    OTHER = "other"


class Label(Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class ThatUsage:
    token_index: int
    role: ThatRole


@dataclass(frozen=True)
class ConstructionRecord:
    """One detected MC+SC construction.

    Positional invariants: explicit has sconj_index = main_verb_index + 1
    and sc_onset_index = sconj_index + 1; implicit has sc_onset_index =
    main_verb_index + 1; main_verb_index < sc_onset_index <= sc_end_index;
    sc_subject_index, when set, lies within [sc_onset_index, sc_end_index].
    """

    sentence_id: str
    label: Label
    main_verb_index: int
    main_verb_lemma: str
    sconj_index: Optional[int]
    sc_onset_index: int
    sc_end_index: int
    sc_subject_index: Optional[int]

    def to_json_dict(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "label": self.label.value,
            "main_verb_index": self.main_verb_index,
            "main_verb_lemma": self.main_verb_lemma,
            "sconj_index": self.sconj_index,
            "sc_onset_index": self.sc_onset_index,
            "sc_end_index": self.sc_end_index,
            "sc_subject_index": self.sc_subject_index,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ConstructionRecord":
        return cls(
            sentence_id=data["sentence_id"],
            label=Label(data["label"]),
            main_verb_index=data["main_verb_index"],
            main_verb_lemma=data["main_verb_lemma"],
            sconj_index=data["sconj_index"],
            sc_onset_index=data["sc_onset_index"],
            sc_end_index=data["sc_end_index"],
            sc_subject_index=data["sc_subject_index"],
        )


def length_filter(record: SentenceRecord) -> bool:
    """True iff the sentence has 5..50 words, pure punctuation excluded."""
    return MIN_WORDS <= record.word_count() <= MAX_WORDS


class _TreeIndex:
    """Parent links and per-token terminal lookup for one parsed sentence."""

    def __init__(self, tree: ParseTree):
        self.parents: dict[int, ParseTree] = {}
        self.terminal_by_token: dict[int, ParseTree] = {}
        for node in tree.subtrees():
            for child in node.children:
                self.parents[id(child)] = node
            if node.is_terminal:
                self.terminal_by_token[node.leaf.index] = node

    def parent(self, node: ParseTree) -> Optional[ParseTree]:
        return self.parents.get(id(node))

    def ancestors(self, node: ParseTree) -> Iterable[ParseTree]:
        current = self.parent(node)
        while current is not None:
            yield current
            current = self.parent(current)


def _is_first_leaf_of(node: ParseTree, ancestor: ParseTree) -> bool:
    return ancestor.first_leaf().index == node.leaf.index


def classify_that_usages(record: SentenceRecord) -> list[ThatUsage]:
    """One ThatUsage per occurrence of "that" (case-insensitive).

    Disambiguation order, most specific structural context first: relative
    pronoun > demonstrative determiner > demonstrative pronoun > SCONJ >
    other.  The contexts are disjoint by tree position, so order only
    resolves would-be gaps, never true ties.
    """
    index = _TreeIndex(record.tree)
    usages: list[ThatUsage] = []
    for i, token in enumerate(record.tokens):
        if token.lower() != "that":
            continue
        terminal = index.terminal_by_token[i]
        usages.append(ThatUsage(i, _classify_terminal(terminal, index)))
    return usages


def _classify_terminal(terminal: ParseTree, index: _TreeIndex) -> ThatRole:
    parent = index.parent(terminal)
    # Relative pronoun: under WHNP, or the complementizer of an NP-attached SBAR.
    if any(node.label == "WHNP" for node in index.ancestors(terminal)):
        return ThatRole.RELATIVE_PRONOUN
    if (
        parent is not None
        and parent.label == "SBAR"
        and _is_first_leaf_of(terminal, parent)
        and (grand := index.parent(parent)) is not None
        and grand.label in NP_LABELS
    ):
        return ThatRole.RELATIVE_PRONOUN
    # Demonstrative determiner: determiner tag with a later nominal in the same NP.
    if terminal.label in {"DT", "WDT"} and parent is not None and parent.label in NP_LABELS:
        later_nominal = any(
            t.label in NOMINAL_TAGS and t.leaf.index > terminal.leaf.index
            for t in parent.terminals()
        )
        if later_nominal:
            return ThatRole.DEMONSTRATIVE_DETERMINER
        if len(parent.leaves()) == 1:
            return ThatRole.DEMONSTRATIVE_PRONOUN
    # SCONJ: complementizer position (first leaf, directly under a non-NP-attached SBAR).
    if (
        parent is not None
        and parent.label == "SBAR"
        and _is_first_leaf_of(terminal, parent)
        and ((grand := index.parent(parent)) is None or grand.label not in NP_LABELS)
    ):
        return ThatRole.SCONJ
    return ThatRole.OTHER


def _strip_trailing_punct(record: SentenceRecord, start: int, end: int) -> int:
    while end > start and not is_word(record.tokens[end]):
        end -= 1
    return end


def _find_sc_subject(record: SentenceRecord, start: int, end: int) -> Optional[int]:
    for i in range(start, end + 1):
        if record.dep_rel[i] == "nsubj" and start <= record.dep_head[i] <= end:
            return i
    return None


def detect_constructions(record: SentenceRecord) -> list[ConstructionRecord]:
    """All MC+SC constructions in the sentence, nested ones included.

    Deterministic; sentences with no match yield an empty list.  Callers are
    expected to have applied :func:`length_filter` first.
    """
    index = _TreeIndex(record.tree)
    results: list[ConstructionRecord] = []
    for terminal in record.tree.terminals():
        if terminal.label not in VERB_TAGS:
            continue
        parent = index.parent(terminal)
        if parent is None or parent.label != "VP":
            continue
        siblings = parent.children
        position = next(i for i, child in enumerate(siblings) if child is terminal)
        if position + 1 >= len(siblings):
            continue
        clause = siblings[position + 1]
        if clause.label not in {"S", "SBAR"}:
            continue
        verb_index = terminal.leaf.index
        if clause.first_leaf().index != verb_index + 1:
            continue
        construction = _classify_clause(record, clause, verb_index)
        if construction is not None:
            results.append(construction)
    return results


def _classify_clause(
    record: SentenceRecord, clause: ParseTree, verb_index: int
) -> Optional[ConstructionRecord]:
    label: Label
    sconj_index: Optional[int]
    if clause.label == "SBAR":
        head = clause.children[0]
        if head.is_terminal and head.label == "IN":
            # Overt complementizer: only "that" makes a construction.
            if head.leaf.text.lower() != "that":
                return None
            body_leaves = clause.leaves()
            if len(body_leaves) < 2:
                return None
            label = Label.EXPLICIT
            sconj_index = verb_index + 1
            onset = verb_index + 2
        elif head.label == "S":
            # Empty complementizer; treat like a bare S complement.
            if not _finite_complement(head):
                return None
            label = Label.IMPLICIT
            sconj_index = None
            onset = verb_index + 1
        else:
            # WHNP/WHADVP etc.: embedded question or relative, not optional "that".
            return None
    else:
        if not _finite_complement(clause):
            return None
        label = Label.IMPLICIT
        sconj_index = None
        onset = verb_index + 1
    if label is Label.IMPLICIT and record.tokens[onset].lower() == "that":
        # "think that's ..." opens with a demonstrative; the optionality test
        # is undecidable there, so no construction is emitted.
        return None
    end = _strip_trailing_punct(record, onset, clause.last_leaf().index)
    if end < onset:
        return None
    return ConstructionRecord(
        sentence_id=record.id,
        label=label,
        main_verb_index=verb_index,
        main_verb_lemma=record.lemmas[verb_index],
        sconj_index=sconj_index,
        sc_onset_index=onset,
        sc_end_index=end,
        sc_subject_index=_find_sc_subject(record, onset, end),
    )


def _finite_complement(clause: ParseTree) -> bool:
    """Reject VP-initial (subjectless, non-finite) clauses like "keep [forgetting ...]"."""
    if not clause.children:
        return False
    return clause.children[0].label != "VP"


def usage_counts(records: Iterable[SentenceRecord]) -> Counter:
    """Counts of each ThatRole over all "that" tokens in the records."""
    counts: Counter = Counter()
    for record in records:
        for usage in classify_that_usages(record):
            counts[usage.role] += 1
    return counts


@dataclass(frozen=True)
class SentenceClassSummary:
    """Table-style dataset summary: disjoint sentence classes."""

    label: str
    count: int
    mean_sentence_length: Optional[float]


def sentence_class_summary(
    records: Iterable[SentenceRecord],
    constructions: Iterable[ConstructionRecord],
) -> list[SentenceClassSummary]:
    """Sentence counts and mean word lengths for the three dataset classes.

    Classes are disjoint by priority: a sentence with any explicit
    construction is "explicit"; else with any implicit construction
    "implicit"; else containing "that" at all, "other_that".
    """
    by_sentence: dict[str, set[Label]] = {}
    for c in constructions:
        by_sentence.setdefault(c.sentence_id, set()).add(c.label)
    lengths: dict[str, list[int]] = {"explicit": [], "implicit": [], "other_that": []}
    for record in records:
        labels = by_sentence.get(record.id, set())
        if Label.EXPLICIT in labels:
            key = "explicit"
        elif Label.IMPLICIT in labels:
            key = "implicit"
        elif any(tok.lower() == "that" for tok in record.tokens):
            key = "other_that"
        else:
            continue
        lengths[key].append(record.word_count())
    return [
        SentenceClassSummary(
            key,
            len(values),
            (sum(values) / len(values)) if values else None,
        )
        for key, values in lengths.items()
    ]


def write_constructions(
    constructions: Iterable[ConstructionRecord], path: Union[str, Path]
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for c in constructions:
            handle.write(json.dumps(c.to_json_dict(), ensure_ascii=False) + "\n")


def read_constructions(path: Union[str, Path]) -> list[ConstructionRecord]:
    out: list[ConstructionRecord] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                out.append(ConstructionRecord.from_json_dict(json.loads(line)))
    return out
