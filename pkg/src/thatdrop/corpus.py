"""Annotated-sentence data model, bracketed-tree parsing, and corpus I/O.

The corpus file is UTF-8, one JSON object per line with keys
``id, tokens, lemmas, pos, dep_head, dep_rel, parse``.  Tokens are
clitic-split ("I've" -> "I", "'ve"); ``dep_head`` indices are 0-based with
-1 marking the root; ``parse`` is a Penn-style bracketed constituency tree
whose leaves reproduce the tokens (parentheses escaped as -LRB-/-RRB-).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

PTB_ESCAPES = {
    "-LRB-": "(",
    "-RRB-": ")",
    "-LCB-": "{",
    "-RCB-": "}",
    "-LSB-": "[",
    "-RSB-": "]",
}
PTB_UNESCAPES = {v: k for k, v in PTB_ESCAPES.items()}

ROOT_SENTINEL = -1

RECORD_FIELDS = ("id", "tokens", "lemmas", "pos", "dep_head", "dep_rel", "parse")


class TreeParseError(ValueError):
    """Malformed bracketed tree; ``offset`` is the character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Leaf:
    """A terminal token: its sentence position and (unescaped) surface form."""

    index: int
    text: str


@dataclass(frozen=True)
class ParseTree:
    """Constituency-tree node.

    A node is either internal (>= 1 child, no leaf) or terminal (leaf set,
    no children); the constructor is not re-validated, the parser only builds
    well-formed nodes.
    """

    label: str
    children: tuple["ParseTree", ...] = ()
    leaf: Optional[Leaf] = None

    @property
    def is_terminal(self) -> bool:
        return self.leaf is not None

    def subtrees(self) -> Iterator["ParseTree"]:
        """Pre-order traversal including self."""
        yield self
        for child in self.children:
            yield from child.subtrees()

    def terminals(self) -> Iterator["ParseTree"]:
        """Terminal nodes left to right."""
        if self.is_terminal:
            yield self
        for child in self.children:
            yield from child.terminals()

    def leaves(self) -> list[Leaf]:
        return [node.leaf for node in self.terminals()]

    def first_leaf(self) -> Leaf:
        return next(self.terminals()).leaf

    def last_leaf(self) -> Leaf:
        leaf = None
        for node in self.terminals():
            leaf = node.leaf
        return leaf

    def to_bracketed(self) -> str:
        if self.is_terminal:
            return f"({self.label} {_escape(self.leaf.text)})"
        inner = " ".join(child.to_bracketed() for child in self.children)
        return f"({self.label} {inner})"


def _escape(text: str) -> str:
    return PTB_UNESCAPES.get(text, text)


def _unescape(text: str) -> str:
    return PTB_ESCAPES.get(text, text)


def _tokenize_brackets(text: str) -> list[tuple[str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            start = i
            while i < n and not text[i].isspace() and text[i] not in "()":
                i += 1
            tokens.append((text[start:i], start))
    return tokens


def parse_bracketed_tree(text: str) -> ParseTree:
    """Parse a Penn-style bracketed tree.

    Leaf indices are assigned left to right starting at 0; leaf surface
    forms are PTB-unescaped (-LRB- -> "(").  Raises :class:`TreeParseError`
    with a character offset for unbalanced parentheses, empty constituents,
    or trailing content.
    """
    tokens = _tokenize_brackets(text)
    if not tokens:
        raise TreeParseError("empty input", 0)
    pos = 0
    next_leaf = 0

    def parse_node() -> ParseTree:
        nonlocal pos, next_leaf
        tok, off = tokens[pos]
        if tok != "(":
            raise TreeParseError(f"expected '(' but found {tok!r}", off)
        pos += 1
        if pos >= len(tokens):
            raise TreeParseError("unbalanced parentheses", off)
        label, label_off = tokens[pos]
        if label in "()":
            raise TreeParseError("empty constituent (missing label)", label_off)
        pos += 1
        children: list[ParseTree] = []
        leaf_text: Optional[str] = None
        while True:
            if pos >= len(tokens):
                raise TreeParseError("unbalanced parentheses", tokens[-1][1])
            tok, off = tokens[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                if leaf_text is not None:
                    raise TreeParseError("mixed leaf and constituent children", off)
                children.append(parse_node())
            else:
                if children or leaf_text is not None:
                    raise TreeParseError("terminal with more than one leaf", off)
                leaf_text = tok
                pos += 1
        if leaf_text is not None:
            node = ParseTree(label, (), Leaf(next_leaf, _unescape(leaf_text)))
            next_leaf += 1
            return node
        if not children:
            raise TreeParseError("empty constituent", label_off)
        return ParseTree(label, tuple(children))

    root = parse_node()
    if pos != len(tokens):
        raise TreeParseError("trailing content after tree", tokens[pos][1])
    return root


def is_word(token: str) -> bool:
    """True unless the token is pure punctuation (no letter or digit)."""
    return any(ch.isalnum() for ch in token)


def detokenize(tokens: Iterable[str]) -> str:
    """Whitespace join with clitic reattachment ("I 've" -> "I've").

    Produces natural text for subword providers: no space before clitics,
    closing punctuation, or after opening brackets/quotes.
    """
    no_space_before = {",", ".", "!", "?", ";", ":", ")", "]", "}", "%", "...", "''", "n't"}
    no_space_after = {"(", "[", "{", "``", "$"}
    out: list[str] = []
    for tok in tokens:
        if not out:
            out.append(tok)
        elif tok in no_space_before or tok.startswith("'"):
            out[-1] += tok
        elif out[-1] in no_space_after:
            out[-1] += tok
        else:
            out.append(tok)
    return " ".join(out)


@dataclass(frozen=True)
class SentenceRecord:
    """One tokenized, parsed sentence with per-token annotation layers."""

    id: str
    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]
    pos: tuple[str, ...]
    dep_head: tuple[int, ...]
    dep_rel: tuple[str, ...]
    parse: str

    def __len__(self) -> int:
        return len(self.tokens)

    @cached_property
    def tree(self) -> ParseTree:
        return parse_bracketed_tree(self.parse)

    def word_count(self) -> int:
        return sum(1 for tok in self.tokens if is_word(tok))

    @classmethod
    def from_json_dict(cls, data: dict) -> "SentenceRecord":
        missing = [key for key in RECORD_FIELDS if key not in data]
        if missing:
            raise KeyError(f"missing record fields: {', '.join(missing)}")
        return cls(
            id=str(data["id"]),
            tokens=tuple(data["tokens"]),
            lemmas=tuple(data["lemmas"]),
            pos=tuple(data["pos"]),
            dep_head=tuple(int(h) for h in data["dep_head"]),
            dep_rel=tuple(data["dep_rel"]),
            parse=str(data["parse"]),
        )

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "tokens": list(self.tokens),
            "lemmas": list(self.lemmas),
            "pos": list(self.pos),
            "dep_head": list(self.dep_head),
            "dep_rel": list(self.dep_rel),
            "parse": self.parse,
        }


@dataclass(frozen=True)
class Diagnostic:
    """A named invariant violation on a specific record field."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def validate_record(record: SentenceRecord) -> list[Diagnostic]:
    """Check every SentenceRecord invariant; empty list means valid."""
    diagnostics: list[Diagnostic] = []
    n = len(record.tokens)
    if n < 1:
        diagnostics.append(Diagnostic("tokens", "sentence has no tokens"))
        return diagnostics
    for field in ("lemmas", "pos", "dep_head", "dep_rel"):
        value = getattr(record, field)
        if len(value) != n:
            diagnostics.append(
                Diagnostic(field, f"length {len(value)} differs from {n} tokens")
            )
    for i, head in enumerate(record.dep_head):
        if head != ROOT_SENTINEL and not 0 <= head < n:
            diagnostics.append(
                Diagnostic("dep_head", f"index {head} at position {i} out of bounds for {n} tokens")
            )
    try:
        tree = record.tree
    except TreeParseError as err:
        diagnostics.append(Diagnostic("parse", str(err)))
        return diagnostics
    leaves = tree.leaves()
    if len(leaves) != n:
        diagnostics.append(
            Diagnostic("parse", f"tree has {len(leaves)} leaves but {n} tokens")
        )
        return diagnostics
    for leaf, token in zip(leaves, record.tokens):
        if leaf.text != token:
            diagnostics.append(
                Diagnostic(
                    "parse",
                    f"leaf {leaf.index} reads {leaf.text!r} but token is {token!r}",
                )
            )
            break
    return diagnostics


@dataclass(frozen=True)
class LoadDiagnostic:
    line_no: int
    record_id: Optional[str]
    detail: str

    def __str__(self) -> str:
        ident = self.record_id or "?"
        return f"line {self.line_no} ({ident}): {self.detail}"


@dataclass
class LoadResult:
    records: list[SentenceRecord]
    diagnostics: list[LoadDiagnostic]

    @property
    def skipped(self) -> int:
        return len({d.line_no for d in self.diagnostics})


def load_corpus(source: Union[str, Path, Iterable[str]]) -> LoadResult:
    """Load a line-delimited corpus; invalid records become diagnostics.

    ``source`` is a path or an iterable of lines.  An unreadable path raises
    the underlying ``OSError``; per-record schema or invariant violations are
    collected and the record skipped.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            return load_corpus(list(handle))
    records: list[SentenceRecord] = []
    diagnostics: list[LoadDiagnostic] = []
    for line_no, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as err:
            diagnostics.append(LoadDiagnostic(line_no, None, f"invalid JSON: {err}"))
            continue
        try:
            record = SentenceRecord.from_json_dict(data)
        except (KeyError, TypeError, ValueError) as err:
            rid = data.get("id") if isinstance(data, dict) else None
            diagnostics.append(LoadDiagnostic(line_no, rid, str(err)))
            continue
        problems = validate_record(record)
        if problems:
            for problem in problems:
                diagnostics.append(LoadDiagnostic(line_no, record.id, str(problem)))
            continue
        records.append(record)
    return LoadResult(records, diagnostics)


def write_corpus(records: Iterable[SentenceRecord], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
