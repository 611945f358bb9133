"""Render a SemanticParse into the unified semi-textual, parenthesized form.

Every wrapping AST node emits a ``( ... )`` group, so parenthesis nesting
mirrors tree depth; formal keywords are replaced by lexicon phrases and
per-function templates, identifiers are lowercased with underscores removed,
and literals pass through verbatim.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import LexiconFormatError, MissingPhraseError
from .lexicon import Lexicon
from .parse_core import AstNode, Dialect, NodeKind, SemanticParse

CONTROL_TOKENS = {Dialect.SQL: "[SQL]", Dialect.LOGIC: "[logic]"}

# SQL structural nodes assemble clause text without a paren group of their
# own; all other Apply nodes (and every leaf) wrap their content.
SQL_CLAUSE_LABELS = frozenset(
    {"query", "select", "from", "where", "group_by", "order_by", "limit"}
)


@dataclass(frozen=True)
class LinearForm:
    text: str
    dialect: Dialect
    control_token: str


Templates = dict[tuple[str, str], str]


def parse_templates_text(text: str) -> Templates:
    patterns: Templates = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise LexiconFormatError(
                f"expected 3 tab-separated columns, got {len(cols)}", line_no
            )
        patterns[(cols[0].strip().lower(), cols[1].strip().lower())] = cols[2].strip()
    return patterns


def load_templates(path: str | os.PathLike | None = None) -> Templates:
    if path is None:
        return default_templates()
    with open(path, encoding="utf-8") as fh:
        return parse_templates_text(fh.read())


@lru_cache(maxsize=1)
def default_templates() -> Templates:
    text = (
        resources.files("logicheck")
        .joinpath("data/default_templates.tsv")
        .read_text("utf-8")
    )
    return parse_templates_text(text)


def normalize_identifier(label: str) -> list[str]:
    """Identifier rendering: drop underscores, dots become spaces."""
    return label.replace("_", "").replace(".", " ").split()


class _Linearizer:
    def __init__(self, dialect: Dialect, lexicon: Lexicon, templates: Templates):
        self.dialect = dialect
        self.lexicon = lexicon
        self.templates = templates

    def pattern_for(self, label: str) -> str | None:
        return self.templates.get((self.dialect.value, label))

    def phrase_for(self, label: str) -> list[str]:
        entry = self.lexicon.lookup_formal(self.dialect, label)
        if entry is None or not entry.linear_phrase:
            raise MissingPhraseError(label)
        return entry.linear_phrase.split()

    def wrapped(self, node: AstNode) -> list[str]:
        return ["("] + self.content(node) + [")"]

    def content(self, node: AstNode) -> list[str]:
        if node.kind is NodeKind.IDENTIFIER:
            return normalize_identifier(node.label)
        if node.kind in (NodeKind.NUMBER, NodeKind.STRING):
            return node.label.lower().split()
        if node.kind is NodeKind.KEYWORD:
            pattern = self.pattern_for(node.label)
            if pattern is None:
                raise MissingPhraseError(node.label)
            return pattern.split()
        return self.apply_pattern(node)

    def apply_pattern(self, node: AstNode) -> list[str]:
        pattern = self.pattern_for(node.label)
        if pattern is None:
            raise MissingPhraseError(node.label)
        out: list[str] = []
        for word in pattern.split():
            if word == "{phrase}":
                out.extend(self.phrase_for(node.label))
            elif word == "{join}":
                phrase = self.phrase_for(node.label)
                for i, child in enumerate(node.children):
                    if i:
                        out.extend(phrase)
                    out.extend(self.wrapped(child))
            elif word == "{*}":
                for i, child in enumerate(node.children):
                    if i:
                        out.append(",")
                    out.extend(self.wrapped(child))
            elif word.startswith("{") and word.endswith("}") and word[1:-1].isdigit():
                out.extend(self.wrapped(node.children[int(word[1:-1])]))
            else:
                out.append(word)
        return out

    def clause(self, node: AstNode) -> list[str]:
        if node.label == "select":
            out: list[str] = []
            for i, child in enumerate(node.children):
                if i:
                    out.append(",")
                out.extend(self.wrapped(child))
            return out
        return self.apply_pattern(node)

    def query(self, root: AstNode) -> list[str]:
        select, from_clause = root.children[0], root.children[1]
        out = self.clause(select) + self.clause(from_clause)
        for clause in root.children[2:]:
            out.append(",")
            out.extend(self.clause(clause))
        return out

    def run(self, root: AstNode) -> str:
        if self.dialect is Dialect.SQL:
            return " ".join(self.query(root))
        return " ".join(self.wrapped(root))


def linearize(
    parse: SemanticParse,
    lexicon: Lexicon,
    templates: Templates | None = None,
) -> LinearForm:
    """Deterministic semi-textual rendering of a parse for generator input."""
    templates = default_templates() if templates is None else templates
    text = _Linearizer(parse.dialect, lexicon, templates).run(parse.root)
    return LinearForm(text, parse.dialect, CONTROL_TOKENS[parse.dialect])
