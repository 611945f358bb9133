"""Shared AST plus parsers/serializers for the two semantic-parse dialects.

The SQL dialect covers single SELECT queries with aggregates, equi-joins,
WHERE comparisons combined with AND/OR/NOT, GROUP BY, ORDER BY and LIMIT.
The logic dialect is the function-application notation ``fn { arg ; arg }``
with a closed, config-extensible function inventory.

Both dialects parse into the same immutable AstNode tree; identifiers,
keywords and string literals are case-folded to lowercase at parse time,
and serialize() emits a canonical string that re-parses to a structurally
equal tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import ParseError


class Dialect(Enum):
    SQL = "sql"
    LOGIC = "logic"


class NodeKind(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    NUMBER = "number"
    STRING = "string"
    APPLY = "apply"


_LEAF_KINDS = (NodeKind.KEYWORD, NodeKind.IDENTIFIER, NodeKind.NUMBER, NodeKind.STRING)


@dataclass(frozen=True)
class AstNode:
    kind: NodeKind
    label: str
    children: tuple["AstNode", ...] = ()

    def __post_init__(self):
        if self.kind in _LEAF_KINDS and self.children:
            raise ValueError(f"leaf node {self.label!r} may not have children")
        if self.kind is NodeKind.APPLY and not self.children:
            raise ValueError(f"apply node {self.label!r} needs at least one child")
        if self.kind is NodeKind.NUMBER:
            try:
                value = float(self.label)
            except ValueError:
                raise ValueError(f"number label {self.label!r} is not numeric") from None
            if not math.isfinite(value):
                raise ValueError(f"number label {self.label!r} is not finite")

    @property
    def is_leaf(self) -> bool:
        return self.kind is not NodeKind.APPLY


def keyword(label: str) -> AstNode:
    return AstNode(NodeKind.KEYWORD, label)


def identifier(label: str) -> AstNode:
    return AstNode(NodeKind.IDENTIFIER, label)


def number(label) -> AstNode:
    return AstNode(NodeKind.NUMBER, canonical_number(str(label)))


def string(label: str) -> AstNode:
    return AstNode(NodeKind.STRING, label)


def apply(label: str, *children: AstNode) -> AstNode:
    return AstNode(NodeKind.APPLY, label, tuple(children))


def canonical_number(text: str) -> str:
    """Normalize a numeric literal: '007' -> '7', '5.50' -> '5.5'."""
    value = float(text)
    if value == int(value) and "." not in text and "e" not in text.lower():
        return str(int(text))
    return repr(value)


@dataclass(frozen=True)
class SemanticParse:
    dialect: Dialect
    root: AstNode
    source_text: str

    def same_structure(self, other: "SemanticParse") -> bool:
        """Structural equality: dialect and tree, ignoring source text."""
        return self.dialect is other.dialect and self.root == other.root


Path = tuple[int, ...]


def walk(node: AstNode, path: Path = ()) -> Iterator[tuple[Path, AstNode]]:
    """Preorder traversal yielding (path, node) pairs."""
    yield path, node
    for i, child in enumerate(node.children):
        yield from walk(child, path + (i,))


def node_at(root: AstNode, path: Path) -> AstNode:
    node = root
    for i in path:
        node = node.children[i]
    return node


def replace_at(root: AstNode, path: Path, new_node: AstNode) -> AstNode:
    if not path:
        return new_node
    head, rest = path[0], path[1:]
    children = list(root.children)
    children[head] = replace_at(children[head], rest, new_node)
    return AstNode(root.kind, root.label, tuple(children))


def diff_paths(a: AstNode, b: AstNode) -> list[Path]:
    """Paths of maximal subtrees where two trees disagree."""
    if a == b:
        return []
    if a.kind != b.kind or a.label != b.label or len(a.children) != len(b.children):
        return [()]
    out: list[Path] = []
    for i, (ca, cb) in enumerate(zip(a.children, b.children)):
        out.extend((i,) + p for p in diff_paths(ca, cb))
    return out


# ---------------------------------------------------------------------------
# SQL dialect
# ---------------------------------------------------------------------------

_SQL_KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER",
    "ASC", "DESC", "LIMIT", "AND", "OR", "NOT", "JOIN", "ON",
}
AGGREGATES = ("count", "max", "min", "avg", "sum")
COMPARISONS = ("=", "!=", ">", "<", ">=", "<=")

_SQL_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>-?\d+(?:\.\d+)?)
      | (?P<string>"[^"]*"|'[^']*')
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<symbol>!=|>=|<=|[(),*.=<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | string | ident | symbol | eof
    value: str
    pos: int   # character offset into the source


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode("utf-8"))


def _lex_sql(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _SQL_TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}",
                _byte_offset(source, pos),
                expected="SQL token",
            )
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", pos))
    return tokens


class _SqlParser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _lex_sql(source)
        self.i = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, expected: str, tok: _Token | None = None):
        tok = tok or self.peek()
        found = tok.value or "end of input"
        raise ParseError(
            f"unexpected {found!r}",
            _byte_offset(self.source, tok.pos),
            expected=expected,
        )

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value.upper() in words

    def expect_keyword(self, word: str):
        if not self.at_keyword(word):
            self.fail(word)
        self.next()

    def expect_symbol(self, sym: str):
        tok = self.peek()
        if tok.kind != "symbol" or tok.value != sym:
            self.fail(repr(sym))
        self.next()

    # -- grammar -----------------------------------------------------------
    def parse_query(self) -> AstNode:
        self.expect_keyword("SELECT")
        clauses = [self.parse_select_list(), self.parse_from()]
        if self.at_keyword("WHERE"):
            self.next()
            clauses.append(apply("where", self.parse_or()))
        if self.at_keyword("GROUP"):
            self.next()
            self.expect_keyword("BY")
            clauses.append(apply("group_by", *self.parse_column_list()))
        if self.at_keyword("ORDER"):
            self.next()
            self.expect_keyword("BY")
            clauses.append(apply("order_by", *self.parse_order_items()))
        if self.at_keyword("LIMIT"):
            self.next()
            tok = self.peek()
            if tok.kind != "number":
                self.fail("row count")
            self.next()
            clauses.append(apply("limit", number(tok.value)))
        if self.peek().kind != "eof":
            self.fail("end of input")
        return apply("query", *clauses)

    def parse_select_list(self) -> AstNode:
        items = [self.parse_projection()]
        while self.peek().kind == "symbol" and self.peek().value == ",":
            self.next()
            items.append(self.parse_projection())
        return apply("select", *items)

    def parse_projection(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "symbol" and tok.value == "*":
            self.next()
            return keyword("*")
        if tok.kind != "ident" or tok.value.upper() in _SQL_KEYWORDS:
            self.fail("projection", tok)
        if self.peek(1).kind == "symbol" and self.peek(1).value == "(":
            name = tok.value.lower()
            if name not in AGGREGATES:
                self.fail("aggregate function", tok)
            self.next()
            self.next()  # "("
            arg_tok = self.peek()
            if arg_tok.kind == "symbol" and arg_tok.value == "*":
                if name != "count":
                    self.fail("column name", arg_tok)
                self.next()
                arg = keyword("*")
            else:
                arg = self.parse_column()
            self.expect_symbol(")")
            return apply(name, arg)
        return self.parse_column()

    def parse_column(self) -> AstNode:
        tok = self.peek()
        if tok.kind != "ident" or tok.value.upper() in _SQL_KEYWORDS:
            self.fail("column name", tok)
        self.next()
        name = tok.value.lower()
        if self.peek().kind == "symbol" and self.peek().value == ".":
            self.next()
            tail = self.peek()
            if tail.kind != "ident":
                self.fail("column name", tail)
            self.next()
            name = f"{name}.{tail.value.lower()}"
        return identifier(name)

    def parse_column_list(self) -> list[AstNode]:
        cols = [self.parse_column()]
        while self.peek().kind == "symbol" and self.peek().value == ",":
            self.next()
            cols.append(self.parse_column())
        return cols

    def parse_order_items(self) -> list[AstNode]:
        items = []
        while True:
            col = self.parse_column()
            if self.at_keyword("ASC", "DESC"):
                direction = self.next().value.lower()
                items.append(apply(direction, col))
            else:
                items.append(col)
            if self.peek().kind == "symbol" and self.peek().value == ",":
                self.next()
                continue
            return items

    def parse_table(self) -> AstNode:
        tok = self.peek()
        if tok.kind != "ident" or tok.value.upper() in _SQL_KEYWORDS:
            self.fail("table name", tok)
        self.next()
        return identifier(tok.value.lower())

    def parse_from(self) -> AstNode:
        self.expect_keyword("FROM")
        parts: list[AstNode] = [self.parse_table()]
        while True:
            if self.peek().kind == "symbol" and self.peek().value == ",":
                self.next()
                parts.append(self.parse_table())
            elif self.at_keyword("JOIN"):
                self.next()
                table = self.parse_table()
                self.expect_keyword("ON")
                left = self.parse_column()
                self.expect_symbol("=")
                right = self.parse_column()
                parts.append(apply("join", table, apply("=", left, right)))
            else:
                return apply("from", *parts)

    def parse_or(self) -> AstNode:
        node = self.parse_and()
        while self.at_keyword("OR"):
            self.next()
            node = apply("or", node, self.parse_and())
        return node

    def parse_and(self) -> AstNode:
        node = self.parse_not()
        while self.at_keyword("AND"):
            self.next()
            node = apply("and", node, self.parse_not())
        return node

    def parse_not(self) -> AstNode:
        if self.at_keyword("NOT"):
            self.next()
            return apply("not", self.parse_not())
        if self.peek().kind == "symbol" and self.peek().value == "(":
            self.next()
            node = self.parse_or()
            self.expect_symbol(")")
            return node
        return self.parse_comparison()

    def parse_comparison(self) -> AstNode:
        left = self.parse_operand()
        tok = self.peek()
        if tok.kind != "symbol" or tok.value not in COMPARISONS:
            self.fail("comparison operator", tok)
        self.next()
        right = self.parse_operand()
        return apply(tok.value, left, right)

    def parse_operand(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return number(tok.value)
        if tok.kind == "string":
            self.next()
            return string(tok.value[1:-1].lower())
        return self.parse_column()


def parse_sql(source: str) -> SemanticParse:
    """Parse a SQL-subset query into a SemanticParse."""
    root = _SqlParser(source).parse_query()
    return SemanticParse(Dialect.SQL, root, source)


def _serialize_sql_expr(node: AstNode, parent: str | None = None) -> str:
    if node.label == "or":
        body = " OR ".join(_serialize_sql_expr(c, "or") for c in node.children)
        return f"({body})" if parent in ("and", "not") else body
    if node.label == "and":
        body = " AND ".join(_serialize_sql_expr(c, "and") for c in node.children)
        return f"({body})" if parent == "not" else body
    if node.label == "not":
        return "NOT " + _serialize_sql_expr(node.children[0], "not")
    left, right = node.children
    return f"{_serialize_sql_operand(left)} {node.label} {_serialize_sql_operand(right)}"


def _serialize_sql_operand(node: AstNode) -> str:
    if node.kind is NodeKind.STRING:
        return f'"{node.label}"'
    return node.label


def _serialize_sql_projection(node: AstNode) -> str:
    if node.kind is NodeKind.APPLY:
        arg = node.children[0]
        inner = "*" if arg.label == "*" else arg.label
        return f"{node.label}({inner})"
    return "*" if node.label == "*" else node.label


def _serialize_sql(root: AstNode) -> str:
    parts = []
    for clause in root.children:
        if clause.label == "select":
            items = ", ".join(_serialize_sql_projection(c) for c in clause.children)
            parts.append(f"SELECT {items}")
        elif clause.label == "from":
            bits = [clause.children[0].label]
            for c in clause.children[1:]:
                if c.kind is NodeKind.APPLY and c.label == "join":
                    table, cond = c.children
                    left, right = cond.children
                    bits.append(f" JOIN {table.label} ON {left.label} = {right.label}")
                else:
                    bits.append(f", {c.label}")
            parts.append("FROM " + "".join(bits))
        elif clause.label == "where":
            parts.append("WHERE " + _serialize_sql_expr(clause.children[0]))
        elif clause.label == "group_by":
            parts.append("GROUP BY " + ", ".join(c.label for c in clause.children))
        elif clause.label == "order_by":
            items = []
            for c in clause.children:
                if c.kind is NodeKind.APPLY:
                    items.append(f"{c.children[0].label} {c.label.upper()}")
                else:
                    items.append(c.label)
            parts.append("ORDER BY " + ", ".join(items))
        elif clause.label == "limit":
            parts.append("LIMIT " + clause.children[0].label)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Logic dialect
# ---------------------------------------------------------------------------

# Argument roles drive leaf classification: bare tokens in value positions
# become literals, bare tokens in table/row/column positions become
# identifiers, and bool positions require a nested application.
TABLE, COLUMN, VALUE, ROW, BOOL, NUM = "table", "column", "value", "row", "bool", "number"


@dataclass(frozen=True)
class LogicSignature:
    roles: tuple[str, ...]
    variadic: bool = False  # extra args repeat the last role

    def role_at(self, i: int) -> str:
        if i < len(self.roles):
            return self.roles[i]
        return self.roles[-1]


DEFAULT_LOGIC_FUNCTIONS: dict[str, LogicSignature] = {
    "count": LogicSignature((TABLE,)),
    "max": LogicSignature((TABLE, COLUMN)),
    "min": LogicSignature((TABLE, COLUMN)),
    "avg": LogicSignature((TABLE, COLUMN)),
    "sum": LogicSignature((TABLE, COLUMN)),
    "eq": LogicSignature((VALUE, VALUE)),
    "not_eq": LogicSignature((VALUE, VALUE)),
    "str_eq": LogicSignature((VALUE, VALUE)),
    "not_str_eq": LogicSignature((VALUE, VALUE)),
    "round_eq": LogicSignature((VALUE, VALUE)),
    "greater": LogicSignature((VALUE, VALUE)),
    "less": LogicSignature((VALUE, VALUE)),
    "diff": LogicSignature((VALUE, VALUE)),
    "and": LogicSignature((BOOL, BOOL), variadic=True),
    "or": LogicSignature((BOOL, BOOL), variadic=True),
    "hop": LogicSignature((ROW, COLUMN)),
    "filter_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_not_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_str_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_str_not_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_greater": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_smaller": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_greater_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "filter_smaller_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "all_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "all_str_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "most_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "most_str_eq": LogicSignature((TABLE, COLUMN, VALUE)),
    "argmax": LogicSignature((TABLE, COLUMN)),
    "argmin": LogicSignature((TABLE, COLUMN)),
    "only": LogicSignature((TABLE,)),
}

_NUMERIC_RE = re.compile(r"-?\d+(?:\.\d+)?$")


def _lex_logic(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in "{};":
            tokens.append(_Token("symbol", ch, pos))
            pos += 1
            continue
        end = pos
        while end < n and not source[end].isspace() and source[end] not in "{};":
            end += 1
        tokens.append(_Token("word", source[pos:end], pos))
        pos = end
    tokens.append(_Token("eof", "", pos))
    return tokens


class _LogicParser:
    def __init__(self, source: str, functions: dict[str, LogicSignature]):
        self.source = source
        self.functions = functions
        self.tokens = _lex_logic(source)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, expected: str, tok: _Token | None = None):
        tok = tok or self.peek()
        found = tok.value or "end of input"
        raise ParseError(
            f"unexpected {found!r}",
            _byte_offset(self.source, tok.pos),
            expected=expected,
        )

    def parse_root(self) -> AstNode:
        tok = self.peek()
        if tok.kind != "word" or not (
            self.peek(1).kind == "symbol" and self.peek(1).value == "{"
        ):
            self.fail("function application", tok)
        node = self.parse_apply()
        if self.peek().kind != "eof":
            self.fail("end of input")
        return node

    def parse_apply(self) -> AstNode:
        name_tok = self.next()
        name = name_tok.value.lower()
        if name not in self.functions:
            self.fail("known function name", name_tok)
        sig = self.functions[name]
        open_tok = self.next()  # consumes "{", guaranteed by callers
        children: list[AstNode] = []
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise ParseError(
                    "unbalanced braces",
                    _byte_offset(self.source, tok.pos),
                    expected="'}'",
                )
            if tok.kind == "symbol" and tok.value == "}":
                self.next()
                break
            children.append(self.parse_arg(sig.role_at(len(children))))
            tok = self.peek()
            if tok.kind == "symbol" and tok.value == ";":
                self.next()
            elif not (tok.kind == "symbol" and tok.value == "}"):
                if tok.kind == "eof":
                    raise ParseError(
                        "unbalanced braces",
                        _byte_offset(self.source, tok.pos),
                        expected="'}'",
                    )
                self.fail("';' or '}'", tok)
        min_arity = len(sig.roles)
        if len(children) < min_arity or (len(children) > min_arity and not sig.variadic):
            raise ParseError(
                f"{name} takes {min_arity}{'+' if sig.variadic else ''} "
                f"arguments, got {len(children)}",
                _byte_offset(self.source, name_tok.pos),
                expected=f"{min_arity} arguments",
            )
        return apply(name, *children)

    def parse_arg(self, role: str) -> AstNode:
        tok = self.peek()
        if tok.kind == "word" and self.peek(1).kind == "symbol" and self.peek(1).value == "{":
            return self.parse_apply()
        if role == BOOL:
            self.fail("function application", tok)
        # A bare argument is a run of words joined by single spaces.
        words = []
        start = tok
        while self.peek().kind == "word":
            words.append(self.next().value.lower())
        if not words:
            self.fail("argument", start)
        text = " ".join(words)
        if role in (TABLE, ROW) and text == "all_rows":
            return keyword("all_rows")
        if role in (TABLE, ROW, COLUMN):
            return identifier(text)
        if role == NUM:
            if len(words) != 1 or not _NUMERIC_RE.match(text):
                self.fail("number", start)
            return number(text)
        # VALUE: numeric single tokens become numbers, all else strings.
        if len(words) == 1 and _NUMERIC_RE.match(text):
            return number(text)
        return string(text)


def parse_logic(
    source: str, functions: dict[str, LogicSignature] | None = None
) -> SemanticParse:
    """Parse a logic-form string into a SemanticParse."""
    funcs = DEFAULT_LOGIC_FUNCTIONS if functions is None else functions
    root = _LogicParser(source, funcs).parse_root()
    return SemanticParse(Dialect.LOGIC, root, source)


def _serialize_logic(node: AstNode) -> str:
    if node.is_leaf:
        return node.label
    args = " ; ".join(_serialize_logic(c) for c in node.children)
    return f"{node.label} {{ {args} }}"


def parse(source: str, dialect: Dialect) -> SemanticParse:
    """Dialect-dispatching convenience wrapper."""
    if dialect is Dialect.SQL:
        return parse_sql(source)
    return parse_logic(source)


def serialize(parse: SemanticParse) -> str:
    """Canonical formal string; re-parsing it reproduces the tree."""
    if parse.dialect is Dialect.SQL:
        return _serialize_sql(parse.root)
    return _serialize_logic(parse.root)


# ---------------------------------------------------------------------------
# Key-token extraction
# ---------------------------------------------------------------------------

ROLE_NUMBER = "number"
ROLE_STRING = "string"


@dataclass(frozen=True)
class KeyToken:
    path: Path
    role: str    # lexicon rule type value, or "number"/"string" for literals
    token: str   # formal token (node label)


@dataclass(frozen=True)
class KeyTokenSet:
    dialect: Dialect
    tokens: tuple[KeyToken, ...] = field(default_factory=tuple)

    @property
    def formal_tokens(self) -> tuple[str, ...]:
        return tuple(t.token for t in self.tokens)


def extract_key_tokens(parse: SemanticParse, lexicon) -> KeyTokenSet:
    """List lexicon-backed keywords plus every literal, in preorder.

    Identifiers (bare table/column names) are never key tokens, even when
    their spelling collides with a lexicon row.
    """
    found: list[KeyToken] = []
    for path, node in walk(parse.root):
        if node.kind is NodeKind.NUMBER:
            found.append(KeyToken(path, ROLE_NUMBER, node.label))
        elif node.kind is NodeKind.STRING:
            found.append(KeyToken(path, ROLE_STRING, node.label))
        elif node.kind in (NodeKind.APPLY, NodeKind.KEYWORD):
            entry = lexicon.lookup_formal(parse.dialect, node.label)
            if entry is not None:
                found.append(KeyToken(path, entry.rule_type.value, node.label))
    return KeyTokenSet(parse.dialect, tuple(found))
