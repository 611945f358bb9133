"""Keyword lexicon: formal tokens (SQL / logic) aligned with NL variant sets.

One table drives the bidirectional consistency metric, the perturbation
rules (via swap groups and negation pairs) and the linearizer (via the
linear_phrase column).

File format (UTF-8, tab-separated, ``#`` comments):

    rule_type<TAB>sql_token<TAB>logic_token<TAB>linear_phrase<TAB>variant[,variant...]

``-`` marks an absent formal token or phrase.  A ``~`` prefix on the
rule_type marks a row added beyond the published rule table; a ``~`` prefix
on a single variant marks that variant as an extension of a published row.
Directive lines declare perturbation rules:

    @swap<TAB>token,token[,token...]      tokens interchangeable under perturbation
    @negate<TAB>token,token               negation toggle pair (plain, negated)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

from .errors import DuplicateTokenError, LexiconFormatError
from .parse_core import Dialect

DEFAULT_LEXICON_ENV = "LOGICHECK_LEXICON"


class RuleType(Enum):
    NEGATION = "negation"
    OPERATOR = "operator"
    SPECIAL = "special"


def canon(token: str) -> str:
    """Canonical formal-token form: lowercase, spaces folded to underscores."""
    return token.strip().lower().replace(" ", "_")


@dataclass(frozen=True)
class LexiconEntry:
    rule_type: RuleType
    sql_token: str | None
    logic_token: str | None
    linear_phrase: str
    nl_variants: tuple[str, ...]
    extended: bool = False
    extended_variants: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.sql_token is None and self.logic_token is None:
            raise LexiconFormatError("entry needs at least one formal token")
        if not self.nl_variants:
            raise LexiconFormatError("entry needs at least one NL variant")
        if len(set(self.nl_variants)) != len(self.nl_variants):
            raise LexiconFormatError("duplicate variant within a row")
        for v in self.nl_variants:
            if v != v.lower():
                raise LexiconFormatError(f"variant {v!r} must be lowercase")

    def formal_token(self, dialect: Dialect) -> str | None:
        return self.sql_token if dialect is Dialect.SQL else self.logic_token

    @property
    def verbatim_variants(self) -> tuple[str, ...]:
        if self.extended:
            return ()
        return tuple(v for v in self.nl_variants if v not in self.extended_variants)


class NlSpan(NamedTuple):
    start: int           # token index, inclusive
    end: int             # token index, exclusive
    phrase: str
    entry: LexiconEntry  # first matching entry in lexicon order


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[LexiconEntry, ...]
    swap_groups: tuple[frozenset[str], ...] = ()
    negation_pairs: tuple[tuple[str, str], ...] = ()
    _by_sql: dict = field(default_factory=dict, repr=False, compare=False)
    _by_logic: dict = field(default_factory=dict, repr=False, compare=False)
    _by_variant: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for entry in self.entries:
            for token, index in (
                (entry.sql_token, self._by_sql),
                (entry.logic_token, self._by_logic),
            ):
                if token is None:
                    continue
                key = canon(token)
                if key in index:
                    raise DuplicateTokenError(f"duplicate formal token {token!r}")
                index[key] = entry
            for variant in entry.nl_variants:
                self._by_variant.setdefault(variant, []).append(entry)
        known = set(self._by_sql) | set(self._by_logic)
        for group in self.swap_groups:
            for member in group:
                if canon(member) not in known:
                    raise LexiconFormatError(
                        f"swap group member {member!r} has no lexicon entry"
                    )

    # -- queries -----------------------------------------------------------
    def lookup_formal(self, dialect: Dialect, token: str) -> LexiconEntry | None:
        index = self._by_sql if dialect is Dialect.SQL else self._by_logic
        return index.get(canon(token))

    def entries_for_variant(self, phrase: str) -> tuple[LexiconEntry, ...]:
        return tuple(self._by_variant.get(phrase, ()))

    def match_nl(self, utterance_tokens: list[str] | tuple[str, ...]) -> list[NlSpan]:
        """Maximal variant spans, longest-first at each position, no overlap."""
        max_len = max((len(v.split()) for v in self._by_variant), default=0)
        spans: list[NlSpan] = []
        i = 0
        n = len(utterance_tokens)
        while i < n:
            hit = None
            for length in range(min(max_len, n - i), 0, -1):
                phrase = " ".join(utterance_tokens[i : i + length])
                entries = self._by_variant.get(phrase)
                if entries:
                    hit = NlSpan(i, i + length, phrase, entries[0])
                    break
            if hit is None:
                i += 1
            else:
                spans.append(hit)
                i = hit.end
        return spans

    def swap_partners(self, token: str) -> tuple[str, ...]:
        """Other members of the swap group containing token, sorted."""
        key = canon(token)
        partners: set[str] = set()
        for group in self.swap_groups:
            if key in {canon(m) for m in group}:
                partners.update(m for m in group if canon(m) != key)
        return tuple(sorted(partners, key=canon))

    def negation_partner(self, token: str) -> str | None:
        key = canon(token)
        for plain, negated in self.negation_pairs:
            if canon(plain) == key:
                return negated
            if canon(negated) == key:
                return plain
        return None


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------

def _parse_cell(cell: str) -> str | None:
    cell = cell.strip()
    return None if cell in ("", "-") else cell


def parse_lexicon_text(text: str) -> Lexicon:
    entries: list[LexiconEntry] = []
    swap_groups: list[frozenset[str]] = []
    negation_pairs: list[tuple[str, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if cols[0] == "@swap":
            if len(cols) != 2:
                raise LexiconFormatError("@swap needs one token list", line_no)
            members = [t.strip() for t in cols[1].split(",") if t.strip()]
            if len(members) < 2:
                raise LexiconFormatError("@swap needs at least two tokens", line_no)
            swap_groups.append(frozenset(members))
            continue
        if cols[0] == "@negate":
            if len(cols) != 2:
                raise LexiconFormatError("@negate needs one token pair", line_no)
            members = [t.strip() for t in cols[1].split(",") if t.strip()]
            if len(members) != 2:
                raise LexiconFormatError("@negate needs exactly two tokens", line_no)
            negation_pairs.append((members[0], members[1]))
            continue
        if len(cols) != 5:
            raise LexiconFormatError(
                f"expected 5 tab-separated columns, got {len(cols)}", line_no
            )
        rule_raw = cols[0].strip()
        extended = rule_raw.startswith("~")
        rule_raw = rule_raw.lstrip("~").strip().lower()
        try:
            rule_type = RuleType(rule_raw)
        except ValueError:
            raise LexiconFormatError(f"unknown rule type {cols[0].strip()!r}", line_no)
        variants: list[str] = []
        ext_variants: set[str] = set()
        for item in cols[4].split(","):
            item = item.strip()
            if not item:
                continue
            if item.startswith("~"):
                item = item[1:].strip()
                ext_variants.add(item)
            variants.append(item)
        try:
            entries.append(
                LexiconEntry(
                    rule_type=rule_type,
                    sql_token=_parse_cell(cols[1]),
                    logic_token=_parse_cell(cols[2]),
                    linear_phrase=_parse_cell(cols[3]) or "",
                    nl_variants=tuple(variants),
                    extended=extended,
                    extended_variants=frozenset(ext_variants),
                )
            )
        except LexiconFormatError as exc:
            raise LexiconFormatError(str(exc), line_no) from None
    return Lexicon(tuple(entries), tuple(swap_groups), tuple(negation_pairs))


def load_lexicon(path: str | os.PathLike | None = None) -> Lexicon:
    """Load a lexicon file; with no path, the built-in default.

    The LOGICHECK_LEXICON environment variable overrides the default path.
    """
    if path is None:
        env = os.environ.get(DEFAULT_LEXICON_ENV)
        if env:
            path = env
        else:
            return default_lexicon()
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon_text(fh.read())


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = (
        resources.files("logicheck").joinpath("data/default_lexicon.tsv").read_text("utf-8")
    )
    return parse_lexicon_text(text)


def save_lexicon(lexicon: Lexicon, path: str | os.PathLike) -> None:
    lines = ["# logicheck lexicon"]
    for e in lexicon.entries:
        rule = ("~" if e.extended else "") + e.rule_type.value
        variants = ",".join(
            ("~" + v if (not e.extended and v in e.extended_variants) else v)
            for v in e.nl_variants
        )
        lines.append(
            "\t".join(
                [
                    rule,
                    e.sql_token or "-",
                    e.logic_token or "-",
                    e.linear_phrase or "-",
                    variants,
                ]
            )
        )
    for group in lexicon.swap_groups:
        lines.append("@swap\t" + ",".join(sorted(group, key=canon)))
    for plain, negated in lexicon.negation_pairs:
        lines.append(f"@negate\t{plain},{negated}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
