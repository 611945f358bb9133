"""Bidirectional key-token consistency matching between parses and text.

A (parse, text) pair is consistent iff every key token of the parse finds a
natural-language counterpart in the text (forward pass) and every lexicon
span of the text finds a formal counterpart in the parse (backward pass).
Matches are one-to-one: a formal token consumes at most one text span and
vice versa, assigned greedily left to right.

Also houses the corpus accuracy score and the two agreement statistics used
to validate the metric (Pearson correlation, Cohen's kappa).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .errors import (
    DegenerateInputError,
    EmptyCorpusError,
    LengthMismatchError,
)
from .lexicon import Lexicon, LexiconEntry
from .parse_core import (
    ROLE_NUMBER,
    ROLE_STRING,
    SemanticParse,
    extract_key_tokens,
)

# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_POSSESSIVE_RE = re.compile(r"'s\b")
_TOKEN_RE = re.compile(r"(?<!\w)-\d+(?:\.\d+)?|\d+\.\d+|\w+")


def tokenize(raw: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace/punctuation, strip possessive 's.

    Digits stay glued ("100", "3.5" and standalone "-1" are single tokens).
    """
    text = raw.lower().replace("’", "'")
    text = _POSSESSIVE_RE.sub("", text)
    return tuple(_TOKEN_RE.findall(text))


@dataclass(frozen=True)
class Utterance:
    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_raw(cls, raw: str) -> "Utterance":
        return cls(raw, tokenize(raw))


_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty"
).split()
_TENS = {30: "thirty", 40: "forty", 50: "fifty", 60: "sixty",
         70: "seventy", 80: "eighty", 90: "ninety", 100: "one hundred"}


def number_word(label: str) -> tuple[str, ...] | None:
    """English word form for small integers, as a token sequence."""
    try:
        value = float(label)
    except ValueError:
        return None
    if value != int(value) or value < 0:
        return None
    value = int(value)
    if value <= 20:
        return (_ONES[value],)
    if value in _TENS:
        return tuple(_TENS[value].split())
    return None


# ---------------------------------------------------------------------------
# Pair matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchReport:
    forward_misses: tuple[str, ...]
    backward_misses: tuple[tuple[str, LexiconEntry], ...]
    matched: tuple[tuple[str, str], ...]  # (formal token, NL span text)

    @property
    def consistent(self) -> bool:
        return not self.forward_misses and not self.backward_misses


def _find_unclaimed(tokens, claimed, targets: list[tuple[str, ...]]) -> tuple[int, int] | None:
    """Leftmost unclaimed contiguous occurrence of any target sequence."""
    best: tuple[int, int] | None = None
    for seq in targets:
        width = len(seq)
        if width == 0:
            continue
        for start in range(0, len(tokens) - width + 1):
            if best is not None and start >= best[0]:
                break
            if tuple(tokens[start : start + width]) == seq and not any(
                claimed[start : start + width]
            ):
                best = (start, start + width)
                break
    return best


def match_pair(parse: SemanticParse, text: Utterance, lexicon: Lexicon) -> MatchReport:
    """Bidirectional one-to-one key-token matching for one pair."""
    key_tokens = extract_key_tokens(parse, lexicon)
    spans = lexicon.match_nl(list(text.tokens))
    claimed = [False] * len(text.tokens)
    span_claimed = [False] * len(spans)
    forward_misses: list[str] = []
    matched: list[tuple[str, str]] = []

    def claim(start: int, end: int):
        for i in range(start, end):
            claimed[i] = True

    for kt in key_tokens.tokens:
        if kt.role == ROLE_NUMBER:
            targets = [(kt.token,)]
            word = number_word(kt.token)
            if word is not None:
                targets.append(word)
            hit = _find_unclaimed(text.tokens, claimed, targets)
            if hit is None:
                forward_misses.append(kt.token)
            else:
                claim(*hit)
                matched.append((kt.token, " ".join(text.tokens[hit[0] : hit[1]])))
        elif kt.role == ROLE_STRING:
            literal = tokenize(kt.token)
            hit = _find_unclaimed(text.tokens, claimed, [literal]) if literal else None
            if hit is None:
                forward_misses.append(kt.token)
            else:
                claim(*hit)
                matched.append((kt.token, " ".join(literal)))
        else:
            entry = lexicon.lookup_formal(parse.dialect, kt.token)
            hit_idx = None
            for idx, span in enumerate(spans):
                if span_claimed[idx] or any(claimed[span.start : span.end]):
                    continue
                if entry in lexicon.entries_for_variant(span.phrase):
                    hit_idx = idx
                    break
            if hit_idx is None:
                forward_misses.append(kt.token)
            else:
                span = spans[hit_idx]
                span_claimed[hit_idx] = True
                claim(span.start, span.end)
                matched.append((kt.token, span.phrase))

    backward_misses = [
        (span.phrase, span.entry)
        for idx, span in enumerate(spans)
        # Spans swallowed by a literal/number claim count as matched.
        if not span_claimed[idx] and not any(claimed[span.start : span.end])
    ]
    return MatchReport(tuple(forward_misses), tuple(backward_misses), tuple(matched))


@dataclass(frozen=True)
class CorpusScore:
    n_pairs: int
    n_consistent: int

    @property
    def blec(self) -> float:
        return self.n_consistent / self.n_pairs

    def report_line(self) -> str:
        return f"BLEC {self.n_consistent}/{self.n_pairs} = {self.blec:.4f}"


def score_corpus(
    pairs: list[tuple[SemanticParse, Utterance]], lexicon: Lexicon
) -> CorpusScore:
    """Mean per-pair consistency over a corpus."""
    if not pairs:
        raise EmptyCorpusError("cannot score an empty corpus")
    n_consistent = sum(
        1 for parse, text in pairs if match_pair(parse, text, lexicon).consistent
    )
    return CorpusScore(len(pairs), n_consistent)


# ---------------------------------------------------------------------------
# Agreement statistics
# ---------------------------------------------------------------------------


def pearson(xs, ys) -> tuple[float, float]:
    """Pearson r with a two-sided p-value from the t distribution (n-2 df)."""
    if len(xs) != len(ys):
        raise LengthMismatchError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise DegenerateInputError("need at least 3 points")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    denom = float(np.sqrt((dx * dx).sum() * (dy * dy).sum()))
    if denom == 0.0:
        raise DegenerateInputError("zero variance in a series")
    r = float((dx * dy).sum() / denom)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * _scipy_stats.t.sf(abs(t), n - 2))
    return r, p


def cohen_kappa(a, b) -> float:
    """Cohen's kappa for two binary label vectors."""
    if len(a) != len(b):
        raise LengthMismatchError(f"label lengths differ: {len(a)} vs {len(b)}")
    if not a:
        raise DegenerateInputError("need at least 1 label")
    labels = sorted(set(a) | set(b), key=repr)
    if len(labels) > 2:
        raise DegenerateInputError(f"labels are not binary: {labels!r}")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_e = sum(
        (sum(1 for x in a if x == lab) / n) * (sum(1 for y in b if y == lab) / n)
        for lab in labels
    )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)
