"""Build generator/evaluator training sets from seeds and perturbations.

Each accepted perturbation of a seed contributes one positive pair
(perturbed logic, perturbed text) and two crossover negatives
(seed logic, perturbed text) and (perturbed logic, seed text), so N seeds
with P_i accepted perturbations compose into N + 3 * sum(P_i) records.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from enum import Enum

from .blec import Utterance
from .errors import (
    EmptyBeamError,
    InputError,
    LexiconFormatError,
    MissingScoreError,
    UnknownSeedError,
)
from .parse_core import Dialect, SemanticParse, parse, serialize
from .perturb import Perturbation


class Label(Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


class Provenance(Enum):
    SEED = "seed"
    AUG_POSITIVE = "aug_positive"
    CROSS_NEG_SEED_LOGIC = "cross_neg_seed_logic"
    CROSS_NEG_PERTURBED_LOGIC = "cross_neg_perturbed_logic"


@dataclass(frozen=True)
class LabeledPair:
    parse: SemanticParse
    text: Utterance
    label: Label
    provenance: Provenance
    evaluator_score: float | None = None
    seed_id: str | None = None

    def __post_init__(self):
        if self.evaluator_score is not None and not (0.0 <= self.evaluator_score <= 1.0):
            raise MissingScoreError(
                f"evaluator score {self.evaluator_score} outside [0, 1]"
            )


@dataclass(frozen=True)
class BeamCandidate:
    text: Utterance
    generator_score: float
    evaluator_score: float | None = None


# A perturbed entry is (Perturbation, Utterance) or (Perturbation, Utterance,
# evaluator score); the score is required when composing generator sets.
PerturbedEntry = tuple


def _unpack(entry: PerturbedEntry) -> tuple[Perturbation, Utterance, float | None]:
    if len(entry) == 2:
        return entry[0], entry[1], None
    return entry[0], entry[1], entry[2]


def _dedup(pairs: list[LabeledPair]) -> list[LabeledPair]:
    """Merge byte-identical (logic, text) records.

    Keeps the max evaluator score; on a label conflict the inconsistent
    record wins, since crossover negatives are correct by construction.
    """
    merged: dict[tuple[str, str], LabeledPair] = {}
    order: list[tuple[str, str]] = []
    for pair in pairs:
        key = (serialize(pair.parse), pair.text.raw)
        if key not in merged:
            merged[key] = pair
            order.append(key)
            continue
        old = merged[key]
        keep = old
        if old.label is Label.CONSISTENT and pair.label is Label.INCONSISTENT:
            keep = pair
        scores = [s for s in (old.evaluator_score, pair.evaluator_score) if s is not None]
        if scores:
            keep = replace(keep, evaluator_score=max(scores))
        merged[key] = keep
    return [merged[key] for key in order]


def merge_pairs(*pair_lists: list[LabeledPair]) -> list[LabeledPair]:
    """Concatenate pair lists and merge duplicates (see _dedup)."""
    merged: list[LabeledPair] = []
    for pairs in pair_lists:
        merged.extend(pairs)
    return _dedup(merged)


def compose_evaluator_set(
    seeds: list[LabeledPair], perturbed: list[PerturbedEntry]
) -> list[LabeledPair]:
    """Seeds plus augmented positives plus both crossover negative kinds."""
    by_seed: dict[str, LabeledPair] = {}
    for seed in seeds:
        if seed.seed_id is not None:
            by_seed[seed.seed_id] = seed
    grouped: dict[str, list[tuple[Perturbation, Utterance, float | None]]] = {}
    for entry in perturbed:
        p, text, score = _unpack(entry)
        if p.seed_id not in by_seed:
            raise UnknownSeedError(f"perturbation references unknown seed {p.seed_id!r}")
        grouped.setdefault(p.seed_id, []).append((p, text, score))

    out: list[LabeledPair] = []
    for seed in seeds:
        out.append(replace(seed, label=Label.CONSISTENT, provenance=Provenance.SEED))
        items = grouped.get(seed.seed_id or "", [])
        for p, text, score in items:
            out.append(
                LabeledPair(p.result, text, Label.CONSISTENT,
                            Provenance.AUG_POSITIVE, score, p.seed_id)
            )
        for p, text, _ in items:
            out.append(
                LabeledPair(seed.parse, text, Label.INCONSISTENT,
                            Provenance.CROSS_NEG_SEED_LOGIC, None, p.seed_id)
            )
        for p, _, _ in items:
            out.append(
                LabeledPair(p.result, seed.text, Label.INCONSISTENT,
                            Provenance.CROSS_NEG_PERTURBED_LOGIC, None, p.seed_id)
            )
    return _dedup(out)


def compose_generator_set(
    seeds: list[LabeledPair],
    perturbed: list[PerturbedEntry],
    threshold: float = 0.5,
) -> list[LabeledPair]:
    """Seeds plus augmented positives whose evaluator score clears threshold."""
    out = [replace(s, label=Label.CONSISTENT, provenance=Provenance.SEED) for s in seeds]
    for entry in perturbed:
        p, text, score = _unpack(entry)
        if score is None:
            raise MissingScoreError(
                f"perturbed pair for seed {p.seed_id!r} lacks an evaluator score"
            )
        if score >= threshold:
            out.append(
                LabeledPair(p.result, text, Label.CONSISTENT,
                            Provenance.AUG_POSITIVE, score, p.seed_id)
            )
    return _dedup(out)


def rerank_beam(candidates: list[BeamCandidate]) -> BeamCandidate:
    """Argmax by (evaluator score, generator score), stable on full ties."""
    if not candidates:
        raise EmptyBeamError("no candidates to rerank")
    for c in candidates:
        if c.evaluator_score is None:
            raise MissingScoreError("beam candidate lacks an evaluator score")
    best = max(
        enumerate(candidates),
        key=lambda item: (item[1].evaluator_score, item[1].generator_score, -item[0]),
    )
    return best[1]


# ---------------------------------------------------------------------------
# Dataset records: UTF-8 line-delimited JSON, one pair per line
# ---------------------------------------------------------------------------


def pair_to_record(pair: LabeledPair) -> dict:
    record = {
        "logic": serialize(pair.parse),
        "text": pair.text.raw,
        "label": pair.label.value,
        "provenance": pair.provenance.value,
    }
    if pair.evaluator_score is not None:
        record["score"] = pair.evaluator_score
    return record


def record_to_pair(record: dict, dialect: Dialect, seed_id: str | None = None) -> LabeledPair:
    if "logic" not in record or "text" not in record:
        raise LexiconFormatError("dataset record needs 'logic' and 'text' fields")
    return LabeledPair(
        parse=parse(record["logic"], dialect),
        text=Utterance.from_raw(record["text"]),
        label=Label(record.get("label", "consistent")),
        provenance=Provenance(record.get("provenance", "seed")),
        evaluator_score=record.get("score"),
        seed_id=seed_id if seed_id is not None else record.get("seed_id"),
    )


def dump_pairs(pairs: list[LabeledPair]) -> str:
    lines = [
        json.dumps(pair_to_record(p), ensure_ascii=False, sort_keys=True)
        for p in pairs
    ]
    return "".join(line + "\n" for line in lines)


def write_pairs(path: str | os.PathLike, pairs: list[LabeledPair]) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dump_pairs(pairs))
    os.replace(tmp, path)


def read_pairs(path: str | os.PathLike, dialect: Dialect) -> list[LabeledPair]:
    """Load dataset records; seeds get positional ids s000, s001, ..."""
    pairs: list[LabeledPair] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LexiconFormatError(f"bad JSON record: {exc}", i + 1) from None
            try:
                pairs.append(record_to_pair(record, dialect, seed_id=f"s{len(pairs):04d}"))
            except InputError as exc:
                raise LexiconFormatError(f"bad record: {exc}", i + 1) from None
    return pairs
