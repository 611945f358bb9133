"""The iterative perturb -> generate -> evaluate -> compose loop.

Each iteration enumerates perturbations for every seed, asks the generator
worker for beam candidates over the linearized perturbed parses, scores the
candidates with the evaluator worker, reranks, composes evaluator and
generator sets, and persists them.  Persistence happens only after every
worker response has arrived, so an aborted iteration leaves the datasets of
the previous iteration untouched.

The builtin workers are deterministic desk-scale stand-ins: a template
realizer for the generator and the bidirectional matcher as the evaluator.
"""

from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass, replace as _dc_replace
from pathlib import Path

from .blec import CorpusScore, Utterance, match_pair, score_corpus
from .compose import (
    BeamCandidate,
    Label,
    LabeledPair,
    Provenance,
    compose_evaluator_set,
    compose_generator_set,
    merge_pairs,
    read_pairs,
    rerank_beam,
    write_pairs,
)
from .errors import ConfigError
from .lexicon import Lexicon, load_lexicon
from .linearize import CONTROL_TOKENS, LinearForm, Templates, linearize, load_templates
from .parse_core import Dialect, NodeKind, SemanticParse, parse, serialize, walk
from .perturb import PerturbConfig, enumerate_perturbations
from .workers import EVALUATE, GENERATE, Worker, make_worker


@dataclass(frozen=True)
class SnowballConfig:
    iterations: int = 5
    beam_size: int = 4
    threshold: float = 0.5
    rng_seed: int = 0
    dialect: Dialect = Dialect.SQL
    seeds_path: str = ""
    out_dir: str = "snowball_out"
    lexicon_path: str | None = None
    templates_path: str | None = None
    generator_worker: str = "builtin"
    evaluator_worker: str = "builtin"
    max_per_seed: int = 8
    entity_pool: tuple[str, ...] = ()
    phrase_pool: tuple[str, ...] = ()
    in_flight: int = 8
    timeout: float = 30.0
    refilter_cumulative: bool = False


_CONFIG_PARSERS = {
    "iterations": int,
    "beam_size": int,
    "threshold": float,
    "rng_seed": int,
    "dialect": lambda v: Dialect(v.lower()),
    "seeds": str,
    "out": str,
    "lexicon": str,
    "templates": str,
    "generator_worker": str,
    "evaluator_worker": str,
    "max_per_seed": int,
    "entity_pool": lambda v: tuple(t.strip() for t in v.split(",") if t.strip()),
    "phrase_pool": lambda v: tuple(t.strip() for t in v.split(",") if t.strip()),
    "in_flight": int,
    "timeout": float,
    "refilter_cumulative": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}
_CONFIG_FIELDS = {
    "seeds": "seeds_path",
    "out": "out_dir",
    "lexicon": "lexicon_path",
    "templates": "templates_path",
}


def load_config(path: str | os.PathLike, **overrides) -> SnowballConfig:
    """Read a key=value run-config file."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {line_no}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in _CONFIG_PARSERS:
                raise ConfigError(f"line {line_no}: unknown config key {key!r}")
            try:
                parsed = _CONFIG_PARSERS[key](value.strip())
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"line {line_no}: bad value for {key}: {exc}") from None
            values[_CONFIG_FIELDS.get(key, key)] = parsed
    values.update({k: v for k, v in overrides.items() if v is not None})
    config = SnowballConfig(**values)
    if config.iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if config.beam_size < 1:
        raise ConfigError("beam_size must be >= 1")
    return config


@dataclass(frozen=True)
class IterationState:
    index: int
    augmented: tuple[LabeledPair, ...]       # cumulative accepted positives
    metrics: CorpusScore | None              # BLEC of this iteration's picks
    evaluator_set: tuple[LabeledPair, ...] = ()
    generator_set: tuple[LabeledPair, ...] = ()


# ---------------------------------------------------------------------------
# Builtin workers
# ---------------------------------------------------------------------------

# Each rewrite variant carries exactly one NL variant of the phrase's lexicon
# row (or none, for purely structural phrases), so realized text stays
# consistent with the source parse under bidirectional matching.
_REWRITES: list[tuple[tuple[str, ...], list[str]]] = [
    ("not equal to", ["not equal to", "not equals"]),
    ("not written as", ["not written as"]),
    ("does not match", ["does not match"]),
    ("does not read", ["does not read"]),
    ("the number of", ["how many", "the total", "the number of"]),
    ("the maximum of", ["the largest", "the greatest", "the maximum"]),
    ("the minimum of", ["the smallest", "the minimum", "the lowest"]),
    ("the average of", ["the average", "the mean"]),
    ("the sum of", ["the sum of", "the overall sum of"]),
    ("the majority of", ["the majority of", "most of the"]),
    ("the difference of", ["the difference of", "the gap between"]),
    ("in ascending order", ["in ascending order", "ascending"]),
    ("in descending order", ["in descending order", "descending"]),
    ("that belongs to", ["of", "from", "in"]),
    ("that have", ["where", "with", "whose"]),
    ("grouped by", ["for each", "per", "grouped by"]),
    ("ordered by", ["sorted by", "ranked by", "ordered by"]),
    ("limited to", ["limited to", "capped at"]),
    ("all items", ["items", "rows", "records", "entries"]),
    ("equal to", ["equal to", "equals"]),
    ("larger than", ["larger than", "greater than", "more than"]),
    ("smaller than", ["smaller than", "less than", "fewer than"]),
    ("written as", ["written as", "spelled as"]),
    ("joined on", ["joined on", "combined on"]),
    ("roughly", ["roughly", "approximately"]),
]
_REWRITES = [(tuple(pat.split()), variants) for pat, variants in _REWRITES]
_REWRITES.sort(key=lambda item: -len(item[0]))

_SQL_SHELLS = ["what is", "show", "list", "find", "give", "display", "report", "state"]
_LOGIC_SHELLS = [
    "verify that", "confirm that", "check that", "it holds that",
    "note that", "observe that", "record that", "see that",
]


def _realize(tokens: list[str], rotation: int) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(tokens):
        for pattern, variants in _REWRITES:
            if tuple(tokens[i : i + len(pattern)]) == pattern:
                out.extend(variants[rotation % len(variants)].split())
                i += len(pattern)
                break
        else:
            out.append(tokens[i])
            i += 1
    return out


def builtin_template_generator(
    linear: LinearForm, beam_size: int, rng_seed: int = 0
) -> list[BeamCandidate]:
    """Deterministic template realization of a linear form.

    Candidate k rotates every phrase's synonym list by rng_seed + k and has
    generator_score -k; candidates are pairwise distinct.
    """
    body_tokens = [t for t in linear.text.split() if t not in ("(", ")", ",")]
    shells = _SQL_SHELLS if linear.dialect is Dialect.SQL else _LOGIC_SHELLS
    candidates: list[BeamCandidate] = []
    seen: set[str] = set()
    for k in range(beam_size):
        rotation = rng_seed + k
        body = _realize(body_tokens, rotation)
        if linear.dialect is Dialect.SQL and body[:2] == ["how", "many"]:
            text = " ".join(body) + " are there"
        else:
            text = shells[rotation % len(shells)] + " " + " ".join(body)
        while text in seen:  # pad to keep beam candidates distinct
            text += " please"
        seen.add(text)
        candidates.append(BeamCandidate(Utterance.from_raw(text), float(-k)))
    return candidates


def builtin_blec_evaluator(parse_obj: SemanticParse, text: Utterance, lexicon: Lexicon) -> float:
    """Consistency score from the bidirectional matcher: 1.0 or 0.0."""
    return 1.0 if match_pair(parse_obj, text, lexicon).consistent else 0.0


def make_builtin_generate_handler(rng_seed: int):
    def handle(request: dict) -> dict:
        control = request.get("control", CONTROL_TOKENS[Dialect.SQL])
        dialect = Dialect.SQL if control == CONTROL_TOKENS[Dialect.SQL] else Dialect.LOGIC
        linear = LinearForm(request["input"], dialect, control)
        candidates = builtin_template_generator(linear, int(request["beam"]), rng_seed)
        return {
            "id": request["id"],
            "candidates": [
                {"text": c.text.raw, "score": c.generator_score} for c in candidates
            ],
        }

    return handle


def make_builtin_evaluate_handler(dialect: Dialect, lexicon: Lexicon):
    def handle(request: dict) -> dict:
        parsed = parse(request["logic"], dialect)
        gamma = builtin_blec_evaluator(parsed, Utterance.from_raw(request["text"]), lexicon)
        return {"id": request["id"], "gamma": gamma}

    return handle


# ---------------------------------------------------------------------------
# Iteration loop
# ---------------------------------------------------------------------------


def harvest_literals(seeds: list[LabeledPair]) -> tuple[str, ...]:
    """Sorted string literals across the seed parses (default entity pool)."""
    pool = set()
    for seed in seeds:
        for _, node in walk(seed.parse.root):
            if node.kind is NodeKind.STRING:
                pool.add(node.label)
    return tuple(sorted(pool))


def _make_workers(config: SnowballConfig, lexicon: Lexicon) -> tuple[Worker, Worker]:
    generator = make_worker(
        config.generator_worker,
        timeout=config.timeout,
        in_flight=config.in_flight,
        builtin_handler=make_builtin_generate_handler(config.rng_seed),
    )
    evaluator = make_worker(
        config.evaluator_worker,
        timeout=config.timeout,
        in_flight=config.in_flight,
        builtin_handler=make_builtin_evaluate_handler(config.dialect, lexicon),
    )
    return generator, evaluator


def run_iteration(
    state: IterationState | None,
    seeds: list[LabeledPair],
    config: SnowballConfig,
    *,
    lexicon: Lexicon | None = None,
    templates: Templates | None = None,
    generator: Worker | None = None,
    evaluator: Worker | None = None,
) -> IterationState:
    """One Snowball round; persists per-iteration and cumulative datasets."""
    index = 1 if state is None else state.index + 1
    lexicon = lexicon if lexicon is not None else load_lexicon(config.lexicon_path)
    templates = templates if templates is not None else load_templates(config.templates_path)
    own_workers = generator is None and evaluator is None
    if own_workers:
        generator, evaluator = _make_workers(config, lexicon)
    elif generator is None or evaluator is None:
        raise ConfigError("pass both workers or neither")

    pconfig = PerturbConfig(
        max_per_seed=config.max_per_seed,
        entity_pool=config.entity_pool or harvest_literals(seeds),
        phrase_pool=config.phrase_pool or harvest_literals(seeds),
    )
    try:
        perturbations = []
        for seed in seeds:
            perturbations.extend(
                enumerate_perturbations(seed.parse, lexicon, pconfig, seed.seed_id or "seed")
            )

        gen_requests = [
            {
                "id": i,
                "op": GENERATE,
                "input": linearize(p.result, lexicon, templates).text,
                "control": CONTROL_TOKENS[config.dialect],
                "beam": config.beam_size,
            }
            for i, p in enumerate(perturbations)
        ]
        gen_responses = generator.request_many(gen_requests)

        beams: list[list[BeamCandidate]] = []
        for i in range(len(perturbations)):
            beams.append(
                [
                    BeamCandidate(Utterance.from_raw(c["text"]), float(c["score"]))
                    for c in gen_responses[i]["candidates"]
                ]
            )

        eval_requests = []
        coords = []
        for bi, candidates in enumerate(beams):
            for ci, candidate in enumerate(candidates):
                eval_requests.append(
                    {
                        "id": len(eval_requests),
                        "op": EVALUATE,
                        "logic": serialize(perturbations[bi].result),
                        "text": candidate.text.raw,
                    }
                )
                coords.append((bi, ci))
        eval_responses = evaluator.request_many(eval_requests)
        for rid, (bi, ci) in enumerate(coords):
            gamma = float(eval_responses[rid]["gamma"])
            beams[bi][ci] = _dc_replace(beams[bi][ci], evaluator_score=gamma)

        perturbed_entries = []
        for p, candidates in zip(perturbations, beams):
            best = rerank_beam(candidates)
            perturbed_entries.append((p, best.text, best.evaluator_score))

        fresh_eval = compose_evaluator_set(seeds, perturbed_entries)
        fresh_gen = compose_generator_set(seeds, perturbed_entries, config.threshold)
        fresh_aug = [
            LabeledPair(p.result, text, Label.CONSISTENT, Provenance.AUG_POSITIVE,
                        score, p.seed_id)
            for p, text, score in perturbed_entries
        ]
        metrics = (
            score_corpus([(p.result, text) for p, text, _ in perturbed_entries], lexicon)
            if perturbed_entries
            else None
        )
    finally:
        if own_workers:
            generator.close()
            evaluator.close()

    prev_eval = list(state.evaluator_set) if state else []
    prev_gen = list(state.generator_set) if state else []
    prev_aug = list(state.augmented) if state else []
    cum_eval = merge_pairs(prev_eval, fresh_eval)
    cum_aug = merge_pairs(prev_aug, fresh_aug)
    if config.refilter_cumulative:
        seed_pairs = [
            _dc_replace(s, label=Label.CONSISTENT, provenance=Provenance.SEED)
            for s in seeds
        ]
        kept = [
            a for a in cum_aug
            if a.evaluator_score is not None and a.evaluator_score >= config.threshold
        ]
        cum_gen = merge_pairs(seed_pairs, kept)
    else:
        cum_gen = merge_pairs(prev_gen, fresh_gen)

    _persist_iteration(config, index, fresh_eval, fresh_gen, metrics, cum_eval, cum_gen)
    return IterationState(
        index=index,
        augmented=tuple(cum_aug),
        metrics=metrics,
        evaluator_set=tuple(cum_eval),
        generator_set=tuple(cum_gen),
    )


def _persist_iteration(config, index, fresh_eval, fresh_gen, metrics, cum_eval, cum_gen):
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    final_dir = out / f"iteration_{index}"
    tmp_dir = out / f".iteration_{index}.tmp"
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    if final_dir.exists():
        shutil.rmtree(final_dir)
    tmp_dir.mkdir()
    write_pairs(tmp_dir / "evaluator.jsonl", fresh_eval)
    write_pairs(tmp_dir / "generator.jsonl", fresh_gen)
    metrics_record = {
        "iteration": index,
        "n_pairs": metrics.n_pairs if metrics else 0,
        "n_consistent": metrics.n_consistent if metrics else 0,
        "blec": metrics.blec if metrics else None,
    }
    (tmp_dir / "metrics.json").write_text(
        json.dumps(metrics_record, sort_keys=True) + "\n", encoding="utf-8"
    )
    os.replace(tmp_dir, final_dir)
    write_pairs(out / "evaluator.jsonl", cum_eval)
    write_pairs(out / "generator.jsonl", cum_gen)


def run_snowball(config: SnowballConfig, echo=None) -> list[IterationState]:
    """Run the configured number of iterations over the seed file."""
    if config.iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if config.beam_size < 1:
        raise ConfigError("beam_size must be >= 1")
    if not config.seeds_path:
        raise ConfigError("config needs a seeds path")
    lexicon = load_lexicon(config.lexicon_path)
    templates = load_templates(config.templates_path)
    seeds = read_pairs(config.seeds_path, config.dialect)
    generator, evaluator = _make_workers(config, lexicon)
    states: list[IterationState] = []
    state: IterationState | None = None
    try:
        for _ in range(config.iterations):
            state = run_iteration(
                state, seeds, config,
                lexicon=lexicon, templates=templates,
                generator=generator, evaluator=evaluator,
            )
            states.append(state)
            if echo is not None and state.metrics is not None:
                echo(f"iteration {state.index}: {state.metrics.report_line()}")
    finally:
        generator.close()
        evaluator.close()
    return states
