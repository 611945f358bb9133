"""Command-line surface: parse, linearize, perturb, blec score, compose,
snowball run, split-spider.

Exit codes: 0 success, 1 input error, 2 worker/protocol error.
"""

from __future__ import annotations

import json
import random
import sys

import click

from . import snowball as snowball_mod
from .blec import Utterance, match_pair, score_corpus
from .compose import (
    compose_evaluator_set,
    compose_generator_set,
    read_pairs,
    record_to_pair,
    write_pairs,
)
from .errors import ConfigError, InputError, LexiconFormatError, WorkerError
from .lexicon import load_lexicon
from .linearize import linearize as linearize_op, load_templates
from .parse_core import (
    AstNode,
    Dialect,
    SemanticParse,
    parse as parse_op,
    serialize,
)
from .perturb import PerturbConfig, Perturbation, PerturbationKind, enumerate_perturbations


def _dialect(value: str) -> Dialect:
    try:
        return Dialect(value.lower())
    except ValueError:
        raise ConfigError(f"unknown dialect {value!r} (expected sql or logic)") from None


def _read_source(source: str | None, infile: str | None) -> str:
    if source is not None:
        return source
    if infile is not None:
        with open(infile, encoding="utf-8") as fh:
            return fh.read().strip()
    return sys.stdin.read().strip()


def _ast_dict(node: AstNode) -> dict:
    out = {"kind": node.kind.value, "label": node.label}
    if node.children:
        out["children"] = [_ast_dict(c) for c in node.children]
    return out


@click.group()
def cli():
    """Logic-consistency toolkit for semantic parses."""


@cli.command("parse")
@click.argument("source", required=False)
@click.option("--in", "infile", type=click.Path(exists=True), help="Read the source from a file.")
@click.option("--dialect", default="sql", show_default=True)
def parse_cmd(source, infile, dialect):
    """Parse a formal string and print its canonical form and AST."""
    parsed = parse_op(_read_source(source, infile), _dialect(dialect))
    click.echo(
        json.dumps(
            {
                "dialect": parsed.dialect.value,
                "canonical": serialize(parsed),
                "ast": _ast_dict(parsed.root),
            },
            indent=2,
            sort_keys=True,
        )
    )


@cli.command("linearize")
@click.argument("source", required=False)
@click.option("--in", "infile", type=click.Path(exists=True))
@click.option("--dialect", default="sql", show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Run-config file supplying lexicon/templates paths.")
def linearize_cmd(source, infile, dialect, lexicon_path, config_path):
    """Print the semi-textual linear form of a parse."""
    templates_path = None
    if config_path:
        config = snowball_mod.load_config(config_path)
        lexicon_path = lexicon_path or config.lexicon_path
        templates_path = config.templates_path
    parsed = parse_op(_read_source(source, infile), _dialect(dialect))
    lexicon = load_lexicon(lexicon_path)
    click.echo(linearize_op(parsed, lexicon, load_templates(templates_path)).text)


@cli.command("perturb")
@click.argument("source", required=False)
@click.option("--in", "infile", type=click.Path(exists=True))
@click.option("--dialect", default="sql", show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed-id", default="seed", show_default=True)
def perturb_cmd(source, infile, dialect, lexicon_path, config_path, seed_id):
    """Enumerate rule-based perturbations of a parse as JSON lines."""
    pconfig = PerturbConfig()
    if config_path:
        config = snowball_mod.load_config(config_path)
        lexicon_path = lexicon_path or config.lexicon_path
        pconfig = PerturbConfig(
            max_per_seed=config.max_per_seed,
            entity_pool=config.entity_pool,
            phrase_pool=config.phrase_pool,
        )
    parsed = parse_op(_read_source(source, infile), _dialect(dialect))
    lexicon = load_lexicon(lexicon_path)
    for p in enumerate_perturbations(parsed, lexicon, pconfig, seed_id):
        click.echo(
            json.dumps(
                {
                    "seed_id": p.seed_id,
                    "kind": p.kind.value,
                    "path": list(p.node_path),
                    "before": p.before,
                    "after": p.after,
                    "logic": p.result.source_text,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )


@cli.group("blec")
def blec_group():
    """Bidirectional logic-consistency scoring."""


@blec_group.command("score")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="Line-delimited JSON records with 'logic' and 'text' fields.")
@click.option("--dialect", default="sql", show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--diagnostics", "diagnostics_path", type=click.Path(),
              help="Write per-pair misses to this file.")
def blec_score_cmd(pairs_path, dialect, lexicon_path, diagnostics_path):
    """Score a pair file and print one BLEC summary line."""
    lexicon = load_lexicon(lexicon_path)
    pairs = read_pairs(pairs_path, _dialect(dialect))
    score = score_corpus([(p.parse, p.text) for p in pairs], lexicon)
    if diagnostics_path:
        with open(diagnostics_path, "w", encoding="utf-8") as fh:
            for i, pair in enumerate(pairs):
                report = match_pair(pair.parse, pair.text, lexicon)
                fh.write(
                    json.dumps(
                        {
                            "index": i,
                            "consistent": report.consistent,
                            "forward_misses": list(report.forward_misses),
                            "backward_misses": [
                                [phrase, entry.rule_type.value]
                                for phrase, entry in report.backward_misses
                            ],
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                    + "\n"
                )
    click.echo(score.report_line())


@cli.command("compose")
@click.option("--seeds", "seeds_path", required=True, type=click.Path(exists=True))
@click.option("--perturbed", "perturbed_path", required=True, type=click.Path(exists=True),
              help="JSON lines: seed_id, kind, path, before, after, logic, text[, score].")
@click.option("--dialect", default="sql", show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def compose_cmd(seeds_path, perturbed_path, dialect, threshold, out_dir):
    """Compose evaluator and generator sets from seeds and perturbed pairs."""
    import os

    dialect = _dialect(dialect)
    seeds = read_pairs(seeds_path, dialect)
    seed_map = {s.seed_id: s for s in seeds}
    perturbed = []
    have_scores = True
    with open(perturbed_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LexiconFormatError(f"bad JSON record: {exc}", line_no) from None
            seed = seed_map.get(record.get("seed_id"))
            perturbation = Perturbation(
                seed_id=record.get("seed_id", ""),
                kind=PerturbationKind(record.get("kind", "phrase_change")),
                node_path=tuple(record.get("path", ())),
                before=record.get("before", ""),
                after=record.get("after", ""),
                result=parse_op(record["logic"], dialect),
                seed_parse=seed.parse if seed else None,
            )
            score = record.get("score")
            if score is None:
                have_scores = False
            perturbed.append(
                (perturbation, Utterance.from_raw(record["text"]), score)
            )
    evaluator_set = compose_evaluator_set(seeds, perturbed)
    os.makedirs(out_dir, exist_ok=True)
    write_pairs(os.path.join(out_dir, "evaluator.jsonl"), evaluator_set)
    click.echo(f"evaluator set: {len(evaluator_set)} pairs")
    if have_scores:
        generator_set = compose_generator_set(seeds, perturbed, threshold)
        write_pairs(os.path.join(out_dir, "generator.jsonl"), generator_set)
        click.echo(f"generator set: {len(generator_set)} pairs")
    else:
        click.echo("generator set skipped: perturbed records carry no scores")


@cli.group("snowball")
def snowball_group():
    """Iterative generator/evaluator augmentation loop."""


@snowball_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True))
@click.option("--dialect", default=None)
@click.option("--out", "out_dir", type=click.Path())
def snowball_run_cmd(config_path, lexicon_path, dialect, out_dir):
    """Run the configured Snowball loop."""
    config = snowball_mod.load_config(
        config_path,
        lexicon_path=lexicon_path,
        dialect=_dialect(dialect) if dialect else None,
        out_dir=out_dir,
    )
    states = snowball_mod.run_snowball(config, echo=click.echo)
    final = states[-1]
    click.echo(
        f"done: {final.index} iteration(s), "
        f"evaluator set {len(final.evaluator_set)} pairs, "
        f"generator set {len(final.generator_set)} pairs -> {config.out_dir}"
    )


@cli.command("split-spider")
@click.option("--in", "infile", required=True, type=click.Path(exists=True),
              help="Spider-format JSON array with 'query' and 'question' fields.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--ratio", default=0.8, show_default=True, help="Training fraction.")
@click.option("--rng-seed", default=0, show_default=True)
def split_spider_cmd(infile, out_dir, ratio, rng_seed):
    """Shuffle and split a Spider training file into train/dev pair files."""
    import os

    with open(infile, encoding="utf-8") as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise ConfigError("expected a JSON array of Spider examples")
    pairs = []
    for i, record in enumerate(records):
        if "query" not in record or "question" not in record:
            raise ConfigError(f"record {i} lacks 'query'/'question' fields")
        pairs.append({"logic": record["query"], "text": record["question"],
                      "label": "consistent", "provenance": "seed"})
    rng = random.Random(rng_seed)
    rng.shuffle(pairs)
    cut = int(len(pairs) * ratio)
    os.makedirs(out_dir, exist_ok=True)
    for name, chunk in (("train.jsonl", pairs[:cut]), ("dev.jsonl", pairs[cut:])):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            for record in chunk:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    click.echo(f"train: {cut} pairs, dev: {len(pairs) - cut} pairs -> {out_dir}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.exceptions.ClickException as exc:
        exc.show()
        return 1
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except WorkerError as exc:
        click.echo(f"worker error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
