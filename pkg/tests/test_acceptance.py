"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.
"""

import json
import random
import sys
import time
from pathlib import Path

import pytest

import genparse
from conftest import WORKER_DIR, load_seed_pairs
from logicheck import (
    Dialect,
    SnowballConfig,
    Utterance,
    WorkerError,
    cohen_kappa,
    compose_evaluator_set,
    default_lexicon,
    enumerate_perturbations,
    linearize,
    match_pair,
    parse,
    parse_sql,
    pearson,
    run_snowball,
    serialize,
)
from logicheck.compose import Label, Provenance
from logicheck.perturb import PerturbConfig, PerturbationKind
from logicheck.snowball import builtin_template_generator, harvest_literals

PY = sys.executable
LEXICON = default_lexicon()

TABLE4_SQL = (
    'SELECT count(*), max(Percentage) FROM country_language '
    'WHERE LANGUAGE = "Spanish" GROUP BY CountryCode'
)
TABLE4_LINEAR = (
    "( the number of ( all items ) ) , ( the maximum of ( percentage ) ) "
    "that belongs to ( countrylanguage ) , that have ( ( language ) equal to "
    "( spanish ) ) , grouped by ( countrycode )"
)

SHIFT_KINDS = {
    PerturbationKind.AGGREGATOR_SWAP,
    PerturbationKind.OPERATOR_SWAP,
    PerturbationKind.NEGATION_TOGGLE,
    PerturbationKind.CONJUNCTION_SWAP,
}


def _report(name):
    print(f"\nACCEPTANCE PASS: {name}")


def test_linearization_fidelity():
    parsed = parse_sql(TABLE4_SQL)
    assert linearize(parsed, LEXICON).text == TABLE4_LINEAR  # byte-for-byte
    best = min(
        _timed(lambda: linearize(parsed, LEXICON)) for _ in range(5)
    )
    assert best < 1e-3, f"linearization took {best * 1e3:.3f} ms"
    _report("linearization fidelity (byte-exact, < 1 ms)")


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_blec_worked_example():
    parsed = parse_sql("SELECT avg(age) FROM dogs")
    good = match_pair(parsed, Utterance.from_raw("What is the average age of dogs?"), LEXICON)
    assert good.consistent
    bad = match_pair(parsed, Utterance.from_raw("What is the oldest age of dogs?"), LEXICON)
    assert not bad.consistent
    assert bad.forward_misses == ("avg",)
    assert [phrase for phrase, _ in bad.backward_misses] == ["oldest"]
    assert bad.backward_misses[0][1].sql_token == "MAX"
    _report("BLEC worked example (consistent pair, corrupted pair with "
            "forward miss 'avg' and backward miss 'oldest')")


def _variant_present(entry, tokens):
    joined = f" {' '.join(tokens)} "
    return entry is not None and any(f" {v} " in joined for v in entry.nl_variants)


@pytest.mark.parametrize("dialect", [Dialect.SQL, Dialect.LOGIC])
def test_perturbation_detection_suite(dialect):
    seeds = load_seed_pairs(dialect)
    assert len(seeds) >= 20
    pool = harvest_literals(seeds)
    config = PerturbConfig(max_per_seed=100, entity_pool=pool, phrase_pool=pool)
    applicable = detected = 0
    for seed in seeds:
        # Unmodified seed pairs are all consistent.
        assert match_pair(seed.parse, seed.text, LEXICON).consistent
        for p in enumerate_perturbations(seed.parse, LEXICON, config, seed.seed_id):
            if p.kind in SHIFT_KINDS:
                entry = LEXICON.lookup_formal(dialect, p.before) if p.before else None
                relevant = _variant_present(entry, seed.text.tokens)
            elif p.kind is PerturbationKind.NUMBER_CHANGE:
                relevant = p.before in seed.text.tokens
            else:
                continue
            if relevant:
                applicable += 1
                if not match_pair(p.result, seed.text, LEXICON).consistent:
                    detected += 1
    assert applicable >= 20, "fixture corpus exercises too few perturbations"
    assert detected == applicable, f"only {detected}/{applicable} flagged"
    _report(
        f"perturbation detection on {dialect.value}: {detected}/{applicable} "
        "logic-shift/number-change perturbations flagged, 20/20 seeds consistent"
    )


@pytest.mark.parametrize("n_seeds", [1, 5, 20])
def test_composition_count_law(n_seeds):
    seeds = load_seed_pairs(Dialect.SQL)[:n_seeds]
    pool = harvest_literals(seeds)
    config = PerturbConfig(max_per_seed=8, entity_pool=pool, phrase_pool=pool)
    perturbed = []
    per_seed_counts = []
    for seed in seeds:
        perturbations = enumerate_perturbations(seed.parse, LEXICON, config, seed.seed_id)
        per_seed_counts.append(len(perturbations))
        for p in perturbations:
            text = builtin_template_generator(linearize(p.result, LEXICON), 1)[0].text
            perturbed.append((p, text, 1.0))
    out = compose_evaluator_set(seeds, perturbed)
    expected = n_seeds + 3 * sum(per_seed_counts)
    assert len(out) == expected
    by_provenance = {}
    for pair in out:
        by_provenance[pair.provenance] = by_provenance.get(pair.provenance, 0) + 1
    assert by_provenance[Provenance.SEED] == n_seeds
    assert by_provenance[Provenance.AUG_POSITIVE] == sum(per_seed_counts)
    assert by_provenance[Provenance.CROSS_NEG_SEED_LOGIC] == sum(per_seed_counts)
    assert by_provenance[Provenance.CROSS_NEG_PERTURBED_LOGIC] == sum(per_seed_counts)
    for pair in out:
        expected_label = (
            Label.CONSISTENT
            if pair.provenance in (Provenance.SEED, Provenance.AUG_POSITIVE)
            else Label.INCONSISTENT
        )
        assert pair.label is expected_label
    _report(
        f"composition count law: N={n_seeds}, sum(P)={sum(per_seed_counts)}, "
        f"records={len(out)} == N + 3*sum(P)"
    )


def _tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_end_to_end_snowball(tmp_path):
    seeds_src = Path(__file__).parent / "data" / "sql_seeds.jsonl"
    seeds_path = tmp_path / "seeds.jsonl"
    seeds_path.write_bytes(seeds_src.read_bytes())

    def config_for(out_name, iterations, **kwargs):
        return SnowballConfig(
            iterations=iterations, beam_size=3, seeds_path=str(seeds_path),
            out_dir=str(tmp_path / out_name), max_per_seed=8, rng_seed=17, **kwargs,
        )

    start = time.perf_counter()
    states = run_snowball(config_for("run_a", 2))
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"2 iterations over 20 seeds took {elapsed:.2f}s"
    assert len(states) == 2

    run_snowball(config_for("run_b", 2))
    assert _tree_bytes(tmp_path / "run_a") == _tree_bytes(tmp_path / "run_b")

    # Aborting the generator mid-iteration-2 leaves iteration-1 output intact:
    # the scripted worker serves exactly iteration 1's generate requests.
    pool = harvest_literals(load_seed_pairs(Dialect.SQL))
    pconfig = PerturbConfig(max_per_seed=8, entity_pool=pool, phrase_pool=pool)
    iteration_requests = sum(
        len(enumerate_perturbations(s.parse, LEXICON, pconfig, s.seed_id))
        for s in load_seed_pairs(Dialect.SQL)
    )
    run_snowball(config_for("run_ref", 1))
    failing = (
        f"subprocess:{PY} {WORKER_DIR / 'failing_generator.py'} {iteration_requests} 17"
    )
    with pytest.raises(WorkerError):
        run_snowball(config_for("run_abort", 2, generator_worker=failing))
    abort_tree = _tree_bytes(tmp_path / "run_abort")
    ref_tree = _tree_bytes(tmp_path / "run_ref")
    assert abort_tree == ref_tree
    assert not (tmp_path / "run_abort" / "iteration_2").exists()
    _report(
        f"end-to-end snowball: 2 iterations over 20 seeds in {elapsed:.2f}s, "
        "byte-identical reruns, aborted iteration left prior outputs untouched"
    )


def _pearson_oracle(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    return cov / (vx * vy) ** 0.5


# Five fixtures with kappa worked out by hand from the contingency tables.
KAPPA_FIXTURES = [
    # p_o = 0.8, p_e = 0.5 -> 0.6
    ([1, 1, 1, 1, 0, 0, 0, 0, 1, 0], [1, 1, 0, 1, 0, 0, 1, 0, 1, 0], 0.6),
    # p_o = 0.5, p_e = 0.5 -> 0.0
    ([1, 0, 1, 0], [1, 1, 0, 0], 0.0),
    # p_o = 0, marginals 1.0/0.0 vs 0.0/1.0: p_e = 1*0 + 0*1 = 0 -> 0.0
    ([1, 1, 1, 1], [0, 0, 0, 0], 0.0),
    # p_o = 0.75, a marginal 0.5/0.5, b marginal 0.75/0.25:
    # p_e = 0.5*0.75 + 0.5*0.25 = 0.5 -> (0.75 - 0.5)/0.5 = 0.5
    ([1, 1, 0, 0], [1, 1, 1, 0], 0.5),
    # p_o = 0.9, marginals 0.6/0.4 and 0.5/0.5: p_e = 0.3 + 0.2 = 0.5
    # -> (0.9 - 0.5)/0.5 = 0.8
    ([1, 1, 1, 1, 1, 1, 0, 0, 0, 0], [1, 1, 1, 1, 1, 0, 0, 0, 0, 0], 0.8),
]


def test_statistics_oracles():
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(100):
        xs = [rng.uniform(-10, 10) for _ in range(15)]
        ys = [rng.uniform(-10, 10) for _ in range(15)]
        r, p = pearson(xs, ys)
        worst = max(worst, abs(r - _pearson_oracle(xs, ys)))
        assert 0.0 <= p <= 1.0
    assert worst < 1e-9, f"pearson deviates from the direct formula by {worst}"

    for a, b, expected in KAPPA_FIXTURES:
        assert cohen_kappa(a, b) == pytest.approx(expected, abs=1e-12)
    assert cohen_kappa([0, 1, 1, 0, 1], [0, 1, 1, 0, 1]) == 1.0
    _report(
        f"statistics oracles: pearson within {worst:.2e} of the direct formula "
        "on 100 random 15-point series; kappa matches 5 hand-computed fixtures"
    )


@pytest.mark.parametrize("dialect", [Dialect.SQL, Dialect.LOGIC])
def test_round_trip_property(dialect):
    rng = random.Random(1000 if dialect is Dialect.SQL else 2000)
    for i in range(1000):
        parsed = genparse.random_parse(rng, dialect)
        again = parse(serialize(parsed), dialect)
        assert again.root == parsed.root, f"round trip failed at sample {i}"
        text = linearize(parsed, LEXICON).text
        depth = 0
        for token in text.split():
            if token == "(":
                depth += 1
            elif token == ")":
                depth -= 1
                assert depth >= 0, f"unbalanced linearization at sample {i}"
        assert depth == 0, f"unbalanced linearization at sample {i}"
    _report(f"round-trip property: 1000 random {dialect.value} parses, "
            "serialize-parse identity and balanced linearization")
