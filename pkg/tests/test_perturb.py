import random

import genparse
from logicheck import (
    Dialect,
    PerturbConfig,
    SemanticParse,
    default_lexicon,
    enumerate_perturbations,
    extract_key_tokens,
    parse,
    parse_logic,
    parse_sql,
    serialize,
    validate_perturbation,
)
from logicheck.parse_core import diff_paths
from logicheck.perturb import Perturbation, PerturbationKind

KINDS = list(PerturbationKind)
SWAP_KINDS = {
    PerturbationKind.AGGREGATOR_SWAP,
    PerturbationKind.OPERATOR_SWAP,
    PerturbationKind.CONJUNCTION_SWAP,
    PerturbationKind.NEGATION_TOGGLE,
    PerturbationKind.ENTITY_SWAP,
}
SHIFT_KINDS = {
    PerturbationKind.AGGREGATOR_SWAP,
    PerturbationKind.OPERATOR_SWAP,
    PerturbationKind.CONJUNCTION_SWAP,
    PerturbationKind.NEGATION_TOGGLE,
    PerturbationKind.NUMBER_CHANGE,
}

TABLE4_SQL = (
    'SELECT count(*), max(percentage) FROM country_language '
    'WHERE language = "spanish" GROUP BY countrycode'
)


def _wide(**kwargs):
    return PerturbConfig(max_per_seed=kwargs.pop("max_per_seed", 100), **kwargs)


class TestEnumerate:
    def test_dogs_contains_avg_to_max(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql("SELECT avg(age) FROM dogs"), lexicon, _wide()
        )
        results = {p.result.source_text for p in perturbations}
        assert "SELECT max(age) FROM dogs" in results
        kinds = {p.kind for p in perturbations if p.result.source_text.startswith("SELECT max")}
        assert kinds == {PerturbationKind.AGGREGATOR_SWAP}

    def test_table4_negation_but_no_equality_swap(self, lexicon):
        perturbations = enumerate_perturbations(parse_sql(TABLE4_SQL), lexicon, _wide())
        assert not any(
            p.kind is PerturbationKind.OPERATOR_SWAP and p.before == "="
            for p in perturbations
        )
        toggles = [p for p in perturbations if p.kind is PerturbationKind.NEGATION_TOGGLE]
        assert any('language != "spanish"' in p.result.source_text for p in toggles)
        assert any('NOT language = "spanish"' in p.result.source_text for p in toggles)

    def test_no_perturbable_sites(self, lexicon):
        assert enumerate_perturbations(parse_sql("SELECT name FROM t"), lexicon, _wide()) == []

    def test_number_change_offsets(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql("SELECT name FROM t WHERE age > 17"), lexicon, _wide()
        )
        changed = sorted(
            p.after for p in perturbations if p.kind is PerturbationKind.NUMBER_CHANGE
        )
        assert changed == ["16", "170", "18"]

    def test_entity_swap_all_pairs(self, lexicon):
        source = 'SELECT n FROM t WHERE a = "x" AND b = "y" OR c = "z"'
        perturbations = enumerate_perturbations(parse_sql(source), lexicon, _wide())
        swaps = [p for p in perturbations if p.kind is PerturbationKind.ENTITY_SWAP]
        assert len(swaps) == 3  # three unordered literal pairs

    def test_entity_delete_drops_whole_clause(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql('SELECT n FROM t WHERE a = "x"'), lexicon, _wide()
        )
        deletes = [p for p in perturbations if p.kind is PerturbationKind.ENTITY_DELETE]
        assert [p.result.source_text for p in deletes] == ["SELECT n FROM t"]

    def test_entity_delete_keeps_sibling(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql('SELECT n FROM t WHERE a = "x" AND b > 2'), lexicon, _wide()
        )
        deletes = [p for p in perturbations if p.kind is PerturbationKind.ENTITY_DELETE]
        assert [p.result.source_text for p in deletes] == ["SELECT n FROM t WHERE b > 2"]

    def test_entity_insert_uses_pool(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql('SELECT n FROM t WHERE a = "x"'),
            lexicon,
            _wide(entity_pool=("gamma", "delta")),
        )
        inserts = [p for p in perturbations if p.kind is PerturbationKind.ENTITY_INSERT]
        assert {p.after for p in inserts} == {"gamma", "delta"}
        for p in inserts:
            assert f'AND a = "{p.after}"' in p.result.source_text

    def test_phrase_change_uses_pool(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_sql('SELECT n FROM t WHERE a = "x"'),
            lexicon,
            _wide(phrase_pool=("x", "blue heron")),
        )
        changes = [p for p in perturbations if p.kind is PerturbationKind.PHRASE_CHANGE]
        # The pool phrase equal to the current literal is skipped.
        assert [p.after for p in changes] == ["blue heron"]

    def test_logic_filter_swaps(self, lexicon):
        perturbations = enumerate_perturbations(
            parse_logic("eq { count { filter_greater { all_rows ; age ; 3 } } ; 5 }"),
            lexicon,
            _wide(),
        )
        afters = {p.after for p in perturbations if p.kind is PerturbationKind.OPERATOR_SWAP}
        assert "filter_smaller" in afters

    def test_ordering_and_truncation(self, lexicon):
        config = PerturbConfig(max_per_seed=4)
        perturbations = enumerate_perturbations(parse_sql(TABLE4_SQL), lexicon, config)
        assert len(perturbations) == 4
        keys = [(KINDS.index(p.kind), p.node_path) for p in perturbations]
        assert keys == sorted(keys)

    def test_determinism(self, lexicon):
        config = _wide(entity_pool=("delta",), phrase_pool=("gamma",))
        first = enumerate_perturbations(parse_sql(TABLE4_SQL), lexicon, config)
        second = enumerate_perturbations(parse_sql(TABLE4_SQL), lexicon, config)
        assert [p.result.source_text for p in first] == [
            p.result.source_text for p in second
        ]

    def test_duplicate_free(self, lexicon):
        rng = random.Random(41)
        config = _wide(entity_pool=("delta",), phrase_pool=("gamma",))
        for dialect in (Dialect.SQL, Dialect.LOGIC):
            for _ in range(40):
                parsed = genparse.random_parse(rng, dialect)
                perturbations = enumerate_perturbations(parsed, lexicon, config)
                serialized = [p.result.source_text for p in perturbations]
                assert len(serialized) == len(set(serialized))


class TestProperties:
    def test_soundness(self, lexicon):
        rng = random.Random(43)
        config = _wide(entity_pool=("delta",), phrase_pool=("gamma",))
        for dialect in (Dialect.SQL, Dialect.LOGIC):
            for _ in range(40):
                parsed = genparse.random_parse(rng, dialect)
                for p in enumerate_perturbations(parsed, lexicon, config):
                    assert validate_perturbation(p)

    def test_swap_involution(self, lexicon):
        config = _wide()
        sources = [
            (TABLE4_SQL, Dialect.SQL),
            ("SELECT avg(age) FROM dogs ORDER BY age DESC", Dialect.SQL),
            ('SELECT n FROM t WHERE a = "x" AND b = "y"', Dialect.SQL),
            ("and { eq { count { all_rows } ; 3 } ; greater { sum { all_rows ; x } ; 2 } }",
             Dialect.LOGIC),
        ]
        for source, dialect in sources:
            seed = parse(source, dialect)
            for p in enumerate_perturbations(seed, lexicon, config):
                if p.kind not in SWAP_KINDS:
                    continue
                inverses = [
                    q
                    for q in enumerate_perturbations(p.result, lexicon, config)
                    if q.kind is p.kind and q.result.root == seed.root
                ]
                assert inverses, f"no inverse for {p.kind} {p.before}->{p.after}"

    def test_key_token_divergence(self, lexicon):
        rng = random.Random(47)
        for dialect in (Dialect.SQL, Dialect.LOGIC):
            for _ in range(30):
                parsed = genparse.random_parse(rng, dialect)
                seed_tokens = extract_key_tokens(parsed, lexicon)
                for p in enumerate_perturbations(parsed, lexicon, _wide()):
                    if p.kind in SHIFT_KINDS:
                        assert extract_key_tokens(p.result, lexicon) != seed_tokens

    def test_edit_locality(self, lexicon):
        # Swaps and literal edits touch exactly the reported path.
        seed = parse_sql(TABLE4_SQL)
        for p in enumerate_perturbations(seed, lexicon, _wide()):
            if p.kind in (
                PerturbationKind.AGGREGATOR_SWAP,
                PerturbationKind.OPERATOR_SWAP,
                PerturbationKind.NUMBER_CHANGE,
                PerturbationKind.PHRASE_CHANGE,
            ):
                assert diff_paths(seed.root, p.result.root) == [p.node_path]


class TestValidate:
    def test_truncated_result_is_invalid(self, lexicon):
        seed = parse_sql("SELECT avg(age) FROM dogs")
        bogus = Perturbation(
            seed_id="s0",
            kind=PerturbationKind.PHRASE_CHANGE,
            node_path=(),
            before="",
            after="",
            result=SemanticParse(Dialect.SQL, seed.root, "SELECT avg(ag"),
            seed_parse=seed,
        )
        assert not validate_perturbation(bogus)

    def test_identity_result_is_invalid(self, lexicon):
        seed = parse_sql("SELECT avg(age) FROM dogs")
        clone = Perturbation(
            seed_id="s0",
            kind=PerturbationKind.PHRASE_CHANGE,
            node_path=(),
            before="",
            after="",
            result=SemanticParse(Dialect.SQL, seed.root, serialize(seed)),
            seed_parse=seed,
        )
        assert not validate_perturbation(clone)
