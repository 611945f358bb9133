import random

import pytest

import genparse
from logicheck import (
    Dialect,
    NodeKind,
    ParseError,
    default_lexicon,
    extract_key_tokens,
    parse,
    parse_logic,
    parse_sql,
    serialize,
)
from logicheck.parse_core import apply, identifier, keyword, number, string

TABLE4_SQL = (
    'SELECT count(*), max(Percentage) FROM country_language '
    'WHERE LANGUAGE = "Spanish" GROUP BY CountryCode'
)


class TestParseSql:
    def test_table4_shape(self):
        root = parse_sql(TABLE4_SQL).root
        assert root.label == "query"
        select, from_clause, where, group_by = root.children
        assert select == apply(
            "select", apply("count", keyword("*")), apply("max", identifier("percentage"))
        )
        assert from_clause == apply("from", identifier("country_language"))
        assert where.children[0] == apply("=", identifier("language"), string("spanish"))
        assert group_by == apply("group_by", identifier("countrycode"))

    def test_dogs_query(self):
        root = parse_sql("SELECT avg(age) FROM dogs").root
        assert root == apply(
            "query",
            apply("select", apply("avg", identifier("age"))),
            apply("from", identifier("dogs")),
        )

    def test_malformed_input_offset(self):
        with pytest.raises(ParseError) as err:
            parse_sql("SELECT FROM WHERE")
        assert err.value.offset == 7

    def test_star_only_for_count(self):
        with pytest.raises(ParseError):
            parse_sql("SELECT max(*) FROM dogs")

    def test_unknown_aggregate(self):
        with pytest.raises(ParseError):
            parse_sql("SELECT median(age) FROM dogs")

    def test_trailing_tokens_rejected(self):
        with pytest.raises(ParseError):
            parse_sql("SELECT age FROM dogs LIMIT 3 extra")

    def test_case_folding(self):
        parsed = parse_sql('SELECT Name FROM Cities WHERE Country = "FRANCE"')
        assert serialize(parsed) == 'SELECT name FROM cities WHERE country = "france"'

    def test_join_and_clauses(self):
        source = (
            "SELECT t.name FROM towns JOIN rivers ON towns.rid = rivers.rid "
            "WHERE rivers.length > 500 ORDER BY t.name ASC LIMIT 5"
        )
        parsed = parse_sql(source)
        assert serialize(parsed) == (
            "SELECT t.name FROM towns JOIN rivers ON towns.rid = rivers.rid "
            "WHERE rivers.length > 500 ORDER BY t.name ASC LIMIT 5"
        )

    def test_number_canonicalization(self):
        parsed = parse_sql("SELECT age FROM dogs WHERE age > 007")
        assert serialize(parsed) == "SELECT age FROM dogs WHERE age > 7"


class TestParseLogic:
    def test_count_example(self):
        # Hand-parsed oracle: eq applied to (count over all rows, literal 5).
        root = parse_logic("eq { count { all_rows } ; 5 }").root
        assert root == apply("eq", apply("count", keyword("all_rows")), number(5))

    def test_hop_example(self):
        # Hand-parsed oracle: hop's arguments are identifiers, eq's second
        # argument sits in a value position and becomes a string literal.
        root = parse_logic("not_eq { hop { x ; col } ; y }").root
        assert root == apply(
            "not_eq", apply("hop", identifier("x"), identifier("col")), string("y")
        )

    def test_unbalanced_braces(self):
        with pytest.raises(ParseError) as err:
            parse_logic("eq { count {")
        assert "unbalanced" in str(err.value)

    def test_unknown_function(self):
        with pytest.raises(ParseError):
            parse_logic("frobnicate { all_rows }")

    def test_arity_mismatch(self):
        with pytest.raises(ParseError):
            parse_logic("eq { count { all_rows } }")

    def test_bool_position_needs_application(self):
        with pytest.raises(ParseError):
            parse_logic("and { 5 ; eq { count { all_rows } ; 1 } }")

    def test_multiword_value(self):
        root = parse_logic("filter_str_eq { all_rows ; team ; north melbourne }").root
        assert root.children[2] == string("north melbourne")


class TestSerialize:
    def test_canonical_fixed_point(self):
        parsed = parse_sql("SELECT avg(age) FROM dogs")
        assert serialize(parsed) == "SELECT avg(age) FROM dogs"

    def test_not_keyword_preserved(self):
        parsed = parse_sql('SELECT name FROM players WHERE NOT team = "tigers"')
        assert "NOT" in serialize(parsed)

    def test_logic_round_trip_canonical(self):
        source = "eq { count { all_rows } ; 5 }"
        assert serialize(parse_logic(source)) == source

    def test_sql_parenthesized_precedence(self):
        source = 'SELECT name FROM t WHERE NOT (age > 3 OR age < 1) AND size = 2'
        parsed = parse_sql(source)
        again = parse_sql(serialize(parsed))
        assert again.root == parsed.root


@pytest.mark.parametrize("dialect", [Dialect.SQL, Dialect.LOGIC])
def test_round_trip_random_parses(dialect):
    rng = random.Random(7)
    for _ in range(200):
        parsed = genparse.random_parse(rng, dialect)
        again = parse(serialize(parsed), dialect)
        assert again.root == parsed.root
        # Deterministic: parsing the same source twice gives equal trees.
        assert parse(parsed.source_text, dialect).root == parsed.root


class TestExtractKeyTokens:
    def test_table4_key_tokens(self):
        # Oracle: lexicon hits enumerated by hand over the Table 4 tree
        # (count, max, = and GROUP BY rows) plus the one string literal.
        lexicon = default_lexicon()
        kts = extract_key_tokens(parse_sql(TABLE4_SQL), lexicon)
        assert list(kts.formal_tokens) == ["count", "max", "=", "spanish", "group_by"]

    def test_dogs_key_tokens(self):
        lexicon = default_lexicon()
        kts = extract_key_tokens(parse_sql("SELECT avg(age) FROM dogs"), lexicon)
        assert list(kts.formal_tokens) == ["avg"]

    def test_no_hits_yields_empty(self):
        lexicon = default_lexicon()
        kts = extract_key_tokens(parse_sql("SELECT name FROM shops"), lexicon)
        assert kts.tokens == ()

    def test_identifiers_never_key_tokens(self):
        # A column spelled like a lexicon token stays excluded.
        lexicon = default_lexicon()
        kts = extract_key_tokens(parse_sql("SELECT sum FROM ledgers"), lexicon)
        assert kts.tokens == ()

    def test_every_literal_listed(self, lexicon):
        rng = random.Random(13)
        for _ in range(50):
            parsed = genparse.random_parse(rng, Dialect.SQL)
            kts = extract_key_tokens(parsed, lexicon)
            from logicheck.parse_core import walk

            literals = [
                node.label
                for _, node in walk(parsed.root)
                if node.kind in (NodeKind.NUMBER, NodeKind.STRING)
            ]
            listed = [t.token for t in kts.tokens if t.role in ("number", "string")]
            assert sorted(listed) == sorted(literals)

    def test_monotone_in_lexicon(self, lexicon):
        # Dropping rows never adds key tokens; adding them back never
        # removes any.
        from logicheck.lexicon import Lexicon

        reduced = Lexicon(lexicon.entries[:5])
        parsed = parse_sql(TABLE4_SQL)
        small = set(extract_key_tokens(parsed, reduced).formal_tokens)
        full = set(extract_key_tokens(parsed, lexicon).formal_tokens)
        assert small <= full
