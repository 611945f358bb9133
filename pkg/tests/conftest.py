import json
from pathlib import Path

import pytest

from logicheck import Dialect, LabeledPair, Utterance, default_lexicon, parse

DATA_DIR = Path(__file__).parent / "data"
WORKER_DIR = Path(__file__).parent / "workers"


def load_seed_pairs(dialect: Dialect) -> list[LabeledPair]:
    from logicheck import read_pairs

    name = "sql_seeds.jsonl" if dialect is Dialect.SQL else "logic_seeds.jsonl"
    return read_pairs(DATA_DIR / name, dialect)


def load_raw_seeds(dialect: Dialect) -> list[tuple]:
    name = "sql_seeds.jsonl" if dialect is Dialect.SQL else "logic_seeds.jsonl"
    out = []
    with open(DATA_DIR / name, encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            out.append((parse(record["logic"], dialect), Utterance.from_raw(record["text"])))
    return out


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def sql_seeds():
    return load_seed_pairs(Dialect.SQL)


@pytest.fixture(scope="session")
def logic_seeds():
    return load_seed_pairs(Dialect.LOGIC)
