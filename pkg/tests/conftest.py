import json
import sys
from pathlib import Path

import pytest

from thatdrop.corpus import SentenceRecord, load_corpus
from thatdrop.extraction import ConstructionRecord

DATA_DIR = Path(__file__).parent / "data"

# the hand-count oracles live next to the tests, outside the package
sys.path.insert(0, str(Path(__file__).parent / "oracles"))


@pytest.fixture(scope="session")
def fixture_records():
    result = load_corpus(DATA_DIR / "fixture_corpus.jsonl")
    assert not result.diagnostics, result.diagnostics
    return result.records


@pytest.fixture(scope="session")
def fixture_corpus(fixture_records):
    return {rec.id: rec for rec in fixture_records}


@pytest.fixture(scope="session")
def gold():
    with open(DATA_DIR / "gold_constructions.json", encoding="utf-8") as handle:
        return json.load(handle)


@pytest.fixture(scope="session")
def gold_constructions(gold):
    out = []
    for sid in sorted(gold):
        for g in gold[sid]["constructions"]:
            out.append(ConstructionRecord.from_json_dict(dict(g, sentence_id=sid)))
    return out


def make_flat_record(rec_id: str, text: str) -> SentenceRecord:
    """A minimal valid record for toy sentences: flat parse, dummy annotation."""
    tokens = text.split()
    parse = "(S " + " ".join(f"(X {tok})" for tok in tokens) + ")"
    return SentenceRecord(
        id=rec_id,
        tokens=tuple(tokens),
        lemmas=tuple(tokens),
        pos=tuple("X" for _ in tokens),
        dep_head=(-1,) + tuple(0 for _ in tokens[1:]),
        dep_rel=("root",) + tuple("dep" for _ in tokens[1:]),
        parse=parse,
    )


@pytest.fixture
def flat_record():
    return make_flat_record


@pytest.fixture(scope="session")
def toy_records():
    """The two-sentence toy corpus behind the hand-count oracle tests."""
    return [
        make_flat_record("t1", "i think you win"),
        make_flat_record("t2", "i think he lost"),
    ]
