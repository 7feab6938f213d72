"""Sidecar acceptance criteria, one PASS line each.

Criterion 8: protocol conformance — golden-transcript round-trips,
chain-rule additivity of score (1e-4), entropy consistency with the full
returned distribution (1e-4).
Criterion 9: cross-component integration — the pipeline client against a
live sidecar on the fixture corpus yields a complete feature table with
deterministic repeats (1e-5 per value).
"""

import json
import math
import sys
from pathlib import Path

import pytest

from lmsidecar.protocol import handle_request

TRANSCRIPT = Path(__file__).parent / "data" / "golden_transcript.json"
REPO_ROOT = Path(__file__).resolve().parent.parent.parent


def _passed(n, label):
    print(f"[acceptance] criterion {n} ({label}): PASS")


def test_criterion_8_protocol_conformance(scoring_model):
    from test_protocol import _check_reply

    script = json.loads(TRANSCRIPT.read_text())
    first = []
    for entry in script:
        reply = handle_request(entry["send"], scoring_model, "tiny-test-model")
        _check_reply(entry["send"], entry["expect"], reply, scoring_model)
        first.append(reply)
    for entry, earlier in zip(script, first):
        assert handle_request(entry["send"], scoring_model, "tiny-test-model") == earlier

    # chain-rule additivity of score over subword splits
    whole, _ = scoring_model.score("she said", "the meeting")
    part1, _ = scoring_model.score("she said", "the")
    part2, _ = scoring_model.score("she said the", "meeting")
    assert abs(whole - (part1 + part2)) < 1e-4

    # entropy agrees with the full returned distribution
    entropy, pairs = scoring_model.distribution("she said", True, scoring_model.vocab_size)
    recomputed = -sum(p * math.log(p) for _, p in pairs if p > 0)
    assert abs(entropy - recomputed) < 1e-4
    _passed(8, "protocol conformance: transcript, chain rule, entropy")


def test_criterion_9_cross_component_integration(tiny_model_dir):
    thatdrop = pytest.importorskip(
        "thatdrop", reason="integration needs the pipeline package installed"
    )
    from thatdrop.corpus import load_corpus
    from thatdrop.extraction import ConstructionRecord
    from thatdrop.predictors import CorpusStats, featurize
    from thatdrop.sidecar_client import SidecarClient

    records = load_corpus(REPO_ROOT / "tests" / "data" / "fixture_corpus.jsonl").records
    gold = json.loads((REPO_ROOT / "tests" / "data" / "gold_constructions.json").read_text())
    constructions = [
        ConstructionRecord.from_json_dict(dict(g, sentence_id=sid))
        for sid in sorted(gold)
        for g in gold[sid]["constructions"]
    ]
    corpus = {r.id: r for r in records}
    stats = CorpusStats.from_records(records)
    endpoint = f"stdio:{sys.executable} -m lmsidecar.server --model {tiny_model_dir} --transport stdio"

    def one_run():
        client = SidecarClient(endpoint, timeout=120)
        try:
            client.connect()
            return featurize(constructions, corpus, stats, client)
        finally:
            client.close()

    first = one_run()
    second = one_run()
    assert len(first) == 15
    for row, again in zip(first, second):
        assert math.isfinite(row.sc_onset_surprisal)
        assert math.isfinite(row.sc_onset_entropy)
        assert abs(row.sc_onset_surprisal - again.sc_onset_surprisal) < 1e-5
        assert abs(row.sc_onset_entropy - again.sc_onset_entropy) < 1e-5
    _passed(9, "live sidecar + pipeline client on the fixture corpus")
