import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thatdrop.corpus import SentenceRecord
from thatdrop.extraction import (
    ConstructionRecord,
    Label,
    ThatRole,
    classify_that_usages,
    detect_constructions,
    length_filter,
    sentence_class_summary,
    usage_counts,
)

from conftest import make_flat_record


class TestLengthFilter:
    @pytest.mark.parametrize(
        "n_words,expected",
        [(4, False), (5, True), (50, True), (51, False)],
    )
    def test_boundaries(self, n_words, expected):
        rec = make_flat_record("r", " ".join(f"w{i}" for i in range(n_words)))
        assert length_filter(rec) is expected

    def test_punctuation_excluded_from_count(self):
        # 4 words + 2 punctuation tokens: still below the lower bound
        rec = make_flat_record("r", "a b , c d .")
        assert length_filter(rec) is False


class TestClassifyThatUsages:
    @pytest.mark.parametrize(
        "sid,expected",
        [
            ("s03", {5: ThatRole.DEMONSTRATIVE_DETERMINER}),
            ("s04", {0: ThatRole.DEMONSTRATIVE_PRONOUN}),
            ("s05", {5: ThatRole.RELATIVE_PRONOUN}),
            ("s01", {3: ThatRole.SCONJ}),
            ("s19", {8: ThatRole.OTHER}),
            ("s17", {2: ThatRole.RELATIVE_PRONOUN, 6: ThatRole.SCONJ}),
        ],
    )
    def test_canonical_role_examples(self, fixture_corpus, sid, expected):
        usages = classify_that_usages(fixture_corpus[sid])
        assert {u.token_index: u.role for u in usages} == expected

    def test_gold_roles_all_sentences(self, fixture_records, gold):
        for rec in fixture_records:
            got = {str(u.token_index): u.role.value for u in classify_that_usages(rec)}
            assert got == gold[rec.id]["roles"], rec.id

    def test_case_insensitive(self):
        rec = SentenceRecord(
            id="cap",
            tokens=("That", "is", "true", "enough", "today"),
            lemmas=("that", "be", "true", "enough", "today"),
            pos=("PRON", "AUX", "ADJ", "ADV", "NOUN"),
            dep_head=(1, -1, 1, 2, 1),
            dep_rel=("nsubj", "root", "acomp", "advmod", "npadvmod"),
            parse="(S (NP (DT That)) (VP (VBZ is) (ADJP (JJ true) (ADVP (RB enough))) (NP (NN today))))",
        )
        usages = classify_that_usages(rec)
        assert len(usages) == 1
        assert usages[0].token_index == 0
        assert usages[0].role == ThatRole.DEMONSTRATIVE_PRONOUN

    def test_every_token_is_that(self, fixture_records):
        for rec in fixture_records:
            for usage in classify_that_usages(rec):
                assert rec.tokens[usage.token_index].lower() == "that"


class TestDetectConstructions:
    def test_gold_agreement_20_of_20(self, fixture_records, gold):
        for rec in fixture_records:
            got = [c.to_json_dict() for c in detect_constructions(rec)]
            for item in got:
                item.pop("sentence_id")
            assert got == gold[rec.id]["constructions"], rec.id

    def test_explicit_detection(self, fixture_corpus):
        (c,) = detect_constructions(fixture_corpus["s01"])
        assert c.label is Label.EXPLICIT
        assert c.main_verb_lemma == "agree"
        assert fixture_corpus["s01"].tokens[c.sc_onset_index] == "his"

    def test_implicit_detection(self, fixture_corpus):
        (c,) = detect_constructions(fixture_corpus["s02"])
        assert c.label is Label.IMPLICIT
        assert c.main_verb_lemma == "think"
        assert fixture_corpus["s02"].tokens[c.sc_onset_index] == "partners"

    def test_nested_double_sconj(self, fixture_corpus):
        constructions = detect_constructions(fixture_corpus["s06"])
        assert [c.main_verb_lemma for c in constructions] == ["forget", "admit"]
        assert all(c.label is Label.EXPLICIT for c in constructions)

    def test_demonstrative_onset_yields_nothing(self, fixture_corpus):
        assert detect_constructions(fixture_corpus["s11"]) == []

    def test_overt_non_that_complementizer_excluded(self, fixture_corpus):
        # "leave before the storm hits": the before-clause must not match
        constructions = detect_constructions(fixture_corpus["s15"])
        assert [c.main_verb_lemma for c in constructions] == ["guess"]

    def test_nonfinite_complement_excluded(self, fixture_corpus):
        # "keep forgetting ...": only the finite complement of "forgetting" counts
        constructions = detect_constructions(fixture_corpus["s20"])
        assert [c.main_verb_lemma for c in constructions] == ["forget"]

    def test_determinism(self, fixture_records):
        for rec in fixture_records:
            assert detect_constructions(rec) == detect_constructions(rec)

    def test_explicit_sconj_has_sconj_role(self, fixture_records):
        for rec in fixture_records:
            roles = {u.token_index: u.role for u in classify_that_usages(rec)}
            for c in detect_constructions(rec):
                if c.label is Label.EXPLICIT:
                    assert roles[c.sconj_index] == ThatRole.SCONJ

    def test_positional_invariants(self, fixture_records):
        for rec in fixture_records:
            for c in detect_constructions(rec):
                _assert_invariants(rec, c)


def _assert_invariants(rec: SentenceRecord, c: ConstructionRecord):
    n = len(rec.tokens)
    assert c.main_verb_index < c.sc_onset_index <= c.sc_end_index < n
    if c.label is Label.EXPLICIT:
        assert c.sconj_index == c.main_verb_index + 1
        assert c.sc_onset_index == c.sconj_index + 1
        assert rec.tokens[c.sconj_index].lower() == "that"
    else:
        assert c.sconj_index is None
        assert c.sc_onset_index == c.main_verb_index + 1
    if c.sc_subject_index is not None:
        assert c.sc_onset_index <= c.sc_subject_index <= c.sc_end_index


class TestPerturbationProperty:
    """Positional invariants hold on arbitrarily relabeled records.

    Lemmas, POS, and dependency labels are shuffled or rewritten at random;
    the tree (which drives detection) stays fixed, so outputs must always
    satisfy the ConstructionRecord invariants whatever the other layers say.
    """

    @settings(max_examples=60, deadline=None)
    @given(
        sentence=st.integers(min_value=0, max_value=19),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_invariants_under_relabeling(self, fixture_records, sentence, seed):
        rec = fixture_records[sentence]
        rng = random.Random(seed)
        n = len(rec.tokens)
        relabeled = SentenceRecord(
            id=rec.id,
            tokens=rec.tokens,
            lemmas=tuple(rng.choice(["go", "thing", "zap"]) for _ in range(n)),
            pos=tuple(rng.choice(["VERB", "NOUN", "ADV"]) for _ in range(n)),
            dep_head=tuple(rng.randrange(-1, n) for _ in range(n)),
            dep_rel=tuple(rng.choice(["nsubj", "dep", "obj"]) for _ in range(n)),
            parse=rec.parse,
        )
        for c in detect_constructions(relabeled):
            _assert_invariants(relabeled, c)


class TestSummaries:
    def test_usage_counts(self, fixture_records):
        counts = usage_counts(fixture_records)
        assert counts[ThatRole.SCONJ] == 8  # s06 carries two
        assert counts[ThatRole.DEMONSTRATIVE_PRONOUN] == 3
        assert counts[ThatRole.DEMONSTRATIVE_DETERMINER] == 1
        assert counts[ThatRole.RELATIVE_PRONOUN] == 2
        assert counts[ThatRole.OTHER] == 1

    def test_sentence_classes_disjoint(self, fixture_records, gold_constructions):
        rows = {s.label: s for s in sentence_class_summary(fixture_records, gold_constructions)}
        assert rows["explicit"].count == 7  # s06 is one sentence, two constructions
        assert rows["implicit"].count == 7
        # s03, s04, s05, s11, s19 contain "that" without being construction sentences
        assert rows["other_that"].count == 5
