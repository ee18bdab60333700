import json

import pytest
from hypothesis import given, settings, strategies as st

from ruleproofs.theory import (
    Fact,
    Literal,
    Question,
    Rule,
    Theory,
    TheoryParseError,
    make_fact,
    make_question,
    make_rule,
    parse_fact_sentence,
    parse_rule_sentence,
    parse_sentence,
    parse_theory,
    render_sentence,
    theory_to_record,
    theory_to_text,
    validate_theory,
)


def small_theory():
    return Theory(
        "t",
        (make_fact("F1", Literal("alan", "blue")),
         make_fact("F2", Literal("bob", "rough"))),
        (make_rule("R1", [Literal("someone", "blue")], Literal("someone", "young")),
         make_rule("R2", [Literal("someone", "rough")], Literal("someone", "cold"))),
        (make_question("Q1", Literal("alan", "young")),),
    )


class TestRendering:
    def test_attribute_fact(self):
        assert make_fact("F1", Literal("alan", "blue")).text == "Alan is blue."

    def test_negative_attribute_fact(self):
        assert make_fact("F1", Literal("alan", "kind", positive=False)).text == "Alan is not kind."

    def test_relation_fact(self):
        assert make_fact("F1", Literal("alan", "like", "bob")).text == "Alan likes Bob."
        lit = Literal("alan", "like", "bob", positive=False)
        assert make_fact("F1", lit).text == "Alan does not like Bob."

    def test_single_antecedent_rule(self):
        r = make_rule("R1", [Literal("someone", "blue")], Literal("someone", "young"))
        assert r.text == "If someone is blue then they are young."

    def test_two_attribute_antecedents_elide_copula(self):
        r = make_rule(
            "R1",
            [Literal("someone", "blue"), Literal("someone", "rough")],
            Literal("someone", "young"),
        )
        assert r.text == "If someone is blue and rough then they are young."

    def test_mixed_antecedents(self):
        r = make_rule(
            "R1",
            [Literal("someone", "like", "bob"), Literal("someone", "kind", positive=False)],
            Literal("someone", "like", "alan"),
        )
        assert r.text == "If someone likes Bob and is not kind then they like Alan."

    def test_thing_variable_uses_it(self):
        r = make_rule(
            "R1", [Literal("something", "live")], Literal("something", "power", "bulb"))
        assert r.text == "If something is live then it powers Bulb."

    def test_ground_rule(self):
        r = make_rule(
            "R1",
            [Literal("alan", "blue"), Literal("bob", "see", "carol")],
            Literal("bob", "cold"),
        )
        assert r.text == "If Alan is blue and Bob sees Carol then Bob is cold."

    def test_rendering_is_deterministic(self):
        r = small_theory().rules[0]
        assert render_sentence(r) == render_sentence(r)


class TestParsing:
    def test_attribute_fact(self):
        assert parse_sentence("Alan is blue.") == Literal("alan", "blue")

    def test_single_antecedent_rule(self):
        ants, cons = parse_sentence("If someone is blue then they are young.")
        assert ants == (Literal("someone", "blue"),)
        assert cons == Literal("someone", "young")

    def test_round_trip_examples(self):
        for text in [
            "Alan is blue.",
            "Alan is not kind.",
            "Alan likes Bob.",
            "Alan does not like Bob.",
            "If someone is blue and rough then they are young.",
            "If someone likes Bob and is not kind then they like Alan.",
            "If something is live and does not power Bulb then it is broken.",
            "If Alan is blue and Bob sees Carol then Bob is cold.",
            "If something sees Cat then it is wild.",
            "If someone does not visit Bob then they are quiet.",
        ]:
            parsed = parse_sentence(text)
            if isinstance(parsed, Literal):
                assert make_fact("F1", parsed).text == text
            else:
                assert make_rule("R1", parsed[0], parsed[1]).text == text

    def test_rejects_missing_period(self):
        with pytest.raises(TheoryParseError):
            parse_fact_sentence("Alan is blue")

    def test_rejects_reserved_word(self):
        with pytest.raises(TheoryParseError):
            parse_fact_sentence("Alan is not.")
        with pytest.raises(TheoryParseError):
            parse_fact_sentence("If is blue.")

    def test_rejects_lowercase_entity(self):
        with pytest.raises(TheoryParseError):
            parse_fact_sentence("alan is blue.")

    def test_rejects_two_thens(self):
        with pytest.raises(TheoryParseError):
            parse_rule_sentence("If someone is blue then they are young then they are old.")

    def test_error_carries_line(self):
        with pytest.raises(TheoryParseError) as exc:
            parse_fact_sentence("Alan is blue", line=12)
        assert exc.value.line == 12


class TestParseTheory:
    def test_empty_theory(self):
        t = parse_theory(json.dumps({"id": "t", "facts": [], "rules": [], "questions": []}))
        assert t.facts == () and t.rules == ()

    def test_json_round_trip(self):
        t = small_theory()
        again = parse_theory(json.dumps(theory_to_record(t)))
        assert again == t

    def test_bytes_accepted(self):
        t = small_theory()
        data = json.dumps(theory_to_record(t)).encode("utf-8")
        assert parse_theory(data) == t

    def test_sentence_text_round_trip(self):
        t = small_theory()
        again = parse_theory(theory_to_text(t), format="sentence-text")
        assert again.facts == t.facts
        assert again.rules == t.rules
        assert [q.literal for q in again.questions] == [q.literal for q in t.questions]

    def test_text_parse_render_parse_fixpoint(self):
        t = small_theory()
        first = parse_theory(theory_to_text(t), format="sentence-text")
        second = parse_theory(theory_to_text(first), format="sentence-text")
        assert first == second

    def test_sentence_text_error_has_line_number(self):
        text = "theory: t\nF1: Alan is blue.\nF2: Alan is\n"
        with pytest.raises(TheoryParseError) as exc:
            parse_theory(text, format="sentence-text")
        assert exc.value.line == 3

    def test_sentence_text_skips_blanks_and_comments(self):
        text = "theory: t\n\n# anchor\nF1: Alan is blue.\n\nQ1: Alan is blue.\n"
        t = parse_theory(text, format="sentence-text")
        assert len(t.facts) == 1 and len(t.questions) == 1

    def test_invalid_json_is_a_parse_error(self):
        with pytest.raises(TheoryParseError):
            parse_theory("{not json")

    def test_duplicate_id_rejected(self):
        record = theory_to_record(small_theory())
        record["facts"][1]["id"] = "F1"
        with pytest.raises(TheoryParseError, match="F1"):
            parse_theory(json.dumps(record))

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            parse_theory("x", format="yaml")


class TestValidateTheory:
    def test_valid_theory(self):
        assert validate_theory(small_theory()) == []

    def test_context_size_limit(self):
        attrs = ["blue", "rough", "young", "kind", "smart", "quiet", "green",
                 "happy", "cold", "nice", "red", "big", "calm"]
        facts = tuple(
            make_fact(f"F{i + 1}", Literal(e, a))
            for i, (e, a) in enumerate(
                (e, a) for a in attrs for e in ("alan", "bob"))
        )[:13]
        rules = tuple(
            make_rule(f"R{i + 1}", [Literal("someone", attrs[i])], Literal("someone", attrs[i + 1] + "er"))
            for i in range(12)
        ) + (make_rule("R13", [Literal("someone", "calm")], Literal("someone", "safe")),)
        t = Theory("big", facts, rules, ())
        assert len(facts) + len(rules) == 26
        assert any("exceeds 25" in v for v in validate_theory(t))

    def test_duplicate_fact_literal(self):
        t = Theory(
            "t",
            (make_fact("F1", Literal("alan", "blue")),
             make_fact("F2", Literal("alan", "blue"))),
            (), (),
        )
        assert any("duplicate" in v for v in validate_theory(t))

    def test_non_contiguous_ids(self):
        t = Theory("t", (make_fact("F2", Literal("alan", "blue")),), (), ())
        assert any("F2" in v for v in validate_theory(t))

    def test_rule_needs_positive_antecedent_for_variable(self):
        r = make_rule("R1", [Literal("someone", "cold", positive=False)],
                      Literal("someone", "young"))
        t = Theory("t", (make_fact("F1", Literal("alan", "blue")),), (r,), ())
        assert any("positive antecedent" in v for v in validate_theory(t))

    def test_negative_consequent_rejected(self):
        r = Rule(
            "R1",
            (Literal("someone", "blue"),),
            Literal("someone", "kind", positive=False),
            "If someone is blue then they are not kind.",
        )
        t = Theory("t", (make_fact("F1", Literal("alan", "blue")),), (r,), ())
        assert any("must be positive" in v for v in validate_theory(t))

    def test_predicate_cannot_be_attribute_and_relation(self):
        t = Theory(
            "t",
            (make_fact("F1", Literal("alan", "like", "bob")),
             make_fact("F2", Literal("alan", "like"))),
            (), (),
        )
        assert any("with and without" in v for v in validate_theory(t))

    def test_stale_text_flagged(self):
        f = Fact("F1", Literal("alan", "blue"), "Alan is green.")
        t = Theory("t", (f,), (), ())
        assert any("round-trip" in v for v in validate_theory(t))

    def test_gold_depth_mismatch_flagged(self):
        from ruleproofs.proofgraph import ProofGraph
        q = Question("Q1", Literal("alan", "blue"), "Alan is blue.",
                     gold_answer=True,
                     gold_proofs=(ProofGraph.of(["F1"]),),
                     gold_depth=2)
        t = Theory("t", (make_fact("F1", Literal("alan", "blue")),), (), (q,))
        assert any("depth" in v for v in validate_theory(t))


ENTITIES = st.sampled_from(["alan", "bob", "carol", "dave"])
ATTRS = st.sampled_from(["blue", "rough", "young", "kind", "smart", "quiet"])
VERBS = st.sampled_from(["like", "chase", "see", "need"])


@st.composite
def ground_literals(draw):
    if draw(st.booleans()):
        return Literal(draw(ENTITIES), draw(ATTRS), None, draw(st.booleans()))
    return Literal(draw(ENTITIES), draw(VERBS), draw(ENTITIES), draw(st.booleans()))


@st.composite
def rule_literal_sets(draw):
    variable = draw(st.sampled_from(["someone", "something"]))
    ground = draw(st.booleans())
    subject = draw(ENTITIES) if ground else variable

    def lit():
        if draw(st.booleans()):
            return Literal(subject, draw(ATTRS), None, draw(st.booleans()))
        return Literal(subject, draw(VERBS), draw(ENTITIES), draw(st.booleans()))

    antecedents = [lit() for _ in range(draw(st.integers(1, 3)))]
    consequent = lit()
    return antecedents, consequent


class TestRoundTripProperties:
    @given(ground_literals())
    @settings(max_examples=200)
    def test_fact_round_trip(self, lit):
        assert parse_fact_sentence(make_fact("F1", lit).text) == lit

    @given(rule_literal_sets())
    @settings(max_examples=200)
    def test_rule_round_trip(self, parts):
        antecedents, consequent = parts
        rule = make_rule("R1", antecedents, consequent)
        got_ants, got_cons = parse_rule_sentence(rule.text)
        assert got_ants == tuple(antecedents)
        assert got_cons == consequent

    @given(st.text(max_size=60))
    @settings(max_examples=300)
    def test_sentence_fuzz_never_crashes(self, text):
        try:
            parse_sentence(text)
        except TheoryParseError:
            pass

    @given(st.text(max_size=120))
    @settings(max_examples=200)
    def test_theory_fuzz_raises_parse_errors_only(self, text):
        for fmt in ("structured-json", "sentence-text"):
            try:
                parse_theory(text, format=fmt)
            except TheoryParseError:
                pass
