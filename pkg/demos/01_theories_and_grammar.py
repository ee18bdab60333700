"""Build a theory by hand, render it, and round-trip it through the grammar.

A theory is a tiny rule-base: named facts, if-then rules, and questions.
Every item keeps a structured literal form plus a rendered sentence, and
the two stay interconvertible.
"""

import json

from ruleproofs.theory import (
    Literal,
    Theory,
    make_fact,
    make_question,
    make_rule,
    parse_sentence,
    parse_theory,
    theory_to_record,
    theory_to_text,
    validate_theory,
)

theory = Theory(
    "demo",
    facts=(
        make_fact("F1", Literal("alan", "blue")),
        make_fact("F2", Literal("alan", "like", "bob")),
        make_fact("F3", Literal("carol", "kind", positive=False)),
    ),
    rules=(
        make_rule("R1", [Literal("someone", "blue"), Literal("someone", "like", "bob")],
                  Literal("someone", "young")),
        make_rule("R2", [Literal("someone", "young")], Literal("someone", "happy")),
        make_rule("R3", [Literal("carol", "kind", None, False)], Literal("carol", "quiet")),
    ),
    questions=(
        make_question("Q1", Literal("alan", "happy")),
        make_question("Q2", Literal("carol", "quiet")),
    ),
)

print("Rendered sentences")
for item in (*theory.facts, *theory.rules, *theory.questions):
    print(f"  {item.id}: {item.text}")

print("\nParsing a sentence back into structure")
print(" ", parse_sentence("If someone is blue and likes Bob then they are young."))

print("\nValidation violations:", validate_theory(theory) or "none")

record = theory_to_record(theory)
again = parse_theory(json.dumps(record))
print("JSON round-trip is exact:", again == theory)

text = theory_to_text(theory)
print("\nSentence-text form:")
print(text)
reparsed = parse_theory(text, format="sentence-text")
print("Sentence-text round-trip keeps facts and rules:",
      reparsed.facts == theory.facts and reparsed.rules == theory.rules)
