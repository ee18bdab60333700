"""Batch command line over JSONL streams.

Every subcommand reads and writes the line-delimited formats of the
library modules, defaulting to stdin/stdout so commands can be piped:

    ruleproofs generate --config du3.json --seed 7 -o data/
    ruleproofs oracle-potentials --seed 1 --noise 0 data/test.theories.jsonl |
        ruleproofs decode --theories data/test.theories.jsonl |
        ruleproofs eval --theories data/test.theories.jsonl

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Optional

import numpy as np

from . import datagen, decoder, evalharness, potentials, reasoner, proofgraph, theory as theory_mod

USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _open_input(path: Optional[str]) -> IO[str]:
    if path in (None, "-"):
        return sys.stdin
    return open(path, "r", encoding="utf-8")


@contextmanager
def _open_output(path: Optional[str]):
    """Standard output is yielded but never closed."""
    if path in (None, "-"):
        yield sys.stdout
    else:
        fp = open(path, "w", encoding="utf-8")
        try:
            yield fp
        finally:
            fp.close()


def _load_theories(path: Optional[str]) -> list[theory_mod.Theory]:
    fp = _open_input(path)
    try:
        return list(theory_mod.read_theories(fp))
    finally:
        if fp is not sys.stdin:
            fp.close()


def _map_ordered(fn, items: list, threads: int) -> list:
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _add_io(parser, input_help="input file (default: stdin)"):
    parser.add_argument("input", nargs="?", default=None, help=input_help)
    parser.add_argument("-o", "--output", default=None, help="output file (default: stdout)")


def _add_threads(parser):
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads; output order is always input order")


def build_parser() -> _Parser:
    parser = _Parser(prog="ruleproofs", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a dataset with gold proofs")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--seed", type=int, required=True, help="overrides the config seed")
    p.add_argument("-o", "--out-dir", required=True)

    p = sub.add_parser("answer", help="answer every question with the reasoner")
    _add_io(p)
    _add_threads(p)

    p = sub.add_parser("prove", help="emit gold proofs for every question")
    _add_io(p)
    _add_threads(p)
    p.add_argument("--max-proofs", type=int, default=reasoner.DEFAULT_MAX_PROOFS)

    p = sub.add_parser("mask-export", help="export training labels (masked cells are -100)")
    _add_io(p)

    p = sub.add_parser("oracle-potentials", help="noisy indicator potentials from gold proofs")
    _add_io(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0, help="mean perturbation, in [0, 0.5)")
    p.add_argument("--adversarial", action="store_true",
                   help="exact potentials with one bridging gold edge pushed under threshold")

    p = sub.add_parser("train-baseline", help="fit the lexical edge scorer")
    _add_io(p, input_help="training theories (default: stdin)")
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("score-edges", help="score unmasked edge cells with a scorer")
    _add_io(p, input_help="theories with gold proofs (default: stdin)")
    p.add_argument("--scorer", required=True, help="scorer JSON from train-baseline")
    p.add_argument("--emit-potentials", action="store_true",
                   help="emit decodable potentials instead of per-cell scores")

    p = sub.add_parser("decode", help="decode proofs from potentials")
    _add_io(p, input_help="potentials file (default: stdin)")
    _add_threads(p)
    p.add_argument("--theories", required=True,
                   help="dataset the potentials refer to (for answers and sentence layout)")
    p.add_argument("--no-connectivity", action="store_true",
                   help="drop the connectivity constraint (ablation)")
    p.add_argument("--unconstrained", action="store_true",
                   help="threshold all pairs with no constraints at all (ablation)")

    p = sub.add_parser("eval", help="score predictions and print a report")
    _add_io(p, input_help="predictions file (default: stdin)")
    p.add_argument("--theories", required=True)
    p.add_argument("--label", default="default")
    p.add_argument("--json", dest="json_out", default=None,
                   help="also write the report as JSON to this path")

    p = sub.add_parser("critical", help="sentences whose removal flips each answer")
    _add_io(p)
    _add_threads(p)

    p = sub.add_parser("render-dot", help="write one DOT file per gold proof")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("-o", "--out-dir", required=True)
    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fp:
        raw = json.load(fp)
    raw["seed"] = args.seed
    cfg = datagen.GenConfig.from_dict(raw)
    bundle = datagen.generate_dataset(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split in ("train", "dev", "test"):
        with open(out / f"{split}.theories.jsonl", "w", encoding="utf-8") as fp:
            theory_mod.write_theories(fp, bundle.split(split))
    with open(out / "manifest.json", "w", encoding="utf-8") as fp:
        json.dump(bundle.manifest, fp, indent=2)
        fp.write("\n")
    return 0


def _cmd_answer(args) -> int:
    theories = _load_theories(args.input)

    def answer_one(t):
        c = reasoner.closure(t)
        return [
            {"theory_id": t.id, "question_id": q.id,
             "answer": reasoner.holds_under_cwa(t, c, q.literal)}
            for q in t.questions
        ]

    rows = _map_ordered(answer_one, theories, args.threads)
    with _open_output(args.output) as fp:
        for group in rows:
            for row in group:
                fp.write(json.dumps(row) + "\n")
    return 0


def _cmd_prove(args) -> int:
    theories = _load_theories(args.input)

    def prove_one(t):
        c = reasoner.closure(t)
        out = []
        for q in t.questions:
            proofs = reasoner.prove_literal(t, c, q.literal, args.max_proofs)
            out.append({
                "theory_id": t.id,
                "question_id": q.id,
                "proofs": [p.to_dict() for p in proofs],
                "depth": max(proofgraph.proof_depth(p) for p in proofs),
            })
        return out

    rows = _map_ordered(prove_one, theories, args.threads)
    with _open_output(args.output) as fp:
        for group in rows:
            for row in group:
                fp.write(json.dumps(row) + "\n")
    return 0


def _require_gold(t, q):
    if not q.gold_proofs:
        raise evalharness.EvaluationError(
            f"question {t.id}/{q.id} has no gold proofs; run prove or regenerate")


def _cmd_mask_export(args) -> int:
    theories = _load_theories(args.input)
    with _open_output(args.output) as fp:
        for t in theories:
            for q in t.questions:
                _require_gold(t, q)
                gold = q.gold_proofs[0]
                mask = potentials.build_edge_mask(t, gold)
                fp.write(json.dumps({
                    "theory_id": t.id,
                    "question_id": q.id,
                    "qa_label": int(bool(q.gold_answer)),
                    "node_labels": potentials.node_labels(t, gold).tolist(),
                    "edge_labels": mask.label.tolist(),
                }) + "\n")
    return 0


def _cmd_oracle_potentials(args) -> int:
    theories = _load_theories(args.input)
    with _open_output(args.output) as fp:
        question_counter = 0
        for t in theories:
            for q in t.questions:
                _require_gold(t, q)
                gold = q.gold_proofs[0]
                if args.adversarial:
                    pot = potentials.adversarial_potentials(t, gold)
                else:
                    seed = [args.seed, question_counter]
                    pot = potentials.oracle_potentials(t, gold, args.noise, seed)
                question_counter += 1
                fp.write(json.dumps({
                    "theory_id": t.id,
                    "question_id": q.id,
                    "node_prob": [float(x) for x in pot.node_prob],
                    "edge_prob": [[float(x) for x in row] for row in pot.edge_prob],
                }) + "\n")
    return 0


def _cmd_train_baseline(args) -> int:
    theories = _load_theories(args.input)
    train = potentials.make_edge_training_set(theories)
    config = potentials.ScorerConfig(args.learning_rate, args.epochs, args.seed)
    scorer = potentials.fit_linear_scorer(train, config)
    with _open_output(args.output) as fp:
        fp.write(json.dumps(scorer.to_dict()) + "\n")
    return 0


def _cmd_score_edges(args) -> int:
    with open(args.scorer, "r", encoding="utf-8") as fp:
        scorer = potentials.LinearScorer.from_dict(json.load(fp))
    theories = _load_theories(args.input)
    correct = 0
    total = 0
    with _open_output(args.output) as fp:
        for t in theories:
            if args.emit_potentials:
                pot = potentials.scorer_potentials(t, scorer)
                for q in t.questions:
                    fp.write(json.dumps({
                        "theory_id": t.id,
                        "question_id": q.id,
                        "node_prob": [float(x) for x in pot.node_prob],
                        "edge_prob": [[float(x) for x in row] for row in pot.edge_prob],
                    }) + "\n")
                continue
            for q in t.questions:
                _require_gold(t, q)
                cells = []
                for src, dst, label in potentials.edge_training_pairs(t, q):
                    prob = scorer.score(potentials.lexical_edge_features(t, src, dst))
                    predicted = int(prob >= 0.5)
                    correct += int(predicted == label)
                    total += 1
                    cells.append({"src": src, "dst": dst, "prob": round(prob, 6),
                                  "label": label})
                fp.write(json.dumps({
                    "theory_id": t.id, "question_id": q.id, "cells": cells,
                }) + "\n")
    if not args.emit_potentials and total:
        print(f"edge-label accuracy: {correct / total:.4f} ({correct}/{total})",
              file=sys.stderr)
    return 0


def _read_potentials(path, theories_by_id):
    fp = _open_input(path)
    try:
        for line_no, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                t = theories_by_id[record["theory_id"]]
                pot = potentials.Potentials(
                    np.asarray(record["node_prob"], dtype=float),
                    np.asarray(record["edge_prob"], dtype=float),
                    len(t.facts),
                )
                yield t, record["question_id"], pot
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise evalharness.EvaluationError(
                    f"bad potentials record on line {line_no}: {exc}") from exc
    finally:
        if fp is not sys.stdin:
            fp.close()


def _cmd_decode(args) -> int:
    theories = {t.id: t for t in _load_theories(args.theories)}
    records = list(_read_potentials(args.input, theories))

    answers: dict[str, dict[str, bool]] = {}
    for t, question_id, _pot in records:
        if question_id not in {q.id for q in t.questions}:
            raise evalharness.EvaluationError(
                f"potentials reference unknown question {t.id}/{question_id}")
        if t.id not in answers:
            c = reasoner.closure(t)
            answers[t.id] = {
                q.id: reasoner.holds_under_cwa(t, c, q.literal) for q in t.questions
            }

    def decode_one(item):
        t, question_id, pot = item
        if args.unconstrained:
            result = decoder.decode_unconstrained(pot)
        else:
            result = decoder.decode_with_fallback(pot, connectivity=not args.no_connectivity)
        d = result.proof.to_dict()
        return {
            "theory_id": t.id,
            "question_id": question_id,
            "answer": answers[t.id][question_id],
            "nodes": d["nodes"],
            "edges": d["edges"],
            "objective": result.objective,
            "connectivity_relaxed": result.connectivity_relaxed,
        }

    rows = _map_ordered(decode_one, records, args.threads)
    with _open_output(args.output) as fp:
        for row in rows:
            fp.write(json.dumps(row) + "\n")
    return 0


def _cmd_eval(args) -> int:
    theories = _load_theories(args.theories)
    fp = _open_input(args.input)
    try:
        predictions = evalharness.read_predictions(fp)
    finally:
        if fp is not sys.stdin:
            fp.close()
    report = evalharness.aggregate_report(theories, predictions, args.label)
    with _open_output(args.output) as fp:
        fp.write(report.to_text())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fp:
            json.dump(report.to_dict(), fp, indent=2)
            fp.write("\n")
    return 0


def _cmd_critical(args) -> int:
    theories = _load_theories(args.input)

    def critical_one(t):
        return [
            {"theory_id": t.id, "question_id": q.id,
             "critical": sorted(reasoner.critical_sentences(t, q),
                                key=proofgraph.node_sort_key)}
            for q in t.questions
        ]

    rows = _map_ordered(critical_one, theories, args.threads)
    with _open_output(args.output) as fp:
        for group in rows:
            for row in group:
                fp.write(json.dumps(row) + "\n")
    return 0


def _cmd_render_dot(args) -> int:
    theories = _load_theories(args.input)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for t in theories:
        for q in t.questions:
            _require_gold(t, q)
            for i, proof in enumerate(q.gold_proofs, start=1):
                name = f"{t.id}_{q.id}_p{i}.dot"
                (out / name).write_text(
                    proofgraph.to_dot(proof, title=f"{t.id}/{q.id}#{i}"),
                    encoding="utf-8")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "answer": _cmd_answer,
    "prove": _cmd_prove,
    "mask-export": _cmd_mask_export,
    "oracle-potentials": _cmd_oracle_potentials,
    "train-baseline": _cmd_train_baseline,
    "score-edges": _cmd_score_edges,
    "decode": _cmd_decode,
    "eval": _cmd_eval,
    "critical": _cmd_critical,
    "render-dot": _cmd_render_dot,
}

_DATA_ERRORS = (
    theory_mod.TheoryParseError,
    evalharness.EvaluationError,
    reasoner.NonStratifiedTheory,
    datagen.GenerationError,
    json.JSONDecodeError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def run_command(argv: list[str]) -> int:
    """Parse argv and run one subcommand, mapping failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return _COMMANDS[args.command](args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (AssertionError, reasoner.IterationBoundExceeded) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


def main() -> None:
    try:
        sys.exit(run_command(sys.argv[1:]))
    except SystemExit:
        raise
    except BrokenPipeError:
        sys.exit(0)


if __name__ == "__main__":
    main()
