"""Rule-base QA with gold proof graphs: generate, decode, evaluate.

The package splits into small layers: ``theory`` (data model and
grammar), ``reasoner`` (answers, proofs, critical sentences),
``proofgraph`` (structure, checking, matching), ``potentials`` (label
masks, oracle potentials, lexical scorer), ``decoder`` (exact
constrained edge decoding), ``datagen`` (synthetic corpora),
``evalharness`` (exact-match metrics), and ``cli`` (JSONL pipelines).
"""

from .theory import (
    Fact,
    Literal,
    Question,
    Rule,
    Theory,
    TheoryParseError,
    parse_theory,
    render_sentence,
    validate_theory,
)
from .proofgraph import ProofGraph, match_proofs, validate_structure, verify_derivation
from .reasoner import (
    Closure,
    NonStratifiedTheory,
    answer_question,
    closure,
    critical_sentences,
    proof_depth,
    prove,
)
from .potentials import (
    EdgeMask,
    FeatureVector,
    LinearScorer,
    MASKED,
    Potentials,
    build_edge_mask,
    fit_linear_scorer,
    lexical_edge_features,
    oracle_potentials,
)
from .decoder import (
    ConnectivityInfeasible,
    DecodeResult,
    IlpInstance,
    build_instance,
    decode_proof,
    decode_unconstrained,
    decode_with_fallback,
    flow_certificate,
    select_nodes,
    verify_flow,
)
from .datagen import GenConfig, generate_dataset, generate_theory
from .evalharness import PredictionRecord, Report, aggregate_report, score_example

__version__ = "0.1.0"

__all__ = [
    "Closure",
    "ConnectivityInfeasible",
    "DecodeResult",
    "EdgeMask",
    "Fact",
    "FeatureVector",
    "GenConfig",
    "IlpInstance",
    "LinearScorer",
    "Literal",
    "MASKED",
    "NonStratifiedTheory",
    "Potentials",
    "PredictionRecord",
    "ProofGraph",
    "Question",
    "Report",
    "Rule",
    "Theory",
    "TheoryParseError",
    "aggregate_report",
    "answer_question",
    "build_edge_mask",
    "build_instance",
    "closure",
    "critical_sentences",
    "decode_proof",
    "decode_unconstrained",
    "decode_with_fallback",
    "fit_linear_scorer",
    "flow_certificate",
    "generate_dataset",
    "generate_theory",
    "lexical_edge_features",
    "match_proofs",
    "oracle_potentials",
    "parse_theory",
    "proof_depth",
    "prove",
    "render_sentence",
    "score_example",
    "select_nodes",
    "validate_structure",
    "validate_theory",
    "verify_derivation",
    "verify_flow",
]
