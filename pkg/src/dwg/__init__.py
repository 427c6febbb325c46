"""Dialogue workflow graphs: DSL parser, compiler, metrics, and runtime engine."""

from .compiler import (
    ModelMetrics,
    WorkflowIr,
    compile_model,
    compute_metrics,
    emit_dot,
    expand_assertions,
    metrics_from_counts,
)
from .dsl import DslModel, parse_model, parse_model_source, parse_template
from .ontology import (
    FactBase,
    Lexicon,
    OntologySchema,
    OntologyStore,
    load_ontology,
    load_ontology_paths,
    serialize_ontology,
)
from .runtime import DialogueEngine, DialogueState, run_replay

__version__ = "0.1.0"

__all__ = [
    "DialogueEngine",
    "DialogueState",
    "DslModel",
    "FactBase",
    "Lexicon",
    "ModelMetrics",
    "OntologySchema",
    "OntologyStore",
    "WorkflowIr",
    "compile_model",
    "compute_metrics",
    "emit_dot",
    "expand_assertions",
    "load_ontology",
    "load_ontology_paths",
    "metrics_from_counts",
    "parse_model",
    "parse_model_source",
    "parse_template",
    "run_replay",
    "serialize_ontology",
    "__version__",
]
