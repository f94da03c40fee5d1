"""proofflow: structure-preserving proof autoformalization pipeline."""

__version__ = "0.1.0"

from .graph import (  # noqa: F401
    DependencyMatch,
    GraphSchemaError,
    GraphValidationError,
    GraphViolation,
    NodeKind,
    ProofGraph,
    ProofNode,
    ViolationCode,
    dependency_sets,
    graph_from_dict,
    graph_from_json,
    graph_to_dict,
    graph_to_json,
    match_dependencies,
    topological_order,
    validate_graph,
)
