"""Proof dependency graphs.

A natural-language proof is decomposed into nodes (theorem conditions,
definitions, lemmas, theorem solutions) connected by prerequisite edges:
an edge u -> v means u must be established before v. Declaration order of
the node list doubles as the topological order of a valid graph, so a
valid graph can be processed front to back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence


class NodeKind(Enum):
    THEOREM_CONDITION = "TC"
    DEFINITION = "D"
    LEMMA = "L"
    THEOREM_SOLUTION = "TS"

    @property
    def provable(self) -> bool:
        """Lemmas and theorem solutions carry proof obligations; conditions
        and definitions are assumed context."""
        return self in (NodeKind.LEMMA, NodeKind.THEOREM_SOLUTION)


class ViolationCode(Enum):
    CYCLE = "Cycle"
    FORWARD_REFERENCE = "ForwardReference"
    DANGLING_NON_SOLUTION = "DanglingNonSolution"
    UNKNOWN_DEP = "UnknownDep"
    DUPLICATE_ID = "DuplicateId"
    NO_SOLUTION = "NoSolution"
    SELF_LOOP = "SelfLoop"
    # Emitted by the graph-builder gate, never by validate_graph itself.
    PARSE_FAILURE = "ParseFailure"
    BAD_NODE_ID = "BadNodeId"


@dataclass(frozen=True)
class GraphViolation:
    code: ViolationCode
    node_ids: tuple[str, ...]
    message: str


class GraphSchemaError(ValueError):
    """Raised when graph JSON does not satisfy the exchange schema."""


class GraphValidationError(ValueError):
    def __init__(self, violations: Sequence[GraphViolation]):
        self.violations = tuple(violations)
        super().__init__(
            "graph has violations: " + "; ".join(v.message for v in violations)
        )


@dataclass(frozen=True)
class ProofNode:
    id: str
    kind: NodeKind
    nl_original: str
    nl_self_contained: str
    deps: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id or not self.id.strip():
            raise ValueError("node id must be non-empty")
        if not self.nl_self_contained.strip():
            raise ValueError(f"node {self.id}: nl_self_contained must be non-empty")
        # deps behave as an ordered set; a dep equal to the node's own id is
        # kept so validation can report the self-loop.
        seen: list[str] = []
        for d in self.deps:
            if d not in seen:
                seen.append(d)
        object.__setattr__(self, "deps", tuple(seen))


@dataclass(frozen=True)
class ProofGraph:
    theorem_nl: str
    proof_nl: str
    nodes: tuple[ProofNode, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def get(self, node_id: str) -> ProofNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


# ---------------------------------------------------------------------------
# validation


def _edges(graph: ProofGraph) -> list[tuple[str, str]]:
    """Prerequisite edges (u, v) with u in deps(v), excluding self-loops and
    deps that name no node; those get their own violation codes."""
    ids = set(graph.node_ids())
    out = []
    for v in graph.nodes:
        for u in v.deps:
            if u != v.id and u in ids:
                out.append((u, v.id))
    return out


def _strongly_connected(ids: Sequence[str], edges: Iterable[tuple[str, str]]) -> list[list[str]]:
    """Iterative Tarjan; returns SCCs as lists of node ids."""
    adj: dict[str, list[str]] = {i: [] for i in ids}
    for u, v in edges:
        adj[u].append(v)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0
    for root in ids:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(adj[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
    return sccs


def validate_graph(graph: ProofGraph) -> list[GraphViolation]:
    """Run every structural check and report all independent violations.

    A dep edge that lies on a cycle is reported only through its Cycle
    violation, not additionally as a ForwardReference.
    """
    violations: list[GraphViolation] = []
    order: dict[str, int] = {}
    duplicates: list[str] = []
    for i, node in enumerate(graph.nodes):
        if node.id in order:
            if node.id not in duplicates:
                duplicates.append(node.id)
        else:
            order[node.id] = i
    for dup in duplicates:
        violations.append(
            GraphViolation(
                ViolationCode.DUPLICATE_ID,
                (dup,),
                f"node id {dup} declared more than once",
            )
        )

    known = set(order)
    for node in graph.nodes:
        for d in node.deps:
            if d not in known:
                violations.append(
                    GraphViolation(
                        ViolationCode.UNKNOWN_DEP,
                        (node.id,),
                        f"node {node.id} depends on unknown id {d}",
                    )
                )
        if node.id in node.deps:
            violations.append(
                GraphViolation(
                    ViolationCode.SELF_LOOP,
                    (node.id,),
                    f"node {node.id} depends on itself",
                )
            )

    edges = _edges(graph)
    unique_ids = list(dict.fromkeys(n.id for n in graph.nodes))
    cyclic_scc: dict[str, int] = {}
    for scc_index, comp in enumerate(_strongly_connected(unique_ids, edges)):
        if len(comp) < 2:
            continue
        members = sorted(comp, key=lambda i: order[i])
        for m in members:
            cyclic_scc[m] = scc_index
        violations.append(
            GraphViolation(
                ViolationCode.CYCLE,
                tuple(members),
                "cycle through nodes " + ", ".join(members),
            )
        )

    for node in graph.nodes:
        for d in node.deps:
            if d not in known or d == node.id:
                continue
            if order[d] > order[node.id] and not (
                d in cyclic_scc and cyclic_scc.get(node.id) == cyclic_scc[d]
            ):
                violations.append(
                    GraphViolation(
                        ViolationCode.FORWARD_REFERENCE,
                        (node.id, d),
                        f"node {node.id} references {d}, which is declared later",
                    )
                )

    consumed = {u for u, _ in edges}
    for node in graph.nodes:
        if node.kind is NodeKind.THEOREM_SOLUTION:
            continue
        if node.id not in consumed:
            violations.append(
                GraphViolation(
                    ViolationCode.DANGLING_NON_SOLUTION,
                    (node.id,),
                    f"node {node.id} is not used by any later node",
                )
            )

    if not any(n.kind is NodeKind.THEOREM_SOLUTION for n in graph.nodes):
        violations.append(
            GraphViolation(
                ViolationCode.NO_SOLUTION, (), "graph has no theorem-solution node"
            )
        )
    return violations


def topological_order(graph: ProofGraph) -> list[str]:
    """Declaration order of a valid graph; raises on any violation."""
    violations = validate_graph(graph)
    if violations:
        raise GraphValidationError(violations)
    return graph.node_ids()


def dependency_sets(graph: ProofGraph) -> dict[str, frozenset[str]]:
    return {n.id: frozenset(n.deps) for n in graph.nodes}


@dataclass(frozen=True)
class DependencyMatch:
    node_id: str
    matched: bool
    in_any_truth: bool


def match_dependencies(
    estimated: ProofGraph, truths: Sequence[ProofGraph]
) -> dict[str, DependencyMatch]:
    """Per-node structural check against one or more ground-truth graphs.

    A node matches when some truth graph contains the same id with exactly
    the same dependency set. Ids absent from every truth graph are flagged
    so callers can distinguish "wrong deps" from "no reference to compare".
    """
    truth_sets: list[dict[str, frozenset[str]]] = [dependency_sets(t) for t in truths]
    result: dict[str, DependencyMatch] = {}
    for node in estimated.nodes:
        est = frozenset(node.deps)
        in_truth = any(node.id in ts for ts in truth_sets)
        matched = any(ts.get(node.id) == est for ts in truth_sets)
        result[node.id] = DependencyMatch(node.id, matched, in_truth)
    return result


# ---------------------------------------------------------------------------
# JSON exchange format

_GRAPH_KEYS = {"theorem_nl", "proof_nl", "nodes"}
_NODE_KEYS = {"id", "kind", "nl_original", "nl_self_contained", "deps"}
_KIND_CODES = {k.value for k in NodeKind}


def graph_to_dict(graph: ProofGraph) -> dict[str, Any]:
    return {
        "theorem_nl": graph.theorem_nl,
        "proof_nl": graph.proof_nl,
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "nl_original": n.nl_original,
                "nl_self_contained": n.nl_self_contained,
                "deps": list(n.deps),
            }
            for n in graph.nodes
        ],
    }


def graph_to_json(graph: ProofGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2, ensure_ascii=False)


def graph_from_dict(data: Any) -> ProofGraph:
    """Strict reader for the exchange schema; unknown or missing keys, wrong
    types, and bad kind codes are all named in the error."""
    if not isinstance(data, dict):
        raise GraphSchemaError("graph payload must be a JSON object")
    unknown = set(data) - _GRAPH_KEYS
    if unknown:
        raise GraphSchemaError(f"unknown graph keys: {sorted(unknown)}")
    missing = _GRAPH_KEYS - set(data)
    if missing:
        raise GraphSchemaError(f"missing graph keys: {sorted(missing)}")
    if not isinstance(data["theorem_nl"], str):
        raise GraphSchemaError("theorem_nl must be a string")
    if not isinstance(data["proof_nl"], str):
        raise GraphSchemaError("proof_nl must be a string")
    if not isinstance(data["nodes"], list):
        raise GraphSchemaError("nodes must be an array")
    nodes: list[ProofNode] = []
    for i, raw in enumerate(data["nodes"]):
        where = f"nodes[{i}]"
        if not isinstance(raw, dict):
            raise GraphSchemaError(f"{where} must be an object")
        node_id = raw.get("id")
        label = node_id if isinstance(node_id, str) and node_id else where
        unknown = set(raw) - _NODE_KEYS
        if unknown:
            raise GraphSchemaError(f"node {label}: unknown keys {sorted(unknown)}")
        missing = _NODE_KEYS - set(raw)
        if missing:
            raise GraphSchemaError(f"node {label}: missing keys {sorted(missing)}")
        if not isinstance(node_id, str):
            raise GraphSchemaError(f"{where}: id must be a string")
        if raw["kind"] not in _KIND_CODES:
            raise GraphSchemaError(
                f"node {label}: kind must be one of TC, D, L, TS, got {raw['kind']!r}"
            )
        for key in ("nl_original", "nl_self_contained"):
            if not isinstance(raw[key], str):
                raise GraphSchemaError(f"node {label}: {key} must be a string")
        if not isinstance(raw["deps"], list) or not all(
            isinstance(d, str) for d in raw["deps"]
        ):
            raise GraphSchemaError(f"node {label}: deps must be an array of strings")
        try:
            nodes.append(
                ProofNode(
                    id=node_id,
                    kind=NodeKind(raw["kind"]),
                    nl_original=raw["nl_original"],
                    nl_self_contained=raw["nl_self_contained"],
                    deps=tuple(raw["deps"]),
                )
            )
        except ValueError as exc:
            raise GraphSchemaError(str(exc)) from exc
    return ProofGraph(
        theorem_nl=data["theorem_nl"], proof_nl=data["proof_nl"], nodes=tuple(nodes)
    )


def graph_from_json(text: str) -> ProofGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"invalid JSON: {exc}") from exc
    return graph_from_dict(data)
