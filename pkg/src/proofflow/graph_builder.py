"""Stage 1: natural-language proof -> dependency graph.

The model emits the graph as JSON; parsing is strict, validation is
exhaustive, and any defect is fed back verbatim for self-repair within the
attempt budget. Node ids must follow the TC{i}/D{i}/L{i}/TS naming scheme.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .gateway import ChatExchange, ChatRequest, Provider, RetryPolicy, retry_with_feedback
from .graph import (
    GraphSchemaError,
    GraphViolation,
    NodeKind,
    ProofGraph,
    ViolationCode,
    graph_from_json,
    validate_graph,
)
from .prompts import PromptLibrary
from .util import extract_json_object

ID_RE = re.compile(r"^(TC[1-9]\d*|D[1-9]\d*|L[1-9]\d*|TS(?:[1-9]\d*)?)$")

_PREFIX_KIND = {
    "TC": NodeKind.THEOREM_CONDITION,
    "D": NodeKind.DEFINITION,
    "L": NodeKind.LEMMA,
    "TS": NodeKind.THEOREM_SOLUTION,
}


class GraphParseError(ValueError):
    pass


@dataclass(frozen=True)
class GraphBuildResult:
    graph: ProofGraph | None
    violations: tuple[GraphViolation, ...]
    attempts: tuple[ChatExchange, ...]
    passed: bool


def parse_graph_json(text: str) -> ProofGraph:
    """Parse a model response into a graph: find the first JSON object in the
    text (fences and prose tolerated), then apply the strict schema."""
    try:
        payload = extract_json_object(text)
    except ValueError as exc:
        raise GraphParseError(str(exc)) from exc
    try:
        return graph_from_json(payload)
    except GraphSchemaError as exc:
        raise GraphParseError(str(exc)) from exc


def naming_violations(graph: ProofGraph) -> list[GraphViolation]:
    """Ids must match the TC{i}/D{i}/L{i}/TS scheme and agree with the kind."""
    out = []
    for node in graph.nodes:
        m = ID_RE.match(node.id)
        if not m:
            out.append(
                GraphViolation(
                    ViolationCode.BAD_NODE_ID,
                    (node.id,),
                    f"node id {node.id!r} does not follow the TC1/D1/L1/TS naming scheme",
                )
            )
            continue
        prefix = "TS" if node.id.startswith("TS") else ("TC" if node.id.startswith("TC") else node.id[0])
        if _PREFIX_KIND[prefix] is not node.kind:
            out.append(
                GraphViolation(
                    ViolationCode.BAD_NODE_ID,
                    (node.id,),
                    f"node id {node.id} implies kind {_PREFIX_KIND[prefix].value}, "
                    f"but kind is {node.kind.value}",
                )
            )
    return out


def build_request(
    theorem_nl: str,
    proof_nl: str,
    prompts: PromptLibrary,
    temperature: float = 0.0,
    max_tokens: int = 8192,
) -> ChatRequest:
    system, user = prompts.render("graph_builder", theorem=theorem_nl, proof=proof_nl)
    return ChatRequest(
        system_prompt=system,
        messages=(("user", user),),
        temperature=temperature,
        max_tokens=max_tokens,
    )


def build_graph(
    theorem_nl: str,
    proof_nl: str,
    provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> GraphBuildResult:
    prompts = prompts or PromptLibrary()
    request = build_request(theorem_nl, proof_nl, prompts)

    last: dict[str, object] = {"graph": None, "violations": ()}

    def check(text: str) -> str | None:
        try:
            graph = parse_graph_json(text)
        except GraphParseError as exc:
            last["graph"] = None
            last["violations"] = (
                GraphViolation(ViolationCode.PARSE_FAILURE, (), str(exc)),
            )
            return f"The output is not a valid graph JSON object: {exc}"
        violations = validate_graph(graph) + naming_violations(graph)
        last["graph"] = graph
        last["violations"] = tuple(violations)
        if violations:
            return "The graph violates its structural rules:\n" + "\n".join(
                f"- {v.message}" for v in violations
            )
        return None

    _, attempts, passed = retry_with_feedback(provider, request, policy, check)
    return GraphBuildResult(
        graph=last["graph"],  # type: ignore[arg-type]
        violations=tuple(last["violations"]),  # type: ignore[arg-type]
        attempts=tuple(attempts),
        passed=passed,
    )


def build_result_to_dict(result: GraphBuildResult) -> dict:
    from .graph import graph_to_dict

    return {
        "graph": graph_to_dict(result.graph) if result.graph else None,
        "violations": [
            {"code": v.code.value, "node_ids": list(v.node_ids), "message": v.message}
            for v in result.violations
        ],
        "attempts": [a.to_dict() for a in result.attempts],
        "passed": result.passed,
    }
