"""Stage 2: per-node formal statement generation.

Each node becomes a self-contained Lean declaration. Provable nodes (lemma,
theorem solution) end in the `by sorry` placeholder so only the statement
is checked; theorem conditions and definitions become plain declarations.
Premise selection is the heart of the ablation: DagStrict injects exactly
deps(v), AllPrevious injects every earlier node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .gateway import ChatExchange, ChatRequest, Provider, RetryPolicy, retry_with_feedback
from .graph import NodeKind, ProofGraph, ProofNode
from .prompts import PromptLibrary
from .util import extract_code_block
from .verifier import (
    Diagnostic,
    VerifierReport,
    contains_placeholder,
    first_error_summary,
    make_unit,
)

PREMISE_HEADER_RE = re.compile(r"^### Premise (\S+?)( \(unverified\))?$", re.MULTILINE)


class PremiseMode(Enum):
    DAG_STRICT = "dag"
    ALL_PREVIOUS = "all_previous"


@dataclass(frozen=True)
class FormalizedNode:
    node_id: str
    kind: NodeKind
    statement_source: str
    premises_used: tuple[str, ...]
    c_formalizer: bool
    attempts: tuple[ChatExchange, ...]
    diagnostics: tuple[Diagnostic, ...] = ()
    verifier_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "kind": self.kind.value,
            "statement_source": self.statement_source,
            "premises_used": list(self.premises_used),
            "c_formalizer": self.c_formalizer,
            "attempts": [a.to_dict() for a in self.attempts],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "verifier_ms": self.verifier_ms,
        }

    @staticmethod
    def from_dict(data: dict) -> "FormalizedNode":
        return FormalizedNode(
            node_id=data["node_id"],
            kind=NodeKind(data["kind"]),
            statement_source=data["statement_source"],
            premises_used=tuple(data["premises_used"]),
            c_formalizer=data["c_formalizer"],
            attempts=tuple(ChatExchange.from_dict(a) for a in data["attempts"]),
            diagnostics=tuple(
                Diagnostic(d["severity"], d["line"], d["col"], d["message"])
                for d in data["diagnostics"]
            ),
            verifier_ms=data.get("verifier_ms", 0),
        )


def permitted_premises(node: ProofNode, graph: ProofGraph, mode: PremiseMode) -> list[str]:
    """Premise ids the mode allows for this node, in declaration order."""
    if mode is PremiseMode.DAG_STRICT:
        order = {nid: i for i, nid in enumerate(graph.node_ids())}
        return sorted(node.deps, key=lambda d: order.get(d, 1 << 30))
    out = []
    for other in graph.nodes:
        if other.id == node.id:
            break
        out.append(other.id)
    return out


def render_premise_block(premises: Sequence[tuple[str, str, bool]]) -> str:
    """One section per premise: id header (tagged when its own verification
    failed) followed by its formal statement."""
    if not premises:
        return "(none)"
    parts = []
    for pid, source, verified in premises:
        tag = "" if verified else " (unverified)"
        parts.append(f"### Premise {pid}{tag}\n{source}")
    return "\n\n".join(parts)


def premise_ids_in_prompt(user_text: str) -> list[str]:
    """Inverse of render_premise_block, for tests and audits."""
    return [m.group(1) for m in PREMISE_HEADER_RE.finditer(user_text)]


def build_request(
    node: ProofNode,
    premises: Sequence[tuple[str, str, bool]],
    prompts: PromptLibrary,
    temperature: float = 0.0,
    max_tokens: int = 4096,
) -> ChatRequest:
    template = "formalizer_lemma" if node.kind.provable else "formalizer_hypothesis"
    system, user = prompts.render(
        template,
        node_id=node.id,
        statement=node.nl_self_contained,
        premises=render_premise_block(premises),
    )
    return ChatRequest(
        system_prompt=system,
        messages=(("user", user),),
        temperature=temperature,
        max_tokens=max_tokens,
    )


def extract_premises_used(statement_source: str, permitted: Sequence[str]) -> tuple[str, ...]:
    """Premises referenced as h_<id> hypothesis binders in the statement."""
    used = []
    for pid in permitted:
        if re.search(rf"\bh_{re.escape(pid)}\b", statement_source):
            used.append(pid)
    return tuple(used)


def formalize_node(
    node: ProofNode,
    graph: ProofGraph,
    prior: Mapping[str, FormalizedNode],
    mode: PremiseMode,
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> FormalizedNode:
    """Formalize one node given every already-formalized predecessor.

    A failed premise does not abort this node: its best-attempt statement is
    still injected, tagged unverified, so one bad node cannot cascade into
    skipping the whole graph.
    """
    prompts = prompts or PromptLibrary()
    permitted = permitted_premises(node, graph, mode)
    missing = [p for p in permitted if p not in prior]
    if missing:
        raise ValueError(f"node {node.id}: premises not yet formalized: {missing}")
    premise_rows = [
        (pid, prior[pid].statement_source, prior[pid].c_formalizer) for pid in permitted
    ]
    request = build_request(node, premise_rows, prompts)

    last: dict[str, object] = {"source": "", "report": None}

    def check(text: str) -> str | None:
        source = extract_code_block(text)
        last["source"] = source
        if not source:
            return "The response contained no code."
        if node.kind.provable and not contains_placeholder(source):
            return "The statement must end with `:= by sorry`; do not prove it yet."
        if not node.kind.provable and contains_placeholder(source):
            return "This declaration is assumed context; it must not contain `sorry`."
        report = verifier.check(make_unit(source, unit_id=f"{node.id}.formal"))
        last["report"] = report
        last["verifier_ms"] = last.get("verifier_ms", 0) + report.elapsed_ms
        if not report.ok:
            return first_error_summary(report)
        return None

    _, attempts, passed = retry_with_feedback(provider, request, policy, check)
    report = last["report"]
    diagnostics: tuple[Diagnostic, ...] = ()
    if isinstance(report, VerifierReport) and not passed:
        diagnostics = report.diagnostics
    source = str(last["source"])
    return FormalizedNode(
        node_id=node.id,
        kind=node.kind,
        statement_source=source,
        premises_used=extract_premises_used(source, permitted),
        c_formalizer=passed,
        attempts=tuple(attempts),
        diagnostics=diagnostics,
        verifier_ms=int(last.get("verifier_ms", 0)),
    )


def formalize_graph(
    graph: ProofGraph,
    mode: PremiseMode,
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> dict[str, FormalizedNode]:
    """Formalize every node in declaration (= topological) order."""
    prompts = prompts or PromptLibrary()
    done: dict[str, FormalizedNode] = {}
    for node in graph.nodes:
        done[node.id] = formalize_node(
            node, graph, done, mode, provider, verifier, policy, prompts
        )
    return done
