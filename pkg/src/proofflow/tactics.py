"""Stage 3: tactic completion and the negation probe.

A provable node's verified statement has its `by sorry` placeholder
replaced by model-generated tactics; success requires the verifier to
accept the unit with no placeholder left anywhere (belt and braces: the
verifier's sorry warning AND a literal token scan).

When tactics fail, the negation probe tries to prove the statement's
negation under the same hypotheses. A provable negation means the
formalized statement itself was wrong, which indicts the natural-language
decomposition rather than the tactic search.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .gateway import ChatExchange, ChatRequest, Provider, RetryPolicy, retry_with_feedback
from .prompts import PromptLibrary
from .util import extract_code_block
from .verifier import (
    Diagnostic,
    VerifierReport,
    contains_placeholder,
    first_error_summary,
    make_unit,
)


class HypothesisInconsistencyError(ValueError):
    """A node cannot be both proved and have a provable negation; seeing both
    means the hypotheses are contradictory (or an artifact was corrupted)."""


@dataclass(frozen=True)
class CompletedNode:
    node_id: str
    proof_source: str
    c_tactic: bool
    attempts: tuple[ChatExchange, ...]
    negation_attempted: bool = False
    negation_proved: bool = False
    negation_statement: str = ""
    negation_malformed: bool = False
    negation_attempts: tuple[ChatExchange, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()
    verifier_ms: int = 0

    def __post_init__(self) -> None:
        if self.c_tactic and self.negation_proved:
            raise HypothesisInconsistencyError(
                f"node {self.node_id}: proof and proved negation cannot both hold"
            )

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "proof_source": self.proof_source,
            "c_tactic": self.c_tactic,
            "attempts": [a.to_dict() for a in self.attempts],
            "negation_attempted": self.negation_attempted,
            "negation_proved": self.negation_proved,
            "negation_statement": self.negation_statement,
            "negation_malformed": self.negation_malformed,
            "negation_attempts": [a.to_dict() for a in self.negation_attempts],
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "verifier_ms": self.verifier_ms,
        }

    @staticmethod
    def from_dict(data: dict) -> "CompletedNode":
        return CompletedNode(
            node_id=data["node_id"],
            proof_source=data["proof_source"],
            c_tactic=data["c_tactic"],
            attempts=tuple(ChatExchange.from_dict(a) for a in data["attempts"]),
            negation_attempted=data.get("negation_attempted", False),
            negation_proved=data.get("negation_proved", False),
            negation_statement=data.get("negation_statement", ""),
            negation_malformed=data.get("negation_malformed", False),
            negation_attempts=tuple(
                ChatExchange.from_dict(a) for a in data.get("negation_attempts", ())
            ),
            diagnostics=tuple(
                Diagnostic(d["severity"], d["line"], d["col"], d["message"])
                for d in data.get("diagnostics", ())
            ),
            verifier_ms=data.get("verifier_ms", 0),
        )


@dataclass(frozen=True)
class NegationOutcome:
    statement: str
    proved: bool
    attempts: tuple[ChatExchange, ...]
    malformed: bool
    verifier_ms: int = 0


def build_request(statement_source: str, prompts: PromptLibrary) -> ChatRequest:
    system, user = prompts.render("tactic", statement=statement_source)
    return ChatRequest(system_prompt=system, messages=(("user", user),))


def _tactic_check(verifier, unit_id: str, tally: dict) -> "callable":
    def check(text: str) -> str | None:
        source = extract_code_block(text)
        tally["source"] = source
        if not source:
            return "The response contained no code."
        if contains_placeholder(source):
            return "The proof still contains the `sorry` placeholder; replace it with tactics."
        report = verifier.check(make_unit(source, unit_id=unit_id))
        tally["report"] = report
        tally["verifier_ms"] = tally.get("verifier_ms", 0) + report.elapsed_ms
        if not report.ok:
            return first_error_summary(report)
        if report.contains_sorry_warning:
            return "The verifier reports the proof still relies on `sorry`."
        return None

    return check


def complete_tactics(
    fnode,
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> CompletedNode:
    """Prove one formalized node. Requires a provable kind whose statement
    passed the formalizer's syntax check."""
    if not fnode.kind.provable:
        raise ValueError(f"node {fnode.node_id} has kind {fnode.kind.value}; nothing to prove")
    if not fnode.c_formalizer:
        raise ValueError(f"node {fnode.node_id}: statement failed syntax check; cannot prove")
    prompts = prompts or PromptLibrary()
    request = build_request(fnode.statement_source, prompts)
    tally: dict = {"source": "", "report": None}
    check = _tactic_check(verifier, f"{fnode.node_id}.proof", tally)
    _, attempts, passed = retry_with_feedback(provider, request, policy, check)
    report = tally.get("report")
    diagnostics: tuple[Diagnostic, ...] = ()
    if isinstance(report, VerifierReport) and not passed:
        diagnostics = report.diagnostics
    return CompletedNode(
        node_id=fnode.node_id,
        proof_source=str(tally["source"]),
        c_tactic=passed,
        attempts=tuple(attempts),
        diagnostics=diagnostics,
        verifier_ms=int(tally.get("verifier_ms", 0)),
    )


def prove_negation(
    fnode,
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> NegationOutcome:
    """Two-phase probe: obtain a verified negated statement (same hypotheses,
    negated conclusion, placeholder proof), then try to prove it.

    A negation that never verifies at statement level is marked malformed
    and cannot count as proved.
    """
    prompts = prompts or PromptLibrary()
    verifier_ms = 0

    system, user = prompts.render("negation_statement", statement=fnode.statement_source)
    stmt_request = ChatRequest(system_prompt=system, messages=(("user", user),))
    stmt_tally: dict = {"source": ""}

    def stmt_check(text: str) -> str | None:
        source = extract_code_block(text)
        stmt_tally["source"] = source
        if not source:
            return "The response contained no code."
        if not contains_placeholder(source):
            return "The negated statement must end with `:= by sorry`."
        report = verifier.check(make_unit(source, unit_id=f"{fnode.node_id}.neg"))
        stmt_tally["verifier_ms"] = stmt_tally.get("verifier_ms", 0) + report.elapsed_ms
        if not report.ok:
            return first_error_summary(report)
        return None

    _, stmt_attempts, stmt_ok = retry_with_feedback(provider, stmt_request, policy, stmt_check)
    verifier_ms += int(stmt_tally.get("verifier_ms", 0))
    negation_statement = str(stmt_tally["source"])
    if not stmt_ok:
        return NegationOutcome(
            statement=negation_statement,
            proved=False,
            attempts=tuple(stmt_attempts),
            malformed=True,
            verifier_ms=verifier_ms,
        )

    proof_request = build_request(negation_statement, prompts)
    proof_tally: dict = {"source": "", "report": None}
    check = _tactic_check(verifier, f"{fnode.node_id}.neg.proof", proof_tally)
    _, proof_attempts, proved = retry_with_feedback(provider, proof_request, policy, check)
    verifier_ms += int(proof_tally.get("verifier_ms", 0))
    return NegationOutcome(
        statement=negation_statement,
        proved=proved,
        attempts=tuple(stmt_attempts) + tuple(proof_attempts),
        malformed=False,
        verifier_ms=verifier_ms,
    )


def with_negation(completed: CompletedNode, outcome: NegationOutcome) -> CompletedNode:
    return replace(
        completed,
        negation_attempted=True,
        negation_proved=outcome.proved,
        negation_statement=outcome.statement,
        negation_malformed=outcome.malformed,
        negation_attempts=outcome.attempts,
        verifier_ms=completed.verifier_ms + outcome.verifier_ms,
    )
