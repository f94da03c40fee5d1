"""Whole-proof and step-wise baselines.

FullProof formalizes theorem plus proof in a single generation; StepProof
grows one proof script a step at a time, each increment verified. A step
that exhausts its attempts halts the cascade: later steps are recorded as
failed without being attempted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .gateway import ChatExchange, ChatRequest, Provider, RetryPolicy, retry_with_feedback
from .prompts import PromptLibrary
from .util import extract_code_block
from .verifier import (
    VerifierReport,
    contains_placeholder,
    first_error_summary,
    make_unit,
)


class BaselineKind(Enum):
    FULL_PROOF = "full"
    STEP_PROOF = "step"


@dataclass(frozen=True)
class StepOutcome:
    index: int
    attempted: bool
    ok: bool
    source: str
    block: str
    report: VerifierReport | None
    n_attempts: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "attempted": self.attempted,
            "ok": self.ok,
            "source": self.source,
            "block": self.block,
            "report": self.report.to_dict() if self.report else None,
            "n_attempts": self.n_attempts,
        }

    @staticmethod
    def from_dict(data: dict) -> "StepOutcome":
        return StepOutcome(
            index=data["index"],
            attempted=data["attempted"],
            ok=data["ok"],
            source=data["source"],
            block=data["block"],
            report=VerifierReport.from_dict(data["report"]) if data["report"] else None,
            n_attempts=data.get("n_attempts", 0),
        )


@dataclass(frozen=True)
class BaselineRun:
    kind: BaselineKind
    units: tuple[StepOutcome, ...]
    attempts: tuple[ChatExchange, ...]
    proof_level_ok: bool
    verifier_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "units": [u.to_dict() for u in self.units],
            "attempts": [a.to_dict() for a in self.attempts],
            "proof_level_ok": self.proof_level_ok,
            "verifier_ms": self.verifier_ms,
        }

    @staticmethod
    def from_dict(data: dict) -> "BaselineRun":
        return BaselineRun(
            kind=BaselineKind(data["kind"]),
            units=tuple(StepOutcome.from_dict(u) for u in data["units"]),
            attempts=tuple(ChatExchange.from_dict(a) for a in data["attempts"]),
            proof_level_ok=data["proof_level_ok"],
            verifier_ms=data.get("verifier_ms", 0),
        )


def build_full_request(theorem_nl: str, proof_nl: str, prompts: PromptLibrary) -> ChatRequest:
    system, user = prompts.render("full_proof", theorem=theorem_nl, proof=proof_nl)
    return ChatRequest(system_prompt=system, messages=(("user", user),), max_tokens=8192)


def build_step_request(
    theorem_nl: str, script: str, step_nl: str, first: bool, prompts: PromptLibrary
) -> ChatRequest:
    if first:
        system, user = prompts.render("step_proof_first", theorem=theorem_nl, step=step_nl)
    else:
        system, user = prompts.render("step_proof_next", script=script, step=step_nl)
    return ChatRequest(system_prompt=system, messages=(("user", user),))


def run_full_proof(
    theorem_nl: str,
    proof_nl: str,
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> BaselineRun:
    prompts = prompts or PromptLibrary()
    request = build_full_request(theorem_nl, proof_nl, prompts)
    tally: dict = {"source": "", "report": None, "verifier_ms": 0}

    def check(text: str) -> str | None:
        source = extract_code_block(text)
        tally["source"] = source
        if not source:
            return "The response contained no code."
        if contains_placeholder(source):
            return "The proof must be complete; it still contains `sorry`."
        report = verifier.check(make_unit(source, unit_id="full_proof"))
        tally["report"] = report
        tally["verifier_ms"] += report.elapsed_ms
        if not report.ok:
            return first_error_summary(report)
        return None

    _, attempts, passed = retry_with_feedback(provider, request, policy, check)
    source = str(tally["source"])
    outcome = StepOutcome(
        index=0,
        attempted=True,
        ok=passed,
        source=source,
        block=source,
        report=tally["report"],
        n_attempts=len(attempts),
    )
    return BaselineRun(
        kind=BaselineKind.FULL_PROOF,
        units=(outcome,),
        attempts=tuple(attempts),
        proof_level_ok=passed,
        verifier_ms=int(tally["verifier_ms"]),
    )


def run_step_proof(
    theorem_nl: str,
    proof_steps: Sequence[str],
    provider: Provider,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> BaselineRun:
    if not proof_steps:
        raise ValueError("step proof needs at least one proof step")
    prompts = prompts or PromptLibrary()
    units: list[StepOutcome] = []
    all_attempts: list[ChatExchange] = []
    script = ""
    verifier_ms = 0
    halted = False
    for index, step_nl in enumerate(proof_steps):
        if halted:
            units.append(
                StepOutcome(index=index, attempted=False, ok=False, source="", block="", report=None)
            )
            continue
        first = index == 0
        request = build_step_request(theorem_nl, script, step_nl, first, prompts)
        tally: dict = {"source": "", "block": "", "report": None, "verifier_ms": 0}

        def check(text: str, *, _first=first, _script=script, _tally=tally, _index=index) -> str | None:
            block = extract_code_block(text)
            _tally["block"] = block
            if not block:
                return "The response contained no code."
            if contains_placeholder(block):
                return "Tactic blocks must not contain `sorry`."
            candidate = block if _first else f"{_script}\n{block}"
            _tally["source"] = candidate
            report = verifier.check(make_unit(candidate, unit_id=f"step_{_index + 1}"))
            _tally["report"] = report
            _tally["verifier_ms"] += report.elapsed_ms
            if not report.ok:
                return first_error_summary(report)
            return None

        _, attempts, passed = retry_with_feedback(provider, request, policy, check)
        all_attempts.extend(attempts)
        verifier_ms += int(tally["verifier_ms"])
        units.append(
            StepOutcome(
                index=index,
                attempted=True,
                ok=passed,
                source=str(tally["source"]),
                block=str(tally["block"]),
                report=tally["report"],
                n_attempts=len(attempts),
            )
        )
        if passed:
            script = str(tally["source"])
        else:
            halted = True
    final_ok = all(u.ok for u in units) and not contains_placeholder(script)
    return BaselineRun(
        kind=BaselineKind.STEP_PROOF,
        units=tuple(units),
        attempts=tuple(all_attempts),
        proof_level_ok=final_ok,
        verifier_ms=verifier_ms,
    )
