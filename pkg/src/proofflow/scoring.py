"""ProofScore: joint semantic/syntactic/structural scoring.

Per node i the score contributes f_i * c_i * s_i where f_i is judged
semantic faithfulness, c_i the final compilation outcome and s_i the
structural indicator (estimated dependency set found in some ground-truth
graph). Faithfulness aggregates per-component judge ratings with a Sugeno
integral under the cardinality measure mu(A) = |A|/m, with a zero-tolerance
override: any major inconsistency zeroes the node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .gateway import ChatExchange, ChatRequest, Provider, RetryPolicy, retry_with_feedback
from .prompts import PromptLibrary
from .util import extract_json_object

FAITHFULNESS_THRESHOLD = 0.6
DEFAULT_MINOR_WEIGHT = 0.5


class Rating(Enum):
    PERFECT_MATCH = "perfect_match"
    MINOR_INCONSISTENCY = "minor_inconsistency"
    MAJOR_INCONSISTENCY = "major_inconsistency"


@dataclass(frozen=True)
class ComponentVerdict:
    component_text: str
    rating: Rating

    def to_dict(self) -> dict:
        return {"text": self.component_text, "rating": self.rating.value}


class JudgeFailure(Exception):
    """The judge never produced a parseable verdict within the budget."""


def rating_score(rating: Rating, minor_weight: float = DEFAULT_MINOR_WEIGHT) -> float:
    if rating is Rating.PERFECT_MATCH:
        return 1.0
    if rating is Rating.MINOR_INCONSISTENCY:
        return minor_weight
    return 0.0


def sugeno_cardinality(scores: Sequence[float]) -> float:
    """Sugeno integral of the scores under mu(A) = |A|/m: sort descending,
    take max_j min(s_(j), j/m)."""
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    m = len(scores)
    ranked = sorted(scores, reverse=True)
    return max(min(ranked[j - 1], j / m) for j in range(1, m + 1))


def aggregate_faithfulness(
    verdicts: Sequence[ComponentVerdict], minor_weight: float = DEFAULT_MINOR_WEIGHT
) -> float:
    """Zero-tolerance Sugeno aggregation of component verdicts."""
    if not verdicts:
        raise ValueError("cannot aggregate zero verdicts")
    scores = [rating_score(v.rating, minor_weight) for v in verdicts]
    if any(s == 0.0 for s in scores):
        return 0.0
    return sugeno_cardinality(scores)


# ---------------------------------------------------------------------------
# judge

_RATING_VALUES = {r.value for r in Rating}


def parse_judge_payload(text: str) -> list[ComponentVerdict]:
    """Strict reader for the judge's JSON verdict."""
    try:
        payload = extract_json_object(text)
    except ValueError as exc:
        raise ValueError(f"no JSON object in judge response: {exc}") from exc
    data = json.loads(payload)
    if not isinstance(data, dict) or set(data) != {"components"}:
        raise ValueError('judge payload must be exactly {"components": [...]}')
    items = data["components"]
    if not isinstance(items, list) or not items:
        raise ValueError("components must be a non-empty array")
    verdicts = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or set(item) != {"text", "rating"}:
            raise ValueError(f"components[{i}] must have exactly the keys text, rating")
        if not isinstance(item["text"], str) or not item["text"]:
            raise ValueError(f"components[{i}].text must be a non-empty string")
        if item["rating"] not in _RATING_VALUES:
            raise ValueError(
                f"components[{i}].rating must be one of {sorted(_RATING_VALUES)}"
            )
        verdicts.append(ComponentVerdict(item["text"], Rating(item["rating"])))
    return verdicts


def build_judge_request(nls: str, lc: str, prompts: PromptLibrary) -> ChatRequest:
    system, user = prompts.render("judge", nl=nls, formal=lc)
    return ChatRequest(system_prompt=system, messages=(("user", user),))


def judge_components(
    nls: str,
    lc: str,
    provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> list[ComponentVerdict]:
    """Decompose-and-rate call; malformed output is retried with feedback and
    exhaustion raises JudgeFailure (the judge never silently passes)."""
    prompts = prompts or PromptLibrary()
    request = build_judge_request(nls, lc, prompts)
    last: dict = {"verdicts": None}

    def check(text: str) -> str | None:
        try:
            last["verdicts"] = parse_judge_payload(text)
        except ValueError as exc:
            return f"Malformed verdict: {exc}"
        return None

    _, attempts, passed = retry_with_feedback(provider, request, policy, check)
    if not passed:
        raise JudgeFailure(f"judge produced no valid verdict in {len(attempts)} attempts")
    return last["verdicts"]


@dataclass(frozen=True)
class FaithfulnessRecord:
    node_id: str
    verdicts: tuple[ComponentVerdict, ...]
    f: float
    judge_failed: bool = False
    attempts: tuple[ChatExchange, ...] = ()


def faithfulness_for_node(
    node_id: str,
    nls: str,
    lc: str,
    c_formalizer: bool,
    provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
    minor_weight: float = DEFAULT_MINOR_WEIGHT,
) -> FaithfulnessRecord:
    """Judge one node. Nodes whose statement failed the syntax check score
    f=0 without consulting the judge; judge exhaustion scores f=0 but is
    flagged so coverage can be reported."""
    if not c_formalizer:
        return FaithfulnessRecord(node_id=node_id, verdicts=(), f=0.0)
    try:
        verdicts = judge_components(nls, lc, provider, policy, prompts)
    except JudgeFailure:
        return FaithfulnessRecord(node_id=node_id, verdicts=(), f=0.0, judge_failed=True)
    f = aggregate_faithfulness(verdicts, minor_weight)
    return FaithfulnessRecord(node_id=node_id, verdicts=tuple(verdicts), f=f)


# ---------------------------------------------------------------------------
# ProofScore


def proof_score(
    f: Mapping[str, float],
    c: Mapping[str, bool],
    structural: Mapping[str, bool],
) -> float:
    """(1/n) * sum_i f_i * c_i * s_i over the shared key set."""
    if not f:
        raise ValueError("proof_score needs at least one node")
    if set(f) != set(c) or set(f) != set(structural):
        raise ValueError(
            f"key sets differ: f={sorted(f)}, c={sorted(c)}, structural={sorted(structural)}"
        )
    total = 0.0
    for node_id, f_i in f.items():
        if not 0.0 <= f_i <= 1.0:
            raise ValueError(f"f[{node_id}]={f_i} outside [0, 1]")
        total += f_i * (1.0 if c[node_id] else 0.0) * (1.0 if structural[node_id] else 0.0)
    return total / len(f)


@dataclass(frozen=True)
class NodeScore:
    node_id: str
    f: float
    c: bool
    structural: bool
    kind: str
    error_source: str = ""
    judge_failed: bool = False


@dataclass(frozen=True)
class ScoreReport:
    problem: str
    mode: str
    n: int
    proofscore: float
    nodes: tuple[NodeScore, ...]

    def to_dict(self) -> dict:
        """score.json exchange shape; key set is pinned by the interface."""
        return {
            "problem": self.problem,
            "mode": self.mode,
            "n": self.n,
            "proofscore": self.proofscore,
            "nodes": [
                {
                    "id": s.node_id,
                    "f": s.f,
                    "c": s.c,
                    "structural": s.structural,
                    "error_source": s.error_source,
                }
                for s in self.nodes
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "ScoreReport":
        return ScoreReport(
            problem=data["problem"],
            mode=data["mode"],
            n=data["n"],
            proofscore=data["proofscore"],
            nodes=tuple(
                NodeScore(
                    node_id=s["id"],
                    f=s["f"],
                    c=s["c"],
                    structural=s["structural"],
                    kind=s.get("kind", ""),
                    error_source=s.get("error_source", ""),
                )
                for s in data["nodes"]
            ),
        )


def assemble_report(
    problem: str,
    mode: str,
    node_scores: Sequence[NodeScore],
) -> ScoreReport:
    f = {s.node_id: s.f for s in node_scores}
    c = {s.node_id: s.c for s in node_scores}
    structural = {s.node_id: s.structural for s in node_scores}
    return ScoreReport(
        problem=problem,
        mode=mode,
        n=len(node_scores),
        proofscore=proof_score(f, c, structural),
        nodes=tuple(node_scores),
    )


# ---------------------------------------------------------------------------
# baseline scoring

FULL_PROOF_NODE_ID = "PROOF"


def score_baseline(
    kind,
    problem,
    run,
    provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
    minor_weight: float = DEFAULT_MINOR_WEIGHT,
) -> ScoreReport:
    """Adapted scoring for baselines, which have no dependency graph.

    FullProof: a compiling proof is judged once against theorem+proof text
    (n=1); a non-compiling one scores 0. StepProof: each step is judged
    against its own NL step; failed or unattempted steps score 0 and the
    report averages over all steps.
    """
    from .baselines import BaselineKind

    if kind is BaselineKind.FULL_PROOF:
        unit = run.units[0]
        if unit.ok:
            nls = f"{problem.theorem_nl}\n\n{problem.proof_nl}"
            record = faithfulness_for_node(
                FULL_PROOF_NODE_ID, nls, unit.source, True, provider, policy, prompts,
                minor_weight,
            )
            f_value, judge_failed = record.f, record.judge_failed
        else:
            f_value, judge_failed = 0.0, False
        node = NodeScore(
            node_id=FULL_PROOF_NODE_ID,
            f=f_value,
            c=unit.ok,
            structural=True,
            kind="PROOF",
            error_source="",
            judge_failed=judge_failed,
        )
        return assemble_report(problem.id, "full", [node])

    nodes = []
    for unit, step_nl in zip(run.units, problem.proof_steps):
        step_id = f"S{unit.index + 1}"
        if unit.ok:
            record = faithfulness_for_node(
                step_id, step_nl, unit.block, True, provider, policy, prompts, minor_weight
            )
            f_value, judge_failed = record.f, record.judge_failed
        else:
            f_value, judge_failed = 0.0, False
        nodes.append(
            NodeScore(
                node_id=step_id,
                f=f_value,
                c=unit.ok,
                structural=True,
                kind="STEP",
                error_source="",
                judge_failed=judge_failed,
            )
        )
    return assemble_report(problem.id, "step", nodes)


# ---------------------------------------------------------------------------
# structural judging without ground truth


def build_structural_request(
    proof_nl: str, node_id: str, statement_nl: str, premises: Sequence[str], prompts: PromptLibrary
) -> ChatRequest:
    system, user = prompts.render(
        "structural_judge",
        proof=proof_nl,
        node_id=node_id,
        statement=statement_nl,
        premises=", ".join(premises) if premises else "(none)",
    )
    return ChatRequest(system_prompt=system, messages=(("user", user),))


def judge_structural(
    proof_nl: str,
    node_id: str,
    statement_nl: str,
    premises: Sequence[str],
    provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary | None = None,
) -> bool:
    """Fallback structural check when no ground-truth graphs exist."""
    prompts = prompts or PromptLibrary()
    request = build_structural_request(proof_nl, node_id, statement_nl, premises, prompts)
    last: dict = {"ok": False}

    def check(text: str) -> str | None:
        try:
            data = json.loads(extract_json_object(text))
        except (ValueError, json.JSONDecodeError) as exc:
            return f"Malformed answer: {exc}"
        if not isinstance(data, dict) or set(data) != {"structural_ok"} or not isinstance(
            data["structural_ok"], bool
        ):
            return 'Answer must be exactly {"structural_ok": true} or {"structural_ok": false}'
        last["ok"] = data["structural_ok"]
        return None

    _, _, passed = retry_with_feedback(provider, request, policy, check)
    if not passed:
        raise JudgeFailure("structural judge produced no valid verdict")
    return bool(last["ok"])
