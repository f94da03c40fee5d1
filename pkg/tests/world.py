"""Deterministic scripted responses for end-to-end tests.

simulate_* walks a problem through the same request builders the pipeline
uses and pairs every request with a canned, verifier-clean answer. Writing
those pairs into a fixture directory gives a provider that replays a whole
run with zero nondeterminism; any drift between the simulation and the real
orchestration surfaces as a fixture miss, not a silent pass.
"""

from __future__ import annotations

import json
from pathlib import Path

from proofflow import baselines as bl
from proofflow import graph_builder as gb
from proofflow import tactics as tc
from proofflow.formalizer import (
    FormalizedNode,
    PremiseMode,
    build_request as formalize_request,
    extract_premises_used,
    permitted_premises,
)
from proofflow.gateway import ChatRequest, record_fixture
from proofflow.graph import ProofGraph, ProofNode, graph_to_dict
from proofflow.pipeline import Strategy
from proofflow.prompts import PromptLibrary
from proofflow.scoring import build_judge_request

Pair = tuple[ChatRequest, str]


def fence(text: str, lang: str = "lean") -> str:
    return f"```{lang}\n{text}\n```"


def canned_statement(node: ProofNode) -> str:
    """A toy formal statement that puts exactly deps(v) into hypothesis
    binders, ends unproven for provable kinds, and passes the mock verifier."""
    if not node.kind.provable:
        return f"def {node.id}_decl : Prop := True"
    binders = "".join(f" (h_{dep} : True)" for dep in node.deps)
    return f"lemma {node.id}{binders} : True := by sorry"


def canned_proof(statement: str) -> str:
    return statement.replace(":= by sorry", ":= by trivial")


def judge_perfect() -> str:
    return json.dumps(
        {
            "components": [
                {"text": "subject matches", "rating": "perfect_match"},
                {"text": "conclusion matches", "rating": "perfect_match"},
            ]
        }
    )


def full_proof_source() -> str:
    return "theorem main : True := by\n  trivial"


def step_block(index: int) -> str:
    # blocks must survive extract_code_block's strip() unchanged, so no
    # leading indentation on the first line
    if index == 0:
        return "theorem main : True := by\n  have s1 : True := trivial"
    return f"have s{index + 1} : True := trivial"


def simulate_pipeline(problem, strategy: Strategy, prompts: PromptLibrary) -> list[Pair]:
    """Request/response pairs for a full happy-path pipeline run + scoring."""
    truth: ProofGraph = problem.truth_graphs[0]
    pairs: list[Pair] = [
        (
            gb.build_request(problem.theorem_nl, problem.proof_nl, prompts),
            fence(json.dumps(graph_to_dict(truth)), "json"),
        )
    ]
    mode = PremiseMode.DAG_STRICT if strategy is Strategy.DAG else PremiseMode.ALL_PREVIOUS
    prior: dict[str, FormalizedNode] = {}
    for node in truth.nodes:
        permitted = permitted_premises(node, truth, mode)
        rows = [(pid, prior[pid].statement_source, prior[pid].c_formalizer) for pid in permitted]
        statement = canned_statement(node)
        pairs.append((formalize_request(node, rows, prompts), fence(statement)))
        prior[node.id] = FormalizedNode(
            node_id=node.id,
            kind=node.kind,
            statement_source=statement,
            premises_used=extract_premises_used(statement, permitted),
            c_formalizer=True,
            attempts=(),
        )
    for node in truth.nodes:
        if node.kind.provable:
            statement = canned_statement(node)
            pairs.append(
                (tc.build_request(statement, prompts), fence(canned_proof(statement)))
            )
    for node in truth.nodes:
        pairs.append(
            (
                build_judge_request(node.nl_self_contained, canned_statement(node), prompts),
                judge_perfect(),
            )
        )
    return pairs


def simulate_baseline(problem, strategy: Strategy, prompts: PromptLibrary) -> list[Pair]:
    pairs: list[Pair] = []
    if strategy is Strategy.FULL:
        source = full_proof_source()
        pairs.append(
            (bl.build_full_request(problem.theorem_nl, problem.proof_nl, prompts), fence(source))
        )
        nls = f"{problem.theorem_nl}\n\n{problem.proof_nl}"
        pairs.append((build_judge_request(nls, source, prompts), judge_perfect()))
        return pairs
    script = ""
    for index, step_nl in enumerate(problem.proof_steps):
        block = step_block(index)
        pairs.append(
            (
                bl.build_step_request(problem.theorem_nl, script, step_nl, index == 0, prompts),
                fence(block),
            )
        )
        script = block if index == 0 else f"{script}\n{block}"
        pairs.append((build_judge_request(step_nl, block, prompts), judge_perfect()))
    return pairs


def simulate(problem, strategy: Strategy, prompts: PromptLibrary) -> list[Pair]:
    if strategy.is_pipeline:
        return simulate_pipeline(problem, strategy, prompts)
    return simulate_baseline(problem, strategy, prompts)


def write_fixtures(pairs: list[Pair], directory: Path) -> Path:
    for req, text in pairs:
        record_fixture(directory, req, text)
    return directory


def fixture_dir_for(problems, strategies, prompts: PromptLibrary, directory: Path) -> Path:
    """One fixture directory answering every request of every (problem,
    strategy) combination."""
    for problem in problems:
        for strategy in strategies:
            write_fixtures(simulate(problem, strategy, prompts), directory)
    return directory


def providers_config_file(fixture_dir: Path, path: Path) -> Path:
    """A providers file whose four stages all replay from fixture_dir."""
    config = {
        "default": {
            "id": "fixture",
            "endpoint": f"fixture:{fixture_dir}",
            "model": "scripted",
            "api_key_env": "",
            "thinking": False,
        }
    }
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path
