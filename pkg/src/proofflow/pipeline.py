"""Per-problem orchestration: stages, artifact files, scoring from disk.

Artifact layout inside one problem directory:
  graph.json         dependency graph (exchange schema)
  graph_build.json   full build result: attempts, violations, passed
  {node}.formal.json formalizer record per node
  {node}.proof.json  tactic record per provable node that reached stage 3
  baseline.json      FullProof/StepProof record (baseline strategies only)
  score.json         ScoreReport (written by the scoring pass)

Scoring is a pure function of these files plus the judge; it reruns the
negation probe only when given a prover-side provider, so a plain re-score
never mutates proof artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from . import baselines as bl
from . import graph_builder as gb
from .error_analysis import ErrorSource, classify_node
from .formalizer import FormalizedNode, PremiseMode, formalize_graph
from .gateway import Provider, RetryPolicy
from .graph import NodeKind, ProofGraph, dependency_sets, graph_from_dict, graph_to_dict
from .prompts import PromptLibrary
from .scoring import (
    FAITHFULNESS_THRESHOLD,
    NodeScore,
    ScoreReport,
    faithfulness_for_node,
    judge_structural,
    proof_score,
)
from .tactics import CompletedNode, complete_tactics, prove_negation, with_negation
from .util import read_json, write_json


class Strategy(Enum):
    DAG = "dag"
    NODAG = "nodag"
    FULL = "full"
    STEP = "step"

    @property
    def is_pipeline(self) -> bool:
        return self in (Strategy.DAG, Strategy.NODAG)


@dataclass(frozen=True)
class StageProviders:
    graph_builder: Provider
    formalizer: Provider
    tactic: Provider
    judge: Provider


@dataclass(frozen=True)
class InlineProblem:
    """Ad-hoc problem for `run --theorem/--proof`; no ground truth."""

    id: str
    theorem_nl: str
    proof_nl: str
    proof_steps: tuple[str, ...] = ()
    truth_graphs: tuple[ProofGraph, ...] = ()


class PipelineError(Exception):
    """A stage could not produce artifacts (as opposed to failing a proof)."""


def run_pipeline_stages(
    problem,
    strategy: Strategy,
    providers: StageProviders,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary,
    problem_dir: Path,
) -> bool:
    """Graph build, formalization, tactic completion; returns False when the
    graph stage never produced a valid graph (later stages are skipped)."""
    problem_dir.mkdir(parents=True, exist_ok=True)
    result = gb.build_graph(
        problem.theorem_nl, problem.proof_nl, providers.graph_builder, policy, prompts
    )
    write_json(problem_dir / "graph_build.json", gb.build_result_to_dict(result))
    if result.graph is not None:
        write_json(problem_dir / "graph.json", graph_to_dict(result.graph))
    if not result.passed:
        return False
    graph = result.graph
    assert graph is not None

    mode = PremiseMode.DAG_STRICT if strategy is Strategy.DAG else PremiseMode.ALL_PREVIOUS
    formalized = formalize_graph(graph, mode, providers.formalizer, verifier, policy, prompts)
    for node_id, record in formalized.items():
        write_json(problem_dir / f"{node_id}.formal.json", record.to_dict())

    for node in graph.nodes:
        record = formalized[node.id]
        if not node.kind.provable or not record.c_formalizer:
            continue
        completed = complete_tactics(record, providers.tactic, verifier, policy, prompts)
        write_json(problem_dir / f"{node.id}.proof.json", completed.to_dict())
    return True


def run_baseline_stages(
    problem,
    strategy: Strategy,
    providers: StageProviders,
    verifier,
    policy: RetryPolicy,
    prompts: PromptLibrary,
    problem_dir: Path,
) -> bool:
    problem_dir.mkdir(parents=True, exist_ok=True)
    if strategy is Strategy.FULL:
        run = bl.run_full_proof(
            problem.theorem_nl, problem.proof_nl, providers.formalizer, verifier, policy, prompts
        )
    else:
        steps = list(problem.proof_steps)
        if not steps:
            raise PipelineError(f"problem {problem.id} has no proof_steps for the step baseline")
        run = bl.run_step_proof(
            problem.theorem_nl, steps, providers.formalizer, verifier, policy, prompts
        )
    write_json(problem_dir / "baseline.json", run.to_dict())
    return True


def load_graph(problem_dir: Path) -> ProofGraph:
    return graph_from_dict(read_json(problem_dir / "graph.json"))


def load_formalized(problem_dir: Path, node_id: str) -> FormalizedNode:
    return FormalizedNode.from_dict(read_json(problem_dir / f"{node_id}.formal.json"))


def load_completed(problem_dir: Path, node_id: str) -> CompletedNode | None:
    path = problem_dir / f"{node_id}.proof.json"
    if not path.exists():
        return None
    return CompletedNode.from_dict(read_json(path))


def _structural_flag(
    strategy: Strategy,
    node_id: str,
    premises_used: Sequence[str],
    truth_graphs: Sequence[ProofGraph],
    fallback: Callable[[str, Sequence[str]], bool] | None,
) -> bool:
    if strategy is Strategy.DAG:
        # premise injection was restricted to deps(v), so structure is
        # correct by construction
        return True
    est = frozenset(premises_used)
    if truth_graphs:
        for truth in truth_graphs:
            sets = dependency_sets(truth)
            if node_id in sets and sets[node_id] == est:
                return True
        return False
    if fallback is None:
        return False
    return fallback(node_id, premises_used)


def score_problem(
    problem,
    strategy: Strategy,
    problem_dir: Path,
    judge_provider: Provider,
    policy: RetryPolicy,
    prompts: PromptLibrary,
    tactic_provider: Provider | None = None,
    verifier=None,
    score_provable_only: bool = False,
    minor_weight: float = 0.5,
    threshold: float = FAITHFULNESS_THRESHOLD,
) -> ScoreReport:
    """Judge faithfulness, run due negation probes, classify error sources,
    and write score.json. Reads every pipeline fact from the artifact files."""
    if strategy in (Strategy.FULL, Strategy.STEP):
        from .scoring import score_baseline

        run = bl.BaselineRun.from_dict(read_json(problem_dir / "baseline.json"))
        report = score_baseline(
            run.kind, problem, run, judge_provider, policy, prompts, minor_weight
        )
        write_json(problem_dir / "score.json", report.to_dict())
        return report

    graph = load_graph(problem_dir)
    truth_graphs = tuple(getattr(problem, "truth_graphs", ()) or ())

    def structural_fallback(node_id: str, premises: Sequence[str]) -> bool:
        node = graph.get(node_id)
        return judge_structural(
            problem.proof_nl,
            node_id,
            node.nl_self_contained,
            premises,
            judge_provider,
            policy,
            prompts,
        )

    scores: list[NodeScore] = []
    for node in graph.nodes:
        formal = load_formalized(problem_dir, node.id)
        completed = load_completed(problem_dir, node.id)
        record = faithfulness_for_node(
            node.id,
            node.nl_self_contained,
            formal.statement_source,
            formal.c_formalizer,
            judge_provider,
            policy,
            prompts,
            minor_weight,
        )
        tactic_ok = bool(completed and completed.c_tactic)
        # negation probe: semantically faithful, syntactically fine, yet
        # unprovable -> ask whether the statement itself is false
        if (
            node.kind.provable
            and formal.c_formalizer
            and record.f >= threshold
            and completed is not None
            and not completed.c_tactic
            and not completed.negation_attempted
            and tactic_provider is not None
            and verifier is not None
        ):
            outcome = prove_negation(formal, tactic_provider, verifier, policy, prompts)
            completed = with_negation(completed, outcome)
            write_json(problem_dir / f"{node.id}.proof.json", completed.to_dict())
        negation_proved = bool(completed and completed.negation_proved)
        source = classify_node(
            node.kind, record.f, formal.c_formalizer, tactic_ok, negation_proved, threshold
        )
        c_final = tactic_ok if node.kind.provable else formal.c_formalizer
        structural = _structural_flag(
            strategy, node.id, formal.premises_used, truth_graphs, structural_fallback
        )
        scores.append(
            NodeScore(
                node_id=node.id,
                f=record.f,
                c=c_final,
                structural=structural,
                kind=node.kind.value,
                error_source=source.value,
                judge_failed=record.judge_failed,
            )
        )

    basis = [s for s in scores if NodeKind(s.kind).provable] if score_provable_only else scores
    f = {s.node_id: s.f for s in basis}
    c = {s.node_id: s.c for s in basis}
    structural = {s.node_id: s.structural for s in basis}
    report = ScoreReport(
        problem=problem.id,
        mode=strategy.value,
        n=len(basis),
        proofscore=proof_score(f, c, structural),
        nodes=tuple(scores),
    )
    write_json(problem_dir / "score.json", report.to_dict())
    return report


def error_sources_from_score(report: ScoreReport) -> list[ErrorSource]:
    return [ErrorSource(s.error_source) for s in report.nodes if s.error_source]
