"""Benchmark harness: dataset loading, pass@k runs, metric tables.

Metrics are recomputed from the persisted artifact files only, never from
in-memory state, so a finished run directory is sufficient to rebuild any
table. Lower-k numbers are prefix-reads of the same attempt logs: a unit
counts as passing at k' when it passed and did so within its first k'
attempts.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .baselines import BaselineRun
from .error_analysis import emit_error_table
from .gateway import RetryPolicy
from .graph import (
    GraphSchemaError,
    NodeKind,
    ProofGraph,
    graph_from_dict,
    validate_graph,
)
from .pipeline import (
    StageProviders,
    Strategy,
    error_sources_from_score,
    run_baseline_stages,
    run_pipeline_stages,
    score_problem,
)
from .prompts import PromptLibrary
from .scoring import ScoreReport
from .util import read_json, write_json

AREAS = frozenset(
    {
        "number_theory_algebra",
        "real_analysis",
        "inequality",
        "probability_set_theory",
        "complex_analysis",
        "sequences_series",
    }
)

BUNDLED_DATASET = Path(__file__).parent / "data" / "dataset"

_PROBLEM_KEYS = {"id", "area", "theorem_nl", "proof_nl", "proof_steps", "truth_graphs"}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkProblem:
    id: str
    area: str
    theorem_nl: str
    proof_nl: str
    proof_steps: tuple[str, ...]
    truth_graphs: tuple[ProofGraph, ...]


def _parse_problem(data: dict, origin: str) -> BenchmarkProblem:
    if not isinstance(data, dict):
        raise DatasetError(f"{origin}: problem file must contain a JSON object")
    unknown = set(data) - _PROBLEM_KEYS
    if unknown:
        raise DatasetError(f"{origin}: unknown keys {sorted(unknown)}")
    missing = _PROBLEM_KEYS - set(data)
    if missing:
        raise DatasetError(f"{origin}: missing keys {sorted(missing)}")
    for key in ("id", "area", "theorem_nl", "proof_nl"):
        if not isinstance(data[key], str) or not data[key]:
            raise DatasetError(f"{origin}: field {key!r} must be a non-empty string")
    if data["area"] not in AREAS:
        raise DatasetError(f"{origin}: field 'area' has unknown value {data['area']!r}")
    if not isinstance(data["proof_steps"], list) or not all(
        isinstance(s, str) for s in data["proof_steps"]
    ):
        raise DatasetError(f"{origin}: field 'proof_steps' must be an array of strings")
    raw_truths = data["truth_graphs"]
    if not isinstance(raw_truths, list) or not raw_truths:
        raise DatasetError(f"{origin}: field 'truth_graphs' must be a non-empty array")
    truths = []
    for i, raw in enumerate(raw_truths):
        try:
            graph = graph_from_dict(raw)
        except GraphSchemaError as exc:
            raise DatasetError(f"{origin}: truth_graphs[{i}]: {exc}") from exc
        violations = validate_graph(graph)
        if violations:
            raise DatasetError(
                f"{origin}: truth_graphs[{i}] is invalid: "
                + "; ".join(v.message for v in violations)
            )
        truths.append(graph)
    return BenchmarkProblem(
        id=data["id"],
        area=data["area"],
        theorem_nl=data["theorem_nl"],
        proof_nl=data["proof_nl"],
        proof_steps=tuple(data["proof_steps"]),
        truth_graphs=tuple(truths),
    )


def load_dataset(path: Path | str) -> list[BenchmarkProblem]:
    """Load every {id}.json under ``path``; empty directory gives []."""
    directory = Path(path)
    if not directory.is_dir():
        raise DatasetError(f"dataset directory not found: {directory}")
    problems = []
    for file in sorted(directory.glob("*.json")):
        try:
            data = json.loads(file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{file.name}: invalid JSON: {exc}") from exc
        problems.append(_parse_problem(data, file.name))
    problems.sort(key=lambda p: p.id)
    return problems


def problem_to_dict(problem) -> dict:
    """Problem record in the dataset file schema (truth_graphs may be [])."""
    from .graph import graph_to_dict

    return {
        "id": problem.id,
        "area": getattr(problem, "area", "number_theory_algebra"),
        "theorem_nl": problem.theorem_nl,
        "proof_nl": problem.proof_nl,
        "proof_steps": list(problem.proof_steps),
        "truth_graphs": [graph_to_dict(g) for g in problem.truth_graphs],
    }


def problem_from_artifact(path: Path | str) -> BenchmarkProblem:
    """Read a problem.json written next to run artifacts. Unlike dataset
    files, inline problems may carry no truth graphs."""
    data = read_json(path)
    truths = tuple(graph_from_dict(raw) for raw in data["truth_graphs"])
    return BenchmarkProblem(
        id=data["id"],
        area=data["area"],
        theorem_nl=data["theorem_nl"],
        proof_nl=data["proof_nl"],
        proof_steps=tuple(data["proof_steps"]),
        truth_graphs=truths,
    )


def dataset_statistics(problems: Sequence[BenchmarkProblem]) -> dict:
    """Mean node totals and per-kind means over each problem's first truth graph."""
    if not problems:
        return {"problems": 0, "mean_nodes": 0.0, "mean_kind_counts": {}}
    totals = []
    kind_counts = {k: [] for k in NodeKind}
    for p in problems:
        graph = p.truth_graphs[0]
        totals.append(len(graph.nodes))
        for kind in NodeKind:
            kind_counts[kind].append(sum(1 for n in graph.nodes if n.kind is kind))
    n = len(problems)
    return {
        "problems": n,
        "mean_nodes": sum(totals) / n,
        "mean_kind_counts": {k.value: sum(v) / n for k, v in kind_counts.items()},
    }


# ---------------------------------------------------------------------------
# run metrics


@dataclass(frozen=True)
class RunMetrics:
    formalizer_accuracy: float | None
    tactic_accuracy: float | None
    proofscore: float
    correct_syntax: float
    time_minutes: float
    output_tokens_k: float
    pass_k: int
    mode: str
    thinking: bool = False

    def __post_init__(self) -> None:
        for name in ("formalizer_accuracy", "tactic_accuracy", "proofscore", "correct_syntax"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")


def _prefix_tokens_and_ms(attempt_dicts: list[dict], at_k: int | None) -> tuple[int, int]:
    take = attempt_dicts if at_k is None else attempt_dicts[:at_k]
    tokens = sum(a["completion_tokens"] for a in take)
    ms = sum(a["latency_ms"] for a in take)
    return tokens, ms


@dataclass
class _ProblemCounts:
    nodes: int = 0
    formal_ok: int = 0
    provable: int = 0
    tactic_ok: int = 0
    steps: int = 0
    steps_ok: int = 0
    proofscore: float = 0.0
    score_n: int = 0
    all_units_ok: bool = False
    tokens: int = 0
    ms: int = 0
    failed: bool = False


def _pipeline_counts(problem_dir: Path, at_k: int | None) -> _ProblemCounts:
    counts = _ProblemCounts()
    build = read_json(problem_dir / "graph_build.json")
    tokens, ms = _prefix_tokens_and_ms(build["attempts"], at_k)
    counts.tokens += tokens
    counts.ms += ms
    built = build["passed"] and build["graph"] is not None
    if not built or (at_k is not None and len(build["attempts"]) > at_k):
        # a smaller budget would have stopped at the graph stage
        counts.failed = True
        return counts
    if not (problem_dir / "score.json").exists():
        counts.failed = True
        return counts
    graph = graph_from_dict(read_json(problem_dir / "graph.json"))
    kinds = {n.id: n.kind for n in graph.nodes}
    score = ScoreReport.from_dict(read_json(problem_dir / "score.json"))
    structural = {s.node_id: s.structural for s in score.nodes}
    f_values = {s.node_id: s.f for s in score.nodes}

    per_node_c: dict[str, bool] = {}
    all_ok = True
    for node in graph.nodes:
        counts.nodes += 1
        formal = read_json(problem_dir / f"{node.id}.formal.json")
        tokens, ms = _prefix_tokens_and_ms(formal["attempts"], at_k)
        counts.tokens += tokens
        counts.ms += ms
        if at_k is None:
            counts.ms += formal.get("verifier_ms", 0)
        formal_ok = formal["c_formalizer"] and (
            at_k is None or len(formal["attempts"]) <= at_k
        )
        if formal_ok:
            counts.formal_ok += 1
        else:
            all_ok = False
        c_final = formal_ok
        if node.kind.provable:
            counts.provable += 1
            proof_path = problem_dir / f"{node.id}.proof.json"
            tactic_ok = False
            if proof_path.exists():
                proof = read_json(proof_path)
                tokens, ms = _prefix_tokens_and_ms(proof["attempts"], at_k)
                counts.tokens += tokens
                counts.ms += ms
                if at_k is None:
                    neg_tokens, neg_ms = _prefix_tokens_and_ms(
                        proof.get("negation_attempts", []), None
                    )
                    counts.tokens += neg_tokens
                    counts.ms += neg_ms + proof.get("verifier_ms", 0)
                tactic_ok = proof["c_tactic"] and (
                    at_k is None or len(proof["attempts"]) <= at_k
                )
            if tactic_ok and formal_ok:
                counts.tactic_ok += 1
            else:
                all_ok = False
            c_final = tactic_ok and formal_ok
        per_node_c[node.id] = c_final

    counts.all_units_ok = all_ok
    if at_k is None:
        counts.proofscore = score.proofscore
        counts.score_n = score.n
    else:
        # provable-only scoring is recognizable from n < node count
        provable_only = score.n < len(score.nodes)
        basis_ids = [
            s.node_id
            for s in score.nodes
            if s.node_id in per_node_c
            and (not provable_only or kinds[s.node_id].provable)
        ]
        total = sum(
            f_values[i] * (1.0 if per_node_c[i] else 0.0) * (1.0 if structural[i] else 0.0)
            for i in basis_ids
        )
        counts.score_n = len(basis_ids)
        counts.proofscore = total / len(basis_ids) if basis_ids else 0.0
    return counts


def _baseline_counts(problem_dir: Path, strategy: Strategy, at_k: int | None) -> _ProblemCounts:
    counts = _ProblemCounts()
    run = BaselineRun.from_dict(read_json(problem_dir / "baseline.json"))
    score = ScoreReport.from_dict(read_json(problem_dir / "score.json"))
    counts.tokens = sum(a.completion_tokens for a in run.attempts)
    counts.ms = sum(a.latency_ms for a in run.attempts) + (
        run.verifier_ms if at_k is None else 0
    )
    f_values = {s.node_id: s.f for s in score.nodes}
    if strategy is Strategy.FULL:
        unit = run.units[0]
        ok = unit.ok and (at_k is None or unit.n_attempts <= at_k)
        if at_k is not None:
            counts.tokens = sum(a.completion_tokens for a in run.attempts[:at_k])
            counts.ms = sum(a.latency_ms for a in run.attempts[:at_k])
        counts.all_units_ok = ok
        counts.score_n = 1
        if at_k is None:
            counts.proofscore = score.proofscore
        else:
            counts.proofscore = f_values.get("PROOF", 0.0) if ok else 0.0
        return counts

    # step baseline: cascade semantics apply at every budget
    cascade_alive = True
    offset = 0
    tokens = 0
    ms = 0
    for unit in run.units:
        counts.steps += 1
        span = run.attempts[offset : offset + unit.n_attempts]
        offset += unit.n_attempts
        take = span if at_k is None else span[:at_k]
        tokens += sum(a.completion_tokens for a in take)
        ms += sum(a.latency_ms for a in take)
        ok = (
            cascade_alive
            and unit.attempted
            and unit.ok
            and (at_k is None or unit.n_attempts <= at_k)
        )
        if ok:
            counts.steps_ok += 1
            counts.proofscore += f_values.get(f"S{unit.index + 1}", 0.0)
        else:
            cascade_alive = False
    if at_k is not None:
        counts.tokens = tokens
        counts.ms = ms
    else:
        # trust the scored artifact for the run's own budget
        counts.proofscore = score.proofscore * counts.steps
    counts.score_n = counts.steps
    counts.all_units_ok = counts.steps > 0 and counts.steps_ok == counts.steps
    return counts


def compute_metrics(
    run_dir: Path | str,
    strategy: Strategy,
    pass_k: int,
    thinking: bool = False,
    at_k: int | None = None,
) -> RunMetrics:
    """Aggregate RunMetrics from a run directory's artifact files.

    ``at_k`` re-reads the attempt logs as if the budget had been smaller;
    None uses the run's own budget.
    """
    run_dir = Path(run_dir)
    manifest = read_json(run_dir / "manifest.json")
    per_problem: list[_ProblemCounts] = []
    for problem_id in sorted(manifest["problems"]):
        problem_dir = run_dir / problem_id
        if strategy.is_pipeline and (problem_dir / "graph_build.json").exists():
            per_problem.append(_pipeline_counts(problem_dir, at_k))
        elif not strategy.is_pipeline and (problem_dir / "score.json").exists():
            per_problem.append(_baseline_counts(problem_dir, strategy, at_k))
        else:
            counts = _ProblemCounts()
            counts.failed = True
            per_problem.append(counts)

    n_problems = len(per_problem)
    if n_problems == 0:
        raise ValueError(f"run dir {run_dir} contains no problems")

    total_nodes = sum(c.nodes for c in per_problem)
    total_formal = sum(c.formal_ok for c in per_problem)
    total_provable = sum(c.provable for c in per_problem)
    total_tactic = sum(c.tactic_ok for c in per_problem)
    total_steps = sum(c.steps for c in per_problem)
    total_steps_ok = sum(c.steps_ok for c in per_problem)

    if strategy.is_pipeline:
        formalizer_accuracy = total_formal / total_nodes if total_nodes else 0.0
        tactic_accuracy = total_tactic / total_provable if total_provable else 0.0
        proofscore = sum(c.proofscore for c in per_problem) / n_problems
    elif strategy is Strategy.FULL:
        formalizer_accuracy = None
        tactic_accuracy = None
        proofscore = sum(c.proofscore for c in per_problem) / n_problems
    else:
        formalizer_accuracy = None
        tactic_accuracy = total_steps_ok / total_steps if total_steps else 0.0
        # steps pooled across problems, not averaged per proof
        proofscore = (
            sum(c.proofscore for c in per_problem) / total_steps if total_steps else 0.0
        )

    correct_syntax = sum(1 for c in per_problem if c.all_units_ok and not c.failed) / n_problems
    time_minutes = (sum(c.ms for c in per_problem) / n_problems) / 60000.0
    output_tokens_k = (sum(c.tokens for c in per_problem) / n_problems) / 1000.0
    return RunMetrics(
        formalizer_accuracy=formalizer_accuracy,
        tactic_accuracy=tactic_accuracy,
        proofscore=proofscore,
        correct_syntax=correct_syntax,
        time_minutes=time_minutes,
        output_tokens_k=output_tokens_k,
        pass_k=at_k if at_k is not None else pass_k,
        mode=strategy.value,
        thinking=thinking,
    )


# ---------------------------------------------------------------------------
# benchmark runner


def run_benchmark(
    problems: Sequence[BenchmarkProblem],
    strategy: Strategy,
    providers: StageProviders,
    verifier,
    k: int,
    out_dir: Path | str,
    jobs: int = 1,
    force: bool = False,
    prompts: PromptLibrary | None = None,
    score_provable_only: bool = False,
    thinking: bool = False,
) -> tuple[list[ScoreReport], RunMetrics]:
    prompts = prompts or PromptLibrary()
    policy = RetryPolicy(max_attempts=k)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    statuses: dict[str, str] = {}
    reports: dict[str, ScoreReport] = {}

    def run_one(problem: BenchmarkProblem) -> None:
        problem_dir = out_dir / problem.id
        if not force and (problem_dir / "score.json").exists():
            statuses[problem.id] = "ok"
            reports[problem.id] = ScoreReport.from_dict(read_json(problem_dir / "score.json"))
            return
        try:
            problem_dir.mkdir(parents=True, exist_ok=True)
            write_json(problem_dir / "problem.json", problem_to_dict(problem))
            if strategy.is_pipeline:
                ok = run_pipeline_stages(
                    problem, strategy, providers, verifier, policy, prompts, problem_dir
                )
                if not ok:
                    statuses[problem.id] = "failed: graph stage produced no valid graph"
                    return
            else:
                run_baseline_stages(
                    problem, strategy, providers, verifier, policy, prompts, problem_dir
                )
            reports[problem.id] = score_problem(
                problem,
                strategy,
                problem_dir,
                providers.judge,
                policy,
                prompts,
                tactic_provider=providers.tactic,
                verifier=verifier,
                score_provable_only=score_provable_only,
            )
            statuses[problem.id] = "ok"
        except Exception as exc:  # noqa: BLE001 - isolate crashed problems
            statuses[problem.id] = f"failed: {type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run_one, problems))
    else:
        for problem in problems:
            run_one(problem)

    manifest = {"strategy": strategy.value, "k": k, "problems": dict(statuses)}
    write_json(out_dir / "manifest.json", manifest)

    if strategy.is_pipeline and reports:
        sources = []
        for pid in sorted(reports):
            sources.extend(error_sources_from_score(reports[pid]))
        emit_error_table(
            sources, out_dir / "error_table.csv", out_dir / "error_table.json"
        )

    metrics = compute_metrics(out_dir, strategy, k, thinking=thinking)
    ordered = [reports[p.id] for p in problems if p.id in reports]
    return ordered, metrics


# ---------------------------------------------------------------------------
# tables

TABLE_COLUMNS = (
    "pipeline",
    "think",
    "pass",
    "form_accuracy",
    "tactic_accuracy",
    "proofscore",
    "correct_syntax",
    "time_mins",
    "output_tokens_k",
)


def _fmt_rate(value: float | None) -> str:
    return "/" if value is None else f"{value:.3f}"


def metrics_row(metrics: RunMetrics) -> dict[str, str]:
    return {
        "pipeline": metrics.mode,
        "think": "yes" if metrics.thinking else "no",
        "pass": str(metrics.pass_k),
        "form_accuracy": _fmt_rate(metrics.formalizer_accuracy),
        "tactic_accuracy": _fmt_rate(metrics.tactic_accuracy),
        "proofscore": f"{metrics.proofscore:.3f}",
        "correct_syntax": f"{metrics.correct_syntax:.3f}",
        "time_mins": f"{metrics.time_minutes:.1f}",
        "output_tokens_k": f"{metrics.output_tokens_k:.1f}",
    }


def emit_tables(
    metrics_list: Sequence[RunMetrics], csv_path: Path | str, json_path: Path | str
) -> list[dict[str, str]]:
    """Write the metric rows as CSV and as a JSON mirror of the same cells."""
    if not metrics_list:
        raise ValueError("emit_tables needs at least one run")
    rows = [metrics_row(m) for m in metrics_list]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(TABLE_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    Path(csv_path).write_text(buf.getvalue(), encoding="utf-8")
    write_json(json_path, {"columns": list(TABLE_COLUMNS), "rows": rows})
    return rows
