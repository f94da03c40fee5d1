"""Command-line entry point.

Commands:
  run     one problem (file or inline --theorem/--proof) end to end
  bench   a dataset directory, with metric tables
  score   recompute score reports for an existing run directory
  report  write the interactive HTML view for a scored problem directory

Exit codes: 0 completed (even if proofs failed), 2 configuration error,
3 backend unreachable or misbehaving.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .bench import (
    DatasetError,
    emit_tables,
    load_dataset,
    problem_from_artifact,
    run_benchmark,
)
from .gateway import (
    GatewayError,
    TraceLogger,
    load_provider_config,
    provider_config_from_dict,
    provider_from_config,
)
from .pipeline import InlineProblem, StageProviders, Strategy
from .prompts import PromptLibrary
from .report import write_report
from .util import read_json
from .verifier import VerifierError, verifier_from_url

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3

ENV_VERIFIER_URL = "PROOFFLOW_VERIFIER_URL"

_STRATEGIES = {
    "dag": Strategy.DAG,
    "nodag": Strategy.NODAG,
    "full": Strategy.FULL,
    "full_proof": Strategy.FULL,
    "step": Strategy.STEP,
    "step_proof": Strategy.STEP,
}

_STAGES = ("graph_builder", "formalizer", "tactic", "judge")

# names of exception types whose per-problem failure means the backend, not
# the math, was the problem
_BACKEND_ERROR_NAMES = (
    "TransportError",
    "ProviderStatusError",
    "FixtureMissError",
    "VerifierTransportError",
    "VerifierTimeout",
    "VerifierProtocolError",
)


class ConfigError(Exception):
    pass


def _parse_strategy(text: str) -> Strategy:
    try:
        return _STRATEGIES[text]
    except KeyError:
        raise ConfigError(
            f"unknown strategy {text!r}; choose from {sorted(_STRATEGIES)}"
        ) from None


def _load_stage_providers(path: str, trace: TraceLogger | None) -> StageProviders:
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"providers file not found: {file}")
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{file}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{file}: providers file must be a JSON object")
    unknown = set(data) - set(_STAGES) - {"default"}
    if unknown:
        raise ConfigError(f"{file}: unknown stage keys {sorted(unknown)}")
    providers = {}
    for stage in _STAGES:
        raw = data.get(stage, data.get("default"))
        if raw is None:
            raise ConfigError(f"{file}: no provider for stage {stage!r} and no default")
        try:
            if isinstance(raw, str):
                config_path = Path(raw)
                if not config_path.is_absolute():
                    config_path = file.parent / config_path
                config = load_provider_config(config_path)
            else:
                config = provider_config_from_dict(raw, source=f"{file}:{stage}")
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        providers[stage] = provider_from_config(config, trace=trace)
    return StageProviders(**providers)


def _make_verifier(url: str | None):
    resolved = url or os.environ.get(ENV_VERIFIER_URL)
    if not resolved:
        raise ConfigError(
            f"no verifier: pass --verifier-url or set {ENV_VERIFIER_URL}"
        )
    try:
        return verifier_from_url(resolved)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"verifier url {resolved!r}: {exc}") from exc


def _make_prompts(directory: str | None) -> PromptLibrary:
    if directory is None:
        return PromptLibrary()
    path = Path(directory)
    if not path.is_dir():
        raise ConfigError(f"prompt directory not found: {path}")
    return PromptLibrary(path)


def _load_run_problem(args) -> InlineProblem:
    if args.problem_file:
        if args.theorem or args.proof:
            raise ConfigError("give either a problem file or --theorem/--proof, not both")
        path = Path(args.problem_file)
        if not path.is_file():
            raise ConfigError(f"problem file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict) or "theorem_nl" not in data or "proof_nl" not in data:
            raise ConfigError(f"{path}: need at least theorem_nl and proof_nl fields")
        truths = ()
        if data.get("truth_graphs"):
            from .graph import graph_from_dict

            try:
                truths = tuple(graph_from_dict(g) for g in data["truth_graphs"])
            except ValueError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return InlineProblem(
            id=data.get("id", path.stem),
            theorem_nl=data["theorem_nl"],
            proof_nl=data["proof_nl"],
            proof_steps=tuple(data.get("proof_steps", ())),
            truth_graphs=truths,
        )
    if not args.theorem or not args.proof:
        raise ConfigError("run needs a problem file or both --theorem and --proof")
    return InlineProblem(id=args.id, theorem_nl=args.theorem, proof_nl=args.proof)


_ANSI = {"red": "\x1b[31m", "orange": "\x1b[33m", "green": "\x1b[32m", "reset": "\x1b[0m"}

_STATUS_COLOR = {
    "formalize_error": "red",
    "formalized_no_tactics": "orange",
    "proved": "green",
}


def _dot(color: str, tty: bool) -> str:
    return f"{_ANSI[color]}●{_ANSI['reset']}" if tty else "●"


def _print_node_summary(problem_dir: Path, out=None) -> None:
    from .report import assemble_payload

    out = out if out is not None else sys.stdout
    tty = out.isatty()
    payload = assemble_payload(problem_dir)
    legend = "  ".join(
        f"{_dot(color, tty)} {status.replace('_', ' ')}"
        for status, color in _STATUS_COLOR.items()
    )
    print(f"legend: {legend}", file=out)
    for node in payload["graph"]["nodes"]:
        entry = payload["per_node"][node["id"]]
        status = entry["status"]
        dot = _dot(_STATUS_COLOR[status], tty)
        err = entry["error_source"]
        suffix = f"  error={err}" if err and err not in ("None", "NotApplicable") else ""
        print(
            f"  {dot} {node['id']:<5} {status:<22} f={entry['f']:.2f}{suffix}",
            file=out,
        )
    print(f"proofscore: {payload['metrics']['proofscore']:.3f}", file=out)


def _backend_failure(status: str) -> bool:
    return status.startswith("failed:") and any(
        name in status for name in _BACKEND_ERROR_NAMES
    )


def _default_out(strategy: Strategy) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{stamp}-{strategy.value}"


def cmd_run(args) -> int:
    strategy = _parse_strategy(args.strategy)
    problem = _load_run_problem(args)
    out_dir = Path(args.out) if args.out else _default_out(strategy)
    trace = TraceLogger(out_dir / "trace") if args.trace else None
    providers = _load_stage_providers(args.providers, trace)
    verifier = _make_verifier(args.verifier_url)
    prompts = _make_prompts(args.prompts)

    reports, metrics = run_benchmark(
        [problem],
        strategy,
        providers,
        verifier,
        k=args.pass_at,
        out_dir=out_dir,
        jobs=1,
        force=args.force,
        prompts=prompts,
        score_provable_only=args.score_provable_only,
    )
    manifest = read_json(out_dir / "manifest.json")
    status = manifest["problems"][problem.id]
    if _backend_failure(status):
        print(f"backend failure: {status}", file=sys.stderr)
        return EXIT_BACKEND
    if status != "ok":
        # the run completed; the graph stage simply never converged
        print(f"pipeline completed without a usable graph: {status}")
        print(f"artifacts: {out_dir}")
        return EXIT_OK
    problem_dir = out_dir / problem.id
    if strategy.is_pipeline:
        _print_node_summary(problem_dir)
        report_path = write_report(problem_dir, out_dir / "report.html")
        print(f"report: {report_path}")
    else:
        run_data = read_json(problem_dir / "baseline.json")
        ok = run_data["proof_level_ok"]
        print(f"proof-level verification: {'ok' if ok else 'failed'}")
        for unit in run_data["units"]:
            state = "ok" if unit["ok"] else ("failed" if unit["attempted"] else "skipped")
            print(f"  step {unit['index'] + 1}: {state}")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    strategy = _parse_strategy(args.strategy)
    dataset_dir = Path(args.dataset) if args.dataset else Path(__file__).parent / "data" / "dataset"
    try:
        problems = load_dataset(dataset_dir)
    except DatasetError as exc:
        raise ConfigError(str(exc)) from exc
    if not problems:
        raise ConfigError(f"dataset directory {dataset_dir} has no problems")
    out_dir = Path(args.out) if args.out else _default_out(strategy)
    trace = TraceLogger(out_dir / "trace") if args.trace else None
    providers = _load_stage_providers(args.providers, trace)
    verifier = _make_verifier(args.verifier_url)
    prompts = _make_prompts(args.prompts)

    reports, metrics = run_benchmark(
        problems,
        strategy,
        providers,
        verifier,
        k=args.pass_at,
        out_dir=out_dir,
        jobs=args.jobs,
        force=args.force,
        prompts=prompts,
        score_provable_only=args.score_provable_only,
    )
    rows = emit_tables([metrics], out_dir / "metrics.csv", out_dir / "metrics.json")
    manifest = read_json(out_dir / "manifest.json")
    statuses = manifest["problems"]
    n_ok = sum(1 for s in statuses.values() if s == "ok")
    print(f"{n_ok}/{len(statuses)} problems scored; artifacts in {out_dir}")
    for key, value in rows[0].items():
        print(f"  {key}: {value}")
    if n_ok == 0 and all(_backend_failure(s) for s in statuses.values()):
        return EXIT_BACKEND
    return EXIT_OK


def cmd_score(args) -> int:
    from .pipeline import score_problem

    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"no manifest.json under {run_dir}")
    manifest = read_json(manifest_path)
    strategy = _parse_strategy(manifest["strategy"])
    trace = TraceLogger(run_dir / "trace") if args.trace else None
    providers = _load_stage_providers(args.providers, trace)
    prompts = _make_prompts(args.prompts)
    from .gateway import RetryPolicy

    policy = RetryPolicy(max_attempts=args.pass_at or manifest["k"])

    scored = 0
    for problem_id in sorted(manifest["problems"]):
        problem_dir = run_dir / problem_id
        needed = "graph.json" if strategy.is_pipeline else "baseline.json"
        if not (problem_dir / needed).exists() or not (problem_dir / "problem.json").exists():
            continue
        problem = problem_from_artifact(problem_dir / "problem.json")
        # judge only; negation probes need a prover and are left untouched
        score_problem(
            problem,
            strategy,
            problem_dir,
            providers.judge,
            policy,
            prompts,
            tactic_provider=None,
            verifier=None,
            score_provable_only=args.score_provable_only,
        )
        scored += 1
    print(f"re-scored {scored} problem(s) under {run_dir}")

    from .bench import compute_metrics
    from .error_analysis import emit_error_table
    from .pipeline import error_sources_from_score
    from .scoring import ScoreReport

    if scored:
        metrics = compute_metrics(run_dir, strategy, manifest["k"])
        emit_tables([metrics], run_dir / "metrics.csv", run_dir / "metrics.json")
        if strategy.is_pipeline:
            sources = []
            for problem_id in sorted(manifest["problems"]):
                score_path = run_dir / problem_id / "score.json"
                if score_path.exists():
                    report = ScoreReport.from_dict(read_json(score_path))
                    sources.extend(error_sources_from_score(report))
            emit_error_table(
                sources, run_dir / "error_table.csv", run_dir / "error_table.json"
            )
    return EXIT_OK


def cmd_report(args) -> int:
    problem_dir = Path(args.problem_dir)
    if not (problem_dir / "graph.json").is_file():
        raise ConfigError(
            f"{problem_dir} has no graph.json; report covers scored pipeline runs"
        )
    if not (problem_dir / "score.json").is_file():
        raise ConfigError(f"{problem_dir} has no score.json; run `score` first")
    out = Path(args.out) if args.out else problem_dir / "report.html"
    template = Path(args.template) if args.template else None
    if template is not None and not template.is_file():
        raise ConfigError(f"template not found: {template}")
    path = write_report(problem_dir, out, template)
    print(f"report: {path}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, with_backend: bool = True) -> None:
    parser.add_argument("--strategy", default="dag", help="dag | nodag | full | step")
    parser.add_argument("--pass-at", type=int, default=5, dest="pass_at", metavar="K")
    if with_backend:
        parser.add_argument("--providers", required=True, metavar="FILE",
                            help="JSON mapping stage -> provider config (path or inline)")
        parser.add_argument("--verifier-url", dest="verifier_url", default=None)
    parser.add_argument("--prompts", default=None, metavar="DIR")
    parser.add_argument("--out", default=None, metavar="DIR")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--trace", action="store_true")
    parser.add_argument("--force", action="store_true")
    parser.add_argument("--score-provable-only", action="store_true",
                        dest="score_provable_only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proofflow")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one problem end to end")
    run.add_argument("problem_file", nargs="?", default=None)
    run.add_argument("--theorem", default=None)
    run.add_argument("--proof", default=None)
    run.add_argument("--id", default="inline")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run a dataset directory")
    bench.add_argument("dataset", nargs="?", default=None)
    _add_common(bench)
    bench.set_defaults(func=cmd_bench)

    score = sub.add_parser("score", help="recompute scores for a run directory")
    score.add_argument("run_dir")
    score.add_argument("--providers", required=True, metavar="FILE")
    score.add_argument("--pass-at", type=int, default=None, dest="pass_at", metavar="K")
    score.add_argument("--prompts", default=None, metavar="DIR")
    score.add_argument("--trace", action="store_true")
    score.add_argument("--score-provable-only", action="store_true",
                       dest="score_provable_only")
    score.set_defaults(func=cmd_score)

    report = sub.add_parser("report", help="write report.html for a problem directory")
    report.add_argument("problem_dir")
    report.add_argument("--out", default=None)
    report.add_argument("--template", default=None)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "pass_at", None) is not None and args.pass_at < 1:
        print("error: --pass-at must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GatewayError, VerifierError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main(argv=sys.argv[1:]))
