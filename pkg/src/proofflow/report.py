"""Assemble the interactive report payload and splice it into the HTML shell.

The page template is prebuilt and checked in; the only dynamic part is the
JSON payload injected into the slot script tag. The payload is everything the
viewer needs, so the resulting file works offline.
"""

from __future__ import annotations

from pathlib import Path

from .graph import NodeKind, graph_from_dict
from .util import read_json

DEFAULT_TEMPLATE = Path(__file__).parent / "data" / "report_template.html"

PAYLOAD_SLOT = '<script type="application/json" id="proofflow-payload">null</script>'

STATUS_FORMALIZE_ERROR = "formalize_error"
STATUS_NO_TACTICS = "formalized_no_tactics"
STATUS_PROVED = "proved"


def node_status(kind: NodeKind, c_formalizer: bool, c_tactic: bool | None) -> str:
    """Three contour states; hypothesis nodes have no tactic stage, so a
    verified statement is already their final state."""
    if not c_formalizer:
        return STATUS_FORMALIZE_ERROR
    if not kind.provable:
        return STATUS_PROVED
    return STATUS_PROVED if c_tactic else STATUS_NO_TACTICS


def assemble_payload(problem_dir: Path | str) -> dict:
    """Build the viewer payload from a scored pipeline problem directory."""
    problem_dir = Path(problem_dir)
    graph_path = problem_dir / "graph.json"
    if not graph_path.exists():
        raise FileNotFoundError(
            f"{problem_dir} has no graph.json; reports cover pipeline runs only"
        )
    graph_dict = read_json(graph_path)
    graph = graph_from_dict(graph_dict)
    score = read_json(problem_dir / "score.json")
    score_by_id = {s["id"]: s for s in score["nodes"]}

    per_node = {}
    formal_ok_count = 0
    provable_count = 0
    tactic_ok_count = 0
    for node in graph.nodes:
        formal = read_json(problem_dir / f"{node.id}.formal.json")
        c_formalizer = formal["c_formalizer"]
        if c_formalizer:
            formal_ok_count += 1
        diagnostics = list(formal.get("diagnostics", []))
        proof_path = problem_dir / f"{node.id}.proof.json"
        c_tactic = None
        proof_source = None
        if node.kind.provable:
            provable_count += 1
            c_tactic = False
            if proof_path.exists():
                proof = read_json(proof_path)
                c_tactic = proof["c_tactic"]
                proof_source = proof["proof_source"] or None
                diagnostics.extend(proof.get("diagnostics", []))
            if c_tactic:
                tactic_ok_count += 1
        entry = score_by_id.get(node.id)
        per_node[node.id] = {
            "status": node_status(node.kind, c_formalizer, c_tactic),
            "f": entry["f"] if entry else 0.0,
            "error_source": entry["error_source"] if entry else "",
            "nl_self_contained": node.nl_self_contained,
            "statement_source": formal["statement_source"],
            "proof_source": proof_source,
            "diagnostics": diagnostics,
        }

    n_nodes = len(graph.nodes)
    metrics = {
        "mode": score["mode"],
        "proofscore": score["proofscore"],
        "formalizer_accuracy": formal_ok_count / n_nodes if n_nodes else 0.0,
        "tactic_accuracy": tactic_ok_count / provable_count if provable_count else 0.0,
    }
    return {"graph": graph_dict, "per_node": per_node, "metrics": metrics}


def render_report(payload: dict, template_path: Path | str | None = None) -> str:
    """Return the report page with ``payload`` spliced into the slot tag."""
    import json as _json

    template = Path(template_path or DEFAULT_TEMPLATE).read_text(encoding="utf-8")
    if PAYLOAD_SLOT not in template:
        raise ValueError("template is missing the payload slot tag")
    # </ would close the script tag early inside a JSON string
    body = _json.dumps(payload, ensure_ascii=False).replace("</", "<\\/")
    filled = PAYLOAD_SLOT.replace("null", body, 1)
    return template.replace(PAYLOAD_SLOT, filled, 1)


def write_report(
    problem_dir: Path | str,
    out_path: Path | str,
    template_path: Path | str | None = None,
) -> Path:
    payload = assemble_payload(problem_dir)
    html = render_report(payload, template_path)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(html, encoding="utf-8")
    return out
