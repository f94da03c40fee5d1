"""Graph construction shorthand and an independent validation oracle.

The oracle deliberately shares no code with proofflow.graph: cycles come
from DFS self-reachability, forward references from index comparison, and
consumers from a flat scan. Agreement between the two implementations is
what the randomized tests assert.
"""

from __future__ import annotations

from proofflow.graph import NodeKind, ProofGraph, ProofNode


def mk_node(node_id: str, kind: str, deps: list[str] | None = None, nl: str = "") -> ProofNode:
    return ProofNode(
        id=node_id,
        kind=NodeKind(kind),
        nl_original=nl or f"original {node_id}",
        nl_self_contained=nl or f"statement {node_id}",
        deps=tuple(deps or []),
    )


def mk_graph(*nodes: ProofNode, theorem: str = "thm", proof: str = "prf") -> ProofGraph:
    return ProofGraph(theorem_nl=theorem, proof_nl=proof, nodes=tuple(nodes))


def chain_graph() -> ProofGraph:
    """TC1 -> L1 -> L2 -> TS, one straight line."""
    return mk_graph(
        mk_node("TC1", "TC"),
        mk_node("L1", "L", ["TC1"]),
        mk_node("L2", "L", ["L1"]),
        mk_node("TS", "TS", ["L2"]),
    )


def oracle_violations(nodes: list[tuple[str, str, list[str]]]) -> dict[str, set]:
    """Brute-force violation finder over (id, kind, deps) triples with unique
    ids. Returns {code: set of involved node ids} with only present codes."""
    ids = [n[0] for n in nodes]
    index = {nid: i for i, nid in enumerate(ids)}
    known = set(ids)
    out: dict[str, set] = {}

    def add(code: str, members: set) -> None:
        out.setdefault(code, set()).update(members)

    # proper dependency edges: known targets, no self-loops
    dep_edges = {
        nid: [d for d in deps if d in known and d != nid] for nid, _, deps in nodes
    }

    def reachable(start: str, goal: str) -> bool:
        seen = set()
        stack = [start]
        while stack:
            cur = stack.pop()
            for nxt in dep_edges[cur]:
                if nxt == goal:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    on_cycle = {nid for nid in ids if reachable(nid, nid)}
    if on_cycle:
        add("Cycle", on_cycle)

    same_cycle = {
        (a, b)
        for a in on_cycle
        for b in on_cycle
        if a != b and reachable(a, b) and reachable(b, a)
    }

    for nid, _, deps in nodes:
        for d in deps:
            if d == nid:
                add("SelfLoop", {nid})
            elif d not in known:
                add("UnknownDep", {nid})
            elif index[d] > index[nid] and (nid, d) not in same_cycle:
                add("ForwardReference", {nid, d})

    consumed = {
        d for nid, _, deps in nodes for d in deps if d in known and d != nid
    }
    for nid, kind, _ in nodes:
        if kind != "TS" and nid not in consumed:
            add("DanglingNonSolution", {nid})

    if not any(kind == "TS" for _, kind, _ in nodes):
        add("NoSolution", set())
    return out


def random_graph_spec(rng) -> list[tuple[str, str, list[str]]]:
    """Random (id, kind, deps) triples, 1..12 nodes, skewed toward violations."""
    n = rng.randint(1, 12)
    kinds = [rng.choice(["TC", "D", "L", "L", "TS"]) for _ in range(n)]
    counters = {"TC": 0, "D": 0, "L": 0, "TS": 0}
    ids = []
    for kind in kinds:
        counters[kind] += 1
        ids.append(f"{kind}{counters[kind]}")
    nodes = []
    for i, (nid, kind) in enumerate(zip(ids, kinds)):
        deps: list[str] = []
        for _ in range(rng.randint(0, 3)):
            roll = rng.random()
            if roll < 0.70 and i > 0:
                deps.append(ids[rng.randint(0, i - 1)])  # backward, usually legal
            elif roll < 0.80:
                deps.append(ids[rng.randint(0, n - 1)])  # anywhere: cycles/forward/self
            elif roll < 0.90:
                deps.append(nid)  # self-loop
            else:
                deps.append(f"X{rng.randint(1, 5)}")  # unknown
        nodes.append((nid, kind, deps))
    return nodes
