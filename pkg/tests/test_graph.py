import json
import random

import pytest
from helpers import chain_graph, mk_graph, mk_node, oracle_violations, random_graph_spec
from hypothesis import given, settings
from hypothesis import strategies as st

from proofflow.graph import (
    GraphSchemaError,
    GraphValidationError,
    NodeKind,
    ProofNode,
    ViolationCode,
    dependency_sets,
    graph_from_dict,
    graph_from_json,
    graph_to_dict,
    graph_to_json,
    match_dependencies,
    topological_order,
    validate_graph,
)


def codes(violations):
    return {v.code for v in violations}


def by_code(violations):
    out = {}
    for v in violations:
        out.setdefault(v.code.value, set()).update(v.node_ids)
    return out


class TestNodeKind:
    def test_provable_kinds(self):
        assert NodeKind.LEMMA.provable and NodeKind.THEOREM_SOLUTION.provable
        assert not NodeKind.THEOREM_CONDITION.provable and not NodeKind.DEFINITION.provable


class TestProofNode:
    def test_rejects_empty_id(self):
        with pytest.raises(ValueError):
            mk_node("", "L")

    def test_rejects_empty_statement(self):
        with pytest.raises(ValueError):
            ProofNode(
                id="L1",
                kind=NodeKind.LEMMA,
                nl_original="x",
                nl_self_contained="",
                deps=(),
            )

    def test_deps_deduplicated_in_order(self):
        node = mk_node("L3", "L", ["L1", "L2", "L1", "L2"])
        assert node.deps == ("L1", "L2")


class TestValidateGraph:
    def test_valid_chain(self):
        assert validate_graph(chain_graph()) == []

    def test_declaration_order_is_topological(self):
        assert topological_order(chain_graph()) == ["TC1", "L1", "L2", "TS"]

    def test_topological_order_raises_on_invalid(self):
        graph = mk_graph(mk_node("L1", "L", ["L2"]), mk_node("L2", "L", ["L1"]))
        with pytest.raises(GraphValidationError) as exc:
            topological_order(graph)
        assert ViolationCode.CYCLE in codes(exc.value.violations)

    def test_two_cycle_reported_once_without_forward_reference(self):
        # L1 <-> L2 plus a TS consumer so only the cycle is at fault
        graph = mk_graph(
            mk_node("L1", "L", ["L2"]),
            mk_node("L2", "L", ["L1"]),
            mk_node("TS", "TS", ["L1", "L2"]),
        )
        violations = validate_graph(graph)
        assert codes(violations) == {ViolationCode.CYCLE}
        (cycle,) = violations
        assert set(cycle.node_ids) == {"L1", "L2"}

    def test_forward_reference(self):
        graph = mk_graph(
            mk_node("L1", "L", ["L2"]),
            mk_node("L2", "L"),
            mk_node("TS", "TS", ["L1", "L2"]),
        )
        violations = validate_graph(graph)
        assert codes(violations) == {ViolationCode.FORWARD_REFERENCE}

    def test_self_loop_is_not_a_cycle(self):
        graph = mk_graph(mk_node("L1", "L", ["L1"]), mk_node("TS", "TS", ["L1"]))
        violations = validate_graph(graph)
        assert codes(violations) == {ViolationCode.SELF_LOOP}

    def test_unknown_dep_names_both_ends(self):
        graph = mk_graph(mk_node("TS", "TS", ["L9"]))
        violations = validate_graph(graph)
        assert codes(violations) == {ViolationCode.UNKNOWN_DEP}
        assert "L9" in violations[0].message and "TS" in violations[0].message

    def test_dangling_non_solution(self):
        graph = mk_graph(mk_node("TC1", "TC"), mk_node("TS", "TS"))
        violations = validate_graph(graph)
        assert codes(violations) == {ViolationCode.DANGLING_NON_SOLUTION}
        assert violations[0].node_ids == ("TC1",)

    def test_no_solution(self):
        graph = mk_graph(mk_node("TC1", "TC"), mk_node("L1", "L", ["TC1"]))
        violations = validate_graph(graph)
        assert ViolationCode.NO_SOLUTION in codes(violations)

    def test_duplicate_id(self):
        graph = mk_graph(
            mk_node("L1", "L"),
            mk_node("L1", "L"),
            mk_node("TS", "TS", ["L1"]),
        )
        violations = validate_graph(graph)
        assert ViolationCode.DUPLICATE_ID in codes(violations)

    def test_ts_can_be_terminal_without_consumers(self):
        graph = mk_graph(
            mk_node("TC1", "TC"),
            mk_node("TS1", "TS", ["TC1"]),
            mk_node("TS2", "TS", ["TC1"]),
        )
        assert validate_graph(graph) == []


class TestRandomOracle:
    def test_agrees_with_brute_force_on_1000_graphs(self):
        rng = random.Random(20250819)
        for case in range(1000):
            spec = random_graph_spec(rng)
            graph = mk_graph(*[mk_node(nid, kind, deps) for nid, kind, deps in spec])
            expected = oracle_violations(spec)
            actual = by_code(validate_graph(graph))
            assert actual.keys() == expected.keys(), f"case {case}: {spec}"
            for code, members in expected.items():
                if code in ("Cycle", "ForwardReference", "SelfLoop", "DanglingNonSolution"):
                    assert actual[code] == members, f"case {case} {code}: {spec}"


class TestDependencySets:
    def test_sets_match_deps(self):
        graph = chain_graph()
        sets = dependency_sets(graph)
        assert sets == {
            "TC1": frozenset(),
            "L1": frozenset({"TC1"}),
            "L2": frozenset({"L1"}),
            "TS": frozenset({"L2"}),
        }

    def test_match_dependencies_exact_equality(self):
        truth = chain_graph()
        same = match_dependencies(truth, [truth])
        assert all(m.matched and m.in_any_truth for m in same.values())
        # Superset of the true dep set must not count as a match.
        superset = mk_graph(
            mk_node("TC1", "TC"),
            mk_node("L1", "L", ["TC1"]),
            mk_node("L2", "L", ["L1", "TC1"]),
            mk_node("TS", "TS", ["L2"]),
        )
        result = match_dependencies(superset, [truth])
        assert not result["L2"].matched and result["L2"].in_any_truth
        assert result["L1"].matched

    def test_match_dependencies_unknown_node(self):
        estimated = mk_graph(
            mk_node("TC1", "TC"),
            mk_node("L9", "L", ["TC1"]),
            mk_node("TS", "TS", ["L9"]),
        )
        result = match_dependencies(estimated, [chain_graph()])
        assert not result["L9"].in_any_truth and not result["L9"].matched
        assert result["TC1"].matched

    def test_match_against_any_of_several_truths(self):
        alt = mk_graph(
            mk_node("TC1", "TC"),
            mk_node("L1", "L", []),
            mk_node("L2", "L", ["L1"]),
            mk_node("TS", "TS", ["L2", "TC1"]),
        )
        estimated = chain_graph()
        result = match_dependencies(estimated, [alt, chain_graph()])
        assert all(m.matched for m in result.values())


class TestSerialization:
    def test_round_trip_chain(self):
        graph = chain_graph()
        again = graph_from_json(graph_to_json(graph))
        assert again == graph

    def test_dict_shape_is_pinned(self):
        data = graph_to_dict(chain_graph())
        assert set(data) == {"theorem_nl", "proof_nl", "nodes"}
        assert set(data["nodes"][0]) == {
            "id",
            "kind",
            "nl_original",
            "nl_self_contained",
            "deps",
        }

    def test_unknown_graph_key_rejected(self):
        data = graph_to_dict(chain_graph())
        data["extra"] = 1
        with pytest.raises(GraphSchemaError, match="extra"):
            graph_from_dict(data)

    def test_unknown_node_key_named(self):
        data = graph_to_dict(chain_graph())
        data["nodes"][0]["color"] = "red"
        with pytest.raises(GraphSchemaError, match="color"):
            graph_from_dict(data)

    def test_missing_node_field_named(self):
        data = graph_to_dict(chain_graph())
        del data["nodes"][1]["deps"]
        with pytest.raises(GraphSchemaError, match="deps"):
            graph_from_dict(data)

    def test_bad_kind_code(self):
        data = graph_to_dict(chain_graph())
        data["nodes"][0]["kind"] = "XX"
        with pytest.raises(GraphSchemaError, match="kind"):
            graph_from_dict(data)

    def test_bad_deps_type(self):
        data = graph_to_dict(chain_graph())
        data["nodes"][0]["deps"] = "L1"
        with pytest.raises(GraphSchemaError):
            graph_from_dict(data)

    def test_invalid_json_text(self):
        with pytest.raises(GraphSchemaError):
            graph_from_json("not json")


_text = st.text(min_size=1, max_size=40).filter(lambda s: s.strip())


@st.composite
def arbitrary_graphs(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    nodes = []
    ids = []
    for i in range(n):
        kind = draw(st.sampled_from(["TC", "D", "L", "TS"]))
        nid = f"{kind}{i + 1}"
        deps = draw(st.lists(st.sampled_from(ids + [nid]), max_size=3)) if ids else []
        nodes.append(
            ProofNode(
                id=nid,
                kind=NodeKind(kind),
                nl_original=draw(_text),
                nl_self_contained=draw(_text),
                deps=tuple(deps),
            )
        )
        ids.append(nid)
    return mk_graph(*nodes, theorem=draw(_text), proof=draw(_text))


class TestRoundTripProperty:
    @settings(max_examples=100, deadline=None)
    @given(arbitrary_graphs())
    def test_json_round_trip_preserves_graph(self, graph):
        assert graph_from_json(graph_to_json(graph)) == graph

    @settings(max_examples=100, deadline=None)
    @given(arbitrary_graphs())
    def test_serialized_form_is_valid_json(self, graph):
        json.loads(graph_to_json(graph))
