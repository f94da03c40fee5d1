import pytest

from proofflow.baselines import (
    BaselineKind,
    BaselineRun,
    build_step_request,
    run_full_proof,
    run_step_proof,
)
from proofflow.gateway import RetryPolicy, ScriptedProvider

from world import fence


class TestRunFullProof:
    def test_happy_path(self, prompts, policy, mock_verifier):
        provider = ScriptedProvider([fence("theorem main : True := by\n  trivial")])
        run = run_full_proof("thm", "prf", provider, mock_verifier, policy, prompts)
        assert run.kind is BaselineKind.FULL_PROOF
        assert run.proof_level_ok
        unit = run.units[0]
        assert unit.ok and unit.attempted and unit.index == 0
        assert unit.source == unit.block == "theorem main : True := by\n  trivial"
        assert unit.n_attempts == 1
        assert mock_verifier.calls[0].unit_id == "full_proof"

    def test_placeholder_rejected_before_verifier(self, prompts, policy, mock_verifier):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  sorry"),
            fence("theorem main : True := by\n  trivial"),
        ])
        run = run_full_proof("thm", "prf", provider, mock_verifier, policy, prompts)
        assert run.proof_level_ok and run.units[0].n_attempts == 2
        assert len(mock_verifier.calls) == 1
        feedback = run.attempts[1].request.messages[2][1]
        assert "must be complete" in feedback

    def test_verify_failure_exhausts(self, prompts, mock_verifier):
        provider = ScriptedProvider([fence("theorem main : (True := by trivial")])
        run = run_full_proof(
            "thm", "prf", provider, mock_verifier, RetryPolicy(max_attempts=1), prompts
        )
        assert not run.proof_level_ok and not run.units[0].ok
        assert run.units[0].n_attempts == 1


class TestRunStepProof:
    def steps(self):
        return ["intro the hypothesis", "apply the lemma", "close the goal"]

    def test_three_good_steps(self, prompts, policy, mock_verifier):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  have s1 : True := trivial"),
            fence("have s2 : True := trivial"),
            fence("exact trivial"),
        ])
        run = run_step_proof(
            "thm", self.steps(), provider, mock_verifier, policy, prompts
        )
        assert run.proof_level_ok
        assert [u.ok for u in run.units] == [True, True, True]
        # script grows monotonically: each verified source extends the last
        assert run.units[1].source.startswith(run.units[0].source + "\n")
        assert run.units[2].source.startswith(run.units[1].source + "\n")
        assert run.units[1].source.endswith(run.units[1].block)
        assert [c.unit_id for c in mock_verifier.calls] == ["step_1", "step_2", "step_3"]

    def test_cascade_halts_after_failed_step(self, prompts, mock_verifier):
        # step 2 of 3 never verifies within its budget
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  have s1 : True := trivial"),
            fence("have s2 : (True := trivial"),
            fence("have s2 : (True := trivial"),
            fence("have s2 : (True := trivial"),
        ])
        run = run_step_proof(
            "thm", self.steps(), provider, mock_verifier,
            RetryPolicy(max_attempts=3), prompts,
        )
        assert not run.proof_level_ok
        assert [u.ok for u in run.units] == [True, False, False]
        assert [u.attempted for u in run.units] == [True, True, False]
        assert [u.n_attempts for u in run.units] == [1, 3, 0]
        assert run.units[2].source == "" and run.units[2].block == ""
        assert run.units[2].report is None
        # step accuracy over all steps: one of three
        accuracy = sum(u.ok for u in run.units) / len(run.units)
        assert accuracy == pytest.approx(1 / 3)

    def test_first_step_failure_attempts_nothing_else(self, prompts, mock_verifier):
        provider = ScriptedProvider([fence("theorem main : (True := by trivial")])
        run = run_step_proof(
            "thm", self.steps(), provider, mock_verifier,
            RetryPolicy(max_attempts=1), prompts,
        )
        assert [u.attempted for u in run.units] == [True, False, False]
        assert len(run.attempts) == 1

    def test_sorry_like_names_do_not_trip_the_scan(self, prompts, policy, mock_verifier):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  have s1 : True := by exact trivial"),
            fence("exact (sorry_helper sorry_free trivial)"),
        ])
        run = run_step_proof(
            "thm", self.steps()[:2], provider, mock_verifier, policy, prompts
        )
        assert all(u.ok for u in run.units)
        assert run.proof_level_ok

    def test_literal_placeholder_in_block_is_rejected_locally(
        self, prompts, policy, mock_verifier
    ):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  sorry"),
            fence("theorem main : True := by\n  trivial"),
        ])
        run = run_step_proof("thm", ["one"], provider, mock_verifier, policy, prompts)
        assert run.proof_level_ok and run.units[0].n_attempts == 2
        assert len(mock_verifier.calls) == 1
        assert "must not contain" in run.attempts[1].request.messages[2][1]

    def test_empty_steps_rejected(self, prompts, policy, mock_verifier):
        with pytest.raises(ValueError):
            run_step_proof("thm", [], ScriptedProvider([]), mock_verifier, policy, prompts)

    def test_blocks_joined_with_newline(self, prompts, policy, mock_verifier):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  have s1 : True := trivial"),
            fence("have s2 : True := trivial"),
        ])
        run = run_step_proof("thm", self.steps()[:2], provider, mock_verifier, policy, prompts)
        assert run.units[1].source == (
            "theorem main : True := by\n  have s1 : True := trivial\nhave s2 : True := trivial"
        )


class TestStepRequests:
    def test_first_vs_continuation_prompts(self, prompts):
        first = build_step_request("THM", "", "STEP1", True, prompts)
        assert "THM" in first.messages[0][1] and "STEP1" in first.messages[0][1]
        cont = build_step_request("THM", "the script so far", "STEP2", False, prompts)
        assert "the script so far" in cont.messages[0][1]
        assert "STEP2" in cont.messages[0][1]


class TestBaselineRunSerialization:
    def test_round_trip_with_failure_states(self, prompts, mock_verifier):
        provider = ScriptedProvider([
            fence("theorem main : True := by\n  have s1 : True := trivial"),
            fence("have s2 : (True := trivial"),
        ])
        run = run_step_proof(
            "thm", ["a", "b", "c"], provider, mock_verifier,
            RetryPolicy(max_attempts=1), prompts,
        )
        assert BaselineRun.from_dict(run.to_dict()) == run
