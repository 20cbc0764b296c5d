import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enginetrainer.events import ActionType, EventMessage
from enginetrainer.fixtures import build_verano_scenario
from enginetrainer.scenario import action_name, parse_scenario
from enginetrainer.session import (
    NO_HINTS,
    T1,
    T2,
    T3,
    ErrorKind,
    HintConfig,
    LogCorruptionError,
    Mode,
    ScoringRules,
    SessionFinishedError,
    SessionNotFinishedError,
    UnknownStepError,
    replay,
    replay_record,
    start_session,
)

from conftest import VALID_DIR, perfect_inputs, run_perfect


def hint_events(session):
    return [m for m in session.bus.drain_log() if m.action is ActionType.HINT_ISSUED]


def test_hint_presets():
    assert T1 == HintConfig(voice=True)
    assert T2.channels() == ["voice", "text", "tablet-display"]
    assert T3.channels() == ["voice", "text", "tablet-display", "screen-display"]


class TestStartSession:
    def test_training_t3_issues_four_hints_for_first_step(self, verano):
        session = start_session(verano, Mode.TRAINING, T3)
        hints = hint_events(session)
        assert len(hints) == 4
        assert {m.payload["channel"] for m in hints} == set(T3.channels())
        assert all(m.target == "s1-1" for m in hints)
        first_stage = verano.step_by_id()["s1-1"].stage
        assert first_stage == "S1"

    def test_examination_issues_no_hints(self, verano):
        session = start_session(verano, Mode.EXAMINATION, T3)
        assert hint_events(session) == []

    def test_empty_scenario_finishes_immediately(self):
        import dataclasses
        scenario = parse_scenario((VALID_DIR / "minimal.json").read_text())
        scenario = dataclasses.replace(scenario, steps=())
        session = start_session(scenario, Mode.TRAINING, T1)
        assert session.finished
        log = session.bus.drain_log()
        assert log[-1].action is ActionType.SESSION_FINISHED

    def test_part_states_seeded_from_initial_state(self, verano):
        session = start_session(verano, Mode.TRAINING, T1)
        states = session.state().part_states
        assert all(v.value == "installed" for v in states.values())

    def test_invalid_scenario_rejected(self):
        from enginetrainer.scenario import (
            BasicAction, ActionKind, Direction, Scenario, Step)
        bad = Scenario(id="b", engine_name="e", direction=Direction.DISASSEMBLY,
                       parts=(), tools=(),
                       steps=(Step(id="a", target_part="ghost",
                                   action=BasicAction(ActionKind.PRESS)),))
        with pytest.raises(ValueError):
            start_session(bad, Mode.TRAINING, T1)


class TestAttempt:
    def test_happy_path_progress_one_of_n(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        outcome = session.attempt("s1-1", action="hold")
        assert outcome.accepted and outcome.error_kind is None
        progress = [m for m in outcome.emitted_events
                    if m.action is ActionType.PROGRESS_UPDATED]
        assert len(progress) == 1
        assert progress[0].payload["completed"] == 1
        assert progress[0].payload["total"] == 15

    def test_prerequisite_incomplete_is_wrong_order(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        outcome = session.attempt("s2-1", tool_id="torque-wrench", torque=35.0,
                                  action="screw")
        assert not outcome.accepted
        assert outcome.error_kind is ErrorKind.WRONG_ORDER

    def test_wrong_torque(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        session.attempt("s1-1", action="hold")
        session.attempt("s1-2", action="press")
        outcome = session.attempt("s2-1", tool_id="torque-wrench", torque=20.0,
                                  action="screw")
        assert outcome.error_kind is ErrorKind.WRONG_TORQUE

    def test_wrong_tool(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        session.attempt("s1-1", action="hold")
        session.attempt("s1-2", action="press")
        outcome = session.attempt("s2-1", tool_id="pliers", torque=35.0,
                                  action="screw")
        assert outcome.error_kind is ErrorKind.WRONG_TOOL

    def test_unknown_tool_is_unknown_target(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        session.attempt("s1-1", action="hold")
        session.attempt("s1-2", action="press")
        outcome = session.attempt("s2-1", tool_id="laser", torque=35.0,
                                  action="screw")
        assert outcome.error_kind is ErrorKind.UNKNOWN_TARGET

    def test_wrong_action(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        outcome = session.attempt("s1-1", action="press")
        assert outcome.error_kind is ErrorKind.WRONG_ACTION

    def test_unknown_step_raises(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        with pytest.raises(UnknownStepError):
            session.attempt("s99", action="press")

    def test_failed_attempt_does_not_consume_the_step(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        assert not session.attempt("s1-1", action="press").accepted
        assert session.attempt("s1-1", action="hold").accepted

    def test_attempt_after_finish_raises(self, verano):
        session = run_perfect(verano)
        with pytest.raises(SessionFinishedError):
            session.attempt("s1-1", action="hold")

    def test_training_emits_hints_for_next_candidate(self, verano):
        session = start_session(verano, Mode.TRAINING, T1)
        outcome = session.attempt("s1-1", action="hold")
        hints = [m for m in outcome.emitted_events
                 if m.action is ActionType.HINT_ISSUED]
        assert [m.target for m in hints] == ["s1-2"]


class TestProgress:
    def test_fresh_session_zero(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        assert session.progress()[0] == 0.0

    def test_complete_session_one(self, verano):
        assert run_perfect(verano).progress()[0] == 1.0

    def test_three_of_fifteen(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        for sid, tool, torque, action in perfect_inputs(verano)[:3]:
            session.attempt(sid, tool_id=tool, torque=torque, action=action)
        fraction, stages = session.progress()
        assert fraction == 0.2
        assert stages["S1"] == {"completed": 2, "total": 2}
        assert stages["S3"] == {"completed": 0, "total": 3}

    def test_monotone_over_session(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        last = 0.0
        rng = random.Random(7)
        for sid, tool, torque, action in perfect_inputs(verano):
            if rng.random() < 0.5:  # sprinkle failures, progress must not drop
                session.attempt(sid, action="not-a-real-action")
            session.attempt(sid, tool_id=tool, torque=torque, action=action)
            fraction, _ = session.progress()
            assert fraction >= last
            last = fraction


class TestScoring:
    def test_perfect_run_scores_100(self, verano):
        report = run_perfect(verano).finish_and_score()
        assert report.score == 100.0
        assert all(report.stage_correct.values())

    def test_immediate_abandon_scores_0(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        session.abandon()
        report = session.finish_and_score()
        assert report.score == 0.0
        assert report.abandoned

    def test_one_wrong_tool_error_on_s3_scores_95(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        for sid, tool, torque, action in perfect_inputs(verano):
            if sid == "s3-1":
                bad = session.attempt(sid, tool_id="pliers", torque=torque,
                                      action=action)
                assert bad.error_kind is ErrorKind.WRONG_TOOL
            session.attempt(sid, tool_id=tool, torque=torque, action=action)
        report = session.finish_and_score()
        assert report.score == 95.0
        assert report.stage_correct["S3"] is False
        assert report.stage_correct["S2"] is True

    def test_score_floor_at_zero(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        for _ in range(30):
            session.attempt("s7-2", action="hide")  # wrong order, -5 each
        session.abandon()
        assert session.finish_and_score().score == 0.0

    def test_unfinished_session_cannot_be_scored(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS)
        with pytest.raises(SessionNotFinishedError):
            session.finish_and_score()


def random_attempt_run(scenario, seed, mode=Mode.EXAMINATION, hints=NO_HINTS):
    """Seeded random attempt sequence ending in completion or abandonment."""
    rng = random.Random(seed)
    session = start_session(scenario, mode, hints, session_id=f"seeded-{seed}")
    steps = list(scenario.steps)
    tools = [t.id for t in scenario.tools] + [None, "bogus-tool"]
    while not session.finished:
        if rng.random() < 0.02:
            session.abandon()
            break
        step = rng.choice(steps)
        if rng.random() < 0.7:  # mostly correct inputs
            tool, torque = step.required_tool, step.required_torque
            action = action_name(step.action)
        else:
            tool = rng.choice(tools)
            torque = rng.choice([None, 20.0, 35.0])
            action = rng.choice(["hold", "press", "screw", "unscrew", "hide"])
        session.advance_clock(rng.randint(0, 2000))
        session.attempt(step.id, tool_id=tool, torque=torque, action=action)
    return session


class TestReplay:
    def test_perfect_run_replays_to_identical_report(self, verano):
        session = run_perfect(verano, session_id="live-1")
        live = session.finish_and_score()
        replayed = replay(verano, Mode.EXAMINATION, session.rules,
                          session.bus.drain_log(), session_id="live-1")
        assert replayed == live
        assert live.score == 100.0

    def test_wrong_torque_run_replays_identically(self, verano):
        session = start_session(verano, Mode.EXAMINATION, NO_HINTS,
                                session_id="live-2")
        session.attempt("s1-1", action="hold")
        session.attempt("s1-2", action="press")
        session.attempt("s2-1", tool_id="torque-wrench", torque=20.0, action="screw")
        session.abandon()
        live = session.finish_and_score()
        replayed = replay(verano, Mode.EXAMINATION, session.rules,
                          session.bus.drain_log(), session_id="live-2")
        assert replayed == live

    def test_sequence_gap_is_corruption(self, verano):
        session = run_perfect(verano, session_id="live-3")
        log = session.bus.drain_log()
        gapped = [log[0], log[1]] + [EventMessage(
            seq=4, t_ms=log[2].t_ms, action=log[2].action,
            target=log[2].target, payload=log[2].payload)]
        with pytest.raises(LogCorruptionError):
            replay(verano, Mode.EXAMINATION, session.rules, gapped)

    def test_unknown_step_in_log_is_corruption(self, verano):
        session = run_perfect(verano, session_id="live-4")
        rules = session.rules
        log = [EventMessage(seq=1, t_ms=0.0, action=ActionType.ACTION_PERFORMED,
                            target="sX", payload={"step": "sX", "tool": None,
                                                  "torque": None, "action": "press"})]
        with pytest.raises(LogCorruptionError):
            replay(verano, Mode.EXAMINATION, rules, log)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_runs_replay_bit_exact(self, verano, seed):
        session = random_attempt_run(verano, seed)
        live = session.finish_and_score()
        replayed = replay(verano, Mode.EXAMINATION, session.rules,
                          session.bus.drain_log(), session_id=session.session_id)
        assert replayed == live

    def test_record_document_round_trips(self, verano):
        session = run_perfect(verano, session_id="live-5")
        document = json.loads(json.dumps(session.record_document("student-9")))
        report = replay_record(document, verano)
        assert report.to_json() == document["report"]


class TestModeParity:
    @pytest.mark.parametrize("seed", range(5))
    def test_accept_decisions_identical_across_modes(self, verano, seed):
        training = random_attempt_run(verano, seed, Mode.TRAINING, T3)
        exam = random_attempt_run(verano, seed, Mode.EXAMINATION, T3)
        def decisions(session):
            log = session.bus.drain_log()
            return [(m.action.value, m.target) for m in log
                    if m.action in (ActionType.STEP_COMPLETED, ActionType.STEP_FAILED)]
        assert decisions(training) == decisions(exam)

    def test_exam_log_has_zero_hints(self, verano):
        session = random_attempt_run(verano, 42, Mode.EXAMINATION, T3)
        assert not [m for m in session.bus.drain_log()
                    if m.action is ActionType.HINT_ISSUED]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_candidates_equal_brute_force_recomputation(seed):
    scenario = build_verano_scenario()
    session = random_attempt_run(scenario, seed)
    completed = session.state().completed_steps
    brute = {s.id for s in scenario.steps
             if s.id not in completed and s.prerequisites <= completed}
    assert session.candidates() == brute


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_score_bounds_under_floor_rules(seed):
    scenario = build_verano_scenario()
    session = random_attempt_run(scenario, seed)
    assert 0.0 <= session.finish_and_score().score <= 100.0
