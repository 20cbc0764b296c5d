"""Control-layer session engine: training/examination state machine, scoring
and deterministic replay.

Acceptance decisions are identical in both modes; only hint emission
differs. All transitions are pure functions of (state, inputs), which makes
a session's event log sufficient to reconstruct its score bit-exactly.
"""
from __future__ import annotations

import hashlib
import json
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .events import ActionType, EventBus, EventMessage
from .scenario import (
    Direction,
    PartState,
    Scenario,
    Step,
    action_name,
    _completed_state,
)

RECORD_FORMAT_VERSION = 1


class Mode(str, Enum):
    TRAINING = "training"
    EXAMINATION = "examination"


class ErrorKind(str, Enum):
    WRONG_ORDER = "wrong-order"
    WRONG_TOOL = "wrong-tool"
    WRONG_TORQUE = "wrong-torque"
    WRONG_ACTION = "wrong-action"
    UNKNOWN_TARGET = "unknown-target"


class UnknownStepError(Exception):
    pass


class SessionFinishedError(Exception):
    pass


class SessionNotFinishedError(Exception):
    pass


class LogCorruptionError(Exception):
    pass


@dataclass(frozen=True)
class HintConfig:
    voice: bool = False
    text: bool = False
    tablet_display: bool = False
    screen_display: bool = False

    def channels(self) -> list[str]:
        enabled = []
        if self.voice:
            enabled.append("voice")
        if self.text:
            enabled.append("text")
        if self.tablet_display:
            enabled.append("tablet-display")
        if self.screen_display:
            enabled.append("screen-display")
        return enabled

    def to_json(self) -> dict:
        return {
            "voice": self.voice,
            "text": self.text,
            "tablet_display": self.tablet_display,
            "screen_display": self.screen_display,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "HintConfig":
        return cls(voice=bool(doc.get("voice")), text=bool(doc.get("text")),
                   tablet_display=bool(doc.get("tablet_display")),
                   screen_display=bool(doc.get("screen_display")))


T1 = HintConfig(voice=True)
T2 = HintConfig(voice=True, text=True, tablet_display=True)
T3 = HintConfig(voice=True, text=True, tablet_display=True, screen_display=True)
NO_HINTS = HintConfig()

HINT_PRESETS = {"T1": T1, "T2": T2, "T3": T3}

DEFAULT_DEDUCTIONS: dict[str, float] = {
    ErrorKind.WRONG_ORDER.value: 5.0,
    ErrorKind.WRONG_TOOL.value: 5.0,
    ErrorKind.WRONG_TORQUE.value: 5.0,
    ErrorKind.WRONG_ACTION.value: 3.0,
    ErrorKind.UNKNOWN_TARGET.value: 2.0,
}


@dataclass(frozen=True)
class ScoringRules:
    points_per_step: Mapping[str, float]
    deduction_per_error: Mapping[str, float]
    floor_at_zero: bool = True

    def total_points(self) -> float:
        return sum(self.points_per_step.values())

    def to_json(self) -> dict:
        return {
            "points_per_step": dict(self.points_per_step),
            "deduction_per_error": dict(self.deduction_per_error),
            "floor_at_zero": self.floor_at_zero,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ScoringRules":
        return cls(points_per_step=dict(doc["points_per_step"]),
                   deduction_per_error=dict(doc["deduction_per_error"]),
                   floor_at_zero=bool(doc.get("floor_at_zero", True)))

    def digest(self) -> str:
        raw = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(raw).hexdigest()

    @classmethod
    def default_for(cls, scenario: Scenario) -> "ScoringRules":
        # equal points per step summing to 100
        n = len(scenario.steps)
        points = {s.id: (100.0 / n if n else 0.0) for s in scenario.steps}
        return cls(points_per_step=points,
                   deduction_per_error=dict(DEFAULT_DEDUCTIONS))


@dataclass(frozen=True)
class AttemptOutcome:
    accepted: bool
    error_kind: Optional[ErrorKind]
    emitted_events: tuple[EventMessage, ...]

    def __post_init__(self):
        if self.accepted and self.error_kind is not None:
            raise ValueError("accepted outcome must not carry an error kind")
        if not self.accepted and self.error_kind is None:
            raise ValueError("rejected outcome must carry an error kind")


@dataclass(frozen=True)
class ScoreReport:
    session_id: str
    scenario_id: str
    mode: Mode
    score: float
    band: str
    completed_steps: int
    total_steps: int
    abandoned: bool
    step_outcomes: Mapping[str, Mapping]  # step id -> {completed, errors}
    stage_correct: Mapping[str, bool]     # stage label -> all steps clean

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "scenario_id": self.scenario_id,
            "mode": self.mode.value,
            "score": self.score,
            "band": self.band,
            "completed_steps": self.completed_steps,
            "total_steps": self.total_steps,
            "abandoned": self.abandoned,
            "step_outcomes": {k: dict(v) for k, v in self.step_outcomes.items()},
            "stage_correct": dict(self.stage_correct),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ScoreReport":
        return cls(
            session_id=doc["session_id"],
            scenario_id=doc["scenario_id"],
            mode=Mode(doc["mode"]),
            score=float(doc["score"]),
            band=doc["band"],
            completed_steps=int(doc["completed_steps"]),
            total_steps=int(doc["total_steps"]),
            abandoned=bool(doc["abandoned"]),
            step_outcomes={k: dict(v) for k, v in doc["step_outcomes"].items()},
            stage_correct=dict(doc["stage_correct"]),
        )


@dataclass(frozen=True)
class SessionState:
    """Immutable snapshot of a live session."""
    session_id: str
    scenario_id: str
    mode: Mode
    hint_config: HintConfig
    completed_steps: frozenset[str]
    current_candidates: frozenset[str]
    held_tool: Optional[tuple[str, Optional[float]]]
    part_states: Mapping[str, PartState]
    error_log: tuple[tuple[str, ErrorKind, float], ...]
    clock_ms: float
    finished: bool


class Session:
    """One trainee run of a scenario. Not thread-safe; confine to one context."""

    def __init__(self, scenario: Scenario, mode: Mode,
                 hint_config: HintConfig, rules: ScoringRules,
                 session_id: Optional[str] = None):
        self.scenario = scenario
        self.mode = mode
        # examination ignores the hint configuration entirely
        self.hint_config = hint_config if mode is Mode.TRAINING else NO_HINTS
        self.rules = rules
        self.session_id = session_id or f"sess-{uuid.uuid4().hex[:12]}"
        self.bus = EventBus()
        self.clock_ms = 0.0
        self._completed: set[str] = set()
        self._part_states: dict[str, PartState] = {
            p.id: p.initial_state for p in scenario.parts
        }
        self._error_log: list[tuple[str, ErrorKind, float]] = []
        self._held_tool: Optional[tuple[str, Optional[float]]] = None
        self._abandoned = False
        self._finished = False
        self._steps = scenario.step_by_id()

        if not scenario.steps:
            self._finish("completed")
        else:
            self._emit_hints()

    # -- state --------------------------------------------------------------

    def candidates(self) -> set[str]:
        """Steps whose prerequisites are all completed and which are pending."""
        return {s.id for s in self.scenario.steps
                if s.id not in self._completed and s.prerequisites <= self._completed}

    @property
    def finished(self) -> bool:
        return self._finished

    def advance_clock(self, delta_ms: float) -> None:
        if delta_ms < 0:
            raise ValueError("clock cannot move backwards")
        self.clock_ms += delta_ms

    def state(self) -> SessionState:
        return SessionState(
            session_id=self.session_id,
            scenario_id=self.scenario.id,
            mode=self.mode,
            hint_config=self.hint_config,
            completed_steps=frozenset(self._completed),
            current_candidates=frozenset(self.candidates()),
            held_tool=self._held_tool,
            part_states=dict(self._part_states),
            error_log=tuple(self._error_log),
            clock_ms=self.clock_ms,
            finished=self._finished,
        )

    def progress(self) -> tuple[float, dict[str, dict]]:
        """Completion fraction plus per-stage done/total counts."""
        total = len(self.scenario.steps)
        fraction = len(self._completed) / total if total else 1.0
        stages: dict[str, dict] = {}
        for step in self.scenario.steps:
            if step.stage is None:
                continue
            entry = stages.setdefault(step.stage, {"completed": 0, "total": 0})
            entry["total"] += 1
            if step.id in self._completed:
                entry["completed"] += 1
        return fraction, stages

    # -- transitions --------------------------------------------------------

    def attempt(self, step_id: str, tool_id: Optional[str] = None,
                torque: Optional[float] = None, action: str = "",
                at_ms: Optional[float] = None) -> AttemptOutcome:
        if self._finished:
            raise SessionFinishedError(self.session_id)
        if step_id not in self._steps:
            raise UnknownStepError(step_id)
        if at_ms is not None:
            if at_ms < self.clock_ms:
                raise ValueError("attempt timestamp before session clock")
            self.clock_ms = at_ms

        mark = len(self.bus.drain_log())
        step = self._steps[step_id]
        self._publish(ActionType.ACTION_PERFORMED, step_id, {
            "step": step_id, "tool": tool_id, "torque": torque, "action": action,
        })
        if tool_id is not None:
            self._held_tool = (tool_id, torque)

        error = self._check(step, tool_id, torque, action)
        if error is not None:
            self._error_log.append((step_id, error, self.clock_ms))
            self._publish(ActionType.STEP_FAILED, step_id, {"error": error.value})
            return AttemptOutcome(False, error, self._emitted_since(mark))

        self._completed.add(step_id)
        self._part_states[step.target_part] = _completed_state(
            self.scenario.direction, step.action)
        total = len(self.scenario.steps)
        self._publish(ActionType.STEP_COMPLETED, step_id, {"step": step_id})
        self._publish(ActionType.PROGRESS_UPDATED, self.session_id, {
            "completed": len(self._completed),
            "total": total,
            "fraction": len(self._completed) / total,
        })
        if len(self._completed) == total:
            self._finish("completed")
        else:
            self._emit_hints()
        return AttemptOutcome(True, None, self._emitted_since(mark))

    def abandon(self) -> None:
        if self._finished:
            raise SessionFinishedError(self.session_id)
        self._abandoned = True
        self._finish("abandoned")

    def _check(self, step: Step, tool_id: Optional[str],
               torque: Optional[float], action: str) -> Optional[ErrorKind]:
        """Acceptance logic shared by both modes."""
        if step.id not in self.candidates():
            return ErrorKind.WRONG_ORDER
        if tool_id is not None and tool_id not in self.scenario.tool_by_id():
            return ErrorKind.UNKNOWN_TARGET
        if step.required_tool is not None and tool_id != step.required_tool:
            return ErrorKind.WRONG_TOOL
        if step.required_torque is not None and torque != step.required_torque:
            return ErrorKind.WRONG_TORQUE
        if action != action_name(step.action):
            return ErrorKind.WRONG_ACTION
        return None

    def _finish(self, reason: str) -> None:
        self._finished = True
        self._publish(ActionType.SESSION_FINISHED, self.session_id, {"reason": reason})

    def _emit_hints(self) -> None:
        if self.mode is not Mode.TRAINING:
            return
        candidates = self.candidates()
        nxt = next((s for s in self.scenario.steps if s.id in candidates), None)
        if nxt is None:
            return
        for channel in self.hint_config.channels():
            text = nxt.prompt_voice_text if channel == "voice" else nxt.prompt_text
            self._publish(ActionType.HINT_ISSUED, nxt.id,
                          {"channel": channel, "text": text})

    def _publish(self, action: ActionType, target: str, payload: dict) -> None:
        self.bus.publish(action, target, payload, t_ms=self.clock_ms)

    def _emitted_since(self, mark: int) -> tuple[EventMessage, ...]:
        return tuple(self.bus.drain_log()[mark:])

    # -- scoring ------------------------------------------------------------

    def finish_and_score(self) -> ScoreReport:
        if not self._finished:
            raise SessionNotFinishedError(self.session_id)
        return score_session(
            scenario=self.scenario, rules=self.rules, mode=self.mode,
            session_id=self.session_id, completed=self._completed,
            error_log=self._error_log, abandoned=self._abandoned,
        )

    # -- recording ----------------------------------------------------------

    def record_document(self, student_id: Optional[str] = None) -> dict:
        report = self.finish_and_score()
        header = {
            "session_id": self.session_id,
            "scenario_id": self.scenario.id,
            "mode": self.mode.value,
            "hint_config": self.hint_config.to_json(),
            "rules": self.rules.to_json(),
            "rules_digest": self.rules.digest(),
        }
        if student_id is not None:
            header["student_id"] = student_id
        return {
            "format": RECORD_FORMAT_VERSION,
            "header": header,
            "events": [m.to_json() for m in self.bus.drain_log()],
            "report": report.to_json(),
        }


def start_session(scenario: Scenario, mode: Mode, hint_config: HintConfig,
                  rules: Optional[ScoringRules] = None,
                  session_id: Optional[str] = None) -> Session:
    from .scenario import validate_scenario
    diags = [d for d in validate_scenario(scenario) if d.severity == "error"]
    if diags:
        raise ValueError("invalid scenario: " + "; ".join(str(d) for d in diags))
    return Session(scenario, mode, hint_config,
                   rules or ScoringRules.default_for(scenario), session_id)


def score_session(scenario: Scenario, rules: ScoringRules, mode: Mode,
                  session_id: str, completed: set[str],
                  error_log: Iterable[tuple[str, ErrorKind, float]],
                  abandoned: bool) -> ScoreReport:
    from .analytics import band_of

    error_log = list(error_log)
    total = rules.total_points()
    earned = sum(rules.points_per_step.get(s.id, 0.0)
                 for s in scenario.steps if s.id in completed)
    deductions = sum(rules.deduction_per_error.get(kind.value, 0.0)
                     for _, kind, _ in error_log)
    score = (100.0 * earned / total if total else 0.0) - deductions
    if rules.floor_at_zero:
        score = max(0.0, score)
    score = min(100.0, score)

    errors_per_step: dict[str, int] = {}
    for step_id, _, _ in error_log:
        errors_per_step[step_id] = errors_per_step.get(step_id, 0) + 1

    step_outcomes = {
        s.id: {"completed": s.id in completed,
               "errors": errors_per_step.get(s.id, 0)}
        for s in scenario.steps
    }
    stage_correct: dict[str, bool] = {}
    for stage in scenario.stages():
        members = [s for s in scenario.steps if s.stage == stage]
        stage_correct[stage] = all(
            s.id in completed and errors_per_step.get(s.id, 0) == 0
            for s in members
        )

    return ScoreReport(
        session_id=session_id,
        scenario_id=scenario.id,
        mode=mode,
        score=score,
        band=band_of(score).label,
        completed_steps=len(completed),
        total_steps=len(scenario.steps),
        abandoned=abandoned,
        step_outcomes=step_outcomes,
        stage_correct=stage_correct,
    )


def verify_log(events: list[EventMessage]) -> None:
    """Raise LogCorruptionError unless sequence numbers are gapless 1..N."""
    for i, message in enumerate(events, start=1):
        if message.seq != i:
            raise LogCorruptionError(
                f"sequence gap: expected {i}, found {message.seq}")


def replay(scenario: Scenario, mode: Mode, rules: ScoringRules,
           events: list[EventMessage], hint_config: HintConfig = NO_HINTS,
           session_id: Optional[str] = None) -> ScoreReport:
    """Reconstruct a session from its event log and rescore it.

    The resulting report is bit-exact against the live run's report.
    """
    verify_log(events)
    session = Session(scenario, mode, hint_config, rules, session_id=session_id)
    for message in events:
        if message.action is ActionType.ACTION_PERFORMED:
            payload = message.payload
            step_id = str(payload.get("step", message.target))
            torque = payload.get("torque")
            try:
                session.attempt(
                    step_id,
                    tool_id=payload.get("tool"),
                    torque=float(torque) if torque is not None else None,
                    action=str(payload.get("action", "")),
                    at_ms=message.t_ms,
                )
            except UnknownStepError as exc:
                raise LogCorruptionError(f"unknown step id {exc}") from None
            except SessionFinishedError:
                raise LogCorruptionError("attempt after session finished") from None
        elif (message.action is ActionType.SESSION_FINISHED
              and message.payload.get("reason") == "abandoned"):
            session.abandon()
    if not session.finished:
        raise LogCorruptionError("log ends before the session finished")
    return session.finish_and_score()


def replay_record(document: Mapping, scenario: Scenario) -> ScoreReport:
    """Replay a full session record document against its scenario."""
    header = document.get("header", {})
    if header.get("scenario_id") != scenario.id:
        raise LogCorruptionError("record scenario id does not match scenario")
    rules = ScoringRules.from_json(header["rules"])
    if rules.digest() != header.get("rules_digest"):
        raise LogCorruptionError("scoring rules digest mismatch")
    events = [EventMessage.from_json(e) for e in document.get("events", [])]
    return replay(
        scenario,
        Mode(header["mode"]),
        rules,
        events,
        hint_config=HintConfig.from_json(header.get("hint_config", {})),
        session_id=header["session_id"],
    )
