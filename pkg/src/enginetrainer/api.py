"""HTTP service wrapping the engine: scenario delivery, live session
driving for the web client, record ingest and cohort reports.

Writes are serialized by the store; each live session is guarded by its
own lock so concurrent requests cannot interleave inside one session.
"""
from __future__ import annotations

import threading
from datetime import datetime, timezone
from typing import Any, Optional

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .analytics import cohort_report, stage_correctness_table, band_distribution
from .fixtures import verano_document
from .session import (
    HINT_PRESETS,
    HintConfig,
    Mode,
    ScoringRules,
    Session,
    UnknownStepError,
    start_session,
)
from .store import (
    DuplicateSessionError,
    RecordParseError,
    ReplayMismatchError,
    SessionStore,
    UnknownScenarioError,
)


class IngestRequest(BaseModel):
    record: dict
    student_id: Optional[str] = None
    group: Optional[str] = None


class IngestResponse(BaseModel):
    session_id: str
    score: float
    band: str


class StoredSessionResponse(BaseModel):
    session_id: str
    scenario_id: str
    mode: str
    student_id: Optional[str]
    group: Optional[str]
    created_at: str
    report: dict


class LiveSessionRequest(BaseModel):
    scenario_id: str
    mode: Mode = Mode.TRAINING
    hints: str = Field("T3", description="hint preset T1, T2 or T3")
    student_id: Optional[str] = None


class AttemptRequest(BaseModel):
    step_id: str
    tool_id: Optional[str] = None
    torque: Optional[float] = None
    action: str = ""
    at_ms: Optional[float] = None


class AttemptResponse(BaseModel):
    accepted: bool
    error_kind: Optional[str]
    finished: bool
    progress: float
    events: list[dict]


class LiveStateResponse(BaseModel):
    session_id: str
    scenario_id: str
    mode: str
    hint_config: dict
    completed_steps: list[str]
    candidates: list[str]
    part_states: dict[str, str]
    progress: float
    stage_progress: dict[str, dict]
    finished: bool
    report: Optional[dict]
    events: list[dict]


class _LiveSession:
    def __init__(self, session: Session, student_id: Optional[str]):
        self.session = session
        self.student_id = student_id
        self.lock = threading.Lock()


def create_app(store: SessionStore, auth_token: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="Engine assembly trainer", version=__version__)
    live: dict[str, _LiveSession] = {}
    live_lock = threading.Lock()

    # ship the canonical scenario so a fresh data directory is usable
    try:
        store.get_scenario("verano-s1-s7")
    except UnknownScenarioError:
        store.put_scenario(verano_document())

    def require_auth(authorization: Optional[str] = Header(None)) -> None:
        if auth_token is None:
            return
        if authorization != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="invalid auth token")

    def get_live(session_id: str) -> _LiveSession:
        entry = live.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown live session")
        return entry

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/v1/scenarios")
    def list_scenarios() -> list[dict]:
        return [{"id": s.id, "engine_name": s.engine_name,
                 "direction": s.direction.value, "steps": len(s.steps)}
                for s in store.list_scenarios()]

    @app.get("/v1/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str) -> dict:
        try:
            return store.get_scenario(scenario_id).to_json()
        except UnknownScenarioError:
            raise HTTPException(status_code=404, detail="unknown scenario") from None

    @app.post("/v1/sessions", status_code=201,
              dependencies=[Depends(require_auth)])
    def ingest(request: IngestRequest) -> IngestResponse:
        try:
            stored = store.ingest(
                request.record,
                created_at=datetime.now(timezone.utc).isoformat(),
                student_id=request.student_id,
                group_label=request.group,
            )
        except RecordParseError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        except UnknownScenarioError as exc:
            raise HTTPException(status_code=404,
                                detail=f"unknown scenario {exc}") from None
        except ReplayMismatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except DuplicateSessionError as exc:
            raise HTTPException(status_code=409,
                                detail=f"duplicate session {exc}") from None
        return IngestResponse(session_id=stored.session_id,
                              score=stored.report.score,
                              band=stored.report.band)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> StoredSessionResponse:
        stored = store.get(session_id)
        if stored is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return StoredSessionResponse(
            session_id=stored.session_id,
            scenario_id=stored.scenario_id,
            mode=stored.mode,
            student_id=stored.student_id,
            group=stored.group_label,
            created_at=stored.created_at,
            report=dict(stored.report.to_json()),
        )

    @app.get("/v1/cohorts/{group}/report",
             dependencies=[Depends(require_auth)])
    def cohort_report_endpoint(group: str, scenario: str) -> dict:
        cohort = store.query_cohort(group, scenario)
        if cohort.size == 0:
            return {"group": group, "scenario": scenario, "size": 0}
        body: dict[str, Any] = {
            "group": group,
            "scenario": scenario,
            "size": cohort.size,
            "band_distribution": band_distribution(cohort),
        }
        if all(r.stage_correct for r in cohort.results):
            body["stage_correctness"] = stage_correctness_table(cohort)
        return body

    @app.post("/v1/live", status_code=201)
    def start_live(request: LiveSessionRequest) -> dict:
        try:
            scenario = store.get_scenario(request.scenario_id)
        except UnknownScenarioError:
            raise HTTPException(status_code=404, detail="unknown scenario") from None
        hints = HINT_PRESETS.get(request.hints)
        if hints is None:
            raise HTTPException(status_code=400,
                                detail=f"unknown hint preset {request.hints!r}")
        session = start_session(scenario, request.mode, hints,
                                ScoringRules.default_for(scenario))
        with live_lock:
            live[session.session_id] = _LiveSession(session, request.student_id)
        return {"session_id": session.session_id}

    @app.get("/v1/live/{session_id}/state")
    def live_state(session_id: str) -> LiveStateResponse:
        entry = get_live(session_id)
        with entry.lock:
            session = entry.session
            fraction, stages = session.progress()
            state = session.state()
            report = session.finish_and_score().to_json() if session.finished else None
            return LiveStateResponse(
                session_id=session.session_id,
                scenario_id=session.scenario.id,
                mode=session.mode.value,
                hint_config=session.hint_config.to_json(),
                completed_steps=sorted(state.completed_steps),
                candidates=[s.id for s in session.scenario.steps
                            if s.id in state.current_candidates],
                part_states={k: v.value for k, v in state.part_states.items()},
                progress=fraction,
                stage_progress=stages,
                finished=session.finished,
                report=report,
                events=[m.to_json() for m in session.bus.drain_log()],
            )

    @app.post("/v1/live/{session_id}/attempt")
    def live_attempt(session_id: str, request: AttemptRequest) -> AttemptResponse:
        entry = get_live(session_id)
        with entry.lock:
            session = entry.session
            if session.finished:
                raise HTTPException(status_code=409, detail="session finished")
            try:
                outcome = session.attempt(
                    request.step_id, tool_id=request.tool_id,
                    torque=request.torque, action=request.action,
                    at_ms=request.at_ms)
            except UnknownStepError as exc:
                raise HTTPException(status_code=404,
                                    detail=f"unknown step {exc}") from None
            fraction, _ = session.progress()
            return AttemptResponse(
                accepted=outcome.accepted,
                error_kind=outcome.error_kind.value if outcome.error_kind else None,
                finished=session.finished,
                progress=fraction,
                events=[m.to_json() for m in outcome.emitted_events],
            )

    @app.post("/v1/live/{session_id}/abandon")
    def live_abandon(session_id: str) -> dict:
        entry = get_live(session_id)
        with entry.lock:
            if entry.session.finished:
                raise HTTPException(status_code=409, detail="session finished")
            entry.session.abandon()
            return {"finished": True}

    @app.post("/v1/live/{session_id}/submit", status_code=201)
    def live_submit(session_id: str, group: Optional[str] = None) -> IngestResponse:
        """Store a finished live session's record and drop it from memory."""
        entry = get_live(session_id)
        with entry.lock:
            session = entry.session
            if not session.finished:
                raise HTTPException(status_code=409, detail="session not finished")
            record = session.record_document(student_id=entry.student_id)
            try:
                stored = store.ingest(
                    record, created_at=datetime.now(timezone.utc).isoformat(),
                    student_id=entry.student_id, group_label=group)
            except DuplicateSessionError as exc:
                raise HTTPException(status_code=409,
                                    detail=f"duplicate session {exc}") from None
        with live_lock:
            live.pop(session_id, None)
        return IngestResponse(session_id=stored.session_id,
                              score=stored.report.score,
                              band=stored.report.band)

    @app.get("/v1/cohorts-report", dependencies=[Depends(require_auth)])
    def full_report(scenario: str) -> dict:
        groups = {s.group_label for s in store.list_sessions()
                  if s.scenario_id == scenario and s.group_label}
        cohorts = {g: store.query_cohort(g, scenario) for g in sorted(groups)}
        return cohort_report(cohorts)

    return app
