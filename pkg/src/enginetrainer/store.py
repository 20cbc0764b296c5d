"""Persistence layer: an append-only directory of replay-verified session
records.

Each record is written to a temp file, fsynced, then atomically renamed
into place, so a crash at any point leaves only fully written records.
Stray temp files are ignored (and swept) on open.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .analytics import CohortRecord, StudentResult
from .scenario import Scenario, canonical_json, parse_scenario
from .session import LogCorruptionError, ScoreReport, replay_record

RECORD_SUFFIX = ".json"
TMP_PREFIX = "tmp-"


class RecordParseError(Exception):
    pass


class ReplayMismatchError(Exception):
    pass


class DuplicateSessionError(Exception):
    pass


class UnknownScenarioError(Exception):
    pass


@dataclass(frozen=True)
class StoredSession:
    session_id: str
    scenario_id: str
    mode: str
    student_id: Optional[str]
    group_label: Optional[str]
    created_at: str  # ISO-8601 wall clock
    record: Mapping
    report: ScoreReport


class SessionStore:
    """Single-writer, multi-reader record store rooted at a data directory."""

    def __init__(self, data_dir: Path | str):
        self.root = Path(data_dir)
        self.records_dir = self.root / "records"
        self.scenarios_dir = self.root / "scenarios"
        self.records_dir.mkdir(parents=True, exist_ok=True)
        self.scenarios_dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._sweep_temp_files()

    def _sweep_temp_files(self) -> None:
        for leftover in self.records_dir.glob(TMP_PREFIX + "*"):
            leftover.unlink()

    # -- scenarios ----------------------------------------------------------

    def put_scenario(self, document: str) -> Scenario:
        scenario = parse_scenario(document)
        self._atomic_write(self.scenarios_dir / f"{scenario.id}{RECORD_SUFFIX}",
                           document)
        return scenario

    def get_scenario(self, scenario_id: str) -> Scenario:
        path = self.scenarios_dir / f"{scenario_id}{RECORD_SUFFIX}"
        if not path.exists():
            raise UnknownScenarioError(scenario_id)
        return parse_scenario(path.read_text("utf-8"))

    def list_scenarios(self) -> list[Scenario]:
        return [parse_scenario(p.read_text("utf-8"))
                for p in sorted(self.scenarios_dir.glob("*" + RECORD_SUFFIX))]

    # -- session records ----------------------------------------------------

    def ingest(self, document: Mapping, created_at: str,
               student_id: Optional[str] = None,
               group_label: Optional[str] = None) -> StoredSession:
        """Replay-verify and durably store one session record.

        The embedded score must match the deterministic replay of the
        embedded event log; otherwise the record is rejected as
        tampered/corrupt.
        """
        if not isinstance(document, Mapping) or "header" not in document:
            raise RecordParseError("not a session record document")
        header = document["header"]
        try:
            session_id = header["session_id"]
            scenario_id = header["scenario_id"]
            embedded = ScoreReport.from_json(document["report"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordParseError(str(exc)) from None

        scenario = self.get_scenario(scenario_id)
        try:
            replayed = replay_record(document, scenario)
        except LogCorruptionError as exc:
            raise ReplayMismatchError(f"record does not replay: {exc}") from None
        if replayed.to_json() != embedded.to_json():
            raise ReplayMismatchError(
                f"embedded score {embedded.score} does not match replay "
                f"score {replayed.score}")

        with self._write_lock:
            path = self.records_dir / f"{session_id}{RECORD_SUFFIX}"
            if path.exists():
                raise DuplicateSessionError(session_id)
            envelope = {
                "created_at": created_at,
                "student_id": student_id if student_id is not None
                else header.get("student_id"),
                "group_label": group_label,
                "record": dict(document),
            }
            self._atomic_write(path, canonical_json(envelope))
        return self._stored_from_envelope(session_id, envelope)

    def get(self, session_id: str) -> Optional[StoredSession]:
        path = self.records_dir / f"{session_id}{RECORD_SUFFIX}"
        if not path.exists():
            return None
        envelope = json.loads(path.read_text("utf-8"))
        return self._stored_from_envelope(session_id, envelope)

    def list_sessions(self) -> list[StoredSession]:
        """All stored sessions, ordered by (created_at, session_id)."""
        sessions = []
        for path in self.records_dir.glob("*" + RECORD_SUFFIX):
            envelope = json.loads(path.read_text("utf-8"))
            sessions.append(self._stored_from_envelope(path.stem, envelope))
        sessions.sort(key=lambda s: (s.created_at, s.session_id))
        return sessions

    def verify_all(self) -> list[str]:
        """Replay-verify every stored record; returns offending session ids."""
        bad = []
        for stored in self.list_sessions():
            try:
                scenario = self.get_scenario(stored.scenario_id)
                replayed = replay_record(stored.record, scenario)
                if replayed.to_json() != stored.report.to_json():
                    bad.append(stored.session_id)
            except Exception:
                bad.append(stored.session_id)
        return bad

    def query_cohort(self, group_label: str, scenario_id: str) -> CohortRecord:
        """Stored sessions matching the filters, assembled for analytics."""
        results = []
        for stored in self.list_sessions():
            if stored.scenario_id != scenario_id:
                continue
            if group_label and stored.group_label != group_label:
                continue
            results.append(StudentResult(
                student_id=stored.student_id or stored.session_id,
                score=stored.report.score,
                stage_correct=dict(stored.report.stage_correct),
            ))
        return CohortRecord(group_label, tuple(results))

    # -- internals ----------------------------------------------------------

    def _stored_from_envelope(self, session_id: str, envelope: Mapping) -> StoredSession:
        record = envelope["record"]
        header = record["header"]
        return StoredSession(
            session_id=session_id,
            scenario_id=header["scenario_id"],
            mode=header["mode"],
            student_id=envelope.get("student_id"),
            group_label=envelope.get("group_label"),
            created_at=envelope["created_at"],
            record=record,
            report=ScoreReport.from_json(record["report"]),
        )

    def _atomic_write(self, path: Path, text: str) -> None:
        tmp = path.parent / f"{TMP_PREFIX}{os.getpid()}-{path.name}"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
