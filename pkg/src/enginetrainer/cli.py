"""Command line entry point: scenario validation, terminal-interactive
sessions, replay, cohort reports, the perf lab and the HTTP server."""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .analytics import cohort_report, parse_cohort_csv, render_text_report
from .scenario import (
    ScenarioError,
    parse_scenario,
    serialize_scenario,
    topological_order,
    validate_scenario,
)
from .session import (
    HINT_PRESETS,
    LogCorruptionError,
    Mode,
    ScoringRules,
    UnknownStepError,
    replay_record,
    start_session,
)
from .store import SessionStore
from . import perf as perf_lab


def _data_dir(value: Optional[str]) -> Path:
    return Path(value or os.environ.get("TRAINER_DATA", "./trainer-data"))


@click.group()
@click.version_option(__version__)
def main():
    """Guided assembly/disassembly trainer."""


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
def validate(scenario_file: str):
    """Parse and validate a scenario file."""
    text = Path(scenario_file).read_text("utf-8")
    try:
        scenario = parse_scenario(text)
    except ScenarioError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    diags = validate_scenario(scenario)
    for d in diags:
        click.echo(str(d), err=True)
    if any(d.severity == "error" for d in diags):
        sys.exit(1)
    order = topological_order(scenario)
    click.echo(f"ok: {scenario.id} ({len(scenario.steps)} steps, "
               f"first {order[0] if order else '-'})")


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["training", "exam"]), default="training")
@click.option("--hints", type=click.Choice(sorted(HINT_PRESETS)), default="T3")
@click.option("--student", default=None, help="student id stored in the record")
@click.option("--record", "record_out", type=click.Path(dir_okay=False),
              default=None, help="write the session record here on finish")
def run(scenario_file: str, mode: str, hints: str, student: Optional[str],
        record_out: Optional[str]):
    """Drive a session interactively from the terminal.

    Commands: `attempt STEP ACTION [TOOL] [TORQUE]`, `state`, `abandon`, `quit`.
    """
    scenario = parse_scenario(Path(scenario_file).read_text("utf-8"))
    session_mode = Mode.TRAINING if mode == "training" else Mode.EXAMINATION
    session = start_session(scenario, session_mode, HINT_PRESETS[hints])

    def show_hints(events):
        for m in events:
            if m.action.value == "HintIssued":
                click.echo(f"  [{m.payload['channel']}] {m.payload['text']}")

    show_hints(session.bus.drain_log())
    while not session.finished:
        candidates = [s.id for s in scenario.steps if s.id in session.candidates()]
        click.echo(f"candidates: {', '.join(candidates)}")
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            continue
        words = line.split()
        command, args = words[0], words[1:]
        if command == "quit":
            break
        if command == "abandon":
            session.abandon()
            break
        if command == "state":
            fraction, stages = session.progress()
            click.echo(f"progress: {fraction:.0%} {stages}")
            continue
        if command == "attempt" and len(args) >= 2:
            step_id, action = args[0], args[1]
            tool = args[2] if len(args) > 2 else None
            torque = float(args[3]) if len(args) > 3 else None
            try:
                outcome = session.attempt(step_id, tool_id=tool, torque=torque,
                                          action=action)
            except UnknownStepError:
                click.echo(f"unknown step {step_id!r}")
                continue
            if outcome.accepted:
                fraction, _ = session.progress()
                click.echo(f"accepted ({fraction:.0%})")
                show_hints(outcome.emitted_events)
            else:
                click.echo(f"rejected: {outcome.error_kind.value}")
            continue
        click.echo("commands: attempt STEP ACTION [TOOL] [TORQUE] | state | abandon | quit")

    if session.finished:
        report = session.finish_and_score()
        click.echo(f"score: {report.score:.1f} (band {report.band})")
        if record_out:
            Path(record_out).write_text(
                json.dumps(session.record_document(student_id=student),
                           sort_keys=True, indent=2) + "\n", "utf-8")
            click.echo(f"record written to {record_out}")
    else:
        click.echo("session left unfinished; no score")


@main.command()
@click.argument("record_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", "scenario_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="scenario file (defaults to store lookup)")
@click.option("--data", default=None, help="data directory with stored scenarios")
def replay(record_file: str, scenario_file: Optional[str], data: Optional[str]):
    """Replay a session record and verify its embedded score."""
    document = json.loads(Path(record_file).read_text("utf-8"))
    scenario_id = document.get("header", {}).get("scenario_id", "")
    if scenario_file:
        scenario = parse_scenario(Path(scenario_file).read_text("utf-8"))
    else:
        scenario = SessionStore(_data_dir(data)).get_scenario(scenario_id)
    try:
        report = replay_record(document, scenario)
    except LogCorruptionError as exc:
        click.echo(f"corrupt record: {exc}", err=True)
        sys.exit(1)
    click.echo(f"replayed score: {report.score:.1f} (band {report.band})")
    embedded = document.get("report", {})
    if embedded and embedded != report.to_json():
        click.echo("MISMATCH: embedded report differs from replay", err=True)
        sys.exit(1)
    click.echo("embedded report verified")


@main.command()
@click.option("--cohort", "cohort_csv", type=click.Path(exists=True, dir_okay=False),
              default=None, help="cohort CSV file")
@click.option("--store", "store_dir", default=None, help="store data directory")
@click.option("--scenario", "scenario_id", default="verano-s1-s7")
@click.option("--json", "as_json", is_flag=True, help="emit JSON instead of text")
def report(cohort_csv: Optional[str], store_dir: Optional[str],
           scenario_id: str, as_json: bool):
    """Render cohort analytics from a CSV file or the session store."""
    if cohort_csv:
        cohorts = parse_cohort_csv(Path(cohort_csv).read_text("utf-8"))
    elif store_dir or os.environ.get("TRAINER_DATA"):
        store = SessionStore(_data_dir(store_dir))
        groups = sorted({s.group_label for s in store.list_sessions()
                         if s.group_label and s.scenario_id == scenario_id})
        cohorts = {g: store.query_cohort(g, scenario_id) for g in groups}
    else:
        raise click.UsageError("provide --cohort CSV or --store DIR")
    body = cohort_report(cohorts)
    if as_json:
        click.echo(json.dumps(body, sort_keys=True, indent=2))
    else:
        click.echo(render_text_report(body))


@main.command()
@click.option("--trace", "trace_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="frame trace, one ms value per line")
@click.option("--scene", "scene_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="scene JSON for draw-call batching")
@click.option("--vsync", type=click.Choice([p.value for p in perf_lab.VSyncPolicy]),
              default="dontsync")
@click.option("--refresh", type=float, default=90.0, help="refresh rate in Hz")
@click.option("--compare", "baseline_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="baseline summary JSON to compare against")
@click.option("--json", "as_json", is_flag=True)
def perf(trace_file: Optional[str], scene_file: Optional[str], vsync: str,
         refresh: float, baseline_file: Optional[str], as_json: bool):
    """Frame pacing, batching and optimization-ratio reports."""
    output: dict = {}
    summary = None
    if trace_file:
        trace = perf_lab.parse_trace_file(Path(trace_file).read_text("utf-8"))
        mode = perf_lab.VSyncMode(perf_lab.VSyncPolicy(vsync), refresh)
        summary = perf_lab.summarize(perf_lab.pace(trace, mode))
        output["summary"] = {
            "average_frame_time_ms": summary.average_frame_time_ms,
            "maximum_frame_time_ms": summary.maximum_frame_time_ms,
            "average_frame_rate_fps": summary.average_frame_rate_fps,
            "reciprocal_mean_fps": summary.reciprocal_mean_fps,
        }
    if scene_file:
        scene = perf_lab.parse_scene_file(
            json.loads(Path(scene_file).read_text("utf-8")))
        groups = perf_lab.batch(scene)
        output["draw_calls"] = len(groups)
    if baseline_file:
        if summary is None:
            raise click.UsageError("--compare requires --trace")
        doc = json.loads(Path(baseline_file).read_text("utf-8"))
        baseline = perf_lab.MetricsSummary(
            average_frame_time_ms=doc["average_frame_time_ms"],
            maximum_frame_time_ms=doc["maximum_frame_time_ms"],
            average_frame_rate_fps=doc["average_frame_rate_fps"],
            reciprocal_mean_fps=doc.get(
                "reciprocal_mean_fps", 1000.0 / doc["average_frame_time_ms"]),
        )
        rows = perf_lab.compare_runs(baseline, summary)
        if as_json:
            output["comparison"] = [row.__dict__ for row in rows]
        else:
            click.echo(perf_lab.render_comparison(rows))
    if as_json:
        click.echo(json.dumps(output, sort_keys=True, indent=2))
    elif output:
        for key, value in output.items():
            click.echo(f"{key}: {json.dumps(value, sort_keys=True)}")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--data", default=None, help="data directory (TRAINER_DATA)")
@click.option("--token", default=None, help="shared auth token for teacher endpoints")
def serve(port: int, host: str, data: Optional[str], token: Optional[str]):
    """Run the HTTP service (and the web client, if built)."""
    import uvicorn

    from .api import create_app

    store = SessionStore(_data_dir(data))
    app = create_app(store, auth_token=token)
    _mount_frontend(app)
    uvicorn.run(app, host=host, port=port)


def _mount_frontend(app) -> None:
    from fastapi.staticfiles import StaticFiles

    override = os.environ.get("TRAINER_UI_DIST")
    dist = Path(override) if override else (
        Path(__file__).resolve().parents[2] / "frontend" / "dist")
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=dist, html=True), name="ui")


@main.command("export-fixture")
@click.argument("out", type=click.Path(dir_okay=False), default="-")
def export_fixture(out: str):
    """Write the canonical shipped scenario document."""
    from .fixtures import verano_document
    text = verano_document()
    if out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, "utf-8")


if __name__ == "__main__":
    main()
