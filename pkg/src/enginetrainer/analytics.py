"""Cohort analytics: score bands, band distributions, per-stage correctness
rates and the Q1-Q3 efficiency rubric aggregation.

All functions are pure; percentages are reported to 2 decimals with
half-up rounding.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Optional, Sequence, Union

STAGES = ["S1", "S2", "S3", "S4", "S5", "S6", "S7"]

RUBRIC_DIMENSIONS = {
    "Q1": "proficiency in engine disassembly and assembly",
    "Q2": "motivation for learning disassembly and assembly",
    "Q3": "proficiency in tool usage",
}


class EmptyCohortError(Exception):
    pass


class MissingStageError(Exception):
    pass


@dataclass(frozen=True)
class ScoreBand:
    label: str
    lower: int
    upper: int


# five bands partitioning the integers 0..100
SCORE_BANDS = (
    ScoreBand("0-20", 0, 20),
    ScoreBand("21-40", 21, 40),
    ScoreBand("41-60", 41, 60),
    ScoreBand("61-80", 61, 80),
    ScoreBand("81-100", 81, 100),
)


@dataclass(frozen=True)
class StudentResult:
    student_id: str
    score: float
    stage_correct: Mapping[str, bool] = field(default_factory=dict)
    rubric: Mapping[str, float] = field(default_factory=dict)  # Q1..Q3


@dataclass(frozen=True)
class CohortRecord:
    group_label: str
    results: tuple[StudentResult, ...]

    def __post_init__(self):
        ids = [r.student_id for r in self.results]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate student id in cohort")

    @property
    def size(self) -> int:
        return len(self.results)


def _round2(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _round_half_up(value: float) -> int:
    return int(Decimal(repr(value)).quantize(Decimal("1"), ROUND_HALF_UP))


def band_of(score: float) -> ScoreBand:
    """Band containing round-half-up(score); scores must lie in [0, 100]."""
    if not 0 <= score <= 100:
        raise ValueError(f"score {score} outside [0, 100]")
    rounded = _round_half_up(score)
    for band in SCORE_BANDS:
        if band.lower <= rounded <= band.upper:
            return band
    raise AssertionError("bands must partition 0..100")


def band_distribution(cohort: CohortRecord) -> dict[str, float]:
    """Percentage of the cohort in each band, ordered low to high."""
    if cohort.size == 0:
        raise EmptyCohortError(cohort.group_label)
    counts = {band.label: 0 for band in SCORE_BANDS}
    for result in cohort.results:
        counts[band_of(result.score).label] += 1
    return {label: _round2(100.0 * n / cohort.size) for label, n in counts.items()}


def correctness_rate(correct_count: int, cohort_size: int) -> float:
    """100 * correct / size, to 2 decimals."""
    if cohort_size <= 0:
        raise ValueError("cohort size must be positive")
    if not 0 <= correct_count <= cohort_size:
        raise ValueError("correct count must lie in [0, cohort size]")
    return _round2(100.0 * correct_count / cohort_size)


def stage_correctness_table(cohort: CohortRecord,
                            stages: Sequence[str] = STAGES) -> dict[str, float]:
    """Per-stage correctness rate across the cohort, ordered by stage."""
    if cohort.size == 0:
        raise EmptyCohortError(cohort.group_label)
    table: dict[str, float] = {}
    for stage in stages:
        correct = 0
        for result in cohort.results:
            if stage not in result.stage_correct:
                raise MissingStageError(
                    f"student {result.student_id!r} has no result for stage {stage}")
            correct += bool(result.stage_correct[stage])
        table[stage] = correctness_rate(correct, cohort.size)
    return table


def rubric_distribution(cohort: CohortRecord, dimension: str) -> dict[str, float]:
    """Band distribution of one rubric dimension (Q1, Q2 or Q3)."""
    if dimension not in RUBRIC_DIMENSIONS:
        raise ValueError(f"unknown rubric dimension {dimension!r}")
    scored = [r for r in cohort.results if dimension in r.rubric]
    if not scored:
        raise EmptyCohortError(f"{cohort.group_label}: no {dimension} scores")
    sub = CohortRecord(cohort.group_label, tuple(
        StudentResult(r.student_id, r.rubric[dimension]) for r in scored))
    return band_distribution(sub)


# -- CSV cohort input --------------------------------------------------------

CSV_COLUMNS = ["student_id", "group", "score", "q1", "q2", "q3",
               "s1", "s2", "s3", "s4", "s5", "s6", "s7"]


def parse_cohort_csv(text: str) -> dict[str, CohortRecord]:
    """Cohorts keyed by group label from the canonical CSV layout."""
    reader = csv.DictReader(io.StringIO(text))
    grouped: dict[str, list[StudentResult]] = {}
    for row in reader:
        rubric = {q.upper(): float(row[q]) for q in ("q1", "q2", "q3")
                  if row.get(q) not in (None, "")}
        stage_correct = {s.upper(): row[s.lower()] == "1" for s in STAGES
                         if row.get(s.lower()) not in (None, "")}
        grouped.setdefault(row["group"], []).append(StudentResult(
            student_id=row["student_id"],
            score=float(row["score"]),
            stage_correct=stage_correct,
            rubric=rubric,
        ))
    return {label: CohortRecord(label, tuple(results))
            for label, results in grouped.items()}


def write_cohort_csv(cohorts: Mapping[str, CohortRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for label in cohorts:
        for r in cohorts[label].results:
            writer.writerow(
                [r.student_id, label, r.score]
                + [r.rubric.get(q, "") for q in ("Q1", "Q2", "Q3")]
                + [int(r.stage_correct[s]) if s in r.stage_correct else ""
                   for s in STAGES])
    return out.getvalue()


# -- report rendering --------------------------------------------------------

def cohort_report(cohorts: Mapping[str, CohortRecord]) -> dict:
    """Machine-readable report: band distributions plus stage tables."""
    report: dict = {"groups": {}}
    for label, cohort in cohorts.items():
        entry: dict = {
            "size": cohort.size,
            "band_distribution": band_distribution(cohort),
        }
        if all(r.stage_correct for r in cohort.results):
            entry["stage_correctness"] = stage_correctness_table(cohort)
        rubric = {}
        for dim in RUBRIC_DIMENSIONS:
            if all(dim in r.rubric for r in cohort.results):
                rubric[dim] = rubric_distribution(cohort, dim)
        if rubric:
            entry["rubric_distribution"] = rubric
        report["groups"][label] = entry
    return report


def render_text_report(report: dict) -> str:
    """Plain-text tables mirroring the band-distribution and stage layouts."""
    lines: list[str] = []
    for label, entry in report["groups"].items():
        lines.append(f"Group {label} (n={entry['size']})")
        lines.append("  Score bands (%):")
        for band_label, pct in entry["band_distribution"].items():
            lines.append(f"    {band_label:>7}: {pct:6.2f}")
        if "stage_correctness" in entry:
            lines.append("  Stage correctness rate (%):")
            header = "  ".join(f"{s:>6}" for s in entry["stage_correctness"])
            values = "  ".join(f"{v:6.2f}" for v in entry["stage_correctness"].values())
            lines.append("    " + header)
            lines.append("    " + values)
        for dim, dist in entry.get("rubric_distribution", {}).items():
            lines.append(f"  {dim} ({RUBRIC_DIMENSIONS[dim]}) bands (%):")
            for band_label, pct in dist.items():
                lines.append(f"    {band_label:>7}: {pct:6.2f}")
        lines.append("")
    return "\n".join(lines)
