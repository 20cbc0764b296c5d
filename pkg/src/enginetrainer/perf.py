"""Performance lab: frame pacing under the three VSync policies, static
draw-call batching, and before/after optimization-ratio reports.

Everything here is pure arithmetic over supplied traces and scene
descriptions; no real GPU is involved.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Optional, Sequence


class VSyncPolicy(str, Enum):
    DONT_SYNC = "dontsync"
    EVERY_VBLANK = "every"
    EVERY_SECOND_VBLANK = "everysecond"


class Mobility(str, Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"


@dataclass(frozen=True)
class FrameTrace:
    render_times_ms: tuple[float, ...]

    def __post_init__(self):
        if not self.render_times_ms:
            raise ValueError("frame trace must be non-empty")
        if any(t <= 0 for t in self.render_times_ms):
            raise ValueError("frame times must be positive")


@dataclass(frozen=True)
class VSyncMode:
    policy: VSyncPolicy
    refresh_rate_hz: float = 90.0

    def __post_init__(self):
        if self.refresh_rate_hz <= 0:
            raise ValueError("refresh rate must be positive")

    @property
    def refresh_period_ms(self) -> float:
        return 1000.0 / self.refresh_rate_hz


@dataclass(frozen=True)
class SceneObject:
    id: str
    material_id: str
    mobility: Mobility


@dataclass(frozen=True)
class SceneDescription:
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValueError(f"duplicate scene object id {dup!r}")


@dataclass(frozen=True)
class MetricsSummary:
    average_frame_time_ms: float
    maximum_frame_time_ms: float
    average_frame_rate_fps: float        # mean of instantaneous rates
    reciprocal_mean_fps: float           # 1000 / mean frame time, cross-check
    draw_call_peak: Optional[int] = None
    reserved_memory_peak_mb: Optional[float] = None

    def __post_init__(self):
        # tiny slack: summation rounding can push the mean one ulp past the max
        slack = 1e-9 * self.maximum_frame_time_ms
        if not (self.maximum_frame_time_ms + slack >= self.average_frame_time_ms > 0):
            raise ValueError("maximum frame time must be >= average > 0")


def pace(trace: FrameTrace, vsync: VSyncMode) -> FrameTrace:
    """Displayed frame times after quantizing to the vblank grid.

    DontSync passes raw times through; EveryVBlank rounds each frame up to
    the next refresh period; EverySecondVBlank rounds up to the next double
    period. Displayed time is never below the raw render time.
    """
    period = vsync.refresh_period_ms
    if vsync.policy is VSyncPolicy.DONT_SYNC:
        return trace
    if vsync.policy is VSyncPolicy.EVERY_VBLANK:
        quantum = period
    else:
        quantum = 2.0 * period
    return FrameTrace(tuple(quantum * math.ceil(t / quantum)
                            for t in trace.render_times_ms))


def summarize(trace: FrameTrace, draw_call_peak: Optional[int] = None,
              reserved_memory_peak_mb: Optional[float] = None) -> MetricsSummary:
    times = trace.render_times_ms
    mean_time = sum(times) / len(times)
    return MetricsSummary(
        average_frame_time_ms=mean_time,
        maximum_frame_time_ms=max(times),
        average_frame_rate_fps=sum(1000.0 / t for t in times) / len(times),
        reciprocal_mean_fps=1000.0 / mean_time,
        draw_call_peak=draw_call_peak,
        reserved_memory_peak_mb=reserved_memory_peak_mb,
    )


@dataclass(frozen=True)
class DrawCallGroup:
    material_id: str
    static: bool
    object_ids: tuple[str, ...]


def batch(scene: SceneDescription) -> list[DrawCallGroup]:
    """Group the scene into draw calls: static objects merge per material,
    dynamic objects cost one call each. Output partitions the object set.
    """
    static_groups: dict[str, list[str]] = {}
    groups: list[DrawCallGroup] = []
    for obj in scene.objects:
        if obj.mobility is Mobility.STATIC:
            static_groups.setdefault(obj.material_id, []).append(obj.id)
        else:
            groups.append(DrawCallGroup(obj.material_id, False, (obj.id,)))
    for material_id in sorted(static_groups):
        groups.append(DrawCallGroup(material_id, True, tuple(static_groups[material_id])))
    return groups


def draw_call_count(scene: SceneDescription) -> int:
    return len(batch(scene))


def optimization_ratio(before: float, after: float, direction: str = "reduction") -> float:
    """Before/after improvement percentage at 1-decimal half-up rounding."""
    if before <= 0:
        raise ValueError("baseline value must be positive")
    if direction == "reduction":
        ratio = 100.0 * (before - after) / before
    elif direction == "increase":
        ratio = 100.0 * (after - before) / before
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return float(Decimal(repr(ratio)).quantize(Decimal("0.1"), ROUND_HALF_UP))


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    before: float
    after: float
    direction: str
    ratio_pct: float


def compare_runs(baseline: MetricsSummary, optimized: MetricsSummary) -> list[ComparisonRow]:
    """Per-metric before/after/ratio rows; frame times improve by reduction,
    frame rates by increase.
    """
    rows = [
        ("maximum_frame_time_ms", baseline.maximum_frame_time_ms,
         optimized.maximum_frame_time_ms, "reduction"),
        ("average_frame_time_ms", baseline.average_frame_time_ms,
         optimized.average_frame_time_ms, "reduction"),
        ("average_frame_rate_fps", baseline.average_frame_rate_fps,
         optimized.average_frame_rate_fps, "increase"),
    ]
    if baseline.draw_call_peak is not None and optimized.draw_call_peak is not None:
        rows.append(("draw_call_peak", float(baseline.draw_call_peak),
                     float(optimized.draw_call_peak), "reduction"))
    return [ComparisonRow(metric, before, after, direction,
                          optimization_ratio(before, after, direction))
            for metric, before, after, direction in rows]


def render_comparison(rows: Sequence[ComparisonRow]) -> str:
    lines = [f"{'Metric':<26} {'Before':>10} {'After':>10} {'Ratio':>8}"]
    for row in rows:
        arrow = "-" if row.direction == "reduction" else "+"
        lines.append(f"{row.metric:<26} {row.before:>10.3f} {row.after:>10.3f} "
                     f"{row.ratio_pct:>7.1f}%{arrow}")
    return "\n".join(lines)


def synthetic_trace(n_frames: int, seed: int, median_ms: float = 10.0,
                    sigma: float = 0.35) -> FrameTrace:
    """Seeded log-normal render times; reproducible but not calibrated to any
    measured hardware.
    """
    if n_frames <= 0:
        raise ValueError("need at least one frame")
    rng = random.Random(seed)
    mu = math.log(median_ms)
    return FrameTrace(tuple(rng.lognormvariate(mu, sigma) for _ in range(n_frames)))


# -- file formats ------------------------------------------------------------

def parse_trace_file(text: str) -> FrameTrace:
    """One float per line, milliseconds."""
    times = [float(line) for line in text.splitlines() if line.strip()]
    return FrameTrace(tuple(times))


def parse_scene_file(doc: list) -> SceneDescription:
    """JSON list of {id, material, mobility}."""
    return SceneDescription(tuple(
        SceneObject(id=o["id"], material_id=o["material"],
                    mobility=Mobility(o["mobility"]))
        for o in doc))
