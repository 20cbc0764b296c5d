import itertools
import math
import random

import pytest

from enginetrainer.perf import (
    ComparisonRow,
    FrameTrace,
    MetricsSummary,
    Mobility,
    SceneDescription,
    SceneObject,
    VSyncMode,
    VSyncPolicy,
    batch,
    compare_runs,
    draw_call_count,
    optimization_ratio,
    pace,
    parse_scene_file,
    parse_trace_file,
    render_comparison,
    summarize,
    synthetic_trace,
)


def mode(policy, hz=90.0):
    return VSyncMode(policy, hz)


class TestPace:
    def test_every_vblank_quantizes_up(self):
        trace = pace(FrameTrace((5.0,)), mode(VSyncPolicy.EVERY_VBLANK))
        assert trace.render_times_ms[0] == pytest.approx(1000.0 / 90.0)

    def test_dontsync_is_identity(self):
        raw = FrameTrace((5.0, 12.0, 3.3))
        assert pace(raw, mode(VSyncPolicy.DONT_SYNC, 60.0)) is raw

    def test_every_second_vblank(self):
        trace = pace(FrameTrace((12.0,)), mode(VSyncPolicy.EVERY_SECOND_VBLANK))
        assert trace.render_times_ms[0] == pytest.approx(2000.0 / 90.0)

    def test_displayed_never_below_raw(self):
        raw = synthetic_trace(200, seed=1)
        for policy in VSyncPolicy:
            displayed = pace(raw, mode(policy))
            assert all(d >= r - 1e-9 for d, r in
                       zip(displayed.render_times_ms, raw.render_times_ms))

    def test_vblank_fps_capped_at_refresh(self):
        displayed = pace(synthetic_trace(500, seed=2), mode(VSyncPolicy.EVERY_VBLANK))
        assert summarize(displayed).average_frame_rate_fps <= 90.0 + 1e-9


class TestSummarize:
    def test_constant_trace(self):
        s = summarize(FrameTrace((10.0, 10.0, 10.0)))
        assert s.average_frame_time_ms == 10.0
        assert s.maximum_frame_time_ms == 10.0
        assert s.average_frame_rate_fps == pytest.approx(100.0)
        assert s.reciprocal_mean_fps == pytest.approx(100.0)

    def test_two_fps_conventions_diverge(self):
        s = summarize(FrameTrace((5.0, 15.0)))
        assert s.average_frame_time_ms == 10.0
        assert s.maximum_frame_time_ms == 15.0
        assert s.average_frame_rate_fps == pytest.approx(133.3333, abs=1e-3)
        assert s.reciprocal_mean_fps == pytest.approx(100.0)

    def test_singleton(self):
        s = summarize(FrameTrace((20.0,)))
        assert s.average_frame_time_ms == 20.0
        assert s.average_frame_rate_fps == pytest.approx(50.0)

    def test_invariant_max_ge_avg(self):
        with pytest.raises(ValueError):
            MetricsSummary(average_frame_time_ms=10.0, maximum_frame_time_ms=5.0,
                           average_frame_rate_fps=100.0, reciprocal_mean_fps=100.0)


def brute_force_draw_calls(scene):
    """Independent oracle: count distinct static materials + dynamic objects."""
    static_materials = {o.material_id for o in scene.objects
                        if o.mobility is Mobility.STATIC}
    dynamic = [o for o in scene.objects if o.mobility is Mobility.DYNAMIC]
    return len(static_materials) + len(dynamic)


def random_scene(rng, max_objects=20, max_materials=5):
    n = rng.randint(0, max_objects)
    return SceneDescription(tuple(
        SceneObject(f"o{i}", f"m{rng.randint(1, max_materials)}",
                    rng.choice([Mobility.STATIC, Mobility.DYNAMIC]))
        for i in range(n)))


class TestBatch:
    def test_five_statics_one_material_is_one_call(self):
        scene = SceneDescription(tuple(
            SceneObject(f"o{i}", "m1", Mobility.STATIC) for i in range(5)))
        assert draw_call_count(scene) == 1

    def test_mixed_scene_hand_counted(self):
        scene = SceneDescription((
            SceneObject("a", "m1", Mobility.STATIC),
            SceneObject("b", "m1", Mobility.STATIC),
            SceneObject("c", "m2", Mobility.STATIC),
            SceneObject("d", "m1", Mobility.DYNAMIC),
            SceneObject("e", "m3", Mobility.DYNAMIC),
        ))
        assert draw_call_count(scene) == 4

    def test_empty_scene(self):
        assert draw_call_count(SceneDescription(())) == 0

    def test_duplicate_id_rejected(self):
        with pytest.raises(ValueError):
            SceneDescription((SceneObject("a", "m1", Mobility.STATIC),
                              SceneObject("a", "m2", Mobility.DYNAMIC)))

    def test_groups_partition_objects(self):
        rng = random.Random(3)
        for _ in range(50):
            scene = random_scene(rng)
            groups = batch(scene)
            ids = list(itertools.chain.from_iterable(g.object_ids for g in groups))
            assert sorted(ids) == sorted(o.id for o in scene.objects)

    def test_matches_brute_force_oracle(self):
        rng = random.Random(4)
        for _ in range(100):
            scene = random_scene(rng)
            assert draw_call_count(scene) == brute_force_draw_calls(scene)

    def test_marking_static_never_increases_calls(self):
        rng = random.Random(5)
        for _ in range(50):
            scene = random_scene(rng)
            all_dynamic = SceneDescription(tuple(
                SceneObject(o.id, o.material_id, Mobility.DYNAMIC)
                for o in scene.objects))
            assert draw_call_count(scene) <= draw_call_count(all_dynamic)


class TestOptimizationRatio:
    @pytest.mark.parametrize("before,after,direction,expected", [
        (15.06, 3.94, "reduction", 73.8),
        (65.61, 264.28, "increase", 302.8),
        (880, 795, "reduction", 9.7),
        (470.21, 445.72, "reduction", 5.2),
        (796.346, 663.618, "reduction", 16.7),
    ])
    def test_published_table_values(self, before, after, direction, expected):
        assert optimization_ratio(before, after, direction) == expected

    def test_identity_is_zero(self):
        for x in (0.5, 1, 15.06, 880):
            assert optimization_ratio(x, x, "reduction") == 0.0
            assert optimization_ratio(x, x, "increase") == 0.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            optimization_ratio(0, 10)
        with pytest.raises(ValueError):
            optimization_ratio(10, 5, "sideways")


class TestCompareRuns:
    def test_equal_summaries_all_zero(self):
        s = summarize(FrameTrace((10.0, 12.0)))
        assert all(row.ratio_pct == 0.0 for row in compare_runs(s, s))

    def test_vsync_table_reproduction(self):
        baseline = MetricsSummary(15.06, 470.21, 65.61, 1000.0 / 15.06)
        optimized = MetricsSummary(3.94, 445.72, 264.28, 1000.0 / 3.94)
        rows = {r.metric: r.ratio_pct for r in compare_runs(baseline, optimized)}
        assert rows["maximum_frame_time_ms"] == 5.2
        assert rows["average_frame_time_ms"] == 73.8
        assert rows["average_frame_rate_fps"] == 302.8

    def test_drawcall_table_reproduction(self):
        baseline = MetricsSummary(796.346, 880.0, 1.3, 1.3, draw_call_peak=880)
        optimized = MetricsSummary(663.618, 795.0, 1.5, 1.5, draw_call_peak=795)
        rows = {r.metric: r.ratio_pct for r in compare_runs(baseline, optimized)}
        assert rows["draw_call_peak"] == 9.7
        assert rows["average_frame_time_ms"] == 16.7

    def test_render_comparison_text(self):
        s = summarize(FrameTrace((10.0,)))
        text = render_comparison(compare_runs(s, s))
        assert "Metric" in text and "0.0%" in text


class TestPacingMonotonicity:
    def test_mean_displayed_time_ordering(self):
        for seed in range(20):
            raw = synthetic_trace(100, seed=seed)
            means = [summarize(pace(raw, mode(p))).average_frame_time_ms
                     for p in (VSyncPolicy.DONT_SYNC, VSyncPolicy.EVERY_VBLANK,
                               VSyncPolicy.EVERY_SECOND_VBLANK)]
            assert means[0] <= means[1] <= means[2]


def test_synthetic_trace_is_seeded_and_positive():
    a = synthetic_trace(50, seed=9)
    b = synthetic_trace(50, seed=9)
    assert a == b
    assert all(t > 0 for t in a.render_times_ms)
    assert a != synthetic_trace(50, seed=10)


def test_trace_and_scene_file_parsing():
    trace = parse_trace_file("10.5\n11.0\n\n9.5\n")
    assert trace.render_times_ms == (10.5, 11.0, 9.5)
    scene = parse_scene_file([
        {"id": "a", "material": "m1", "mobility": "static"},
        {"id": "b", "material": "m2", "mobility": "dynamic"},
    ])
    assert draw_call_count(scene) == 2


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        FrameTrace(())
    with pytest.raises(ValueError):
        FrameTrace((0.0,))
