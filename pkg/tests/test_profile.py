import math
import random

import pytest

from reachmap.config import Config
from reachmap.geometry import Point2
from reachmap.profile import (
    BiasProfile,
    ControlSample,
    InflectionTracker,
    InsufficientData,
    XiStats,
    build_profile,
    count_inflections,
    filter_reachable,
    inflection_frequency,
    resample_nearest,
    z_bin_index,
)
from reachmap.synth import PRESETS, coverage_sweep

DT40 = 1.0 / 40.0


def straight_window(n=21, step=0.02):
    return [ControlSample(i * DT40, i * step, 0.0, 0.0) for i in range(n)]


def zigzag_window(n=21, step=0.02):
    """Heading alternates +-45 deg every sample: every interior delta pair
    turns 90 degrees, so a window of n samples has n - 2 trace closures."""
    pts = [(0.0, 0.0)]
    for i in range(n - 1):
        ang = math.radians(45.0 if i % 2 == 0 else -45.0)
        x, y = pts[-1]
        pts.append((x + step * math.cos(ang), y + step * math.sin(ang)))
    return [ControlSample(i * DT40, x, y, 0.0) for i, (x, y) in enumerate(pts)]


def corner_window(n=21, step=0.02):
    """Single 90 degree corner mid-window: exactly one closure."""
    samples = []
    x = y = 0.0
    for i in range(n):
        samples.append(ControlSample(i * DT40, x, y, 0.0))
        if i < (n - 1) // 2:
            x += step
        else:
            y += step
    return samples


class TestInflectionFrequency:
    def test_straight_sweep_is_zero(self):
        assert inflection_frequency(straight_window()) == 0.0

    def test_zigzag_38_hz(self):
        window = zigzag_window(21)  # spans 20 intervals = 0.5 s at 40 Hz
        assert count_inflections(window) == 19
        assert inflection_frequency(window, f_rate=40.0) == pytest.approx(38.0)

    def test_single_corner_2_hz(self):
        window = corner_window(21)
        assert count_inflections(window) == 1
        assert inflection_frequency(window, f_rate=40.0) == pytest.approx(2.0)

    def test_stationary_window_is_zero(self):
        window = [ControlSample(i * DT40, 0.3, 0.3, 0.0) for i in range(21)]
        assert inflection_frequency(window) == 0.0

    def test_sub_threshold_turns_not_counted(self):
        # 20 degree turns never close a trace
        pts = [(0.0, 0.0)]
        for i in range(20):
            ang = math.radians(20.0 * (i % 2))
            x, y = pts[-1]
            pts.append((x + 0.02 * math.cos(ang), y + 0.02 * math.sin(ang)))
        window = [ControlSample(i * DT40, x, y, 0.0) for i, (x, y) in enumerate(pts)]
        assert count_inflections(window) == 0

    def test_tiny_deltas_skipped(self):
        window = zigzag_window(21, step=5e-5)  # below min_delta
        assert count_inflections(window) == 0


class TestInflectionTracker:
    def test_streaming_matches_batch_at_analysis_rate(self):
        config = Config()
        tracker = InflectionTracker(config)
        window = zigzag_window(60)
        fs = [tracker.push(s) for s in window]
        # once the window is saturated the batch value over k intervals applies
        assert fs[-1] == pytest.approx(38.0)

    def test_decimates_60hz_input(self):
        config = Config()
        tracker = InflectionTracker(config)
        for i in range(120):
            tracker.push(ControlSample(i / 60.0, i * 0.01, 0.0, 0.0))
        # 2 of every 3 samples land on 40 Hz ticks
        assert abs(tracker.accepted - 80) <= 2

    def test_reset_clears(self):
        tracker = InflectionTracker(Config())
        for s in zigzag_window(30):
            tracker.push(s)
        tracker.reset()
        assert tracker.frequency == 0.0


def smooth_circle(duration=20.0, r=0.5, omega=1.2, rate=40.0):
    n = int(duration * rate)
    return [
        ControlSample(i / rate, r * math.cos(omega * i / rate), r * math.sin(omega * i / rate), 0.0)
        for i in range(n)
    ]


class TestFilterReachable:
    def test_smooth_sweep_fully_retained(self):
        stream = smooth_circle()
        retained, omitted = filter_reachable(stream)
        assert not omitted
        assert len(retained) == len(stream)

    def test_jitter_segment_omitted(self):
        base = smooth_circle(duration=20.0)
        stream = []
        for s in base:
            if 8.0 <= s.t < 10.0:
                wob = 0.08 * math.sin(2 * math.pi * 12.0 * s.t)
                ang = math.atan2(s.y, s.x) + math.pi / 2
                stream.append(
                    ControlSample(s.t, s.x + wob * math.cos(ang), s.y + wob * math.sin(ang), 0.0)
                )
            else:
                stream.append(s)
        retained, omitted = filter_reachable(stream)
        times_omitted = {s.t for s in omitted}
        # heart of the jitter segment is dropped
        for s in stream:
            if 8.3 <= s.t < 10.0:
                assert s.t in times_omitted
        # everything causally clear of the jitter survives
        for s in stream:
            if s.t < 8.0 or s.t > 10.6:
                assert s.t not in times_omitted

    def test_deadzone_drops_origin_samples(self):
        stream = [ControlSample(i * DT40, 0.0, 0.0, 0.0) for i in range(40)]
        retained, omitted = filter_reachable(stream)
        assert retained == []
        assert len(omitted) == 40

    def test_partition_property(self):
        rng = random.Random(3)
        stream = [
            ControlSample(i * DT40, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0.0)
            for i in range(200)
        ]
        retained, omitted = filter_reachable(stream)
        assert len(retained) + len(omitted) == len(stream)
        merged = sorted(retained + omitted, key=lambda s: s.t)
        assert merged == sorted(stream, key=lambda s: s.t)

    def test_raising_threshold_never_shrinks_retained(self):
        stream = smooth_circle(duration=6.0)
        noisy = [
            ControlSample(s.t, s.x + 0.03 * math.sin(70 * s.t), s.y + 0.03 * math.cos(91 * s.t), 0.0)
            for s in stream
        ]
        sizes = []
        for thr in (2.0, 4.0, 8.0, 16.0, 38.0):
            retained, _ = filter_reachable(noisy, f_threshold=thr)
            sizes.append(len(retained))
        assert sizes == sorted(sizes)


class TestResample:
    def test_downsamples_60_to_40(self):
        stream = [ControlSample(i / 60.0, i * 0.001, 0.0, 0.0) for i in range(180)]
        out = resample_nearest(stream, 40.0)
        assert len(out) == pytest.approx(120, abs=2)
        dts = [b.t - a.t for a, b in zip(out, out[1:])]
        assert min(dts) > 0

    def test_keeps_stream_at_target_rate(self):
        stream = [ControlSample(i / 40.0, 0.1, 0.0, 0.0) for i in range(80)]
        assert resample_nearest(stream, 40.0) == stream


class TestBuildProfile:
    def test_full_coverage_hulls_reach_the_square(self):
        profile = build_profile(coverage_sweep())
        assert profile.m_z == 5
        for b in profile.bins:
            assert b.borrowed_from is None
            for v in b.hull.vertices:
                assert max(abs(v.x), abs(v.y)) >= 0.95
        assert abs(profile.xi.mu_x) <= 0.05
        assert abs(profile.xi.mu_y) <= 0.05
        assert profile.z_range[0] == pytest.approx(-1.0, abs=0.01)
        assert profile.z_range[1] == pytest.approx(1.0, abs=0.01)
        assert profile.retained_fraction > 0.95

    def test_contraction_profile(self):
        profile = build_profile(coverage_sweep(bias=PRESETS["contraction"]))
        populated = [b for b in profile.bins if b.borrowed_from is None]
        borrowed = [b for b in profile.bins if b.borrowed_from is not None]
        assert {b.index for b in populated} == {1, 2, 3}
        assert {b.index for b in borrowed} == {0, 4}
        for b in populated:
            for v in b.hull.vertices:
                assert max(abs(v.x), abs(v.y)) <= 0.501
            assert b.hull.contains(Point2(0.49, 0.49))
        assert abs(profile.xi.cm_x) <= 0.05
        assert profile.z_range[0] == pytest.approx(-0.5, abs=0.01)
        assert profile.z_range[1] == pytest.approx(0.5, abs=0.01)

    def test_offset_profile_center_of_mass(self):
        profile = build_profile(coverage_sweep(bias=PRESETS["offset"]))
        assert profile.xi.cm_x == pytest.approx(0.3, abs=0.05)
        assert profile.xi.cm_y == pytest.approx(0.1, abs=0.05)

    def test_borrowed_bins_share_donor_hull(self):
        profile = build_profile(coverage_sweep(bias=PRESETS["contraction"]))
        by_index = {b.index: b for b in profile.bins}
        assert by_index[0].hull == by_index[by_index[0].borrowed_from].hull
        assert by_index[4].hull == by_index[by_index[4].borrowed_from].hull

    def test_retained_points_inside_their_hull(self):
        config = Config()
        stream = coverage_sweep(config)
        analyzed = resample_nearest([s.clamped() for s in stream], config.f_rate)
        retained, _ = filter_reachable(analyzed, config)
        profile = build_profile(stream, config)
        owned = {b.index: b.hull for b in profile.bins if b.borrowed_from is None}
        for s in retained:
            idx = z_bin_index(s.z, config.m_z)
            if idx in owned:
                assert owned[idx].contains(Point2(s.x, s.y), tol=1e-9)

    def test_xi_matches_direct_recomputation(self):
        config = Config()
        stream = coverage_sweep(config)
        profile = build_profile(stream, config)
        analyzed = resample_nearest([s.clamped() for s in stream], config.f_rate)
        retained, _ = filter_reachable(analyzed, config)
        direct = XiStats.of(retained)
        assert profile.xi.mu_x == pytest.approx(direct.mu_x, abs=1e-12)
        assert profile.xi.sigma_x == pytest.approx(direct.sigma_x, abs=1e-12)
        assert profile.xi.mu_y == pytest.approx(direct.mu_y, abs=1e-12)
        assert profile.xi.sigma_y == pytest.approx(direct.sigma_y, abs=1e-12)
        assert profile.xi.cm_x == direct.cm_x
        assert profile.xi.cm_y == direct.cm_y

    def test_insufficient_data_raises(self):
        stream = [ControlSample(i * DT40, 0.0, 0.0, 0.0) for i in range(100)]
        with pytest.raises(InsufficientData):
            build_profile(stream)

    def test_clamps_out_of_range_components(self):
        stream = coverage_sweep()
        spiked = [ControlSample(s.t, s.x * 1.5, s.y * 1.5, s.z) for s in stream]
        profile = build_profile(spiked)
        for b in profile.bins:
            for v in b.hull.vertices:
                assert abs(v.x) <= 1.0 + 1e-12
                assert abs(v.y) <= 1.0 + 1e-12

    def test_json_roundtrip_preserves_hash(self):
        profile = build_profile(coverage_sweep(bias=PRESETS["offset"]))
        restored = BiasProfile.from_json(profile.to_json())
        assert restored.hash() == profile.hash()
        assert restored.z_range == profile.z_range
        assert restored.bins[2].hull.vertices == profile.bins[2].hull.vertices

    def test_60hz_stream_downsampled_before_analysis(self):
        stream = coverage_sweep(rate=60.0)
        profile = build_profile(stream)
        for b in profile.bins:
            assert b.borrowed_from is None
            for v in b.hull.vertices:
                assert max(abs(v.x), abs(v.y)) >= 0.95
