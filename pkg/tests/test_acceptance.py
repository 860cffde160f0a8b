"""Acceptance gates. Run with -s to see one verdict line per criterion."""

import math
import random
import statistics
import time

import numpy as np
import pytest
from helpers import brute_force_hull_vertices

from reachmap.config import Config
from reachmap.geometry import DegenerateInput, Point2, convex_hull
from reachmap.metrics import MetricsReport, categorize, time_to_first_reach
from reachmap.pipeline import Pipeline, alpha_map
from reachmap.profile import ControlSample, build_profile, count_inflections, inflection_frequency
from reachmap.remap import compile_stack, lookup, lookup_many
from reachmap.store import SessionArchive, record_protocol, replay
from reachmap.synth import PRESETS, coverage_sweep
from reachmap.task import SyntheticUser


def verdict(ok: bool, name: str, detail: str = "") -> None:
    print(f"\n{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def identity_stack_timed():
    profile = build_profile(coverage_sweep())
    started = time.perf_counter()
    stack = compile_stack(profile)
    return stack, time.perf_counter() - started


@pytest.fixture(scope="module")
def contraction_stack():
    return compile_stack(build_profile(coverage_sweep(bias=PRESETS["contraction"])))


class TestAcceptance:
    def test_identity_remap(self, identity_stack_timed):
        stack, seconds = identity_stack_timed
        lattice = np.linspace(-1.0, 1.0, 161)
        XX, YY = np.meshgrid(lattice, lattice)
        worst = 0.0
        for b in range(stack.m_z):
            z = -1.0 + (b + 0.5) * 2.0 / stack.m_z
            ox, oy, _ = lookup_many(stack, XX.ravel(), YY.ravel(), np.full(XX.size, z))
            dev = np.maximum(np.abs(ox - XX.ravel()), np.abs(oy - YY.ravel())).max()
            worst = max(worst, float(dev))
        ok = worst <= 0.025 and seconds <= 60.0
        verdict(ok, "identity remap within 2 grid cells; compile under budget",
                f"sup dev {worst:.4f} <= 0.025, compile {seconds:.2f}s <= 60s")

    def test_coverage_restoration(self, contraction_stack):
        config = Config()
        dense = np.linspace(-1, 1, 641)
        XX, YY = np.meshgrid(dense, dense)
        worst = 1.0
        for b in range(contraction_stack.m_z):
            grid = contraction_stack.grids[b]
            gx = np.clip(((XX + 1) / 2 * config.m_x).astype(int), 0, config.m_x - 1)
            gy = np.clip(((YY + 1) / 2 * config.m_y).astype(int), 0, config.m_y - 1)
            in_hull = grid.level[gy, gx] >= 0
            z = -1.0 + (b + 0.5) * 2.0 / config.m_z
            ox, oy, _ = lookup_many(
                contraction_stack, XX[in_hull], YY[in_hull], np.full(int(in_hull.sum()), z)
            )
            cx = np.clip(((ox + 1) / 2 * config.m_x).astype(int), 0, config.m_x - 1)
            cy = np.clip(((oy + 1) / 2 * config.m_y).astype(int), 0, config.m_y - 1)
            covered = len(set(zip(cx.tolist(), cy.tolist()))) / (config.m_x * config.m_y)
            worst = min(worst, covered)
        verdict(worst >= 0.95, "coverage restoration >= 95% of full-space cells per bin",
                f"worst bin coverage {worst:.3f}")

    def test_hull_oracle_thousand_sets(self):
        rng = random.Random(20260809)
        mismatches = 0
        checked = 0
        for _ in range(1000):
            n = rng.randint(3, 60)
            pts = [Point2(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
            try:
                hull = convex_hull(pts)
            except DegenerateInput:
                continue
            checked += 1
            if {(v.x, v.y) for v in hull.vertices} != brute_force_hull_vertices(pts):
                mismatches += 1
        verdict(mismatches == 0 and checked >= 990,
                "hull vertex sets match the O(n^3) oracle on 1,000 random sets",
                f"{checked} sets checked, {mismatches} mismatches")

    def test_alpha_map_exact(self):
        cases = {0.0: 0.0, 7.99: 0.0, 8.0: 0.0, 14.0: 0.5, 20.0: 1.0, 40.0: 1.0}
        worst = max(abs(alpha_map(f) - expected) for f, expected in cases.items())
        verdict(worst <= 1e-12, "alpha(f) exact at pinned frequencies",
                f"max error {worst:.2e}")

    def test_inflection_frequency_hand_counts(self):
        dt = 1.0 / 40.0
        pts = [(0.0, 0.0)]
        for i in range(20):
            ang = math.radians(45.0 if i % 2 == 0 else -45.0)
            x, y = pts[-1]
            pts.append((x + 0.02 * math.cos(ang), y + 0.02 * math.sin(ang)))
        zigzag = [ControlSample(i * dt, x, y, 0.0) for i, (x, y) in enumerate(pts)]

        corner = []
        x = y = 0.0
        for i in range(21):
            corner.append(ControlSample(i * dt, x, y, 0.0))
            if i < 10:
                x += 0.02
            else:
                y += 0.02

        zig_n, zig_f = count_inflections(zigzag), inflection_frequency(zigzag, 40.0)
        cor_n, cor_f = count_inflections(corner), inflection_frequency(corner, 40.0)
        ok = zig_n == 19 and zig_f == 38.0 and cor_n == 1 and cor_f == 2.0
        verdict(ok, "inflection counts match hand counts (38 Hz zigzag, 2 Hz corner)",
                f"zigzag {zig_n} closes -> {zig_f} Hz; corner {cor_n} -> {cor_f} Hz")

    def test_headline_effects_on_synthetic_cohort(self, identity_protocol, contraction_protocol):
        c_base = contraction_protocol.rounds["baseline"]
        c_remap = contraction_protocol.round_by_condition("remap")
        tax_c = categorize(c_base, c_remap)
        gained, lost = tax_c.tallies["gained"], tax_c.tallies["lost"]

        i_base = identity_protocol.rounds["baseline"]
        i_remap = identity_protocol.round_by_condition("remap")
        tax_i = categorize(i_base, i_remap)
        balance = abs(tax_i.tallies["gained"] - tax_i.tallies["lost"])

        base_t = time_to_first_reach(c_base)
        remap_t = time_to_first_reach(c_remap)
        common = [t for t in base_t if base_t[t] is not None and remap_t[t] is not None]
        mean_base = statistics.fmean(base_t[t] for t in common)
        mean_remap = statistics.fmean(remap_t[t] for t in common)

        ok = gained >= 0.20 * 125 and lost == 0 and balance <= 2 and mean_remap < mean_base
        verdict(
            ok,
            "headline effects reproduced on the synthetic cohort",
            f"contraction gained {gained} (>=25), lost {lost} (=0); "
            f"identity |gained-lost| {balance} (<=2); "
            f"first-reach {mean_base:.2f}s -> {mean_remap:.2f}s",
        )

    def test_replay_determinism(self, tmp_path):
        root = tmp_path / "session"
        config = Config()
        original = record_protocol(SyntheticUser.preset("identity"), config, seed=42, root=root)
        archive = SessionArchive.load(root)
        result = replay(archive)
        bytes_ok = result.matches_recorded(archive)

        base = original.rounds["baseline"]
        mapped = {p.condition: original.rounds[p.name] for p in original.plan[2:]}
        report_a = MetricsReport.build(base, mapped).to_json()
        report_b = MetricsReport.build(
            result.records["baseline"],
            {p.condition: result.records[p.name] for p in result.engine.plan[2:]},
        ).to_json()
        ok = bytes_ok and report_a == report_b
        verdict(ok, "seeded simulate -> archive -> replay is bit-identical",
                f"deployed bytes equal: {bytes_ok}; metrics reports equal: {report_a == report_b}")

    def test_realtime_budget(self, contraction_protocol):
        stack = contraction_protocol.stack
        remap_round = contraction_protocol.round_by_condition("smoothed")
        raws = []
        for rec in remap_round:
            for fr in rec.trajectory:
                if not math.isnan(fr.raw_x):
                    raws.append(ControlSample(fr.t, fr.raw_x, fr.raw_y, fr.raw_z))
        assert len(raws) > 10_000

        pipe = Pipeline(Config(), stack=stack, condition="smoothed")
        step_times = []
        for s in raws:
            t0 = time.perf_counter_ns()
            pipe.step(s)
            step_times.append(time.perf_counter_ns() - t0)

        lookup_times = []
        for s in raws[:20000]:
            t0 = time.perf_counter_ns()
            lookup(stack, s)
            lookup_times.append(time.perf_counter_ns() - t0)

        step_mean = statistics.fmean(step_times) / 1e6
        step_p99 = sorted(step_times)[int(0.99 * len(step_times))] / 1e6
        look_mean = statistics.fmean(lookup_times) / 1e3
        ok = step_mean <= 1.0 and step_p99 <= 1.0 and look_mean <= 10.0
        verdict(
            ok,
            "real-time budget: step <= 1 ms, lookup <= 10 us over a 125-target session",
            f"step mean {step_mean:.4f} ms, p99 {step_p99:.4f} ms; "
            f"lookup mean {look_mean:.2f} us over {len(raws)} frames",
        )
