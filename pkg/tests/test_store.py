import json
import logging

import pytest

from reachmap.config import Config
from reachmap.metrics import MetricsReport
from reachmap.remap import VersionMismatch
from reachmap.store import (
    DEPLOYED,
    RAW,
    ArchiveWriter,
    MissingStack,
    SessionArchive,
    record_protocol,
    replay,
)
from reachmap.task import SyntheticUser


@pytest.fixture(scope="module")
def recorded_session(tmp_path_factory):
    root = tmp_path_factory.mktemp("session")
    # miniature protocol keeps the archive small but exercises every phase
    config = Config(
        n_targets=125, n_training=5, timeout_seconds=6.0, break_every=25
    )
    result = record_protocol(SyntheticUser.preset("contraction"), config, seed=21, root=root)
    return root, config, result


class TestArchiveWriter:
    def test_empty_session_valid(self, tmp_path):
        with ArchiveWriter(tmp_path / "empty", Config(), seed=0):
            pass
        archive = SessionArchive.load(tmp_path / "empty")
        assert archive.manifest["closed"]
        assert archive.trial_summaries() == []
        assert not archive.truncated

    def test_roundtrip_events(self, tmp_path):
        root = tmp_path / "rt"
        with ArchiveWriter(root, Config(), seed=3) as w:
            w.record_event({"type": "sample", "t": 0.0, "x": 0.1, "y": 0.2, "z": 0.0, "phase": "idle"})
            w.record_event({"type": "deployed", "t": 0.0, "x": 0.1, "y": 0.2, "z": 0.0,
                            "f": 0.0, "alpha": 0.0, "condition": "raw", "bin": None,
                            "synthesized": False, "phase": "idle"})
        archive = SessionArchive.load(root)
        raws = archive.events(RAW)
        assert len(raws) == 1
        assert raws[0]["x"] == 0.1
        assert len(archive.events(DEPLOYED)) == 1

    def test_manifest_hashes_cover_streams(self, recorded_session):
        root, _, _ = recorded_session
        archive = SessionArchive.load(root)
        assert not archive.truncated
        for name, meta in archive.manifest["files"].items():
            assert meta["lines"] == len((root / name).read_text().splitlines())

    def test_version_mismatch_rejected(self, tmp_path):
        root = tmp_path / "vm"
        with ArchiveWriter(root, Config(), seed=0):
            pass
        manifest = json.loads((root / "manifest.json").read_text())
        manifest["version"] = 99
        (root / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(VersionMismatch):
            SessionArchive.load(root)

    def test_truncated_stream_warns(self, recorded_session, tmp_path, caplog):
        import shutil

        root, _, _ = recorded_session
        clone = tmp_path / "trunc"
        shutil.copytree(root, clone)
        raw = clone / RAW
        lines = raw.read_text().splitlines(keepends=True)
        raw.write_text("".join(lines[: len(lines) // 2]))
        with caplog.at_level(logging.WARNING):
            archive = SessionArchive.load(clone)
        assert archive.truncated
        assert any("truncated" in r.message for r in caplog.records)

    def test_torn_final_line_dropped(self, recorded_session, tmp_path, caplog):
        import shutil

        root, _, _ = recorded_session
        clone = tmp_path / "torn"
        shutil.copytree(root, clone)
        with open(clone / RAW, "a") as fh:
            fh.write('{"type": "sam')
        archive = SessionArchive.load(clone)
        with caplog.at_level(logging.WARNING):
            events = archive.events(RAW)
        assert events[-1]["type"] != "sam"


class TestReplay:
    def test_replay_reproduces_deployed_bytes(self, recorded_session):
        root, _, _ = recorded_session
        archive = SessionArchive.load(root)
        result = replay(archive)
        assert result.matches_recorded(archive)
        assert result.deployed_bytes == archive.deployed_bytes()
        assert result.raw_bytes == (root / RAW).read_bytes()

    def test_replay_reproduces_trials_and_metrics(self, recorded_session):
        root, _, original = recorded_session
        archive = SessionArchive.load(root)
        result = replay(archive)
        for name, records in original.rounds.items():
            assert [r.summary() for r in result.records[name]] == [
                r.summary() for r in records
            ]
        base = original.rounds["baseline"]
        mapped = {p.condition: original.rounds[p.name] for p in original.plan[2:]}
        original_report = MetricsReport.build(base, mapped).to_json()
        replay_base = result.records["baseline"]
        replay_mapped = {
            p.condition: result.records[p.name] for p in result.engine.plan[2:]
        }
        assert MetricsReport.build(replay_base, replay_mapped).to_json() == original_report

    def test_replay_with_condition_override_uses_archived_stack(self, recorded_session):
        root, _, original = recorded_session
        result = replay(root, condition_override="remap")
        # the baseline round re-run under remap: same targets, remap condition
        base_round = result.records["baseline"]
        assert len(base_round) == len(original.rounds["baseline"])
        assert all(r.condition == "remap" for r in base_round)

    def test_replay_override_without_stack_errors(self, tmp_path):
        root = tmp_path / "nostack"
        with ArchiveWriter(root, Config(), seed=0) as w:
            w.record_event({"type": "sample", "t": 0.0, "x": 0.0, "y": 0.0, "z": 0.0, "phase": "idle"})
        with pytest.raises(MissingStack):
            replay(root, condition_override="remap")

    def test_replay_rejects_unknown_condition(self, recorded_session):
        root, _, _ = recorded_session
        with pytest.raises(ValueError):
            replay(root, condition_override="banana")


class TestForwardCompatibility:
    def test_unknown_manifest_fields_ignored(self, tmp_path):
        root = tmp_path / "fwd"
        with ArchiveWriter(root, Config(), seed=0):
            pass
        manifest = json.loads((root / "manifest.json").read_text())
        manifest["some_future_feature"] = {"nested": True}
        (root / "manifest.json").write_text(json.dumps(manifest))
        archive = SessionArchive.load(root)
        assert archive.seed == 0

    def test_unknown_config_keys_ignored(self):
        data = Config().to_dict()
        data["brand_new_knob"] = 42
        config = Config.from_dict(data)
        assert config.m_x == 160

    def test_unknown_profile_fields_ignored(self):
        from reachmap.profile import BiasProfile, build_profile
        from reachmap.synth import coverage_sweep

        profile = build_profile(coverage_sweep())
        data = profile.to_dict()
        data["extra_field"] = "future"
        restored = BiasProfile.from_dict(data)
        assert restored.z_range == profile.z_range
