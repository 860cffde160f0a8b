"""Command-line entry points: compile-map, simulate, report, replay, inspect, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import Config
from .metrics import MetricsReport, render_svg
from .profile import BiasProfile
from .remap import compile_stack, load_stack, save_stack
from .store import DEPLOYED, RAW, SessionArchive, record_protocol, replay as replay_archive
from .synth import BiasModel, PRESETS
from .task import SyntheticUser, TrialRecord


def _load_config(path: str | None, **overrides) -> Config:
    config = Config.load(path) if path else Config()
    changes = {k: v for k, v in overrides.items() if v is not None}
    return Config.from_dict({**config.to_dict(), **changes}) if changes else config


def _load_user(spec: str, policy_gain: float | None) -> SyntheticUser:
    if spec in PRESETS:
        user = SyntheticUser.preset(spec)
    else:
        data = json.loads(Path(spec).read_text())
        bias = BiasModel(
            scale=tuple(data.get("scale", (1.0, 1.0, 1.0))),
            offset=tuple(data.get("offset", (0.0, 0.0, 0.0))),
            saturation=tuple(tuple(s) for s in data.get(
                "saturation", ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
            )),
            tremor_amplitude=data.get("tremor_amplitude", 0.0),
            tremor_frequency=data.get("tremor_frequency", 0.0),
            noise=data.get("noise", 0.0),
        )
        user = SyntheticUser(
            bias=bias,
            policy_gain=data.get("policy_gain", 40.0),
            name=data.get("name", Path(spec).stem),
        )
    if policy_gain is not None:
        user.policy_gain = policy_gain
    return user


def _rounds_from_archive(archive: SessionArchive) -> tuple[list, dict]:
    """(baseline records, {condition: records}) grouped by recorded phase."""
    rows = archive.events("trials.ndjson")
    by_phase: dict[str, list[TrialRecord]] = {}
    for row in rows:
        by_phase.setdefault(row.get("phase", "?"), []).append(TrialRecord.from_summary(row))
    base = by_phase.get("baseline", [])
    mapped = {
        recs[0].condition: recs
        for phase, recs in by_phase.items()
        if phase not in ("training", "baseline") and recs
    }
    return base, mapped


@click.group(context_settings={"auto_envvar_prefix": "REACHMAP"})
def main() -> None:
    """Bias-aware control remapping toolkit."""


@main.command("compile-map")
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--mx", type=int, default=None, help="grid cells along x (default 160)")
@click.option("--my", type=int, default=None, help="grid cells along y (default 160)")
@click.option("--mz", type=int, default=None, help="twist bins (default 5)")
@click.option("--eta", type=float, default=None, help="ray-march step (default 0.5)")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def compile_map(profile_path, out_path, mx, my, mz, eta, config_path):
    """Compile a stored bias profile into a remap stack."""
    config = _load_config(config_path, m_x=mx, m_y=my, m_z=mz, eta=eta)
    profile = BiasProfile.from_json(Path(profile_path).read_text())
    if len(profile.bins) != config.m_z:
        raise click.ClickException(
            f"profile has {len(profile.bins)} twist bins but config wants {config.m_z}"
        )
    stack = compile_stack(profile, config)
    save_stack(stack, out_path)
    report = stack.report
    click.echo(f"compiled {config.m_x}x{config.m_y}x{config.m_z} in {report.seconds:.2f}s")
    for b in report.bins:
        note = f" (borrowed from {b.borrowed_from})" if b.borrowed_from is not None else ""
        click.echo(
            f"  bin {b.bin_index}: rho min {b.rho_min:.3f} mean {b.rho_mean:.3f} "
            f"max {b.rho_max:.3f}{note}"
        )


@main.command()
@click.option("--user", "user_spec", default="identity",
              help=f"preset ({', '.join(PRESETS)}) or JSON file")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--policy-gain", type=float, default=None)
def simulate(user_spec, seed, out_dir, config_path, policy_gain):
    """Run the full protocol headlessly with a synthetic user, recording it."""
    config = _load_config(config_path)
    user = _load_user(user_spec, policy_gain)
    result = record_protocol(user, config, seed=seed, root=out_dir)
    click.echo(f"recorded session for user {user.name!r} (seed {seed}) in {out_dir}")
    for plan in result.plan:
        records = result.rounds[plan.name]
        done = sum(r.completed for r in records)
        click.echo(f"  {plan.name} [{plan.condition}]: {done}/{len(records)} completed")


@main.command()
@click.argument("archive_dir", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="where to write report files (default: the archive)")
def report(archive_dir, out_dir):
    """Compute metrics for a recorded session: JSON, CSV, and SVG."""
    archive = SessionArchive.load(archive_dir)
    base, mapped = _rounds_from_archive(archive)
    if not base or not mapped:
        raise click.ClickException("archive lacks a baseline round plus a mapped round")
    metrics = MetricsReport.build(base, mapped)
    out = Path(out_dir or archive_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(metrics.to_json())
    (out / "report.csv").write_text(metrics.to_csv(base, mapped))
    (out / "report.svg").write_text(render_svg(metrics))
    click.echo(f"wrote report.json, report.csv, report.svg to {out}")
    for pair in metrics.pairs:
        t = pair.taxonomy.tallies
        click.echo(
            f"  {pair.condition}: gained {t['gained']}, kept {t['kept']}, "
            f"lost {t['lost']}, never {t['never']}"
        )


@main.command()
@click.argument("archive_dir", type=click.Path(exists=True))
@click.option("--condition", type=click.Choice(["raw", "remap", "smoothed"]), default=None,
              help="re-run every round under this condition instead")
@click.option("--check/--no-check", default=True,
              help="verify the replay reproduces the recorded deployed stream")
def replay(archive_dir, condition, check):
    """Re-run a recorded session's raw stream through the deployment pipeline."""
    archive = SessionArchive.load(archive_dir)
    result = replay_archive(archive, condition_override=condition)
    total = sum(len(v) for v in result.records.values())
    click.echo(f"replayed {total} trials across {len(result.records)} rounds")
    if condition is None and check:
        if result.matches_recorded(archive):
            click.echo("deployed stream matches the recording bit-exactly")
        else:
            click.echo("MISMATCH: replayed deployed stream differs from the recording")
            sys.exit(1)
    if condition is not None:
        for name, records in result.records.items():
            if records:
                done = sum(r.completed for r in records)
                click.echo(f"  {name} under {condition}: {done}/{len(records)} completed")


@main.command()
@click.argument("archive_dir", type=click.Path(exists=True))
def inspect(archive_dir):
    """Summarize an archive: manifest, phases, trials, integrity."""
    archive = SessionArchive.load(archive_dir)
    m = archive.manifest
    click.echo(f"archive {archive_dir}")
    click.echo(f"  version {m['version']}, seed {m['seed']}, closed {m['closed']}")
    click.echo(f"  auto_advance {m.get('auto_advance')}, hold_at_breaks {m.get('hold_at_breaks')}")
    if archive.truncated:
        click.echo("  WARNING: archive truncated or modified; see log warnings")
    for name, meta in m.get("files", {}).items():
        click.echo(f"  {name}: {meta['lines']} lines")
    trials = archive.trial_summaries()
    by_condition: dict[str, list] = {}
    for t in trials:
        by_condition.setdefault(t.condition, []).append(t)
    for cond, recs in by_condition.items():
        done = sum(r.completed for r in recs)
        click.echo(f"  {cond}: {done}/{len(recs)} completed")
    click.echo(f"  profile: {'yes' if (archive.root / 'profile.json').exists() else 'no'}")
    click.echo(f"  stack: {'yes' if (archive.root / 'stack.bin').exists() else 'no'}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8765)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0)
@click.option("--archive", "archive_root", type=click.Path(), default=None)
@click.option("--auto-advance/--manual", default=False,
              help="advance phases automatically instead of per operator control")
def serve(host, port, config_path, seed, archive_root, auto_advance):
    """Run the live task service (see PROTOCOL.md for the message schema)."""
    from .service import serve as run_server

    config = _load_config(config_path)
    click.echo(f"serving on ws://{host}:{port} (seed {seed})")
    run_server(config, seed=seed, host=host, port=port,
               archive_root=archive_root, auto_advance=auto_advance)


if __name__ == "__main__":
    main()
