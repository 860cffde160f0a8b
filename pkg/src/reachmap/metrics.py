"""Evaluation metrics: completion taxonomy, path efficiency, time to first reach.

All operations are pure functions over TrialRecord lists and recomputable
from raw records at any time; nothing here caches derived state.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field

from .task import SIZE_LEVELS, TrialRecord

CATEGORIES = ("gained", "kept", "lost", "never")

CATEGORY_COLORS = {
    "gained": "#2e7d32",
    "kept": "#1565c0",
    "lost": "#c62828",
    "never": "#9e9e9e",
}


class TargetMismatch(ValueError):
    """Paired sessions must cover the same target set."""


@dataclass(frozen=True)
class CompletionTaxonomy:
    """Per-target reachability change between an unmapped and a mapped session."""

    categories: dict[int, str]
    tallies: dict[str, int]

    @property
    def total(self) -> int:
        return len(self.categories)

    def of(self, category: str) -> list[int]:
        return sorted(tid for tid, c in self.categories.items() if c == category)


def _by_target(session: list[TrialRecord]) -> dict[int, TrialRecord]:
    return {r.target.id: r for r in session}


def categorize(base: list[TrialRecord], mapped: list[TrialRecord]) -> CompletionTaxonomy:
    """gained = mapped only; kept = both; lost = base only; never = neither."""
    b, m = _by_target(base), _by_target(mapped)
    if set(b) != set(m):
        raise TargetMismatch(
            f"target sets differ: {sorted(set(b) ^ set(m))[:8]}..."
            if set(b) ^ set(m)
            else "duplicate targets"
        )
    categories = {}
    for tid in b:
        done_base, done_mapped = b[tid].completed, m[tid].completed
        if done_mapped and not done_base:
            categories[tid] = "gained"
        elif done_mapped and done_base:
            categories[tid] = "kept"
        elif done_base and not done_mapped:
            categories[tid] = "lost"
        else:
            categories[tid] = "never"
    tallies = {c: 0 for c in CATEGORIES}
    for c in categories.values():
        tallies[c] += 1
    assert sum(tallies.values()) == len(categories)
    return CompletionTaxonomy(categories, tallies)


def path_efficiency(base: list[TrialRecord], mapped: list[TrialRecord]) -> dict[int, float]:
    """Path-length change (mapped - base) for targets completed in both
    sessions; negative means the mapped path was shorter."""
    taxonomy = categorize(base, mapped)
    b, m = _by_target(base), _by_target(mapped)
    return {
        tid: m[tid].path_length - b[tid].path_length for tid in taxonomy.of("kept")
    }


def time_to_first_reach(session: list[TrialRecord]) -> dict[int, float | None]:
    """First moment position and size are simultaneously within tolerance."""
    return {r.target.id: r.time_to_first_reach for r in session}


def _ttfr_stats(session: list[TrialRecord]) -> dict:
    values = [r.time_to_first_reach for r in session if r.time_to_first_reach is not None]
    return {
        "n": len(values),
        "mean": statistics.fmean(values) if values else None,
        "sd": statistics.pstdev(values) if len(values) > 1 else 0.0,
    }


@dataclass
class PairMetrics:
    condition: str
    taxonomy: CompletionTaxonomy
    path_deltas: dict[int, float]
    per_bin_tallies: dict[int, dict[str, int]]
    ttfr: dict


@dataclass
class MetricsReport:
    """Everything the paired-session comparison produces, ready to serialize."""

    base_condition: str
    base_ttfr: dict
    pairs: list[PairMetrics] = field(default_factory=list)
    targets: dict[int, dict] = field(default_factory=dict)

    @classmethod
    def build(
        cls, base: list[TrialRecord], mapped_sessions: dict[str, list[TrialRecord]]
    ) -> "MetricsReport":
        report = cls(
            base_condition=base[0].condition if base else "raw",
            base_ttfr=_ttfr_stats(base),
            targets={
                r.target.id: {
                    "x": r.target.x,
                    "y": r.target.y,
                    "z": r.target.z,
                    "bin": r.target.z_bin,
                }
                for r in base
            },
        )
        for condition, session in mapped_sessions.items():
            taxonomy = categorize(base, session)
            per_bin: dict[int, dict[str, int]] = {
                i: {c: 0 for c in CATEGORIES} for i in range(len(SIZE_LEVELS))
            }
            for r in session:
                per_bin[r.target.z_bin][taxonomy.categories[r.target.id]] += 1
            report.pairs.append(
                PairMetrics(
                    condition=condition,
                    taxonomy=taxonomy,
                    path_deltas=path_efficiency(base, session),
                    per_bin_tallies=per_bin,
                    ttfr=_ttfr_stats(session),
                )
            )
        return report

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "base_condition": self.base_condition,
            "base_ttfr": self.base_ttfr,
            "pairs": [
                {
                    "condition": p.condition,
                    "tallies": p.taxonomy.tallies,
                    "categories": {str(k): v for k, v in sorted(p.taxonomy.categories.items())},
                    "path_deltas": {str(k): v for k, v in sorted(p.path_deltas.items())},
                    "per_bin_tallies": {str(k): v for k, v in p.per_bin_tallies.items()},
                    "ttfr": p.ttfr,
                }
                for p in self.pairs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_csv(self, base: list[TrialRecord], mapped_sessions: dict[str, list[TrialRecord]]) -> str:
        """Per-target table across all conditions."""
        out = io.StringIO()
        conditions = list(mapped_sessions)
        writer = csv.writer(out)
        header = ["target", "x", "y", "z", "bin", "base_completed", "base_ttfr"]
        for c in conditions:
            header += [f"{c}_category", f"{c}_completed", f"{c}_ttfr", f"{c}_path_delta"]
        writer.writerow(header)
        b = _by_target(base)
        pair_by_condition = {p.condition: p for p in self.pairs}
        for tid in sorted(b):
            r = b[tid]
            row = [
                tid, r.target.x, r.target.y, r.target.z, r.target.z_bin,
                int(r.completed), r.time_to_first_reach,
            ]
            for c in conditions:
                m = _by_target(mapped_sessions[c])[tid]
                pair = pair_by_condition[c]
                row += [
                    pair.taxonomy.categories[tid],
                    int(m.completed),
                    m.time_to_first_reach,
                    pair.path_deltas.get(tid),
                ]
            writer.writerow(row)
        return out.getvalue()


def _svg_rect(x, y, w, h, fill, title=None) -> str:
    t = f"<title>{title}</title>" if title else ""
    return f'<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}" fill="{fill}" stroke="#fff" stroke-width="0.5">{t}</rect>'


def _delta_color(delta: float | None, scale: float) -> str:
    if delta is None:
        return "#000000"
    intensity = min(1.0, abs(delta) / scale) if scale > 0 else 0.0
    level = int(255 - 155 * intensity)
    if delta > 0:  # longer path after remapping
        return f"#ff{level:02x}00"
    return f"#00{level:02x}ff"


def render_svg(report: MetricsReport) -> str:
    """Completion-category and path-delta grids, one row of blocks per twist
    level, one panel pair per mapped condition."""
    cell = 16.0
    block = cell * 5 + 8
    panel_w = block * len(SIZE_LEVELS) + 40
    panel_h = block + 30
    height = panel_h * 2 * max(1, len(report.pairs)) + 20
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{panel_w:.0f}" height="{height:.0f}" font-family="sans-serif" font-size="10">'
    ]
    xs = sorted({round(t["x"], 6) for t in report.targets.values()})
    ys = sorted({round(t["y"], 6) for t in report.targets.values()})
    y_off = 10.0
    for pair in report.pairs:
        all_deltas = [abs(d) for d in pair.path_deltas.values()]
        scale = max(all_deltas) if all_deltas else 1.0
        for mode in ("completion", "path-delta"):
            lines.append(
                f'<text x="8" y="{y_off + 8:.1f}">{pair.condition}: {mode}</text>'
            )
            for b in range(len(SIZE_LEVELS)):
                bx = 20 + b * block
                lines.append(
                    f'<text x="{bx:.1f}" y="{y_off + 22:.1f}" fill="#666">level {b}</text>'
                )
                for tid, t in report.targets.items():
                    if t["bin"] != b:
                        continue
                    ix = xs.index(round(t["x"], 6))
                    iy = ys.index(round(t["y"], 6))
                    x = bx + ix * cell
                    y = y_off + 26 + (len(ys) - 1 - iy) * cell
                    if mode == "completion":
                        fill = CATEGORY_COLORS[pair.taxonomy.categories[tid]]
                        title = f"target {tid}: {pair.taxonomy.categories[tid]}"
                    else:
                        delta = pair.path_deltas.get(tid)
                        fill = _delta_color(delta, scale)
                        title = f"target {tid}: delta {delta if delta is not None else 'n/a'}"
                    lines.append(_svg_rect(x, y, cell - 1, cell - 1, fill, title))
            y_off += panel_h
    lines.append("</svg>")
    return "\n".join(lines)
