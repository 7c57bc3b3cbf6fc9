"""Result artifacts: samples.csv, daily.csv, summary.json, summary.txt, config echo.

Floats are written with ``repr`` (shortest round-trip form, always a period
decimal separator) and timestamps as UTC ISO-8601, so files are bit-stable
across runs and locales.
"""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Sequence
from contextlib import ExitStack
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from entsim.config import dump_config
from entsim.errors import OutputWriteErr
from entsim.scenario import (
    DayTotal,
    Gap,
    KpiSummary,
    SampleRecord,
    ScenarioRun,
    find_gaps,
)

log = logging.getLogger(__name__)

SAMPLE_COLUMNS = [
    "epoch",
    "beta1_deg",
    "beta2_deg",
    "range1_km",
    "range2_km",
    "atten1_db",
    "atten2_db",
    "eta1",
    "eta2",
    "dual_vis",
    "night",
    "comm",
    "q_prob",
    "r_raw",
    "qber",
    "r_distilled",
    "r_unsifted",
    "far_field_clamped",
]
DAILY_COLUMNS = ["date", "dual_visibility_min", "communication_min", "raw", "distilled"]

# (label, KpiSummary attribute, format)
TABLE_ROWS: list[tuple[str, str, str]] = [
    ("Average dual link attenuation (dB)*", "avg_dual_link_attenuation_db", ".1f"),
    (
        "   of which: atmospheric losses <A1> + <A2> (dB)",
        "avg_atm_losses_db",
        ".1f",
    ),
    ("   of which: optical system losses eta_sys (dB)", "system_losses_db", ".1f"),
    (
        "Average dual visibility time per day (min)",
        "avg_dual_visibility_min_per_day",
        ".2f",
    ),
    (
        "Average communication time per day (min)",
        "avg_communication_min_per_day",
        ".2f",
    ),
    ("Average raw coincidences per day", "avg_raw_per_day", ".0f"),
    ("Average distilled coincidences per day", "avg_distilled_per_day", ".0f"),
    ("Average QBER", "avg_qber", ".4f"),
]
TABLE_FOOTNOTE = "*) averaged over the effective communication time"


@dataclass(frozen=True, slots=True)
class OutputOptions:
    samples: bool = True
    daily: bool = True
    echo_config: bool = True


def _cell(value: Any) -> str:
    match value:
        case bool():
            return "1" if value else "0"
        case float():
            return repr(value)
        case _:
            return str(value)


def sample_row(s: SampleRecord) -> dict[str, str]:
    row = {"epoch": s.epoch.isoformat()}
    for name in SAMPLE_COLUMNS[1:]:
        row[name] = _cell(getattr(s, name))
    return row


def daily_row(d: DayTotal) -> dict[str, str]:
    return {
        "date": d.day.isoformat(),
        "dual_visibility_min": _cell(d.dual_visibility_s / 60.0),
        "communication_min": _cell(d.communication_s / 60.0),
        "raw": _cell(d.raw),
        "distilled": _cell(d.distilled),
    }


def _format(value: float | None, spec: str) -> str:
    return "n/a" if value is None else format(value, spec)


def format_table(columns: Sequence[tuple[str, KpiSummary]]) -> str:
    """Fixed-width results table, one column per scenario."""
    label_w = max(len(label) for label, _, _ in TABLE_ROWS)
    col_w = max([12, *(len(name) for name, _ in columns)])
    header = " " * label_w + "".join(f"  {name:>{col_w}}" for name, _ in columns)
    lines = [header, "-" * len(header)]
    for label, attr, spec in TABLE_ROWS:
        cells = "".join(
            f"  {_format(getattr(summary, attr), spec):>{col_w}}"
            for _, summary in columns
        )
        lines.append(f"{label:<{label_w}}{cells}")
    lines.append("")
    lines.append(TABLE_FOOTNOTE)
    return "\n".join(lines) + "\n"


def summary_document(run: ScenarioRun, gaps: Sequence[Gap]) -> dict[str, Any]:
    return {
        "scenario": run.scenario.name,
        "start": run.scenario.start.isoformat(),
        **run.summary.to_dict(),
        "gaps": [
            {"start": g.start.isoformat(), "end": g.end.isoformat(), "days": g.days}
            for g in gaps
        ],
    }


def write_outputs(
    run: ScenarioRun, out_dir: Path, options: OutputOptions | None = None
) -> list[Path]:
    """Write the run's artifacts into out_dir and return the paths written."""
    options = options or OutputOptions()
    daily = run.daily()
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with ExitStack() as stack:
            if options.samples:
                path = out_dir / "samples.csv"
                fout = stack.enter_context(path.open("w", newline="", encoding="utf-8"))
                writer = csv.DictWriter(
                    fout, fieldnames=SAMPLE_COLUMNS, lineterminator="\n"
                )
                writer.writeheader()
                writer.writerows(sample_row(s) for s in run.samples if s.comm)
                written.append(path)
            if options.daily:
                path = out_dir / "daily.csv"
                fout = stack.enter_context(path.open("w", newline="", encoding="utf-8"))
                writer = csv.DictWriter(
                    fout, fieldnames=DAILY_COLUMNS, lineterminator="\n"
                )
                writer.writeheader()
                writer.writerows(daily_row(d) for d in daily)
                written.append(path)

        # summaries go last so a failed CSV write leaves no stale summary behind
        path = out_dir / "summary.json"
        doc = summary_document(run, find_gaps(daily))
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        written.append(path)

        path = out_dir / "summary.txt"
        table = format_table([(run.scenario.name, run.summary)])
        path.write_text(table, encoding="utf-8")
        written.append(path)

        if options.echo_config and run.scenario.config is not None:
            path = out_dir / "config.resolved.json"
            path.write_text(dump_config(run.scenario), encoding="utf-8")
            written.append(path)
    except OSError as e:
        raise OutputWriteErr(f"failed to write results to {out_dir}") from e

    for p in written:
        log.info("Wrote %s", p)
    return written


def write_comparison(columns: Sequence[tuple[str, KpiSummary]], out_dir: Path) -> Path:
    """One table with a column per scenario, plus its JSON counterpart."""
    table = format_table(columns)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "comparison.txt"
        path.write_text(table, encoding="utf-8")
        (out_dir / "comparison.json").write_text(
            json.dumps(
                {label: summary.to_dict() for label, summary in columns}, indent=2
            )
            + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise OutputWriteErr(f"failed to write comparison to {out_dir}") from e
    log.info("Wrote %s", path)
    return path
