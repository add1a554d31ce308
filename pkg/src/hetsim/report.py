"""CSV / JSON / xy emission of Monte Carlo reports.

Outputs are deterministic byte-for-byte for identical reports: floats are
rendered with shortest round-trip repr, JSON keys are sorted, and every file
is written atomically (write to a temp name, then rename) so partial runs
never leave corrupt results behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import __version__
from .config import config_json_dict

CSV_HEADER = (
    "experiment,sweep_param,sweep_value,algorithm,scheme,direction,"
    "seed_count,hpue_outage,lpue_outage,agg_power_w,agg_throughput_bps_hz,"
    "spectral_eff_bps_hz,convergence_rate"
)

# metric columns eligible for per-curve xy export
_XY_METRICS = (
    "hpue_outage",
    "lpue_outage",
    "agg_power_w",
    "agg_throughput_bps_hz",
    "spectral_eff_bps_hz",
    "convergence_rate",
)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write(path, text):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(report):
    lines = [CSV_HEADER]
    for row in report.rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    row.experiment,
                    row.sweep_param,
                    row.sweep_value,
                    row.algorithm,
                    row.scheme,
                    row.direction,
                    row.seed_count,
                    row.hpue_outage,
                    row.lpue_outage,
                    row.agg_power_w,
                    row.agg_throughput_bps_hz,
                    row.spectral_eff_bps_hz,
                    row.convergence_rate,
                )
            )
        )
    return "\n".join(lines) + "\n"


def _row_dict(row):
    return {
        "experiment": row.experiment,
        "sweep_param": row.sweep_param,
        "sweep_value": row.sweep_value,
        "algorithm": row.algorithm,
        "scheme": row.scheme,
        "direction": row.direction,
        "seed_count": row.seed_count,
        "hpue_outage": row.hpue_outage,
        "lpue_outage": row.lpue_outage,
        "agg_power_w": row.agg_power_w,
        "agg_throughput_bps_hz": row.agg_throughput_bps_hz,
        "spectral_eff_bps_hz": row.spectral_eff_bps_hz,
        "convergence_rate": row.convergence_rate,
        "seeds": list(row.seeds),
    }


def _json_text(report):
    doc = {
        "tool": {"name": "hetsim", "version": __version__},
        "experiment": report.experiment,
        "config": config_json_dict(report.config),
        "rows": [_row_dict(r) for r in report.rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _xy_files(report):
    """One plain-text xy file per (variant, metric) curve, gnuplot-ready."""
    curves = {}
    for row in report.rows:
        variant = row.algorithm if row.algorithm != "none" else row.scheme
        for metric in _XY_METRICS:
            value = getattr(row, metric)
            if value is None:
                continue
            name = f"{report.experiment}_{variant}_{metric}.xy"
            curves.setdefault(name, []).append((row.sweep_value, value))
    out = {}
    for name, points in curves.items():
        lines = [f"{x} {_fmt(float(y))}" for x, y in points]
        out[name] = "\n".join(lines) + "\n"
    return out


def emit_report(report, out_dir):
    """Write results.csv, summary.json, and per-curve xy files; returns the
    written paths. Identical reports produce byte-identical files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "results.csv", "json": out / "summary.json", "xy": []}
    _atomic_write(paths["csv"], _csv_text(report))
    _atomic_write(paths["json"], _json_text(report))
    for name, text in sorted(_xy_files(report).items()):
        path = out / name
        _atomic_write(path, text)
        paths["xy"].append(path)
    return paths
