"""Stable text emission of trajectories, reports and oracle tables.

Floats go to CSV with 17 significant digits and to JSON with Python's
shortest round-trip repr; both reproduce the double exactly, and row and
column order never depend on anything but the inputs.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

TRAJECTORY_COLUMNS = (
    "t", "p11_re", "p11_im", "p12_re", "p12_im", "p21_re", "p21_im",
    "p22_re", "p22_im", "ax", "ay", "az", "purity", "log_norm",
)
ORACLE_COLUMNS = ("t", "x", "dx", "ax", "ay", "az")
FAILURE_MARKER = "# FAILED"


def fmt(x) -> str:
    return format(float(x), ".17g")


def _rows_to_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def trajectory_rows(traj) -> np.ndarray:
    rho = traj.rho
    return np.column_stack([
        traj.times,
        rho[:, 0, 0].real, rho[:, 0, 0].imag,
        rho[:, 0, 1].real, rho[:, 0, 1].imag,
        rho[:, 1, 0].real, rho[:, 1, 0].imag,
        rho[:, 1, 1].real, rho[:, 1, 1].imag,
        traj.bloch, traj.purity, traj.log_norm,
    ])


def trajectory_csv(traj) -> str:
    text = _rows_to_text(TRAJECTORY_COLUMNS, trajectory_rows(traj))
    if traj.failed:
        text += f"{FAILURE_MARKER} numerical-failure t={fmt(traj.failure_time)}\n"
    return text


def trajectory_jsonl(traj) -> str:
    lines = []
    for row in trajectory_rows(traj):
        lines.append(json.dumps(dict(zip(TRAJECTORY_COLUMNS, (float(v) for v in row)))))
    if traj.failed:
        lines.append(json.dumps({"failed": True, "failure_time": traj.failure_time}))
    return "\n".join(lines) + "\n"


def oracle_csv(times, x, dx, bloch) -> str:
    return _rows_to_text(ORACLE_COLUMNS, np.column_stack([times, x, dx, bloch]))


def jsonable(obj):
    """Plain-Python copy of ``obj`` with non-finite floats as ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2) + "\n"


def report_dict(dataset) -> dict:
    """JSON layout of a dataset report."""
    r = dataset.report
    ep = dataset.ep_report.to_dict()
    return {
        "format_version": FORMAT_VERSION,
        "name": dataset.name,
        "spec": dataset.ensemble.to_dict(),
        "frame": dataset.frame,
        "ep_times": ep["times"],
        "ep_eigenvectors": ep["eigenvectors"],
        "ep_regimes": ep["regimes"],
        "times": r.times,
        "diameter_series": r.diameter,
        "orbit_distance_series": r.orbit_distance,
        "min_purity_series": r.min_purity,
        "min_purity": r.final_min_purity,
        "fixed_point": r.fixed_point,
        "fixed_point_frames": r.fixed_point_frames,
        "failures": r.failures,
        "thresholds": r.thresholds,
    }


def write_dataset(dataset, out_dir, fmt_name: str = "csv") -> list[Path]:
    """One trajectory file per member plus ``report.json``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, traj in enumerate(dataset.trajectories):
        path = out / f"member_{i:03d}.{fmt_name}"
        write_trajectory(traj, path, fmt_name)
        written.append(path)
    path = out / "report.json"
    path.write_text(dump_json(report_dict(dataset)))
    written.append(path)
    return written


def write_trajectory(traj, path, fmt_name: str = "csv") -> None:
    text = trajectory_csv(traj) if fmt_name == "csv" else trajectory_jsonl(traj)
    Path(path).write_text(text)
