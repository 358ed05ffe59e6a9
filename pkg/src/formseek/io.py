"""Trajectory CSV and JSON report serialisation.

Numbers are written with 17 significant digits so that reading a file
back reproduces every float exactly; write -> read -> write is
byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .controller import Gains
from .errors import CsvFormatError
from .geometry import FormationSpec, check_assumption2, default_singularity_floor
from .simulator import SimConfig, Trajectory, formation_error_series

CSV_COLUMNS = (
    "t", "x0x", "x0y", "x1x", "x1y", "x2x", "x2y",
    "r1x", "r1y", "r2x", "r2y", "d1", "d2",
    "zx", "zy", "znorm", "gx", "gy", "f0", "f1", "f2", "detR",
)


def fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def trajectory_rows(traj: Trajectory):
    r1, r2 = traj.r1, traj.r2
    d = formation_error_series(traj)
    z = traj.z
    n = len(traj)
    if z is None:
        z = np.full((n, 2), np.nan)
        zn = np.full(n, np.nan)
    else:
        zn = traj.z_norm
    x = traj.x.reshape(n, 6)
    for i in range(n):
        yield (
            traj.t[i], *x[i], r1[i, 0], r1[i, 1], r2[i, 0], r2[i, 1], d[i, 0], d[i, 1],
            z[i, 0], z[i, 1], zn[i], traj.g[i, 0], traj.g[i, 1], *traj.f[i], traj.det[i],
        )


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in trajectory_rows(traj):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trajectory_to_csv(traj), encoding="utf-8")
    return path


def parse_trajectory_csv(text: str) -> np.ndarray:
    """Parse CSV text into an ``(n, len(CSV_COLUMNS))`` array, validating the schema."""
    lines = text.splitlines()
    if not lines:
        raise CsvFormatError("empty file", 1)
    header = [h.strip() for h in lines[0].split(",")]
    if tuple(header) != CSV_COLUMNS:
        raise CsvFormatError(f"unexpected header {header}", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise CsvFormatError(f"expected {len(CSV_COLUMNS)} fields, got {len(cells)}", lineno)
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise CsvFormatError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in rows[-1][:7]):
            raise CsvFormatError("non-finite time or position", lineno)
        if len(rows) > 1 and not rows[-1][0] > rows[-2][0]:
            raise CsvFormatError("timestamps must be strictly increasing", lineno)
    if not rows:
        raise CsvFormatError("no data rows", 2)
    return np.array(rows)


def trajectory_from_csv(
    text: str,
    spec: FormationSpec,
    gains: Gains,
    config: SimConfig,
    x_star=None,
    field_name: str | None = None,
) -> Trajectory:
    """Rebuild a :class:`Trajectory` from CSV text; derived columns are recomputed."""
    data = parse_trajectory_csv(text)
    t = data[:, 0].copy()
    x = data[:, 1:7].reshape(-1, 3, 2).copy()
    traj = Trajectory(
        t=t,
        x=x,
        g=data[:, 16:18].copy(),
        f=data[:, 18:21].copy(),
        det=data[:, 21].copy(),
        spec=spec,
        gains=gains,
        config=config,
        x_star=None if x_star is None else np.asarray(x_star, dtype=float),
        field_name=field_name,
    )
    first = traj.state(0)
    verdict = check_assumption2(first, spec)
    floor = config.singularity_floor
    if floor is None and verdict.passed:
        floor = default_singularity_floor(spec, first, gains.k1, gains.k2, config.t_max)
    object.__setattr__(traj, "assumption2", verdict)
    traj.metadata["singularity_floor"] = floor
    return traj


def read_trajectory_csv(path, spec, gains, config, x_star=None, field_name=None) -> Trajectory:
    return trajectory_from_csv(Path(path).read_text(encoding="utf-8"), spec, gains, config, x_star, field_name)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def report_to_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(report), encoding="utf-8")
    return path
