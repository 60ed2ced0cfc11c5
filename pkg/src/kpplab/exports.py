"""Deterministic CSV/JSON artifact writers.

Numbers are written in full round-trip scientific notation with '.' as
the decimal separator and '\n' line endings, so identical inputs
produce byte-identical files on a given platform.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17e")
    return str(x)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, obj):
    with open(path, "w", newline="") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def trajectory_rows(traj):
    """(t, x..., u) rows for a recorded trajectory."""
    habitat = traj.habitat
    if habitat.dim == 1:
        coords = habitat.grid()[0].ravel()
        header = ["t", "x", "u"]
        cols = [coords]
    else:
        g = habitat.grid()
        header = ["t", "x1", "x2", "u"]
        cols = [g[0].ravel(), g[1].ravel()]
    rows = []
    for t, snap in zip(traj.times, traj.snapshots):
        u = snap.values.ravel()
        for i in range(len(u)):
            rows.append([t] + [c[i] for c in cols] + [u[i]])
    return header, rows


def export_trajectory(traj, csv_path, manifest_path, extra=None):
    header, rows = trajectory_rows(traj)
    write_csv(csv_path, header, rows)
    manifest = {
        "habitat": {
            "kind": traj.habitat.kind,
            "dim": traj.habitat.dim,
            "half_extent": traj.habitat.half_extent,
            "spacing": traj.habitat.spacing,
            "boundary": traj.habitat.boundary,
        },
        "dt": traj.dt,
        "scheme": traj.scheme,
        "clip_count": traj.clip_count,
        "n_snapshots": len(traj.snapshots),
        "t_final": float(traj.times[-1]),
    }
    if extra:
        manifest.update(extra)
    write_json(manifest_path, manifest)
