"""Serialization: CSV data files with JSON sidecars and reports.

All writers format floats with ``repr`` (shortest round-trip) and sort any
key-ordered content, so a rerun with the same inputs is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from . import __version__
from .measures import GridMeasure, new_grid_measure


def _fmt(v) -> str:
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_json_default)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=_json_default)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def write_report(path, config: dict, results: dict, constants: dict | None = None):
    """JSON report embedding tool version, config, and its hash."""
    payload = {
        "tool": "fracmeas",
        "version": __version__,
        "config": config,
        "config_hash": config_hash(config),
        "constants": constants or {},
        "results": results,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(payload) + "\n")
    return payload


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def save_measure(mu: GridMeasure, csv_path: str):
    """CSV ``i0,...,i{d-1},weight`` plus a JSON sidecar with the grid data."""
    header = [f"i{a}" for a in range(mu.d)] + ["weight"]
    rows = [list(idx) + [w] for idx, w in zip(mu.indices, mu.weights)]
    write_csv(csv_path, header, rows)
    side = {"dim": mu.d, "spacing": mu.h,
            "origin": [float(v) for v in mu.origin], "name": mu.name}
    with open(csv_path + ".json", "w", encoding="utf-8") as fh:
        fh.write(canonical_json(side) + "\n")


def load_measure(csv_path: str) -> GridMeasure:
    with open(csv_path + ".json", "r", encoding="utf-8") as fh:
        side = json.load(fh)
    d = int(side["dim"])
    with open(csv_path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines()[1:] if ln.strip()]
    if not lines:
        idx = np.zeros((0, d), dtype=np.int64)
        w = np.zeros(0)
    else:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines])
        idx = data[:, :d].astype(np.int64)
        w = data[:, d]
    return new_grid_measure(d, side["spacing"], side["origin"], idx, w,
                            name=side.get("name", ""))


# ---------------------------------------------------------------------------
# field exports
# ---------------------------------------------------------------------------

def save_heat_field(field, path):
    """CSV ``x...,t,value`` over all (point, time) pairs."""
    d = field.points.shape[1]
    header = [f"x{a}" for a in range(d)] + ["t", "value"]
    rows = []
    for i, p in enumerate(field.points):
        for j, t in enumerate(field.tgrid.nodes):
            rows.append(list(p) + [t, field.values[i, j]])
    write_csv(path, header, rows)


def save_maximal_field(field, path):
    """CSV with attainment columns (profile name, scale)."""
    d = field.points.shape[1]
    header = [f"x{a}" for a in range(d)] + ["value", "att_profile", "att_scale"]
    rows = [list(p) + [v, prof, s]
            for p, v, prof, s in zip(field.points, field.values,
                                     field.att_profile, field.att_scale)]
    write_csv(path, header, rows)


def save_sampled_field(field, path):
    d = field.d
    header = [f"x{a}" for a in range(d)] + ["value"]
    pts = field.points()
    rows = [list(p) + [v] for p, v in zip(pts, field.values.ravel())]
    write_csv(path, header, rows)


def save_cover(cover, path):
    """CSV ``type,center/corner...,size,witness_ball_id`` for covers."""
    if cover.kind == "cubes":
        d = cover.indices.shape[1] if cover.n_elements else cover.lattice.d
        header = ["type"] + [f"corner{a}" for a in range(d)] + ["size", "witness_ball_id"]
        witness_of = {}
        for bi, j in enumerate(cover.witness):
            witness_of.setdefault(int(j), bi)
        corners = cover.cube_corners() if cover.n_elements else np.zeros((0, d))
        sides = cover.cube_sides() if cover.n_elements else np.zeros(0)
        rows = [["cube"] + list(c) + [s, witness_of.get(j, -1)]
                for j, (c, s) in enumerate(zip(corners, sides))]
    else:
        d = cover.centers.shape[1] if cover.n_elements else 0
        header = ["type"] + [f"center{a}" for a in range(d)] + ["size", "witness_ball_id"]
        witness_of = {}
        for bi, j in enumerate(cover.witness):
            witness_of.setdefault(int(j), bi)
        rows = [["ball"] + list(c) + [r, witness_of.get(j, -1)]
                for j, (c, r) in enumerate(zip(cover.centers, cover.radii))]
    write_csv(path, header, rows)


def save_modulus_curves(report, path):
    """CSV ``beta,delta,captured_mass`` of a dimension report."""
    rows = []
    for i, b in enumerate(report.betas):
        for j, dl in enumerate(report.deltas):
            rows.append([b, dl, report.curves[i, j]])
    write_csv(path, ["beta", "delta", "captured_mass"], rows)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
