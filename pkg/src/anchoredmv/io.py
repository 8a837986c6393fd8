"""Scene files and CSV output."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .pipeline import Record, RunStats, Scene
from .projective import Camera, CameraArrangement, SpatialLine

RESULT_COLUMNS = [f.name for f in fields(Record) if f.name != "failed"]  # failed runs carry nan errors
STATS_COLUMNS = ["method", "metric", "median", "mean", "sigma"]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "cameras": [C.tolist() for C in scene.arrangement.matrices],
        "line": scene.line.span.tolist(),
        "points": scene.points.tolist(),
        "seed": scene.seed,
    }


def scene_from_dict(d: dict) -> Scene:
    cams = CameraArrangement(tuple(Camera(np.array(C, dtype=float)) for C in d["cameras"]))
    pts = np.array(d["points"], dtype=float)
    if "line" in d:
        line = SpatialLine(np.array(d["line"], dtype=float))
    else:
        line = SpatialLine.through(np.append(pts[0], 1.0), np.append(pts[-1], 1.0))
    return Scene(cams, line, pts, d.get("seed"))


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2))


def load_scene(path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_results(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in RESULT_COLUMNS])


def read_results(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_stats(stats: dict, path) -> None:
    """One row per (method, metric), metric being ``error_e`` or ``time_seconds``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATS_COLUMNS)
        for method, s in stats.items():
            assert isinstance(s, RunStats)
            w.writerow([method, "error_e", repr(s.error_median), repr(s.error_mean), repr(s.error_sigma)])
            w.writerow([method, "time_seconds", repr(s.time_median), repr(s.time_mean), repr(s.time_sigma)])
