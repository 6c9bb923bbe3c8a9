"""JSON problem and solution files, CSV tables and SVG charts.

Floats are written with Python's shortest round-trip representation, so
every finite double reads back bit-identical.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .geometry import CorrespondenceSet, Pose

PROBLEM_SCHEMA = "pose3r.problem"
SOLUTION_SCHEMA = "pose3r.solution"
SCHEMA_VERSION = 1


class ParseError(InvalidInputError):
    pass


@dataclass
class Problem:
    corrs: CorrespondenceSet
    prior: Pose = None
    ground_truth: Pose = None
    planted: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _floats(v, where, n):
    if not isinstance(v, list) or len(v) != n:
        raise ParseError(f"{where}: expected a list of {n} numbers")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ParseError(f"{where}[{i}]: expected a finite number, got {x!r}")
        out.append(float(x))
    return out


def pose_to_dict(p):
    return {"R": [float(v) for v in p.R.ravel()], "t": [float(v) for v in p.t]}


def pose_from_dict(d, where="pose"):
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object with R and t")
    R = np.array(_floats(d.get("R"), f"{where}.R", 9)).reshape(3, 3)
    t = _floats(d.get("t"), f"{where}.t", 3)
    try:
        return Pose(R, t)
    except InvalidInputError as e:
        raise ParseError(f"{where}: {e}") from None


def problem_to_dict(corrs, prior=None, ground_truth=None, planted=None, meta=None):
    f = lambda v: [float(x) for x in v]  # noqa: E731
    d = {
        "schema": PROBLEM_SCHEMA,
        "version": SCHEMA_VERSION,
        "planes": [{"x": f(x), "n": f(n), "y": f(y)}
                   for x, n, y in zip(corrs.plane_x, corrs.plane_n, corrs.plane_y)],
        "lines": [{"x": f(x), "d": f(dd), "y": f(y)}
                  for x, dd, y in zip(corrs.line_x, corrs.line_d, corrs.line_y)],
        "points": [{"x": f(x), "y": f(y)} for x, y in zip(corrs.point_x, corrs.point_y)],
    }
    if prior is not None:
        d["prior"] = pose_to_dict(prior)
    if ground_truth is not None:
        d["ground_truth"] = pose_to_dict(ground_truth)
    if planted:
        d["planted"] = [pose_to_dict(p) for p in planted]
    if meta:
        d["meta"] = meta
    return d


def problem_from_dict(d):
    if not isinstance(d, dict):
        raise ParseError("top level: expected an object")
    if d.get("schema") != PROBLEM_SCHEMA:
        raise ParseError(f"schema: expected {PROBLEM_SCHEMA!r}, got {d.get('schema')!r}")
    if d.get("version") != SCHEMA_VERSION:
        raise ParseError(f"version: unsupported version {d.get('version')!r}")
    arrays = {}
    for kind, keys in (("planes", ("x", "n", "y")), ("lines", ("x", "d", "y")), ("points", ("x", "y"))):
        items = d.get(kind, [])
        if not isinstance(items, list):
            raise ParseError(f"{kind}: expected a list")
        for k in keys:
            arrays[(kind, k)] = [_floats(it.get(k) if isinstance(it, dict) else None, f"{kind}[{i}].{k}", 3)
                                 for i, it in enumerate(items)]
    try:
        corrs = CorrespondenceSet.from_arrays(
            plane_x=arrays[("planes", "x")], plane_n=arrays[("planes", "n")], plane_y=arrays[("planes", "y")],
            line_x=arrays[("lines", "x")], line_d=arrays[("lines", "d")], line_y=arrays[("lines", "y")],
            point_x=arrays[("points", "x")], point_y=arrays[("points", "y")])
    except InvalidInputError as e:
        raise ParseError(str(e)) from None
    prior = pose_from_dict(d["prior"], "prior") if d.get("prior") is not None else None
    gt = pose_from_dict(d["ground_truth"], "ground_truth") if d.get("ground_truth") is not None else None
    planted = [pose_from_dict(p, f"planted[{i}]") for i, p in enumerate(d.get("planted") or [])]
    return Problem(corrs, prior, gt, planted, d.get("meta") or {})


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None


def _write_json(path, d):
    with open(path, "w") as fh:
        json.dump(d, fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_problem(path):
    return problem_from_dict(_read_json(path))


def save_problem(path, corrs, prior=None, ground_truth=None, planted=None, meta=None):
    _write_json(path, problem_to_dict(corrs, prior, ground_truth, planted, meta))


def load_pose(path):
    """A pose file ({"R", "t"}) or a problem file with a prior."""
    d = _read_json(path)
    if isinstance(d, dict) and d.get("schema") == PROBLEM_SCHEMA:
        if d.get("prior") is None:
            raise ParseError(f"{path}: problem file has no prior")
        return pose_from_dict(d["prior"], "prior")
    return pose_from_dict(d)


def candidate_record(pose, cost, grad_norm=0.0, converged=True, selected=False, **extra):
    rec = pose_to_dict(pose)
    rec.update(cost=float(cost), grad_norm=float(grad_norm), converged=bool(converged), selected=bool(selected))
    rec.update(extra)
    return rec


def solution_to_dict(records, solver, metadata=None, inliers=None):
    recs = sorted(records, key=lambda r: r["cost"])
    if recs and sum(r["selected"] for r in recs) != 1:
        raise ValueError("exactly one candidate must be selected")
    d = {"schema": SOLUTION_SCHEMA, "version": SCHEMA_VERSION, "solver": solver,
         "candidates": recs, "metadata": metadata or {}}
    if inliers is not None:
        d["inliers"] = [bool(v) for v in inliers]
    return d


def save_solution(path, records, solver, metadata=None, inliers=None):
    _write_json(path, solution_to_dict(records, solver, metadata, inliers))


def load_solution(path):
    d = _read_json(path)
    if not isinstance(d, dict) or d.get("schema") != SOLUTION_SCHEMA:
        raise ParseError(f"{path}: not a solution file")
    for i, c in enumerate(d.get("candidates", [])):
        c["pose"] = pose_from_dict(c, f"candidates[{i}]")
    return d


def write_csv(rows, path, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_svg_charts(rows, outdir, sigma_rows=None):
    """Line charts of error and time against N, and error against sigma."""
    import os

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    paths = []
    if rows:
        N = [r["effective_n"] for r in rows]
        for key, label, fname in (("median_rot_deg", "median rotation error (deg)", "rotation_vs_n.svg"),
                                  ("median_trans_rel", "median relative translation error", "translation_vs_n.svg"),
                                  ("mean_time_ms", "mean time (ms)", "time_vs_n.svg")):
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.plot(N, [r[key] for r in rows], marker="o")
            ax.set_xlabel("effective correspondences N")
            ax.set_ylabel(label)
            fig.tight_layout()
            p = os.path.join(outdir, fname)
            fig.savefig(p)
            plt.close(fig)
            paths.append(p)
    if sigma_rows:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        series = {}
        for r in sigma_rows:
            series.setdefault((r["n_planes"], r["n_lines"], r["n_points"], r["effective_n"]), []).append(r)
        for (npl, nl, npt, n), rs in series.items():
            lab = f"N={n}" if npl < 0 else f"{npl} pl, {nl} l, {npt} pt"
            ax.plot([r["sigma"] for r in rs], [r["median_rot_deg"] for r in rs], marker="o", label=lab)
        ax.set_xlabel("noise sigma (m)")
        ax.set_ylabel("median rotation error (deg)")
        ax.legend()
        fig.tight_layout()
        p = os.path.join(outdir, "rotation_vs_sigma.svg")
        fig.savefig(p)
        plt.close(fig)
        paths.append(p)
    return paths
