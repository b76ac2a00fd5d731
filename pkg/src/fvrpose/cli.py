"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 computation failure.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import fileio, so3
from .augment import Box2d, deform_variants, fast_relabel
from .config import bench_settings, deform_bounds, fvr_params, load_config, train_config
from .errors import InvalidInputError, TrainingDivergedError
from .fvr import FvrEncoding, FvrParams, SymmetryClass, fvr_decode, fvr_encode
from .metrics import IOU_THRESHOLDS, POSE_THRESHOLDS, evaluate_poses
from .regressor import HeadConfig, derive_seed, fvr_grid_search, run_representation_experiment
from .structures import Pose

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
ACC_THRESHOLDS_DEG = (5.0, 10.0, 15.0)

FORMAT_SIZES = {"matrix": 9, "quat": 4, "euler": 3, "axis_angle": 4, "rotvec": 3, "r6d": 6, "fvr": 12}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


# --- convert ---------------------------------------------------------------------------


def to_matrix(kind, v, p):
    v = np.asarray(v, dtype=float)
    if kind == "matrix":
        R = v.reshape(3, 3)
        if not so3.is_rotation(R, 1e-6):
            raise InvalidInputError("matrix is not a rotation")
        return R
    if kind == "quat":
        return so3.quat_to_matrix(v)
    if kind == "euler":
        return so3.euler_to_matrix(v)
    if kind == "axis_angle":
        return so3.axis_angle_to_matrix(v[:3], v[3])
    if kind == "rotvec":
        return so3.rotvec_to_matrix(v)
    if kind == "r6d":
        return so3.r6d_to_matrix(v)
    return fvr_decode(FvrEncoding.from_flat(v), p)


def from_matrix(kind, R, p):
    if kind == "matrix":
        return R.ravel()
    if kind == "quat":
        return so3.matrix_to_quat(R)
    if kind == "euler":
        e, degenerate = so3.matrix_to_euler(R, return_degenerate=True)
        if degenerate:
            _log("warning: gimbal lock, roll set to 0")
        return e
    if kind in ("axis_angle", "rotvec"):
        axis, angle = so3.matrix_to_axis_angle(R)
        return np.append(axis, angle) if kind == "axis_angle" else axis * angle
    if kind == "r6d":
        return so3.matrix_to_r6d(R)
    return fvr_encode(R, p).flat()


def cmd_convert(args):
    if len(args.values) != FORMAT_SIZES[args.src]:
        raise UsageError(f"{args.src} needs {FORMAT_SIZES[args.src]} values, got {len(args.values)}")
    p = FvrParams.from_degrees(*args.fvr)
    out = from_matrix(args.dst, to_matrix(args.src, args.values, p), p)
    print(" ".join(fileio.fmt(x) for x in np.ravel(out)))
    return EXIT_OK


# --- bench-rep ---------------------------------------------------------------------------

RESULT_COLUMNS = [
    "experiment_id", "representation", "mode", "theta_g_deg", "theta_r_deg", "l_g", "l_r", "seed",
    "mean_deg", "median_deg", *[f"acc_{t:g}deg" for t in ACC_THRESHOLDS_DEG], "auc", "status", "error",
]


def _bench_cell(args):
    exp_id, rep, mode, seed, cfg, symmetric = args
    p = fvr_params(cfg)
    row = {
        "experiment_id": exp_id, "representation": rep, "mode": mode,
        "theta_g_deg": "", "theta_r_deg": "", "l_g": "", "l_r": "", "seed": seed,
        "mean_deg": "", "median_deg": "", "auc": "", "status": "ok", "error": "",
    }
    if rep == "fvr":
        row.update(theta_g_deg=float(np.rad2deg(p.theta_g)), theta_r_deg=float(np.rad2deg(p.theta_r)),
                   l_g=p.l_g, l_r=p.l_r)
    try:
        report = run_representation_experiment(HeadConfig(mode, rep, p, symmetric), train_config(cfg, seed))
    except (TrainingDivergedError, InvalidInputError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return row, None, 0.0
    row.update(mean_deg=report.mean, median_deg=report.median, auc=report.auc)
    for t in ACC_THRESHOLDS_DEG:
        row[f"acc_{t:g}deg"] = report.accuracy_at(t)
    return row, report.curve, report.wall_clock


def _pool_map(workers):
    if workers <= 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=workers)
    return pool.map, pool


def _curve_text(curve):
    return "threshold_deg,accuracy\n" + "".join(f"{fileio.fmt(t)},{fileio.fmt(a)}\n" for t, a in curve)


def cmd_bench_rep(args):
    cfg = load_config(args.config, "bench-rep")
    exp_id, reps, modes, seeds, workers, symmetric = bench_settings(cfg)
    out = args.out or cfg.get("output", {}).get("dir", "results")
    jobs = [(exp_id, r, m, s, cfg, symmetric) for r in reps for m in modes for s in seeds]
    mapper, pool = _pool_map(workers)
    try:
        results = list(mapper(_bench_cell, jobs))
    finally:
        if pool is not None:
            pool.shutdown()
    rows = []
    for row, curve, secs in results:
        rows.append(row)
        _log(f"{row['representation']}/{row['mode']}/seed {row['seed']}: {row['status']} "
             f"mean={row['mean_deg']} ({secs:.1f}s)")
        if curve is not None:
            name = f"{exp_id}__{row['representation']}__{row['mode']}__s{row['seed']}.csv"
            fileio.write_atomic(os.path.join(out, "curves", name), _curve_text(curve))
    fileio.write_atomic(os.path.join(out, "results.csv"), fileio.csv_text(rows, RESULT_COLUMNS))
    fileio.write_atomic(os.path.join(out, "results.jsonl"), fileio.jsonl_text(rows))
    return EXIT_FAILED if any(r["status"] != "ok" for r in rows) else EXIT_OK


# --- grid-search ----------------------------------------------------------------------------

GRID_COLUMNS = ["experiment_id", "sweep", "l", "theta_g_deg", "theta_r_deg", "mean_deg", "median_deg", "status", "error"]


def cmd_grid_search(args):
    cfg = load_config(args.config, "grid-search")
    g = cfg.get("grid", {})
    seed = g.get("seed", 0)
    base = train_config(cfg, seed)
    mode = g.get("mode", "whole")
    HeadConfig(mode, "fvr")
    kwargs = {}
    if "l_values" in g:
        kwargs["l_values"] = g["l_values"]
    if "angles_deg" in g:
        kwargs["angles_deg"] = g["angles_deg"]
    if any(v <= 0 for v in kwargs.get("l_values", [1])):
        raise InvalidInputError("l_values must be positive")
    out = args.out or cfg.get("output", {}).get("dir", "results")
    exp_id = g.get("id", "grid")
    mapper, pool = _pool_map(max(1, g.get("workers", 1)))
    try:
        result = fvr_grid_search(base, mode, g.get("symmetric", False), map_fn=mapper, **kwargs)
    finally:
        if pool is not None:
            pool.shutdown()
    rows = []
    for c in result.cells:
        rows.append({
            "experiment_id": exp_id, "sweep": c.sweep, "l": c.l, "theta_g_deg": c.theta_g_deg,
            "theta_r_deg": c.theta_r_deg,
            "mean_deg": "" if c.mean_error is None else c.mean_error,
            "median_deg": "" if c.median_error is None else c.median_error,
            "status": "ok" if c.ok else "failed", "error": c.error or "",
        })
    b = result.best
    best = {
        "experiment_id": exp_id, "seed": seed, "mode": mode,
        "l": b.l, "theta_g_deg": b.theta_g_deg, "theta_r_deg": b.theta_r_deg,
        "mean_deg": b.mean_error, "median_deg": b.median_error, "auc": result.best_report.auc,
    }
    fileio.write_atomic(os.path.join(out, "grid.csv"), fileio.csv_text(rows, GRID_COLUMNS))
    fileio.write_atomic(os.path.join(out, "grid.jsonl"), fileio.jsonl_text(rows))
    fileio.write_atomic(os.path.join(out, "best.json"), json.dumps(best, indent=2, sort_keys=True) + "\n")
    _log(f"best: L={b.l:g} theta_g={b.theta_g_deg:g} theta_r={b.theta_r_deg:g} mean={b.mean_error:.4f} deg")
    return EXIT_FAILED if any(not c.ok for c in result.cells) else EXIT_OK


# --- augment ----------------------------------------------------------------------------------


def cmd_augment(args):
    cfg = load_config(args.config, "augment")
    section = cfg.get("augment", {})
    pose_cfg = cfg.get("pose", {})
    try:
        pose = Pose(np.reshape(pose_cfg.get("rotation", np.eye(3).ravel()), (3, 3)),
                    pose_cfg.get("translation", [0.0, 0.0, 0.0]),
                    pose_cfg.get("size", [1.0, 1.0, 1.0]))
    except ValueError as exc:
        raise InvalidInputError(f"bad [pose]: {exc}") from None
    if not so3.is_rotation(pose.r, 1e-6):
        raise InvalidInputError("[pose] rotation is not a rotation matrix")
    bounds = deform_bounds(cfg, pose.size / 2)
    count = args.count if args.count is not None else section.get("count", 4)
    seed = args.seed if args.seed is not None else section.get("seed", 0)
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    kind = section.get("input_kind", "cloud")
    if kind == "depth":
        boxes = cfg.get("boxes", {})
        if "gt" not in boxes or "aug" not in boxes:
            raise InvalidInputError("depth input needs [boxes] gt and aug")
        cloud, _ = fast_relabel(fileio.read_depth(args.input), Box2d(*boxes["gt"]), Box2d(*boxes["aug"]))
    elif kind == "cloud":
        cloud = fileio.read_cloud(args.input)
    else:
        raise InvalidInputError(f"unknown input_kind {kind!r}")
    stem = os.path.splitext(os.path.basename(args.input))[0]
    task_seed = derive_seed(seed, "augment")
    for k, (cage, variant) in enumerate(deform_variants(cloud, pose, bounds, count, task_seed)):
        name = f"{stem}_s{seed}_{k:03d}.xyz"
        fileio.write_atomic(os.path.join(args.out, name), fileio.cloud_text(variant))
        meta = {"face_offsets": cage.face_offsets.tolist(), "taper": cage.taper.tolist(),
                "half_extents": cage.half_extents.tolist()}
        fileio.write_atomic(os.path.join(args.out, name + ".cage.json"), json.dumps(meta, sort_keys=True) + "\n")
    return EXIT_OK


# --- eval -------------------------------------------------------------------------------------

EVAL_COLUMNS = ["index", "add", "add_s", "iou", "rot_err_deg", "trans_err_cm"]


def cmd_eval(args):
    preds = fileio.read_poses(args.pred)
    gts = fileio.read_poses(args.gt)
    model = fileio.read_cloud(args.model).points
    report = evaluate_poses(preds, gts, model, SymmetryClass(args.symmetry), IOU_THRESHOLDS, POSE_THRESHOLDS,
                            iou_samples=args.iou_samples, seed=derive_seed(args.seed, "iou"))
    fileio.write_atomic(os.path.join(args.out, "per_sample.csv"), fileio.csv_text(report.records, EVAL_COLUMNS))
    fileio.write_atomic(os.path.join(args.out, "aggregate.json"),
                        json.dumps(report.aggregates, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# --- main -------------------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="fvrpose", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convert", help="convert a rotation between representations")
    c.add_argument("--from", dest="src", choices=sorted(FORMAT_SIZES), required=True)
    c.add_argument("--to", dest="dst", choices=sorted(FORMAT_SIZES), required=True)
    c.add_argument("--fvr", nargs=4, type=float, default=[0.0, 0.0, 1.0, 1.0],
                   metavar=("THETA_G_DEG", "THETA_R_DEG", "L_G", "L_R"), help="FVR parameters")
    c.add_argument("values", nargs="+", type=float, help="input values (matrix is row-major)")
    c.set_defaults(func=cmd_convert)

    b = sub.add_parser("bench-rep", help="compare rotation representations on the desk-scale task")
    b.add_argument("config")
    b.add_argument("--out", help="output directory (overrides [output] dir)")
    b.set_defaults(func=cmd_bench_rep)

    g = sub.add_parser("grid-search", help="sequential FVR parameter search")
    g.add_argument("config")
    g.add_argument("--out", help="output directory (overrides [output] dir)")
    g.set_defaults(func=cmd_grid_search)

    a = sub.add_parser("augment", help="write box-cage deformed variants of a cloud or depth crop")
    a.add_argument("config")
    a.add_argument("--input", required=True, help="point cloud (x y z [label]) or depth file")
    a.add_argument("--out", required=True)
    a.add_argument("--count", type=int)
    a.add_argument("--seed", type=int)
    a.set_defaults(func=cmd_augment)

    e = sub.add_parser("eval", help="ADD(-S), IoU and n-degree m-cm metrics for pose files")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--model", required=True, help="model points, x y z per line")
    e.add_argument("--symmetry", choices=[s.value for s in SymmetryClass], default="asymmetric")
    e.add_argument("--iou-samples", type=int, default=200_000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except (UsageError, InvalidInputError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except (TrainingDivergedError, ArithmeticError) as exc:
        _log(f"computation failed: {exc}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
