"""Command-line interface and the on-disk file formats.

Subcommands:

- kernel-matrix: pairwise kernel matrix of a pose file.
- synth: synthetic trajectory + feature-track dataset.
- track-experiment: per-track GP regression report over kernel families.
- interp: latent-sequence reconstruction (GP or linear baseline).
- figures: distance/covariance matrices over a two-angle rotation grid.

File formats (all floats printed with 17 significant digits):

- pose CSV: header ``frame,px,py,pz,qw,qx,qy,qz``, one row per frame,
  frames numbered 0..n-1 in order, rotation as a unit quaternion.
- track CSV: header ``track,frame,u,v,split``, split in {train, test}.
- codes CSV: header ``frame,c0,...,c{d-1}``.
- matrices: headerless CSV, plus PGM previews with a min/max sidecar.

Exit codes: 0 success, 2 input or parse error, 3 I/O error, 4 empty
result, 5 numerical failure.  The env var POSEGP_THREADS caps the
thread count of the compiled backend (default: all cores).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import _backend, _serialize
from .camsim import (
    EmptyDatasetError,
    SynthConfig,
    Track,
    TrackDataset,
    Trajectory,
    default_intrinsics,
    make_trajectory,
    synth_tracks,
)
from .experiments import (
    DEFAULT_INTERP_NOISE,
    FIGURE_MEASURES,
    INTERP_MODES,
    LatentSequence,
    emit_distance_figures,
    make_latent_sequence,
    run_interp_experiment,
    run_track_experiment,
)
from .gp import IllConditionedError, OptimizerConfig
from .kernels import KernelSpec, gram_matrix
from .so3 import Pose, euler_to_matrix, matrix_to_quat, quat_to_matrix

__all__ = [
    "main",
    "read_poses",
    "write_poses",
    "read_tracks",
    "write_tracks",
    "read_codes",
    "load_kernel_file",
]

POSE_HEADER = "frame,px,py,pz,qw,qx,qy,qz"
TRACK_HEADER = "track,frame,u,v,split"


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _data_lines(path, expected_header):
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != expected_header:
        raise ValueError(f"{path}:1: expected header {expected_header!r}")
    return [(no, line) for no, line in enumerate(lines[1:], start=2) if line]


def _row_error(path, lineno, problem):
    return ValueError(f"{path}:{lineno}: {problem}")


def read_poses(path):
    """Load a pose CSV into a list of Pose, ordered by frame index."""
    poses = []
    for lineno, line in _data_lines(path, POSE_HEADER):
        fields = line.split(",")
        if len(fields) != 8:
            raise _row_error(path, lineno, f"expected 8 fields, got {len(fields)}")
        try:
            frame = int(fields[0])
            values = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise _row_error(path, lineno, exc) from None
        if frame != len(poses):
            raise _row_error(path, lineno, "frame indices must run 0,1,2,... in order")
        try:
            pose = Pose(np.array(values[:3]), quat_to_matrix(np.array(values[3:])))
        except ValueError as exc:
            raise _row_error(path, lineno, exc) from None
        poses.append(pose)
    if not poses:
        raise ValueError(f"{path}: no pose rows")
    return poses


def write_poses(path, poses):
    lines = [POSE_HEADER]
    for frame, pose in enumerate(poses):
        q = matrix_to_quat(pose.R)
        values = [_serialize.format_float(v) for v in (*pose.p, *q)]
        lines.append(",".join([str(frame)] + values))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_tracks(path, poses, width, height):
    """Load a track CSV against a pose table into a TrackDataset."""
    rows_by_track = {}
    for lineno, line in _data_lines(path, TRACK_HEADER):
        fields = line.split(",")
        if len(fields) != 5:
            raise _row_error(path, lineno, f"expected 5 fields, got {len(fields)}")
        if fields[4] not in ("train", "test"):
            raise _row_error(path, lineno, f"split must be train or test, got {fields[4]!r}")
        try:
            tid = int(fields[0])
            frame = int(fields[1])
            u, v = float(fields[2]), float(fields[3])
        except ValueError as exc:
            raise _row_error(path, lineno, exc) from None
        rows_by_track.setdefault(tid, []).append((frame, u, v, fields[4] == "train"))
    if not rows_by_track:
        raise ValueError(f"{path}: no track rows")
    tracks = []
    for tid, rows in rows_by_track.items():
        tracks.append(
            Track(
                np.array([r[0] for r in rows]),
                np.array([[r[1], r[2]] for r in rows]),
                np.array([r[3] for r in rows]),
            )
        )
    return TrackDataset(tuple(tracks), tuple(poses), width, height)


def write_tracks(path, dataset):
    lines = [TRACK_HEADER]
    for tid, track in enumerate(dataset.tracks):
        for frame, (u, v), train in zip(track.frames, track.uv, track.train_mask):
            lines.append(
                ",".join(
                    [
                        str(tid),
                        str(int(frame)),
                        _serialize.format_float(u),
                        _serialize.format_float(v),
                        "train" if train else "test",
                    ]
                )
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_codes(path, expected_rows):
    """Load a codes CSV; row count must match the pose table."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}:1: empty file")
    header = lines[0].split(",")
    d = len(header) - 1
    if d < 1 or header != ["frame"] + [f"c{j}" for j in range(d)]:
        raise ValueError(f"{path}:1: expected header frame,c0,...,c{{d-1}}")
    codes = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != d + 1:
            raise _row_error(path, lineno, f"expected {d + 1} fields, got {len(fields)}")
        try:
            frame = int(fields[0])
            row = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise _row_error(path, lineno, exc) from None
        if frame != len(codes):
            raise _row_error(path, lineno, "frame indices must run 0,1,2,... in order")
        codes.append(row)
    if len(codes) != expected_rows:
        raise ValueError(
            f"{path}: {len(codes)} code rows do not match {expected_rows} poses"
        )
    return np.array(codes)


def _write_predictions(path, mean, std):
    d = mean.shape[1]
    lines = [",".join(["frame"] + [f"c{j}" for j in range(d)] + ["std"])]
    for frame in range(mean.shape[0]):
        values = [_serialize.format_float(v) for v in mean[frame]]
        values.append(_serialize.format_float(std[frame]))
        lines.append(",".join([str(frame)] + values))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_kernel_file(path):
    return KernelSpec.from_json_dict(_serialize.read_json(path))


def _load_kernel_list(path):
    doc = _serialize.read_json(path)
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list) or not doc:
        raise ValueError(f"{path}: expected a kernel object or non-empty list")
    return [KernelSpec.from_json_dict(entry) for entry in doc]


# ---------------------------------------------------------------------------
# synth config
# ---------------------------------------------------------------------------

_SYNTH_KEYS = frozenset(
    {
        "seed",
        "waypoints",
        "frames_per_segment",
        "jitter_angle",
        "num_world_points",
        "pixel_noise",
        "track_length",
        "width",
        "height",
        "focal",
        "train_fraction",
        "box_center",
        "box_size",
        "box_distance",
    }
)

_WAYPOINT_KEYS = frozenset({"time", "position", "quaternion", "euler"})


def _parse_waypoint(doc, index):
    if not isinstance(doc, dict):
        raise ValueError(f"waypoint {index}: expected an object")
    unknown = sorted(set(doc) - _WAYPOINT_KEYS)
    if unknown:
        raise ValueError(f"waypoint {index}: unknown fields {unknown}")
    if "position" not in doc:
        raise ValueError(f"waypoint {index}: missing position")
    has_q = "quaternion" in doc
    has_e = "euler" in doc
    if has_q == has_e:
        raise ValueError(f"waypoint {index}: give exactly one of quaternion or euler")
    if has_q:
        R = quat_to_matrix(np.asarray(doc["quaternion"], dtype=np.float64))
    else:
        R = euler_to_matrix(np.asarray(doc["euler"], dtype=np.float64))
    time = float(doc.get("time", index))
    return time, Pose(np.asarray(doc["position"], dtype=np.float64), R)


def _parse_synth_config(doc, seed_flag):
    if not isinstance(doc, dict):
        raise ValueError("synth config must be a JSON object")
    unknown = sorted(set(doc) - _SYNTH_KEYS)
    if unknown:
        raise ValueError(f"synth config: unknown fields {unknown}")
    seed = seed_flag if seed_flag is not None else doc.get("seed")
    if seed is None:
        raise ValueError("synth needs a seed: config field \"seed\" or --seed")
    if "waypoints" not in doc:
        raise ValueError("synth config: missing waypoints")
    waypoints = [_parse_waypoint(w, i) for i, w in enumerate(doc["waypoints"])]
    box_center = doc.get("box_center")
    synth = SynthConfig(
        seed=int(seed),
        num_world_points=int(doc.get("num_world_points", 100)),
        pixel_noise=float(doc.get("pixel_noise", 1.0)),
        track_length=int(doc.get("track_length", 20)),
        width=int(doc.get("width", 640)),
        height=int(doc.get("height", 480)),
        train_fraction=float(doc.get("train_fraction", 0.85)),
        box_center=tuple(box_center) if box_center is not None else None,
        box_size=tuple(doc.get("box_size", (6.0, 6.0, 4.0))),
        box_distance=float(doc.get("box_distance", 4.0)),
    )
    frames = doc.get("frames_per_segment", 20)
    if not isinstance(frames, int):
        frames = [int(c) for c in frames]
    jitter_angle = float(doc.get("jitter_angle", 0.0))
    return waypoints, frames, jitter_angle, synth, float(doc.get("focal", 500.0))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_kernel_matrix(args):
    poses = read_poses(args.poses)
    spec = load_kernel_file(args.kernel)
    K = gram_matrix(spec, poses, args.jitter)
    _serialize.write_matrix_csv(args.out, K)
    print(f"wrote {K.shape[0]}x{K.shape[1]} matrix to {args.out}")
    return 0


def cmd_synth(args):
    doc = _serialize.read_json(args.config)
    waypoints, frames, jitter_angle, synth, focal = _parse_synth_config(doc, args.seed)
    trajectory = make_trajectory(
        waypoints, frames, seed=synth.seed, jitter_angle=jitter_angle
    )
    intrinsics = default_intrinsics(synth.width, synth.height, focal)
    dataset = synth_tracks(trajectory, intrinsics, synth)
    out = _serialize.ensure_dir(args.out)
    write_poses(out / "poses.csv", dataset.poses)
    write_tracks(out / "tracks.csv", dataset)
    print(
        f"wrote {len(dataset.poses)} poses and {len(dataset.tracks)} tracks to {out}"
    )
    return 0


def cmd_track_experiment(args):
    poses = read_poses(args.poses)
    dataset = read_tracks(args.tracks, poses, args.width, args.height)
    kernels = _load_kernel_list(args.kernels)
    opt_config = None
    if args.max_iters is not None:
        opt_config = OptimizerConfig(max_iters=args.max_iters)
    report = run_track_experiment(
        dataset,
        kernels,
        optimize=args.optimize,
        seed=args.seed if args.seed is not None else 0,
        noise=args.noise,
        opt_config=opt_config,
    )
    out = _serialize.ensure_dir(args.out)
    _serialize.write_json(out / "report.json", report.to_json_dict())
    text = report.to_text() + "\n"
    with open(out / "report.txt", "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_interp(args):
    poses = read_poses(args.poses)
    kernel = load_kernel_file(args.kernel) if args.kernel else None
    if args.synthetic:
        if args.codes is not None:
            raise ValueError("give either --codes or --synthetic, not both")
        if args.seed is None:
            raise ValueError("--synthetic needs --seed")
        trajectory = Trajectory(np.arange(len(poses), dtype=np.float64), tuple(poses))
        noise = DEFAULT_INTERP_NOISE if args.noise is None else args.noise
        seq = make_latent_sequence(trajectory, d=args.dim, noise=noise, seed=args.seed)
    else:
        if args.codes is None:
            raise ValueError("interp needs --codes or --synthetic")
        codes = read_codes(args.codes, len(poses))
        noise = DEFAULT_INTERP_NOISE if args.noise is None else args.noise
        seq = LatentSequence(tuple(poses), codes, None, noise)
    result = run_interp_experiment(seq, args.mode, kernel=kernel, noise=args.noise)
    out = _serialize.ensure_dir(args.out)
    _write_predictions(out / "predictions.csv", result["predictions"], result["per_frame_std"])
    report = {
        "mode": result["mode"],
        "mean_mse": result["mean_mse"],
        "noise": result["noise"],
        "per_frame_mse": result["per_frame_mse"],
        "per_frame_std": result["per_frame_std"],
        "kernel": result["kernel"],
    }
    _serialize.write_json(out / "report.json", report)
    print(f"mode: {result['mode']}")
    print(f"mean_mse: {_serialize.format_float(result['mean_mse'])}")
    return 0


def cmd_figures(args):
    measures = tuple(args.measures.split(",")) if args.measures else FIGURE_MEASURES
    result = emit_distance_figures(
        args.out,
        grid_n=args.grid_n,
        measures=measures,
        lengthscale=args.lengthscale,
    )
    print(f"wrote {len(result['files'])} files to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def _add_common(parser, out_default, out_help):
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument(
        "--jitter", type=float, default=0.0, help="diagonal jitter for emitted matrices"
    )
    parser.add_argument("--out", default=out_default, help=out_help)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="posegp",
        description="Camera-pose kernels, GP regression and experiment harnesses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-matrix", help="pairwise kernel matrix of a pose file")
    p.add_argument("--poses", required=True, help="pose CSV")
    p.add_argument("--kernel", required=True, help="kernel spec JSON")
    _add_common(p, "gram.csv", "output CSV path")
    p.set_defaults(func=cmd_kernel_matrix)

    p = sub.add_parser("synth", help="generate a synthetic track dataset")
    p.add_argument("config", help="synth config JSON")
    _add_common(p, ".", "output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track-experiment", help="per-track GP regression report")
    p.add_argument("tracks", help="track CSV")
    p.add_argument("--poses", required=True, help="pose CSV")
    p.add_argument("--kernels", required=True, help="kernel spec JSON (object or list)")
    p.add_argument("--optimize", action="store_true", help="learn hyperparameters")
    p.add_argument("--noise", type=float, default=1.0, help="pixel noise variance")
    p.add_argument("--max-iters", type=int, default=None, help="optimizer iteration cap")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    _add_common(p, ".", "output directory")
    p.set_defaults(func=cmd_track_experiment)

    p = sub.add_parser("interp", help="latent-sequence reconstruction")
    p.add_argument("--poses", required=True, help="pose CSV")
    p.add_argument("--codes", default=None, help="codes CSV")
    p.add_argument(
        "--synthetic", action="store_true", help="draw codes from the GP prior instead"
    )
    p.add_argument("--dim", type=int, default=64, help="code dimension for --synthetic")
    p.add_argument("--mode", required=True, choices=[m.replace("_", "-") for m in INTERP_MODES])
    p.add_argument("--kernel", default=None, help="kernel spec JSON (default preset)")
    p.add_argument("--noise", type=float, default=None, help="observation noise variance")
    _add_common(p, ".", "output directory")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("figures", help="distance/covariance grid matrices")
    p.add_argument("--grid-n", type=int, default=17, help="grid resolution per angle")
    p.add_argument("--lengthscale", type=float, default=1.0)
    p.add_argument(
        "--measures", default=None, help=f"comma list from {','.join(FIGURE_MEASURES)}"
    )
    _add_common(p, ".", "output directory")
    p.set_defaults(func=cmd_figures)

    return parser


def _apply_thread_env():
    value = os.environ.get("POSEGP_THREADS")
    if value is None:
        return
    count = int(value)
    if count < 1:
        raise ValueError("POSEGP_THREADS must be >= 1")
    if _backend.ACTIVE == "numba":
        import numba

        numba.set_num_threads(count)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _apply_thread_env()
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except EmptyDatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except IllConditionedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
