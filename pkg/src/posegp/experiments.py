"""Experiment harnesses: track regression, latent interpolation, figures.

Three desk-scale protocols built on the kernel and GP layers:

- run_track_experiment: per-track GP regression of pixel coordinates
  (u, v) against camera pose, comparing kernel families by held-out
  RMSE/NLPD, with optional joint hyperparameter learning across tracks.
- make_latent_sequence / run_interp_experiment: synthetic latent codes
  drawn from the view-kernel GP prior over a trajectory, then
  reconstructed from endpoint frames only (or smoothed over all frames)
  and compared against linear interpolation in code space.
- emit_distance_figures / emit_trajectory_covariances: pairwise
  distance and covariance matrices over a two-angle rotation grid and
  over trajectory poses, written as CSV and 8-bit PGM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _serialize
from .gp import (
    RegressionProblem,
    _jitter_cholesky,
    fit,
    optimize_hyperparameters_joint,
    predict,
)
from .kernels import KernelSpec, default_spec, gram_matrix
from .so3 import geodesic_distance, matrix_to_quat, quat_distance, rot_axis, view_distance

__all__ = [
    "LatentSequence",
    "ExperimentReport",
    "DEFAULT_INTERP_KERNEL",
    "DEFAULT_INTERP_NOISE",
    "INTERP_MODES",
    "FIGURE_MEASURES",
    "default_free_params",
    "make_latent_sequence",
    "run_interp_experiment",
    "run_track_experiment",
    "emit_distance_figures",
    "emit_trajectory_covariances",
]

# Default smoothing hyperparameters for latent-sequence interpolation.
DEFAULT_INTERP_KERNEL = default_spec("view_iso", magnitude=0.1, lengthscale=1.098)
DEFAULT_INTERP_NOISE = 1e-4

INTERP_MODES = ("endpoints_only", "all_frames", "linear_baseline")
FIGURE_MEASURES = ("geodesic", "quaternion", "separable", "view")


@dataclass(frozen=True, eq=False)
class LatentSequence:
    """Per-frame d-dimensional codes paired with poses."""

    poses: tuple
    codes: np.ndarray
    truth: np.ndarray | None
    noise: float

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.float64)
        if codes.ndim != 2 or codes.shape[0] != len(self.poses):
            raise ValueError("codes must be an n x d matrix matching the pose count")
        object.__setattr__(self, "poses", tuple(self.poses))
        object.__setattr__(self, "codes", codes)
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=np.float64)
            if truth.shape != codes.shape:
                raise ValueError("truth must match the shape of codes")
            object.__setattr__(self, "truth", truth)


def make_latent_sequence(trajectory, d=64, lengthscale=1.098, magnitude=0.1,
                         noise=1e-4, seed=0):
    """Draw ground-truth codes jointly from the view-kernel GP prior.

    One joint draw per output dimension over the trajectory poses (all
    dimensions share the Gram factor); observed codes add Gaussian noise
    of variance `noise`.  Deterministic per seed.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    spec = default_spec("view_iso", magnitude=magnitude, lengthscale=lengthscale)
    poses = list(trajectory.poses)
    K = gram_matrix(spec, poses, 0.0)
    L, _ = _jitter_cholesky(K, 0.0, float(np.mean(np.diag(K))))
    rng = np.random.default_rng(seed)
    truth = L @ rng.standard_normal((len(poses), d))
    observed = truth + math.sqrt(noise) * rng.standard_normal((len(poses), d))
    return LatentSequence(tuple(poses), observed, truth, noise)


def run_interp_experiment(seq, mode, kernel=None, noise=None):
    """Reconstruct a latent sequence from partial observations.

    Modes: endpoints_only conditions a GP on the first and last frames;
    all_frames conditions on every frame (smoothing); linear_baseline
    takes convex combinations of the endpoint codes at evenly spaced
    weights.  The per-sequence mean of the conditioned codes is
    subtracted before fitting and restored after.  Errors are measured
    against the ground-truth codes when the sequence has them, else
    against the observed codes.
    """
    mode = str(mode).replace("-", "_")
    if mode not in INTERP_MODES:
        raise ValueError(f"mode must be one of {INTERP_MODES}, got {mode!r}")
    n = len(seq.poses)
    reference = seq.truth if seq.truth is not None else seq.codes
    if mode == "linear_baseline":
        if n < 2:
            raise ValueError("linear_baseline needs at least two frames")
        w = np.arange(n) / (n - 1)
        pred = np.outer(1.0 - w, seq.codes[0]) + np.outer(w, seq.codes[-1])
        std = np.zeros(n)
        kernel_doc = None
        used_noise = seq.noise if noise is None else noise
    else:
        if mode == "endpoints_only":
            if n < 3:
                raise ValueError("endpoints_only needs at least three frames")
            cond = [0, n - 1]
        else:
            cond = list(range(n))
        kernel = kernel if kernel is not None else DEFAULT_INTERP_KERNEL
        used_noise = seq.noise if noise is None else noise
        y = seq.codes[cond]
        mu = y.mean(axis=0)
        problem = RegressionProblem(
            [seq.poses[i] for i in cond], y - mu, used_noise, kernel
        )
        post = fit(problem)
        mean, var = predict(post, list(seq.poses))
        pred = mean + mu
        std = np.sqrt(var)
        kernel_doc = kernel.to_json_dict()
    err = pred - reference
    per_frame_mse = np.mean(err * err, axis=1)
    return {
        "mode": mode,
        "predictions": pred,
        "per_frame_std": std,
        "per_frame_mse": per_frame_mse,
        "mean_mse": float(np.mean(per_frame_mse)),
        "noise": used_noise,
        "kernel": kernel_doc,
    }


# ---------------------------------------------------------------------------
# track experiment
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    """Per-kernel metric table plus the run configuration echo."""

    per_kernel: dict
    config: dict
    seed: int
    skipped_tracks: int

    def to_json_dict(self):
        return {
            "seed": self.seed,
            "skipped_tracks": self.skipped_tracks,
            "config": self.config,
            "kernels": self.per_kernel,
        }

    def to_text(self):
        headers = ["kernel", "rmse", "nlpd", "min_gram_eigenvalue"]
        rows = [
            [label, metrics["rmse"], metrics["nlpd"], metrics["min_gram_eigenvalue"]]
            for label, metrics in self.per_kernel.items()
        ]
        table = _serialize.format_table(headers, rows)
        prefix = (
            f"seed: {self.seed}\n"
            f"skipped_tracks: {self.skipped_tracks}\n"
            f"tracks: {self.config['num_tracks']}\n"
            f"optimize: {self.config['optimize']}\n\n"
        )
        return prefix + table


def default_free_params(spec):
    """The parameter names learned for a family under joint optimization.

    For pose_product the orientation magnitude stays fixed at its given
    value: the product magnitude is not identifiable separately from the
    translation magnitude.
    """
    if spec.family == "pose_product":
        names = ["translation.magnitude", "translation.lengthscale"]
        names += [
            "orientation." + name
            for name in spec.parts["orientation"].param_names()
            if name != "magnitude"
        ]
        return names
    return list(spec.param_names())


def _magnitude_param(spec):
    if spec.family == "pose_product":
        return "translation.magnitude"
    return "magnitude"


def _init_magnitude(spec, problems):
    """Start the free magnitude at the pooled training-target variance.

    The marginal-likelihood surface has a trivial local optimum where
    the noise absorbs everything when the signal variance starts orders
    of magnitude below the target variance; matching scales at
    initialization avoids it.
    """
    pooled = np.concatenate([prob.targets.ravel() for _, _, _, prob in problems])
    var0 = float(np.var(pooled))
    if var0 <= 0.0:
        return spec
    return spec.with_param(_magnitude_param(spec), var0)


def _init_lengthscale(spec, problems):
    """Median-distance heuristic for the translation lengthscale."""
    if spec.family == "translation":
        name = "lengthscale"
    elif spec.family == "pose_product":
        name = "translation.lengthscale"
    else:
        return spec
    points = np.array(
        [pose.p for _, _, _, prob in problems for pose in prob.inputs]
    )
    d = np.sqrt(
        np.maximum(
            np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1), 0.0
        )
    )
    med = float(np.median(d[np.triu_indices(len(points), 1)]))
    if med <= 0.0:
        return spec
    return spec.with_param(name, med)


def _centered_track_problems(dataset, spec, noise):
    """Per-track regression problems with the train-mean removed."""
    problems = []
    skipped = 0
    for track in dataset.tracks:
        train = track.train_mask
        if not train.any() or train.all():
            skipped += 1
            continue
        poses = dataset.track_poses(track)
        mu = track.uv[train].mean(axis=0)
        problem = RegressionProblem(
            [poses[i] for i in np.flatnonzero(train)],
            track.uv[train] - mu,
            noise,
            spec,
        )
        problems.append((track, poses, mu, problem))
    return problems, skipped


def run_track_experiment(dataset, kernels, optimize=False, seed=0, noise=1.0,
                         opt_config=None):
    """Fit per-track GPs for u and v under each kernel and compare.

    For every track: subtract the per-track training mean, fit one GP
    with two output dimensions (u, v) on the training mask, predict the
    test mask, restore the mean.  RMSE is the root mean squared error
    pooled over all test entries; NLPD is the unweighted mean negative
    log predictive density over the same entries.  With optimize=True
    the kernel's free parameters and the noise variance are learned
    jointly across tracks by summing per-track marginal likelihoods.
    """
    if not dataset.tracks:
        raise ValueError("dataset has no tracks")
    labels = [spec.family for spec in kernels]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate kernel family in comparison list")

    unique_frames = sorted({int(f) for track in dataset.tracks for f in track.frames})
    eig_poses = [dataset.poses[f] for f in unique_frames]

    per_kernel = {}
    skipped = 0
    for label, spec in zip(labels, kernels):
        problems, skipped = _centered_track_problems(dataset, spec, noise)
        if not problems:
            raise ValueError("every track was skipped (no train/test split)")
        used_spec, used_noise = spec, noise
        trace_len = None
        if optimize:
            free = default_free_params(spec) + ["noise"]
            start = _init_lengthscale(_init_magnitude(spec, problems), problems)
            if start is not spec:
                problems, _ = _centered_track_problems(dataset, start, noise)
            used_spec, used_noise, trace = optimize_hyperparameters_joint(
                [prob for _, _, _, prob in problems], free, opt_config
            )
            trace_len = len(trace)
            problems, _ = _centered_track_problems(dataset, used_spec, used_noise)

        sq_errors = []
        nlpd_terms = []
        for track, poses, mu, problem in problems:
            post = fit(problem)
            test_idx = np.flatnonzero(~track.train_mask)
            mean, var = predict(post, [poses[i] for i in test_idx])
            pred = mean + mu
            err = pred - track.uv[test_idx]
            v = var[:, None] + used_noise
            sq_errors.append((err * err).ravel())
            nlpd_terms.append(
                (0.5 * np.log(2.0 * math.pi * v) + (err * err) / (2.0 * v)).ravel()
            )
        sq = np.concatenate(sq_errors)
        nlpd = np.concatenate(nlpd_terms)
        K = gram_matrix(used_spec, eig_poses, 0.0)
        min_eig = float(np.linalg.eigvalsh(K)[0])
        metrics = {
            "rmse": float(np.sqrt(np.mean(sq))),
            "nlpd": float(np.mean(nlpd)),
            "min_gram_eigenvalue": min_eig,
            "noise": used_noise,
            "params": used_spec.to_json_dict(),
            "num_test_entries": int(sq.size),
        }
        if trace_len is not None:
            metrics["objective_trace_length"] = trace_len
        per_kernel[label] = metrics

    config = {
        "num_tracks": len(dataset.tracks),
        "track_length": int(len(dataset.tracks[0])),
        "optimize": bool(optimize),
        "noise": noise,
        "width": dataset.width,
        "height": dataset.height,
    }
    return ExperimentReport(per_kernel, config, seed, skipped)


# ---------------------------------------------------------------------------
# figure matrices
# ---------------------------------------------------------------------------


def _grid_rotations(theta1, theta2):
    """Two-degree-of-freedom rotations R = R_y(theta2) @ R_x(theta1)."""
    return np.array([
        rot_axis("y", t2) @ rot_axis("x", t1)
        for t1, t2 in zip(np.ravel(theta1), np.ravel(theta2))
    ])


def _mirror_zero_diag(D):
    """Structural symmetry with an exactly zero diagonal."""
    U = np.triu(D, 1)
    return U + U.T


def _distance_matrix(measure, rotations, angles):
    if measure == "geodesic":
        D = geodesic_distance(rotations[:, None], rotations[None, :])
    elif measure == "view":
        D = view_distance(rotations[:, None], rotations[None, :])
    elif measure == "quaternion":
        Q = np.array([matrix_to_quat(R) for R in rotations])
        D = quat_distance(Q[:, None, :], Q[None, :, :])
    elif measure == "separable":
        # distance whose Gaussian form reproduces the separable kernel:
        # d = 2 sqrt(sum_j sin^2(dtheta_j / 2)), on the grid's own angles
        s = np.sin(0.5 * (angles[:, None, :] - angles[None, :, :]))
        D = 2.0 * np.sqrt(np.sum(s * s, axis=-1))
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return _mirror_zero_diag(D)


def emit_distance_figures(out_dir, grid_n=17, measures=FIGURE_MEASURES,
                          lengthscale=1.0):
    """Pairwise distance and covariance matrices over a 2-DoF angle grid.

    The grid is theta1, theta2 in linspace(-pi, pi, grid_n) with theta1
    varying fastest; rotations are R_y(theta2) @ R_x(theta1).  For each
    measure the full grid matrix plus two 1-DoF slices (theta2 = 0 and
    theta1 = theta2) are emitted, each as distance and as the covariance
    exp(-d^2 / (2 l^2)).  Returns the arrays and the written file paths.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    if lengthscale <= 0.0:
        raise ValueError("lengthscale must be positive")
    for measure in measures:
        if measure not in FIGURE_MEASURES:
            raise ValueError(f"unknown measure {measure!r}")
    out = _serialize.ensure_dir(out_dir)
    thetas = np.linspace(-math.pi, math.pi, grid_n)
    t1_grid, t2_grid = np.meshgrid(thetas, thetas, indexing="xy")
    grid_angles = np.column_stack(
        [t1_grid.ravel(), t2_grid.ravel(), np.zeros(grid_n * grid_n)]
    )
    grid_rots = _grid_rotations(grid_angles[:, 0], grid_angles[:, 1])

    slice_sets = {
        "theta2zero": np.column_stack([thetas, np.zeros(grid_n), np.zeros(grid_n)]),
        "diagonal": np.column_stack([thetas, thetas, np.zeros(grid_n)]),
    }
    slice_rots = {
        name: _grid_rotations(angles[:, 0], angles[:, 1])
        for name, angles in slice_sets.items()
    }

    inv2l2 = 1.0 / (2.0 * lengthscale * lengthscale)
    results = {}
    files = []
    for measure in measures:
        D = _distance_matrix(measure, grid_rots, grid_angles)
        C = np.exp(-(D * D) * inv2l2)
        entry = {"distance": D, "covariance": C}
        files += _serialize.write_matrix_files(out, f"{measure}_distance", D)
        files += _serialize.write_matrix_files(out, f"{measure}_covariance", C)
        for name, angles in slice_sets.items():
            Ds = _distance_matrix(measure, slice_rots[name], angles)
            Cs = np.exp(-(Ds * Ds) * inv2l2)
            entry[f"distance_slice_{name}"] = Ds
            entry[f"covariance_slice_{name}"] = Cs
            files += _serialize.write_matrix_files(
                out, f"{measure}_distance_slice_{name}", Ds
            )
            files += _serialize.write_matrix_files(
                out, f"{measure}_covariance_slice_{name}", Cs
            )
        results[measure] = entry

    manifest = {
        "grid_n": grid_n,
        "lengthscale": lengthscale,
        "measures": list(measures),
        "ordering": "theta1 varies fastest; rotation is R_y(theta2) @ R_x(theta1)",
        "thetas": thetas,
    }
    manifest_path = out / "grid.json"
    _serialize.write_json(manifest_path, manifest)
    files.append(str(manifest_path))
    results["thetas"] = thetas
    results["files"] = files
    return results


def emit_trajectory_covariances(trajectory, translation_ell=1.0, view_ell=1.0,
                                out_dir="."):
    """Unit-magnitude translation and view Gram matrices over a trajectory."""
    poses = list(trajectory.poses)
    K_trans = gram_matrix(
        default_spec("translation", lengthscale=translation_ell), poses, 0.0
    )
    K_view = gram_matrix(default_spec("view_iso", lengthscale=view_ell), poses, 0.0)
    out = _serialize.ensure_dir(out_dir)
    files = _serialize.write_matrix_files(out, "translation_covariance", K_trans)
    files += _serialize.write_matrix_files(out, "orientation_covariance", K_view)
    return {"translation": K_trans, "orientation": K_view, "files": files}
