"""Camera-pose covariance functions on SE(3) with exact GP regression.

The core object is a rotation-aware kernel family for Gaussian-process
regression over camera poses, built around a non-separable orientation
kernel exp(-tr(I - R1^T R2) / (2 l^2)) that avoids the wrap-around and
double-cover defects of Euler-angle and quaternion constructions.  On
top of it: exact GP fitting and prediction, marginal-likelihood
hyperparameter learning, a pinhole-camera track synthesizer, and three
experiment harnesses, all exposed through the ``posegp`` CLI.
"""

from ._backend import ACTIVE as active_backend
from .camsim import (
    CameraIntrinsics,
    EmptyDatasetError,
    SynthConfig,
    Track,
    TrackDataset,
    Trajectory,
    default_intrinsics,
    make_intrinsics,
    make_trajectory,
    project,
    synth_tracks,
)
from .experiments import (
    DEFAULT_INTERP_KERNEL,
    DEFAULT_INTERP_NOISE,
    FIGURE_MEASURES,
    INTERP_MODES,
    ExperimentReport,
    LatentSequence,
    default_free_params,
    emit_distance_figures,
    emit_trajectory_covariances,
    make_latent_sequence,
    run_interp_experiment,
    run_track_experiment,
)
from .gp import (
    GPPosterior,
    IllConditionedError,
    OptimizerConfig,
    RegressionProblem,
    finite_difference_gradient,
    fit,
    log_marginal_likelihood,
    metrics_rmse_nlpd,
    optimize_hyperparameters,
    optimize_hyperparameters_joint,
    predict,
    sample_posterior,
)
from .kernels import (
    KernelSpec,
    cross_matrix,
    default_spec,
    gram_matrix,
    k_geodesic,
    k_linear_extrinsics,
    k_object_view,
    k_periodic_1d,
    k_pose,
    k_quat,
    k_separable_euler,
    k_translation,
    k_view_aniso,
    k_view_iso,
    kernel_diag,
)
from .so3 import (
    Pose,
    canonical_quat,
    check_rotation,
    euler_to_matrix,
    geodesic_distance,
    matrix_to_euler,
    matrix_to_quat,
    normalize_quat,
    quat_distance,
    quat_to_matrix,
    random_rotation,
    rot_axis,
    view_distance,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "active_backend",
    # so3
    "Pose",
    "rot_axis",
    "euler_to_matrix",
    "matrix_to_euler",
    "matrix_to_quat",
    "quat_to_matrix",
    "normalize_quat",
    "canonical_quat",
    "geodesic_distance",
    "view_distance",
    "quat_distance",
    "random_rotation",
    "wrap_angle",
    "check_rotation",
    # kernels
    "KernelSpec",
    "default_spec",
    "gram_matrix",
    "cross_matrix",
    "kernel_diag",
    "k_translation",
    "k_periodic_1d",
    "k_separable_euler",
    "k_quat",
    "k_geodesic",
    "k_view_iso",
    "k_view_aniso",
    "k_pose",
    "k_object_view",
    "k_linear_extrinsics",
    # gp
    "RegressionProblem",
    "GPPosterior",
    "OptimizerConfig",
    "IllConditionedError",
    "fit",
    "predict",
    "sample_posterior",
    "log_marginal_likelihood",
    "metrics_rmse_nlpd",
    "finite_difference_gradient",
    "optimize_hyperparameters",
    "optimize_hyperparameters_joint",
    # camsim
    "CameraIntrinsics",
    "EmptyDatasetError",
    "SynthConfig",
    "Track",
    "TrackDataset",
    "Trajectory",
    "make_intrinsics",
    "default_intrinsics",
    "project",
    "make_trajectory",
    "synth_tracks",
    # experiments
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
