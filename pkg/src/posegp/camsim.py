"""Pinhole-camera synthesis: projection, smooth trajectories, feature tracks.

The projection model is (u v 1)^T ~ K (R^T  -R^T p) (x y z 1)^T: world
points are mapped into the camera frame with c = R^T (w - p) and
dehomogenized through the intrinsic matrix.  Trajectories interpolate
waypoint poses (Catmull-Rom for translation, slerp with a smoothstep
time-warp for rotation, so each segment eases in and out of its
endpoints).  Track synthesis projects fixed world points through
consecutive poses, adds pixel noise, and discards tracks that leave the
image or go behind the camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .so3 import Pose, matrix_to_quat, normalize_quat, quat_to_matrix

__all__ = [
    "CameraIntrinsics",
    "Trajectory",
    "Track",
    "TrackDataset",
    "SynthConfig",
    "EmptyDatasetError",
    "make_intrinsics",
    "default_intrinsics",
    "project",
    "make_trajectory",
    "synth_tracks",
]

_BEHIND_EPS = 1e-9


class EmptyDatasetError(RuntimeError):
    """Raised when synthesis discards every candidate track."""


@dataclass(frozen=True, eq=False)
class CameraIntrinsics:
    """Upper-triangular 3x3 intrinsic matrix with zero skew."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.float64)
        if K.shape != (3, 3):
            raise ValueError(f"intrinsic matrix must be 3x3, got shape {K.shape}")
        if K[0, 0] <= 0.0 or K[1, 1] <= 0.0:
            raise ValueError("focal lengths must be positive")
        if K[2, 2] != 1.0:
            raise ValueError("K[2][2] must be 1")
        below = np.array([K[1, 0], K[2, 0], K[2, 1]])
        if np.any(below != 0.0):
            raise ValueError("below-diagonal entries of K must be 0")
        object.__setattr__(self, "K", K)


def make_intrinsics(fu, fv, cu, cv):
    return CameraIntrinsics(np.array([
        [float(fu), 0.0, float(cu)],
        [0.0, float(fv), float(cv)],
        [0.0, 0.0, 1.0],
    ]))


def default_intrinsics(width=640, height=480, focal=500.0):
    """Focal 500 px, principal point at the image center."""
    return make_intrinsics(focal, focal, width / 2.0, height / 2.0)


def project(intrinsics, pose, world_point):
    """Project a world point to pixels, or None when at/behind the camera.

    The camera-frame point is c = R^T (w - p); depth c_z <= 1e-9 counts
    as behind (avoids division blow-up at grazing depth).
    """
    w = np.asarray(world_point, dtype=np.float64)
    c = pose.R.T @ (w - pose.p)
    if c[2] <= _BEHIND_EPS:
        return None
    h = intrinsics.K @ c
    return (h[0] / h[2], h[1] / h[2])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered poses; timestamps strictly increasing."""

    times: np.ndarray
    poses: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size != len(self.poses):
            raise ValueError("times and poses must have equal length")
        if times.size == 0:
            raise ValueError("trajectory must be non-empty")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "poses", tuple(self.poses))

    def __len__(self):
        return len(self.poses)


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _slerp(q0, q1, t):
    """Spherical linear interpolation along the shorter arc."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 0.9995:
        # nearly parallel: lerp then renormalize
        return normalize_quat(q0 + t * (q1 - q0))
    theta0 = math.acos(min(1.0, dot))
    theta = theta0 * t
    s0 = math.cos(theta) - dot * math.sin(theta) / math.sin(theta0)
    s1 = math.sin(theta) / math.sin(theta0)
    return normalize_quat(s0 * q0 + s1 * q1)


def _catmull_rom(points, seg, u):
    """Uniform Catmull-Rom with duplicated endpoint tangents."""
    n = len(points)
    p1 = points[seg]
    p2 = points[seg + 1]
    p0 = points[seg - 1] if seg - 1 >= 0 else points[0]
    p3 = points[seg + 2] if seg + 2 < n else points[n - 1]
    t1 = 0.5 * (p2 - p0)
    t2 = 0.5 * (p3 - p1)
    u2 = u * u
    u3 = u2 * u
    return (
        (2.0 * u3 - 3.0 * u2 + 1.0) * p1
        + (u3 - 2.0 * u2 + u) * t1
        + (-2.0 * u3 + 3.0 * u2) * p2
        + (u3 - u2) * t2
    )


def _random_small_rotation(rng, max_angle):
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = max_angle * rng.random()
    half = 0.5 * angle
    q = normalize_quat(np.concatenate([[math.cos(half)], math.sin(half) * axis]))
    return quat_to_matrix(q)


def make_trajectory(waypoints, frames_per_segment, seed=None, jitter_angle=0.0):
    """Interpolate waypoint (time, Pose) pairs into a frame-sampled trajectory.

    Translation follows a Catmull-Rom spline through the waypoints;
    rotation slerps between waypoint quaternions with a smoothstep
    time-warp per segment (standstill-then-move velocity profiles).
    Optional seeded jitter right-multiplies each frame rotation by a
    random rotation of angle at most jitter_angle.
    """
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    times = np.array([float(t) for t, _ in waypoints])
    if np.any(np.diff(times) == 0.0):
        raise ValueError("waypoint timestamps must be distinct")
    if np.any(np.diff(times) < 0.0):
        raise ValueError("waypoint timestamps must be increasing")
    n_seg = len(waypoints) - 1
    if isinstance(frames_per_segment, int):
        counts = [frames_per_segment] * n_seg
    else:
        counts = [int(c) for c in frames_per_segment]
    if len(counts) != n_seg or any(c < 1 for c in counts):
        raise ValueError("frames_per_segment must give a count >= 1 per segment")

    points = [np.asarray(pose.p, dtype=np.float64) for _, pose in waypoints]
    quats = [matrix_to_quat(pose.R) for _, pose in waypoints]

    out_times = []
    out_poses = []
    for seg in range(n_seg):
        t_a, t_b = times[seg], times[seg + 1]
        for k in range(counts[seg]):
            u = k / counts[seg]
            p = _catmull_rom(points, seg, u)
            q = _slerp(quats[seg], quats[seg + 1], _smoothstep(u))
            out_times.append(t_a + u * (t_b - t_a))
            out_poses.append((p, q))
    out_times.append(times[-1])
    out_poses.append((points[-1], quats[-1]))

    rng = np.random.default_rng(seed) if jitter_angle > 0.0 else None
    poses = []
    for p, q in out_poses:
        R = quat_to_matrix(q)
        if rng is not None:
            R = R @ _random_small_rotation(rng, jitter_angle)
        poses.append(Pose(p, R))
    return Trajectory(np.array(out_times), tuple(poses))


@dataclass(frozen=True, eq=False)
class Track:
    """One feature track: frame indices, pixel coordinates, train mask."""

    frames: np.ndarray
    uv: np.ndarray
    train_mask: np.ndarray
    world_point: np.ndarray | None = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.int64)
        uv = np.asarray(self.uv, dtype=np.float64)
        mask = np.asarray(self.train_mask, dtype=bool)
        if not (frames.ndim == 1 and uv.shape == (frames.size, 2) and mask.shape == frames.shape):
            raise ValueError("inconsistent track shapes")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "train_mask", mask)

    def __len__(self):
        return self.frames.size


@dataclass(frozen=True, eq=False)
class TrackDataset:
    """Feature tracks plus the trajectory poses they index into."""

    tracks: tuple
    poses: tuple
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "poses", tuple(self.poses))
        for track in self.tracks:
            if np.any(track.frames < 0) or np.any(track.frames >= len(self.poses)):
                raise ValueError("track frame index out of range")
            if np.any(track.uv < 0.0) or np.any(track.uv[:, 0] > self.width) or np.any(
                track.uv[:, 1] > self.height
            ):
                raise ValueError("track pixel coordinates out of image bounds")

    def track_poses(self, track):
        return [self.poses[f] for f in track.frames]


@dataclass(frozen=True)
class SynthConfig:
    """Synthesis parameters for feature-track generation."""

    seed: int
    num_world_points: int = 100
    pixel_noise: float = 1.0
    track_length: int = 20
    width: int = 640
    height: int = 480
    train_fraction: float = 0.85
    box_center: tuple | None = None
    box_size: tuple = (6.0, 6.0, 4.0)
    box_distance: float = 4.0

    def __post_init__(self):
        if self.num_world_points < 1:
            raise ValueError("num_world_points must be >= 1")
        if self.pixel_noise < 0.0:
            raise ValueError("pixel_noise must be >= 0")
        if self.track_length < 2:
            raise ValueError("track_length must be >= 2")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def _default_box_center(trajectory, distance):
    mean_p = np.mean([pose.p for pose in trajectory.poses], axis=0)
    forward = np.mean([pose.R[:, 2] for pose in trajectory.poses], axis=0)
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        forward = np.array([0.0, 0.0, 1.0])
    else:
        forward = forward / norm
    return mean_p + distance * forward


def synth_tracks(trajectory, intrinsics, config):
    """Generate a TrackDataset by projecting random world points.

    World points are sampled uniformly in a box in front of the
    trajectory (centered box_distance along the mean camera forward axis
    unless box_center is given); each point is projected through
    track_length consecutive poses starting at a random frame.  Gaussian
    pixel noise is added; a track is discarded when any of its noisy
    pixels leaves [0, width] x [0, height] or the point falls behind the
    camera.  Per-track train/test masks hold out at least one test
    point.  Deterministic per config.seed.
    """
    n_frames = len(trajectory)
    L = config.track_length
    if n_frames < L:
        raise ValueError(
            f"trajectory has {n_frames} frames, need at least track_length={L}"
        )
    rng = np.random.default_rng(config.seed)
    center = (
        np.asarray(config.box_center, dtype=np.float64)
        if config.box_center is not None
        else _default_box_center(trajectory, config.box_distance)
    )
    size = np.asarray(config.box_size, dtype=np.float64)

    n_test = max(1, int(round((1.0 - config.train_fraction) * L)))
    tracks = []
    for _ in range(config.num_world_points):
        point = center + (rng.random(3) - 0.5) * size
        start = int(rng.integers(0, n_frames - L + 1))
        frames = np.arange(start, start + L)
        clean = np.empty((L, 2))
        visible = True
        for row, f in enumerate(frames):
            uv = project(intrinsics, trajectory.poses[f], point)
            if uv is None:
                visible = False
                break
            clean[row] = uv
        if not visible:
            continue
        noisy = clean + config.pixel_noise * rng.standard_normal((L, 2))
        if (
            np.any(noisy < 0.0)
            or np.any(noisy[:, 0] > config.width)
            or np.any(noisy[:, 1] > config.height)
        ):
            continue
        test_idx = rng.choice(L, size=n_test, replace=False)
        mask = np.ones(L, dtype=bool)
        mask[test_idx] = False
        tracks.append(Track(frames, noisy, mask, point))

    if not tracks:
        raise EmptyDatasetError("no track survived visibility and bounds checks")
    return TrackDataset(tuple(tracks), trajectory.poses, config.width, config.height)
