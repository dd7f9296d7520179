"""Covariance functions on camera poses and their Gram-matrix assembly.

Families
--------
translation        squared exponential on the translation, sigma^2 exp(-||dp||^2/(2 l^2))
periodic1d         exp(-2 sin^2(dtheta/2) / l^2) on a single angle
separable_euler    product of periodic factors over the three Euler angles
quaternion         sigma^2 exp(-d_quat^2/(2 l^2)), d_quat the raw quaternion distance
geodesic           sigma^2 exp(-d_g^2/(2 l^2)), d_g the arc distance (not PSD in general)
view_iso           sigma^2 exp(-tr(I - R1^T R2)/(2 l^2)), non-separable on SO(3)
view_aniso         sigma^2 exp(-0.5 tr(Lambda - R1^T Lambda R2)), Lambda = diag(l_x^-2, l_y^-2, l_z^-2)
pose_product       translation kernel times an orientation kernel
object_view        (x1 . x2) times the anisotropic view kernel
linear_extrinsics  sigma^2 (p1 . p2 + tr(R1^T R2)), dot product over [p; vec(R)]

Scalar functions broadcast over stacked inputs.  Gram assembly converts
the input poses to feature arrays once and runs the pairwise reductions
on the selected backend (see _backend).  Symmetry of a Gram matrix is
structural: the strict upper triangle is computed and mirrored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .so3 import Pose, matrix_to_euler, matrix_to_quat

_impl = _backend.load_impl()

__all__ = [
    "KernelSpec",
    "default_spec",
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
    "gram_matrix",
    "cross_matrix",
    "kernel_diag",
    "backend",
    "ORIENTATION_FAMILIES",
]


def backend():
    """Name of the active pairwise backend ('numba' or 'numpy')."""
    return _backend.ACTIVE


def _maybe_scalar(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# scalar kernel functions (broadcast over leading dimensions)
# ---------------------------------------------------------------------------


def k_translation(p1, p2, magnitude, lengthscale):
    """Squared exponential on translations: sigma^2 exp(-||p1-p2||^2 / (2 l^2))."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    d = p1 - p2
    sq = np.sum(d * d, axis=-1)
    return _maybe_scalar(magnitude * np.exp(-sq / (2.0 * np.square(lengthscale))))


def k_periodic_1d(theta1, theta2, lengthscale, magnitude=1.0):
    """Standard periodic kernel exp(-2 sin^2((t1-t2)/2) / l^2); period 2 pi."""
    t1 = np.asarray(theta1, dtype=np.float64)
    t2 = np.asarray(theta2, dtype=np.float64)
    s = np.sin(0.5 * (t1 - t2))
    return _maybe_scalar(magnitude * np.exp(-2.0 * s * s / np.square(lengthscale)))


def k_separable_euler(theta1, theta2, lengthscales, magnitude=1.0):
    """Product over the three Euler angles of periodic factors."""
    t1 = np.asarray(theta1, dtype=np.float64)
    t2 = np.asarray(theta2, dtype=np.float64)
    ells = np.asarray(lengthscales, dtype=np.float64)
    s = np.sin(0.5 * (t1 - t2))
    arg = np.sum(2.0 * s * s / np.square(ells), axis=-1)
    return _maybe_scalar(magnitude * np.exp(-arg))


def k_quat(q1, q2, magnitude, lengthscale):
    """sigma^2 exp(-d^2/(2 l^2)) with d the raw (non-canonicalized) quaternion distance."""
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    d = q1 - q2
    dist2 = 4.0 * np.sum(d * d, axis=-1)
    return _maybe_scalar(magnitude * np.exp(-dist2 / (2.0 * np.square(lengthscale))))


def k_geodesic(R1, R2, magnitude, lengthscale):
    """sigma^2 exp(-d_g^2/(2 l^2)) with d_g the arc distance on SO(3)."""
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    t = np.sum(R1 * R2, axis=(-2, -1))
    d = np.arccos(np.clip(0.5 * (t - 1.0), -1.0, 1.0))
    return _maybe_scalar(magnitude * np.exp(-d * d / (2.0 * np.square(lengthscale))))


def k_view_iso(R1, R2, magnitude, lengthscale):
    """Non-separable view kernel sigma^2 exp(-tr(I - R1^T R2) / (2 l^2)).

    The trace argument is evaluated as 0.5*||R1 - R2||_F^2 (identical for
    orthonormal inputs, exactly 0 at coincidence).
    """
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    d = R1 - R2
    arg = 0.5 * np.sum(d * d, axis=(-2, -1))
    return _maybe_scalar(magnitude * np.exp(-arg / (2.0 * np.square(lengthscale))))


def k_view_aniso(R1, R2, magnitude, axis_lengthscales):
    """Anisotropic view kernel sigma^2 exp(-0.5 tr(Lambda - R1^T Lambda R2)).

    Lambda = diag(l_x^-2, l_y^-2, l_z^-2); the trace is evaluated as the
    row-weighted squared Frobenius difference 0.5 sum_a lambda_a ||row_a(R1) - row_a(R2)||^2.
    """
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    ells = np.asarray(axis_lengthscales, dtype=np.float64)
    if ells.shape[-1] != 3:
        raise ValueError("axis_lengthscales must have three components")
    w = 1.0 / np.square(ells)
    d = R1 - R2
    rows = np.sum(d * d, axis=-1)
    wtrace = 0.5 * np.sum(w * rows, axis=-1)
    return _maybe_scalar(magnitude * np.exp(-0.5 * wtrace))


def k_pose(pose1, pose2, spec):
    """Product pose kernel: configured translation kernel times orientation kernel."""
    if spec.family != "pose_product":
        raise ValueError(f"expected a pose_product spec, got {spec.family!r}")
    kt = _evaluate_leaf(spec.parts["translation"], pose1, pose2)
    ko = _evaluate_leaf(spec.parts["orientation"], pose1, pose2)
    return kt * ko


def k_object_view(x1, x2, R1, R2, axis_lengthscales, magnitude):
    """(x1 . x2) times the anisotropic view kernel, scaled by sigma^2."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape[-1] != x2.shape[-1]:
        raise ValueError(
            f"feature dimensions differ: {x1.shape[-1]} vs {x2.shape[-1]}"
        )
    g = np.sum(x1 * x2, axis=-1)
    kv = k_view_aniso(R1, R2, 1.0, axis_lengthscales)
    return _maybe_scalar(g * kv * magnitude)


def k_linear_extrinsics(pose1, pose2, magnitude):
    """Dot-product kernel over [p; vec(R)]: sigma^2 (p1 . p2 + tr(R1^T R2))."""
    return _maybe_scalar(
        magnitude
        * (
            np.sum(np.asarray(pose1.p) * np.asarray(pose2.p))
            + np.sum(np.asarray(pose1.R) * np.asarray(pose2.R))
        )
    )


def _evaluate_leaf(spec, pose1, pose2):
    """Evaluate a leaf-family spec on two poses."""
    fam = spec.family
    p = spec.params
    if fam == "translation":
        return k_translation(pose1.p, pose2.p, p["magnitude"], p["lengthscale"])
    if fam == "periodic1d":
        a1 = matrix_to_euler(pose1.R)[0]
        a2 = matrix_to_euler(pose2.R)[0]
        return k_periodic_1d(a1, a2, p["lengthscale"], p["magnitude"])
    if fam == "separable_euler":
        e1 = matrix_to_euler(pose1.R)
        e2 = matrix_to_euler(pose2.R)
        ells = np.array([p["ell1"], p["ell2"], p["ell3"]])
        return k_separable_euler(e1, e2, ells, p["magnitude"])
    if fam == "quaternion":
        return k_quat(matrix_to_quat(pose1.R), matrix_to_quat(pose2.R),
                      p["magnitude"], p["lengthscale"])
    if fam == "geodesic":
        return k_geodesic(pose1.R, pose2.R, p["magnitude"], p["lengthscale"])
    if fam == "view_iso":
        return k_view_iso(pose1.R, pose2.R, p["magnitude"], p["lengthscale"])
    if fam == "view_aniso":
        ells = np.array([p["ell_x"], p["ell_y"], p["ell_z"]])
        return k_view_aniso(pose1.R, pose2.R, p["magnitude"], ells)
    if fam == "linear_extrinsics":
        return k_linear_extrinsics(pose1, pose2, p["magnitude"])
    raise ValueError(f"family {fam!r} cannot be evaluated on two poses")


# ---------------------------------------------------------------------------
# kernel specifications
# ---------------------------------------------------------------------------

_LEAF_PARAMS = {
    "translation": ("magnitude", "lengthscale"),
    "periodic1d": ("magnitude", "lengthscale"),
    "separable_euler": ("magnitude", "ell1", "ell2", "ell3"),
    "quaternion": ("magnitude", "lengthscale"),
    "geodesic": ("magnitude", "lengthscale"),
    "view_iso": ("magnitude", "lengthscale"),
    "view_aniso": ("magnitude", "ell_x", "ell_y", "ell_z"),
    "object_view": ("magnitude", "ell_x", "ell_y", "ell_z"),
    "linear_extrinsics": ("magnitude",),
    "pose_product": (),
}

ORIENTATION_FAMILIES = frozenset(
    ["periodic1d", "separable_euler", "quaternion", "geodesic", "view_iso", "view_aniso"]
)

_PART_KEYS = {"pose_product": ("translation", "orientation")}


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family tag plus its hyperparameters.

    Leaf families carry all parameters in `params`.  pose_product holds
    two sub-specs in `parts` under the keys "translation" and
    "orientation".  Parameters are addressed by name, dotted through
    parts: "lengthscale", "translation.magnitude", "orientation.lengthscale".
    """

    family: str
    params: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _LEAF_PARAMS:
            raise ValueError(f"unknown kernel family {self.family!r}")
        expected = set(_LEAF_PARAMS[self.family])
        got = set(self.params)
        if got - expected:
            raise ValueError(
                f"unknown parameters for {self.family}: {sorted(got - expected)}"
            )
        if expected - got:
            raise ValueError(
                f"missing parameters for {self.family}: {sorted(expected - got)}"
            )
        params = {}
        for name, value in self.params.items():
            value = float(value)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{self.family}.{name} must be positive, got {value}")
            params[name] = value
        object.__setattr__(self, "params", params)
        part_keys = _PART_KEYS.get(self.family, ())
        if set(self.parts) != set(part_keys):
            raise ValueError(
                f"{self.family} requires parts {sorted(part_keys)}, got {sorted(self.parts)}"
            )
        object.__setattr__(self, "parts", dict(self.parts))
        if self.family == "pose_product":
            if self.parts["translation"].family != "translation":
                raise ValueError("pose_product translation part must be a translation kernel")
            if self.parts["orientation"].family not in ORIENTATION_FAMILIES:
                raise ValueError(
                    "pose_product orientation part must be one of "
                    f"{sorted(ORIENTATION_FAMILIES)}"
                )

    # -- parameter addressing ------------------------------------------------

    def param_names(self):
        """All addressable parameter names, dotted through parts."""
        names = list(_LEAF_PARAMS[self.family])
        for key in _PART_KEYS.get(self.family, ()):
            names.extend(f"{key}.{n}" for n in self.parts[key].param_names())
        return names

    def get_param(self, name):
        head, _, rest = name.partition(".")
        if rest:
            if head not in self.parts:
                raise KeyError(f"{self.family} has no part {head!r}")
            return self.parts[head].get_param(rest)
        if head not in self.params:
            raise KeyError(f"{self.family} has no parameter {head!r}")
        return self.params[head]

    def with_param(self, name, value):
        """A copy of this spec with one named parameter replaced."""
        head, _, rest = name.partition(".")
        if rest:
            if head not in self.parts:
                raise KeyError(f"{self.family} has no part {head!r}")
            parts = dict(self.parts)
            parts[head] = parts[head].with_param(rest, value)
            return KernelSpec(self.family, dict(self.params), parts)
        if head not in self.params:
            raise KeyError(f"{self.family} has no parameter {head!r}")
        params = dict(self.params)
        params[head] = float(value)
        return KernelSpec(self.family, params, dict(self.parts))

    # -- JSON ------------------------------------------------------------

    def to_json_dict(self):
        doc = {"family": self.family, "params": dict(self.params)}
        for key, part in self.parts.items():
            doc[key] = part.to_json_dict()
        return doc

    @classmethod
    def from_json_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ValueError(f"kernel document must be an object, got {type(doc).__name__}")
        if "family" not in doc:
            raise ValueError("kernel document is missing 'family'")
        family = doc["family"]
        if family not in _LEAF_PARAMS:
            raise ValueError(f"unknown kernel family {family!r}")
        part_keys = _PART_KEYS.get(family, ())
        allowed = {"family", "params"} | set(part_keys)
        unknown = set(doc) - allowed
        if unknown:
            raise ValueError(f"unknown fields in kernel document: {sorted(unknown)}")
        raw = doc.get("params", {})
        if not isinstance(raw, dict):
            raise ValueError("'params' must be an object")
        params = dict(_default_params(family))
        for name, value in raw.items():
            if name not in _LEAF_PARAMS[family]:
                raise ValueError(f"unknown parameter {name!r} for family {family}")
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"parameter {name!r} must be a number")
            params[name] = float(value)
        parts = {}
        for key in part_keys:
            if key not in doc:
                raise ValueError(f"{family} document is missing part {key!r}")
            parts[key] = cls.from_json_dict(doc[key])
        return cls(family, params, parts)


def _default_params(family):
    return {name: 1.0 for name in _LEAF_PARAMS[family]}


def default_spec(family, **overrides):
    """A KernelSpec with every parameter defaulted to 1.0, then overridden.

    pose_product defaults to translation x view_iso; override sub-kernel
    parameters with dotted names, e.g. default_spec("pose_product",
    **{"orientation.lengthscale": 0.5}).
    """
    if family == "pose_product":
        spec = KernelSpec(
            "pose_product",
            {},
            {
                "translation": default_spec("translation"),
                "orientation": default_spec("view_iso"),
            },
        )
    else:
        spec = KernelSpec(family, _default_params(family))
    for name, value in overrides.items():
        spec = spec.with_param(name, value)
    return spec


# ---------------------------------------------------------------------------
# Gram assembly
# ---------------------------------------------------------------------------


def _features(spec, inputs):
    """Convert inputs to the contiguous arrays this spec's family needs."""
    fam = spec.family
    if fam == "object_view":
        try:
            X = np.ascontiguousarray([np.asarray(x, dtype=np.float64) for x, _ in inputs])
            R = np.ascontiguousarray([np.asarray(R, dtype=np.float64) for _, R in inputs])
        except (TypeError, ValueError) as exc:
            raise ValueError(
                "object_view inputs must be (feature vector, rotation matrix) pairs"
            ) from exc
        return {"X": X, "R": R}
    feats = {}
    if fam in ("translation", "linear_extrinsics") or fam == "pose_product":
        feats["P"] = np.ascontiguousarray([pose.p for pose in inputs])
    if fam in ("geodesic", "view_iso", "view_aniso", "linear_extrinsics"):
        feats["R"] = np.ascontiguousarray([pose.R for pose in inputs])
    if fam == "periodic1d":
        feats["A"] = np.ascontiguousarray(
            [matrix_to_euler(pose.R)[0] for pose in inputs]
        )
    if fam == "separable_euler":
        feats["E"] = np.ascontiguousarray([matrix_to_euler(pose.R) for pose in inputs])
    if fam == "pose_product":
        feats["orientation"] = _features(spec.parts["orientation"], inputs)
    return feats


def _pair_matrix(spec, f1, f2):
    fam = spec.family
    p = spec.params
    if fam == "translation":
        sq = _impl.sqdist(f1["P"], f2["P"])
        return p["magnitude"] * np.exp(-sq / (2.0 * p["lengthscale"] ** 2))
    if fam == "periodic1d":
        arg = _impl.periodic_arg(f1["A"], f2["A"], p["lengthscale"])
        return p["magnitude"] * np.exp(-arg)
    if fam == "separable_euler":
        ells = np.array([p["ell1"], p["ell2"], p["ell3"]])
        arg = _impl.euler_arg(f1["E"], f2["E"], ells)
        return p["magnitude"] * np.exp(-arg)
    if fam == "quaternion":
        d = _impl.quat_dist(f1["Q"], f2["Q"])
        return p["magnitude"] * np.exp(-(d * d) / (2.0 * p["lengthscale"] ** 2))
    if fam == "geodesic":
        t = _impl.rot_dot(f1["R"], f2["R"])
        d = np.arccos(np.clip(0.5 * (t - 1.0), -1.0, 1.0))
        return p["magnitude"] * np.exp(-(d * d) / (2.0 * p["lengthscale"] ** 2))
    if fam == "view_iso":
        arg = _impl.rot_frob2(f1["R"], f2["R"])
        return p["magnitude"] * np.exp(-arg / (2.0 * p["lengthscale"] ** 2))
    if fam == "view_aniso":
        w = np.array([p["ell_x"], p["ell_y"], p["ell_z"]]) ** -2.0
        arg = _impl.rot_frob2_weighted(f1["R"], f2["R"], w)
        return p["magnitude"] * np.exp(-0.5 * arg)
    if fam == "object_view":
        w = np.array([p["ell_x"], p["ell_y"], p["ell_z"]]) ** -2.0
        arg = _impl.rot_frob2_weighted(f1["R"], f2["R"], w)
        g = _impl.dot(f1["X"], f2["X"])
        return p["magnitude"] * g * np.exp(-0.5 * arg)
    if fam == "linear_extrinsics":
        return p["magnitude"] * (
            _impl.dot(f1["P"], f2["P"]) + _impl.rot_dot(f1["R"], f2["R"])
        )
    if fam == "pose_product":
        kt = _pair_matrix(spec.parts["translation"], f1, f2)
        ko = _pair_matrix(spec.parts["orientation"], f1["orientation"], f2["orientation"])
        return kt * ko
    raise ValueError(f"unknown kernel family {fam!r}")


def _features_with_quats(spec, inputs):
    feats = _features(spec, inputs)
    # quaternion extraction lives outside _features so pose_product can share it
    fam = spec.family
    if fam == "quaternion":
        feats["Q"] = np.ascontiguousarray([matrix_to_quat(pose.R) for pose in inputs])
    elif fam == "pose_product" and spec.parts["orientation"].family == "quaternion":
        feats["orientation"]["Q"] = np.ascontiguousarray(
            [matrix_to_quat(pose.R) for pose in inputs]
        )
    return feats


def cross_matrix(spec, inputs1, inputs2):
    """The (n, m) matrix of kernel evaluations between two input lists."""
    _check_inputs(spec, inputs1)
    _check_inputs(spec, inputs2)
    f1 = _features_with_quats(spec, inputs1)
    f2 = _features_with_quats(spec, inputs2)
    return _pair_matrix(spec, f1, f2)


def gram_matrix(spec, inputs, jitter=0.0):
    """Symmetric Gram matrix over one input list, plus jitter on the diagonal.

    Symmetry is enforced structurally: the strict upper triangle is
    computed once and mirrored below the diagonal.
    """
    if len(inputs) < 1:
        raise ValueError("gram_matrix requires at least one input")
    if jitter < 0.0:
        raise ValueError(f"jitter must be >= 0, got {jitter}")
    _check_inputs(spec, inputs)
    f = _features_with_quats(spec, inputs)
    K = _pair_matrix(spec, f, f)
    K = np.triu(K)
    K = K + np.triu(K, 1).T
    if jitter:
        K[np.diag_indices_from(K)] += jitter
    return K


def kernel_diag(spec, inputs):
    """The vector of k(a, a) values (prior variances) for each input."""
    _check_inputs(spec, inputs)
    fam = spec.family
    p = spec.params
    n = len(inputs)
    if fam in ("translation", "periodic1d", "separable_euler", "quaternion",
               "geodesic", "view_iso", "view_aniso"):
        return np.full(n, p["magnitude"])
    if fam == "linear_extrinsics":
        return np.array([
            p["magnitude"] * (np.dot(pose.p, pose.p) + np.sum(pose.R * pose.R))
            for pose in inputs
        ])
    if fam == "object_view":
        return np.array([p["magnitude"] * np.dot(x, x) for x, _ in inputs])
    if fam == "pose_product":
        return kernel_diag(spec.parts["translation"], inputs) * kernel_diag(
            spec.parts["orientation"], inputs
        )
    raise ValueError(f"unknown kernel family {fam!r}")


def _check_inputs(spec, inputs):
    if spec.family == "object_view":
        for item in inputs:
            if not (isinstance(item, tuple) and len(item) == 2):
                raise ValueError(
                    "object_view inputs must be (feature vector, rotation matrix) pairs"
                )
        dims = {np.asarray(x).shape[-1] for x, _ in inputs}
        if len(dims) > 1:
            raise ValueError(f"feature dimensions differ across inputs: {sorted(dims)}")
    else:
        for item in inputs:
            if not isinstance(item, Pose):
                raise ValueError(
                    f"{spec.family} inputs must be Pose instances, got {type(item).__name__}"
                )
