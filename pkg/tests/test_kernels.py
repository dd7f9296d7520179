"""Kernel families, spec plumbing, Gram assembly, backend agreement."""

import json
import math

import numpy as np
import pytest

from posegp import (
    Pose,
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
    matrix_to_quat,
    normalize_quat,
    random_rotation,
    rot_axis,
)

ALL_FAMILIES = (
    "translation",
    "periodic1d",
    "separable_euler",
    "quaternion",
    "geodesic",
    "view_iso",
    "view_aniso",
    "pose_product",
    "object_view",
    "linear_extrinsics",
)


def random_poses(n, seed):
    rng = np.random.default_rng(seed)
    return [
        Pose(2.0 * rng.standard_normal(3), random_rotation(1000 * seed + k))
        for k in range(n)
    ]


def spec_inputs(family, n, seed):
    if family == "object_view":
        rng = np.random.default_rng(seed)
        return [
            (rng.standard_normal(4), random_rotation(1000 * seed + k))
            for k in range(n)
        ]
    return random_poses(n, seed)


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------


def test_translation_rbf_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p1, p2 = rng.standard_normal(3), rng.standard_normal(3)
        sig2, ell = rng.uniform(0.1, 3.0, size=2)
        expected = sig2 * math.exp(-np.sum((p1 - p2) ** 2) / (2.0 * ell * ell))
        assert k_translation(p1, p2, sig2, ell) == pytest.approx(expected, rel=1e-14)


def test_periodic_formula_and_periodicity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b = rng.uniform(-10, 10, size=2)
        ell = rng.uniform(0.1, 3.0)
        expected = math.exp(-2.0 * math.sin(0.5 * (a - b)) ** 2 / ell**2)
        assert k_periodic_1d(a, b, ell) == pytest.approx(expected, rel=1e-14)
        assert k_periodic_1d(a + 2 * math.pi, b, ell) == pytest.approx(
            k_periodic_1d(a, b, ell), abs=1e-12
        )


def test_separable_is_product_of_periodic_factors():
    rng = np.random.default_rng(2)
    for _ in range(50):
        t1 = rng.uniform(-math.pi, math.pi, size=3)
        t2 = rng.uniform(-math.pi, math.pi, size=3)
        ells = rng.uniform(0.2, 2.0, size=3)
        expected = np.prod([k_periodic_1d(t1[j], t2[j], ells[j]) for j in range(3)])
        assert k_separable_euler(t1, t2, ells) == pytest.approx(expected, rel=1e-13)


def test_view_iso_reduces_to_periodic_on_one_axis():
    rng = np.random.default_rng(3)
    for axis in "xyz":
        for _ in range(20):
            a, b = rng.uniform(-math.pi, math.pi, size=2)
            ell = rng.uniform(0.1, 3.0)
            kv = k_view_iso(rot_axis(axis, a), rot_axis(axis, b), 1.0, ell)
            assert kv == pytest.approx(k_periodic_1d(a, b, ell), abs=1e-13)


def test_view_aniso_single_axis_oracle():
    # R1 = I, R2 = R_z(theta), Lambda = diag(la, lb, lc):
    # tr(Lambda - R1^T Lambda R2) = (la + lb)(1 - cos theta)
    rng = np.random.default_rng(4)
    for _ in range(50):
        theta = rng.uniform(-math.pi, math.pi)
        ells = rng.uniform(0.3, 3.0, size=3)
        la, lb = ells[0] ** -2.0, ells[1] ** -2.0
        expected = math.exp(-0.5 * (la + lb) * (1.0 - math.cos(theta)))
        got = k_view_aniso(np.eye(3), rot_axis("z", theta), 1.0, ells)
        assert got == pytest.approx(expected, rel=1e-12)


def test_view_aniso_iso_reduction():
    rng = np.random.default_rng(5)
    for k in range(50):
        R1, R2 = random_rotation(2 * k), random_rotation(2 * k + 1)
        ell = rng.uniform(0.2, 3.0)
        iso = k_view_iso(R1, R2, 1.3, ell)
        aniso = k_view_aniso(R1, R2, 1.3, (ell, ell, ell))
        assert aniso == pytest.approx(iso, abs=1e-13)


def test_quat_kernel_double_cover_defect():
    rng = np.random.default_rng(6)
    q = normalize_quat(rng.standard_normal(4))
    assert k_quat(q, q, 1.0, 1.0) == 1.0
    assert k_quat(q, -q, 1.0, 1.0) == pytest.approx(math.exp(-8.0), rel=1e-12)


def test_geodesic_kernel_formula():
    R1, R2 = rot_axis("x", 0.4), rot_axis("x", 1.1)
    assert k_geodesic(R1, R2, 2.0, 0.5) == pytest.approx(
        2.0 * math.exp(-(0.7**2) / (2 * 0.25)), rel=1e-12
    )


def test_linear_extrinsics_oracle():
    poses = random_poses(6, 7)
    for a in poses:
        for b in poses:
            expected = 1.7 * (np.dot(a.p, b.p) + np.trace(a.R.T @ b.R))
            assert k_linear_extrinsics(a, b, 1.7) == pytest.approx(expected, rel=1e-12)


def test_object_view_oracle_and_dim_mismatch():
    rng = np.random.default_rng(8)
    x1, x2 = rng.standard_normal(5), rng.standard_normal(5)
    R1, R2 = random_rotation(0), random_rotation(1)
    ells = (1.0, 2.0, 0.7)
    expected = np.dot(x1, x2) * k_view_aniso(R1, R2, 1.0, ells) * 2.5
    assert k_object_view(x1, x2, R1, R2, ells, 2.5) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        k_object_view(x1, rng.standard_normal(4), R1, R2, ells, 1.0)


def test_k_pose_is_translation_times_orientation():
    spec = default_spec("pose_product", **{"translation.lengthscale": 0.8,
                                           "orientation.lengthscale": 1.4})
    a, b = random_poses(2, 9)
    kt = k_translation(a.p, b.p, 1.0, 0.8)
    ko = k_view_iso(a.R, b.R, 1.0, 1.4)
    assert k_pose(a, b, spec) == pytest.approx(kt * ko, rel=1e-13)
    with pytest.raises(ValueError):
        k_pose(a, b, default_spec("view_iso"))


# ---------------------------------------------------------------------------
# KernelSpec plumbing
# ---------------------------------------------------------------------------


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        KernelSpec("warp", {})
    with pytest.raises(ValueError):
        KernelSpec("view_iso", {"magnitude": 1.0})  # missing lengthscale
    with pytest.raises(ValueError):
        KernelSpec("view_iso", {"magnitude": 1.0, "lengthscale": 1.0, "gamma": 2.0})
    with pytest.raises(ValueError):
        KernelSpec("view_iso", {"magnitude": -1.0, "lengthscale": 1.0})
    with pytest.raises(ValueError):
        KernelSpec("view_iso", {"magnitude": np.nan, "lengthscale": 1.0})
    with pytest.raises(ValueError):
        KernelSpec("pose_product", {}, {"translation": default_spec("translation")})
    with pytest.raises(ValueError):
        KernelSpec(
            "pose_product",
            {},
            {
                "translation": default_spec("translation"),
                "orientation": default_spec("translation"),
            },
        )


def test_spec_does_not_alias_caller_dict():
    params = {"magnitude": 2, "lengthscale": 1.0}
    spec = KernelSpec("view_iso", params)
    params["magnitude"] = -5.0
    assert spec.get_param("magnitude") == 2.0


def test_param_addressing():
    spec = default_spec("pose_product")
    assert set(spec.param_names()) == {
        "translation.magnitude",
        "translation.lengthscale",
        "orientation.magnitude",
        "orientation.lengthscale",
    }
    spec2 = spec.with_param("orientation.lengthscale", 0.25)
    assert spec2.get_param("orientation.lengthscale") == 0.25
    assert spec.get_param("orientation.lengthscale") == 1.0
    with pytest.raises(KeyError):
        spec.get_param("orientation.gamma")
    with pytest.raises(KeyError):
        spec.with_param("rotation.lengthscale", 1.0)


def test_json_roundtrip_all_families():
    for family in ALL_FAMILIES:
        spec = default_spec(family)
        doc = spec.to_json_dict()
        # must survive a real serialize/parse cycle
        rebuilt = KernelSpec.from_json_dict(json.loads(json.dumps(doc)))
        assert rebuilt == spec


def test_json_defaults_and_rejections():
    spec = KernelSpec.from_json_dict({"family": "view_iso"})
    assert spec.params == {"magnitude": 1.0, "lengthscale": 1.0}
    spec = KernelSpec.from_json_dict({"family": "view_iso", "params": {"lengthscale": 2.0}})
    assert spec.params == {"magnitude": 1.0, "lengthscale": 2.0}
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict({"family": "view_iso", "extra": 1})
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict({"family": "view_iso", "params": {"gamma": 1.0}})
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict({"family": "view_iso", "params": {"magnitude": True}})
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict({"params": {}})
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict({"family": "pose_product"})  # missing parts
    with pytest.raises(ValueError):
        KernelSpec.from_json_dict([1, 2])


# ---------------------------------------------------------------------------
# Gram assembly
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_gram_symmetric_with_consistent_diag(family):
    inputs = spec_inputs(family, 12, 11)
    spec = default_spec(family)
    K = gram_matrix(spec, inputs, 0.0)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_allclose(np.diag(K), kernel_diag(spec, inputs), atol=1e-12)


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_gram_matches_cross_matrix(family):
    inputs = spec_inputs(family, 8, 12)
    spec = default_spec(family)
    K = gram_matrix(spec, inputs, 0.0)
    C = cross_matrix(spec, inputs, inputs)
    np.testing.assert_allclose(K, C, atol=1e-15)


def test_gram_jitter_and_single_input():
    poses = random_poses(1, 13)
    K = gram_matrix(default_spec("view_iso"), poses, 0.0)
    assert K.shape == (1, 1) and K[0, 0] == 1.0
    K = gram_matrix(default_spec("view_iso"), poses, 0.5)
    assert K[0, 0] == 1.5
    with pytest.raises(ValueError):
        gram_matrix(default_spec("view_iso"), [], 0.0)
    with pytest.raises(ValueError):
        gram_matrix(default_spec("view_iso"), poses, -1e-3)


def test_gram_entries_match_scalar_kernels():
    poses = random_poses(6, 14)
    K = gram_matrix(default_spec("view_iso", lengthscale=0.9), poses, 0.0)
    for i in range(6):
        for j in range(6):
            expected = k_view_iso(poses[i].R, poses[j].R, 1.0, 0.9)
            assert K[i, j] == pytest.approx(expected, abs=1e-13)
    spec = default_spec("pose_product")
    K = gram_matrix(spec, poses, 0.0)
    for i in range(6):
        for j in range(6):
            assert K[i, j] == pytest.approx(k_pose(poses[i], poses[j], spec), abs=1e-13)


def test_gram_rejects_wrong_input_kind():
    with pytest.raises(ValueError):
        gram_matrix(default_spec("view_iso"), [np.eye(3)], 0.0)
    with pytest.raises(ValueError):
        gram_matrix(default_spec("object_view"), random_poses(2, 15), 0.0)
    mixed = [
        (np.ones(3), random_rotation(0)),
        (np.ones(2), random_rotation(1)),
    ]
    with pytest.raises(ValueError):
        gram_matrix(default_spec("object_view"), mixed, 0.0)


def test_gram_deterministic_repeat():
    poses = random_poses(20, 16)
    spec = default_spec("pose_product")
    np.testing.assert_array_equal(
        gram_matrix(spec, poses, 1e-8), gram_matrix(spec, poses, 1e-8)
    )


def test_psd_smoke():
    poses = random_poses(30, 17)
    for family in ("view_iso", "view_aniso", "pose_product", "linear_extrinsics"):
        K = gram_matrix(default_spec(family), poses, 0.0)
        assert np.linalg.eigvalsh(K)[0] >= -1e-8


# ---------------------------------------------------------------------------
# backend agreement
# ---------------------------------------------------------------------------


def test_backends_agree():
    numba = pytest.importorskip("numba")
    from posegp import _pairwise_numba as nb
    from posegp import _pairwise_numpy as npimpl

    rng = np.random.default_rng(18)
    P1, P2 = rng.standard_normal((7, 3)), rng.standard_normal((9, 3))
    X1, X2 = rng.standard_normal((7, 4)), rng.standard_normal((9, 4))
    R1 = np.array([random_rotation(k) for k in range(7)])
    R2 = np.array([random_rotation(50 + k) for k in range(9)])
    Q1 = np.array([matrix_to_quat(R) for R in R1])
    Q2 = np.array([matrix_to_quat(R) for R in R2])
    A1, A2 = rng.uniform(-math.pi, math.pi, 7), rng.uniform(-math.pi, math.pi, 9)
    E1 = rng.uniform(-math.pi, math.pi, (7, 3))
    E2 = rng.uniform(-math.pi, math.pi, (9, 3))
    w = rng.uniform(0.3, 2.0, 3)
    ells = rng.uniform(0.3, 2.0, 3)

    cases = [
        ("sqdist", (P1, P2)),
        ("dot", (X1, X2)),
        ("rot_frob2", (R1, R2)),
        ("rot_frob2_weighted", (R1, R2, w)),
        ("rot_dot", (R1, R2)),
        ("quat_dist", (Q1, Q2)),
        ("periodic_arg", (A1, A2, 0.7)),
        ("euler_arg", (E1, E2, ells)),
    ]
    for name, args in cases:
        a = getattr(npimpl, name)(*args)
        b = getattr(nb, name)(*args)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13, err_msg=name)
