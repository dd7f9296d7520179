import numpy as np
import pytest

from posegp import Pose, default_spec, gram_matrix, random_rotation


@pytest.fixture(scope="session", autouse=True)
def warm_backend():
    """Touch every pairwise kernel once so timed tests never pay JIT latency."""
    rng = np.random.default_rng(0)
    poses = [Pose(rng.standard_normal(3), random_rotation(k)) for k in range(3)]
    for family in (
        "translation",
        "periodic1d",
        "separable_euler",
        "quaternion",
        "geodesic",
        "view_iso",
        "view_aniso",
        "pose_product",
        "linear_extrinsics",
    ):
        gram_matrix(default_spec(family), poses, 0.0)
    pairs = [(rng.standard_normal(2), random_rotation(10 + k)) for k in range(3)]
    gram_matrix(default_spec("object_view"), pairs, 0.0)
