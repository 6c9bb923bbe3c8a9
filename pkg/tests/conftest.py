import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from pose3r.geometry import Pose


def random_pose(rng, max_angle_deg=170.0, t_range=10.0):
    while True:
        R = Rotation.random(random_state=rng.integers(2**31)).as_matrix()
        if np.degrees(np.arccos(np.clip((np.trace(R) - 1) / 2, -1, 1))) < max_angle_deg:
            return Pose(R, rng.uniform(-t_range, t_range, 3))


def planted_quadrics(rng, s=None):
    """Random 3x10 quadric coefficients with a planted common root s."""
    from pose3r.polysys import quadric_monomials

    if s is None:
        s = rng.uniform(-1, 1, 3)
    K = rng.standard_normal((3, 10))
    K[:, 9] -= K @ quadric_monomials(s)
    return K, s


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
