"""Cayley-Gibbs-Rodriguez (CGR) rotation parameters.

A CGR vector s encodes a rotation of angle theta about s/|s| with
|s| = tan(theta/2). It is the quaternion vector part divided by the scalar
part, so rotations of 180 degrees have no finite representation.
"""
import numpy as np

from .errors import SingularParameterizationError


def skew(v):
    """Cross-product matrix [v]x."""
    return np.array([[0.0, -v[2], v[1]],
                      [v[2], 0.0, -v[0]],
                      [-v[1], v[0], 0.0]])


def cgr_to_rotation(s):
    s = np.asarray(s, dtype=float)
    ss = s @ s
    R = (1.0 - ss) * np.eye(3) + 2.0 * skew(s) + 2.0 * np.outer(s, s)
    return R / (1.0 + ss)


def quat_to_rotation(q):
    """Rotation matrix of a (not necessarily unit) quaternion [w, x, y, z].

    The result is scaled by |q|^2, which is what the relaxed cost uses.
    """
    w, x, y, z = q
    return np.array([
        [w*w + x*x - y*y - z*z, 2*(x*y - w*z), 2*(x*z + w*y)],
        [2*(x*y + w*z), w*w - x*x + y*y - z*z, 2*(y*z - w*x)],
        [2*(x*z - w*y), 2*(y*z + w*x), w*w - x*x - y*y + z*z],
    ])


def rotation_to_quaternion(R):
    """Unit quaternion [w, x, y, z] with w >= 0 (Shepperd's branch choice)."""
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    d = np.array([tr, R[0, 0], R[1, 1], R[2, 2]])
    k = int(np.argmax(d))
    if k == 0:
        w = 0.5 * np.sqrt(max(1.0 + tr, 0.0))
        f = 0.25 / w
        q = np.array([w, (R[2, 1] - R[1, 2]) * f, (R[0, 2] - R[2, 0]) * f, (R[1, 0] - R[0, 1]) * f])
    elif k == 1:
        x = 0.5 * np.sqrt(max(1.0 + 2 * R[0, 0] - tr, 0.0))
        f = 0.25 / x
        q = np.array([(R[2, 1] - R[1, 2]) * f, x, (R[0, 1] + R[1, 0]) * f, (R[0, 2] + R[2, 0]) * f])
    elif k == 2:
        y = 0.5 * np.sqrt(max(1.0 + 2 * R[1, 1] - tr, 0.0))
        f = 0.25 / y
        q = np.array([(R[0, 2] - R[2, 0]) * f, (R[0, 1] + R[1, 0]) * f, y, (R[1, 2] + R[2, 1]) * f])
    else:
        z = 0.5 * np.sqrt(max(1.0 + 2 * R[2, 2] - tr, 0.0))
        f = 0.25 / z
        q = np.array([(R[1, 0] - R[0, 1]) * f, (R[0, 2] + R[2, 0]) * f, (R[1, 2] + R[2, 1]) * f, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


def rotation_to_cgr(R):
    """Inverse of cgr_to_rotation.

    Raises SingularParameterizationError when trace(R) <= -1 + 1e-9, i.e. the
    rotation angle is within about 0.004 degrees of 180.
    """
    R = np.asarray(R, dtype=float)
    if np.trace(R) <= -1.0 + 1e-9:
        raise SingularParameterizationError("rotation angle too close to 180 degrees for CGR")
    q = rotation_to_quaternion(R)
    return q[1:] / q[0]


def axis_angle_to_rotation(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def rotation_angle(R):
    """Rotation angle in radians, accurate near 0 (uses atan2, not arccos)."""
    R = np.asarray(R, dtype=float)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return float(np.arctan2(0.5 * np.linalg.norm(v), 0.5 * (np.trace(R) - 1.0)))
