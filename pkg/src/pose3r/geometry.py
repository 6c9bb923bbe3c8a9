"""Correspondence types, residuals, the unified residual row and error metrics.

Every residual component can be written as a row

    r = a^T R b + a^T t + c

with a point-to-plane correspondence contributing one row and point-to-line and
point-to-point correspondences contributing three rows each. Rows are ordered
planes first, then lines (rows of I - d d^T in order), then points (rows of I).
"""
from dataclasses import dataclass

import numpy as np

from .cgr import cgr_to_rotation, rotation_angle
from .errors import DegenerateMetricError, InvalidInputError

UNIT_TOL = 1e-12
UNIT_SNAP = 1e-6
ORTHO_TOL = 1e-9


def _vec3(v, name):
    v = np.array(v, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise InvalidInputError(f"{name} must have 3 components, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite components")
    v.flags.writeable = False
    return v


def _unit_rows(V, name):
    """Normalize rows within UNIT_SNAP of unit norm, reject the rest."""
    V = np.array(V, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(V)):
        raise InvalidInputError(f"{name} has non-finite components")
    nrm = np.linalg.norm(V, axis=1)
    bad = np.abs(nrm - 1.0) > UNIT_SNAP
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidInputError(f"{name}[{i}] has norm {nrm[i]:.9g}, expected unit length")
    off = np.abs(nrm - 1.0) > UNIT_TOL
    if np.any(off):
        V[off] /= nrm[off, None]
    return V


def _points(V, name):
    V = np.array(V, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(V)):
        raise InvalidInputError(f"{name} has non-finite components")
    return V


@dataclass(frozen=True)
class Pose:
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise InvalidInputError("R must be a finite 3x3 matrix")
        if np.abs(R @ R.T - np.eye(3)).max() > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise InvalidInputError("R is not a rotation matrix")
        R.flags.writeable = False
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", _vec3(self.t, "t"))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_cgr(cls, s, t):
        return cls(cgr_to_rotation(s), t)

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.R.T + self.t

    def inverse(self):
        return Pose(self.R.T, -self.R.T @ self.t)

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.t
        return T


@dataclass(frozen=True)
class PointToPlane:
    """Point x (frame 1) lies on the plane with normal n through y (frame 2)."""
    x: np.ndarray
    n: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec3(self.x, "x"))
        object.__setattr__(self, "n", _vec3(_unit_rows(self.n, "n")[0], "n"))
        object.__setattr__(self, "y", _vec3(self.y, "y"))


@dataclass(frozen=True)
class PointToLine:
    """Point x (frame 1) lies on the line with direction d through y (frame 2)."""
    x: np.ndarray
    d: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec3(self.x, "x"))
        object.__setattr__(self, "d", _vec3(_unit_rows(self.d, "d")[0], "d"))
        object.__setattr__(self, "y", _vec3(self.y, "y"))


@dataclass(frozen=True)
class PointToPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec3(self.x, "x"))
        object.__setattr__(self, "y", _vec3(self.y, "y"))


@dataclass(frozen=True)
class GeneralResidual:
    a: np.ndarray
    b: np.ndarray
    c: float

    def evaluate(self, pose):
        return float(self.a @ pose.R @ self.b + self.a @ pose.t + self.c)


class CorrespondenceSet:
    """Typed correspondence collections stored as (n, 3) arrays.

    Construct from element lists, or with from_arrays() for large inputs.
    The element lists are rebuilt lazily on attribute access.
    """

    def __init__(self, planes=(), lines=(), points=()):
        planes, lines, points = list(planes), list(lines), list(points)
        for p in planes:
            if not isinstance(p, PointToPlane):
                raise InvalidInputError("planes must hold PointToPlane")
        for p in lines:
            if not isinstance(p, PointToLine):
                raise InvalidInputError("lines must hold PointToLine")
        for p in points:
            if not isinstance(p, PointToPoint):
                raise InvalidInputError("points must hold PointToPoint")
        self._set(
            np.array([p.x for p in planes]).reshape(-1, 3),
            np.array([p.n for p in planes]).reshape(-1, 3),
            np.array([p.y for p in planes]).reshape(-1, 3),
            np.array([p.x for p in lines]).reshape(-1, 3),
            np.array([p.d for p in lines]).reshape(-1, 3),
            np.array([p.y for p in lines]).reshape(-1, 3),
            np.array([p.x for p in points]).reshape(-1, 3),
            np.array([p.y for p in points]).reshape(-1, 3),
        )

    @classmethod
    def from_arrays(cls, plane_x=None, plane_n=None, plane_y=None,
                    line_x=None, line_d=None, line_y=None,
                    point_x=None, point_y=None):
        def arr(v, name):
            return _points(np.empty((0, 3)) if v is None else v, name)

        def unit(v, name):
            return _unit_rows(np.empty((0, 3)) if v is None else v, name)

        self = cls.__new__(cls)
        self._set(arr(plane_x, "plane_x"), unit(plane_n, "plane_n"), arr(plane_y, "plane_y"),
                  arr(line_x, "line_x"), unit(line_d, "line_d"), arr(line_y, "line_y"),
                  arr(point_x, "point_x"), arr(point_y, "point_y"))
        return self

    def _set(self, px, pn, py, lx, ld, ly, qx, qy):
        groups = [(px, pn, py), (lx, ld, ly), (qx, qy)]
        for g in groups:
            if len({len(v) for v in g}) != 1:
                raise InvalidInputError("array lengths within a correspondence kind differ")
        for v in (px, pn, py, lx, ld, ly, qx, qy):
            v.flags.writeable = False
        self.plane_x, self.plane_n, self.plane_y = px, pn, py
        self.line_x, self.line_d, self.line_y = lx, ld, ly
        self.point_x, self.point_y = qx, qy

    @property
    def n_planes(self):
        return len(self.plane_x)

    @property
    def n_lines(self):
        return len(self.line_x)

    @property
    def n_points(self):
        return len(self.point_x)

    @property
    def counts(self):
        return self.n_planes, self.n_lines, self.n_points

    @property
    def effective_count(self):
        return self.n_planes + 2 * self.n_lines + 3 * self.n_points

    @property
    def n_rows(self):
        return self.n_planes + 3 * self.n_lines + 3 * self.n_points

    @property
    def planes(self):
        return [PointToPlane(*v) for v in zip(self.plane_x, self.plane_n, self.plane_y)]

    @property
    def lines(self):
        return [PointToLine(*v) for v in zip(self.line_x, self.line_d, self.line_y)]

    @property
    def points(self):
        return [PointToPoint(*v) for v in zip(self.point_x, self.point_y)]

    def subset(self, planes=(), lines=(), points=()):
        pi, li, qi = (np.asarray(i, dtype=int).reshape(-1) for i in (planes, lines, points))
        out = CorrespondenceSet.__new__(CorrespondenceSet)
        out._set(self.plane_x[pi], self.plane_n[pi], self.plane_y[pi],
                 self.line_x[li], self.line_d[li], self.line_y[li],
                 self.point_x[qi], self.point_y[qi])
        return out

    def __add__(self, other):
        out = CorrespondenceSet.__new__(CorrespondenceSet)
        cat = np.concatenate
        out._set(cat([self.plane_x, other.plane_x]), cat([self.plane_n, other.plane_n]),
                 cat([self.plane_y, other.plane_y]), cat([self.line_x, other.line_x]),
                 cat([self.line_d, other.line_d]), cat([self.line_y, other.line_y]),
                 cat([self.point_x, other.point_x]), cat([self.point_y, other.point_y]))
        return out

    def __repr__(self):
        return f"CorrespondenceSet(planes={self.n_planes}, lines={self.n_lines}, points={self.n_points})"


def residual_plane(corr, pose):
    return float(corr.n @ (pose.R @ corr.x + pose.t - corr.y))


def residual_line(corr, pose):
    e = pose.R @ corr.x + pose.t - corr.y
    return e - corr.d * (corr.d @ e)


def residual_point(corr, pose):
    return pose.R @ corr.x + pose.t - corr.y


def residual_arrays(corrs, pose):
    """Vectorized residuals: (plane scalars, line 3-vectors, point 3-vectors)."""
    R, t = pose.R, pose.t
    rp = np.einsum("ij,ij->i", corrs.plane_n, corrs.plane_x @ R.T + t - corrs.plane_y)
    e = corrs.line_x @ R.T + t - corrs.line_y
    rl = e - corrs.line_d * np.einsum("ij,ij->i", corrs.line_d, e)[:, None]
    rq = corrs.point_x @ R.T + t - corrs.point_y
    return rp, rl, rq


def residual_magnitudes(corrs, pose):
    """Per-correspondence |r_plane|, |r_line|, |r_point| as three arrays."""
    rp, rl, rq = residual_arrays(corrs, pose)
    return np.abs(rp), np.linalg.norm(rl, axis=1), np.linalg.norm(rq, axis=1)


def general_row_arrays(corrs):
    """(a, b, c) of every residual row as arrays of shape (m,3), (m,3), (m,)."""
    n_pl, n_l, n_p = corrs.counts
    # plane rows
    a_pl = corrs.plane_n
    b_pl = corrs.plane_x
    c_pl = -np.einsum("ij,ij->i", corrs.plane_n, corrs.plane_y)
    # line rows: rows of I - d d^T
    d = corrs.line_d
    P = np.eye(3)[None] - d[:, :, None] * d[:, None, :]
    a_l = P.reshape(-1, 3)
    b_l = np.repeat(corrs.line_x, 3, axis=0)
    c_l = -np.einsum("kij,kj->ki", P, corrs.line_y).reshape(-1)
    # point rows: rows of I
    a_p = np.tile(np.eye(3), (n_p, 1))
    b_p = np.repeat(corrs.point_x, 3, axis=0)
    c_p = -corrs.point_y.reshape(-1)
    a = np.concatenate([a_pl, a_l, a_p]).reshape(-1, 3)
    b = np.concatenate([b_pl, b_l, b_p]).reshape(-1, 3)
    c = np.concatenate([c_pl, c_l, c_p])
    return a, b, c


def to_general_rows(corrs):
    a, b, c = general_row_arrays(corrs)
    return [GeneralResidual(a[i].copy(), b[i].copy(), float(c[i])) for i in range(len(c))]


def evaluate_rows(a, b, c, R, t):
    return np.einsum("ij,ij->i", a, b @ R.T) + a @ t + c


def cost(corrs, pose):
    rp, rl, rq = residual_arrays(corrs, pose)
    return float(rp @ rp + np.sum(rl * rl) + np.sum(rq * rq))


def rotation_error_deg(R_est, R_gt):
    R_est = np.asarray(R_est, dtype=float)
    R_gt = np.asarray(R_gt, dtype=float)
    return float(np.degrees(rotation_angle(R_gt.T @ R_est)))


def translation_error_rel(t_est, t_gt):
    t_gt = np.asarray(t_gt, dtype=float)
    ng = np.linalg.norm(t_gt)
    if ng == 0.0:
        raise DegenerateMetricError("relative translation error undefined for zero ground truth")
    return float(np.linalg.norm(t_gt - np.asarray(t_est, dtype=float)) / ng)


def pose_distance(p, q, scale=1.0):
    """Rotation angle (radians) plus translation distance divided by scale."""
    return rotation_angle(p.R.T @ q.R) + np.linalg.norm(p.t - q.t) / scale
