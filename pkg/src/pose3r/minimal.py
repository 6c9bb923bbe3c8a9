"""Unified minimal solver for the seven minimal correspondence mixes.

Substituting y = (1 + s^T s) t turns every residual row into an equation
that is quadratic in s and linear in y. Six equations are split into two
triples; the first triple gives y in terms of s, and substituting into the
second leaves three quadrics in s, solved by polysys.solve_three_quadrics.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .cgr import cgr_to_rotation
from .errors import DegenerateError, UnsupportedConfigurationError
from .geometry import Pose, general_row_arrays, residual_magnitudes
from .polysys import quadric_monomials, solve_three_quadrics

# (n_points, n_lines, n_planes) -> tag
CONFIGS = {
    (0, 0, 6): "Pt0L0Pl6",
    (0, 1, 4): "Pt0L1Pl4",
    (1, 0, 3): "Pt1L0Pl3",
    (0, 2, 2): "Pt0L2Pl2",
    (1, 1, 1): "Pt1L1Pl1",
    (2, 0, 1): "Pt2L0Pl1",
    (0, 3, 0): "Pt0L3Pl0",
}
TAGS = {v: k for k, v in CONFIGS.items()}


@dataclass(frozen=True)
class MinimalConfig:
    n_points: int
    n_lines: int
    n_planes: int

    def __post_init__(self):
        if (self.n_points, self.n_lines, self.n_planes) not in CONFIGS:
            raise UnsupportedConfigurationError(
                f"no minimal solver for {self.n_points} points, {self.n_lines} lines, {self.n_planes} planes")

    @property
    def tag(self):
        return CONFIGS[(self.n_points, self.n_lines, self.n_planes)]

    @property
    def n_equations(self):
        return 3 * self.n_points + 3 * self.n_lines + self.n_planes

    @classmethod
    def from_tag(cls, tag):
        if tag not in TAGS:
            raise UnsupportedConfigurationError(f"unknown configuration {tag!r}")
        return cls(*TAGS[tag])

    @classmethod
    def of(cls, corrs):
        return cls(corrs.n_points, corrs.n_lines, corrs.n_planes)


@dataclass(frozen=True)
class MinimalEquationSet:
    """Rows C_all x(s) + A_all y = (1 + s^T s) r for every residual row."""
    C_all: np.ndarray
    A_all: np.ndarray
    config: MinimalConfig


def quadratic_rows(a, b, c):
    """Coefficients over [s1^2, s2^2, s3^2, s1s2, s1s3, s2s3, s1, s2, s3, 1]."""
    ab = np.einsum("ij,ij->i", a, b)
    bxa = np.cross(b, a)
    C = np.empty((len(c), 10))
    for i in range(3):
        C[:, i] = -ab + 2 * a[:, i] * b[:, i] + c
    C[:, 3] = 2 * (a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0])
    C[:, 4] = 2 * (a[:, 0] * b[:, 2] + a[:, 2] * b[:, 0])
    C[:, 5] = 2 * (a[:, 1] * b[:, 2] + a[:, 2] * b[:, 1])
    C[:, 6:9] = 2 * bxa
    C[:, 9] = ab + c
    return C


def build_minimal_equations(corrs):
    cfg = MinimalConfig.of(corrs)
    a, b, c = general_row_arrays(corrs)
    return MinimalEquationSet(quadratic_rows(a, b, c), a.copy(), cfg)


def _compressed_rows(eqs):
    """Rows with each line's three projector rows reduced to two.

    The projector I - d d^T has rank 2; its two unit singular directions span
    the same constraints. Returns (C, A, kind) with kind 0 plane, 1 line,
    2 point per row.
    """
    cfg = eqs.config
    C, A = eqs.C_all, eqs.A_all
    n_pl, n_l = cfg.n_planes, cfg.n_lines
    Cs, As, kinds = [C[:n_pl]], [A[:n_pl]], [np.zeros(n_pl, int)]
    for i in range(n_l):
        r = slice(n_pl + 3 * i, n_pl + 3 * i + 3)
        U, _, _ = np.linalg.svd(A[r])
        W = U[:, :2].T
        Cs.append(W @ C[r])
        As.append(W @ A[r])
        kinds.append(np.ones(2, int))
    p0 = n_pl + 3 * n_l
    Cs.append(C[p0:])
    As.append(A[p0:])
    kinds.append(np.full(len(C) - p0, 2))
    return np.concatenate(Cs), np.concatenate(As), np.concatenate(kinds)


def _sigma_min(A):
    return np.linalg.svd(A, compute_uv=False)[-1]


def select_six(eqs, config=None, max_cond=1e10):
    """Six equations split into two triples (C1, A1, C2, A2) with A1 best conditioned.

    For two points and a plane, the plane row is always kept together with the
    five point rows whose stacked A has the largest smallest singular value.
    """
    return _select(eqs, max_cond)[0]


def _select(eqs, max_cond=1e10):
    """select_six blocks plus the index of the dropped point row (or None)."""
    C, A, kinds = _compressed_rows(eqs)
    if len(C) < 6:
        raise DegenerateError("fewer than six independent equations")
    rows = np.arange(len(C))
    dropped = None
    if len(C) > 6:
        fixed = rows[kinds != 2]
        pts = rows[kinds == 2]
        best = None
        for drop in pts:
            sel = np.concatenate([fixed, pts[pts != drop]])
            sm = _sigma_min(A[sel])
            if best is None or sm > best[0] + 1e-14:
                best = (sm, sel, drop)
        rows, dropped = best[1], int(best[2])
    best = None
    for tri in itertools.combinations(range(6), 3):
        i1 = rows[list(tri)]
        sm = _sigma_min(A[i1])
        if best is None or sm > best[0] + 1e-14:
            best = (sm, i1)
    i1 = best[1]
    i2 = np.array([r for r in rows if r not in set(i1)])
    A1 = A[i1]
    sv = np.linalg.svd(A1, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > max_cond:
        raise DegenerateError("no well-conditioned split of the six equations")
    if dropped is not None:
        dropped -= int(np.sum(kinds != 2))
    return (C[i1], A1, C[i2], A[i2]), dropped


def _right_branch(corrs, pose, dropped):
    """For two points, the dropped coordinate of one point is only fixed up to
    a mirror image by the five kept rows. Keep the pose when that coordinate
    of R (x_k - x_j) agrees in sign with y_k - y_j, which holds on the true
    branch for any noise well below the point separation.
    """
    k, i = divmod(dropped, 3)
    j = 1 - k
    rdx = pose.R[i] @ (corrs.point_x[k] - corrs.point_x[j])
    dy = corrs.point_y[k, i] - corrs.point_y[j, i]
    return abs(rdx - dy) <= abs(rdx + dy)


def reduce_to_quadrics(blocks):
    """K = C2 - A2 A1^-1 C1 together with the map s -> y = -A1^-1 C1 x(s)."""
    C1, A1, C2, A2 = blocks
    Y = np.linalg.solve(A1, C1)
    return C2 - A2 @ Y, -Y


def solve_minimal(corrs, return_info=False, hidden=None):
    """All poses consistent with a minimal correspondence set (at most 8).

    With return_info, also returns a dict with the configuration tag, the
    largest residual magnitude of each pose over all correspondences and
    the number of real roots found.
    """
    eqs = build_minimal_equations(corrs)
    blocks, dropped = _select(eqs)
    K, Ymap = reduce_to_quadrics(blocks)
    sols = solve_three_quadrics(K, hidden=hidden)
    C6 = np.vstack([blocks[0], blocks[2]])
    A6 = np.vstack([blocks[1], blocks[3]])
    poses, resid = [], []
    for s in sols:
        x = quadric_monomials(s)
        y = Ymap @ x
        res = C6 @ x + A6 @ y
        scale = np.abs(C6) @ np.abs(x) + np.abs(A6) @ np.abs(y)
        if np.any(np.abs(res) > 1e-8 * np.maximum(scale, 1e-300)):
            continue
        t = y / (1.0 + s @ s)
        pose = Pose(cgr_to_rotation(s), t)
        if dropped is not None and not _right_branch(corrs, pose, dropped):
            continue
        poses.append(pose)
        resid.append(max(float(np.max(m, initial=0.0)) for m in residual_magnitudes(corrs, pose)))
    if return_info:
        return poses, dict(config=eqs.config.tag, max_residuals=resid, n_roots=len(sols))
    return poses
