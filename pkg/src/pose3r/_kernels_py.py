"""Pure-Python (numpy) reference implementations of the compiled kernels.

The Cython module _kernels exposes the same functions with the same
signatures; kernels.py picks one at import time.
"""
import numpy as np

# exponents of v over (s1, s2, s3, t1, t2, t3), see lsq.RATIONAL_MONOMIALS
V_EXP = np.array([
    [2, 0, 0, 1, 0, 0], [2, 0, 0, 0, 1, 0], [2, 0, 0, 0, 0, 1], [2, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0],
    [0, 2, 0, 1, 0, 0], [0, 2, 0, 0, 1, 0], [0, 2, 0, 0, 0, 1], [0, 2, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0],
    [0, 0, 2, 1, 0, 0], [0, 0, 2, 0, 1, 0], [0, 0, 2, 0, 0, 1], [0, 0, 2, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0],
], dtype=np.int64)


def _quad_form_row(c, U, V):
    # det[c, U z, V z] as coefficients over [z0^2, z1^2, z2^2, z0z1, z0z2, z1z2]
    G = np.einsum("i,ijl->jl", c, np.cross(U[:, :, None], V[:, None, :], axis=0))
    return np.array([G[0, 0], G[1, 1], G[2, 2], G[0, 1] + G[1, 0], G[0, 2] + G[2, 0], G[1, 2] + G[2, 1]])


def hidden_matrix(K, s3):
    k = K
    p1 = k[:, 4] * s3 + k[:, 6]
    p2 = k[:, 5] * s3 + k[:, 7]
    p3 = (k[:, 2] * s3 + k[:, 8]) * s3 + k[:, 9]
    z = np.zeros(3)
    C = np.empty((6, 6))
    C[:3] = np.stack([p3, k[:, 0], k[:, 1], p1, p2, k[:, 3]], axis=1)
    # groupings [s0^2, s1, s2], [s0, s1^2, s2], [s0, s1, s2^2]
    C[3] = _quad_form_row(p3, np.stack([p1, k[:, 0], k[:, 3]], 1), np.stack([p2, z, k[:, 1]], 1))
    C[4] = _quad_form_row(k[:, 0], np.stack([p3, p1, z], 1), np.stack([p2, k[:, 3], k[:, 1]], 1))
    C[5] = _quad_form_row(k[:, 1], np.stack([p3, z, p2], 1), np.stack([p1, k[:, 0], k[:, 3]], 1))
    return C


def hidden_det_samples(K, nodes):
    return np.array([np.linalg.det(hidden_matrix(K, x)) for x in nodes])


def cost_terms(K22, x):
    """Value, gradient and Hessian of v(x)^T K22 v(x), x = (s1, s2, s3, t1, t2, t3)."""
    x = np.asarray(x, dtype=float)
    E = V_EXP
    P = x[None, :] ** np.maximum(E, 0)
    v = np.prod(P, axis=1)
    J = np.zeros((22, 6))
    H = np.zeros((22, 6, 6))
    for k in range(6):
        Ek = E.copy()
        Ek[:, k] -= 1
        m = Ek[:, k] >= 0
        J[m, k] = E[m, k] * np.prod(x[None, :] ** np.maximum(Ek[m], 0), axis=1)
        for l in range(6):
            Ekl = Ek.copy()
            Ekl[:, l] -= 1
            mm = m & (Ekl[:, l] >= 0)
            H[mm, k, l] = E[mm, k] * Ek[mm, l] * np.prod(x[None, :] ** np.maximum(Ekl[mm], 0), axis=1)
    Kv = K22 @ v
    val = v @ Kv
    grad = 2.0 * J.T @ Kv
    hess = 2.0 * J.T @ K22 @ J + 2.0 * np.einsum("m,mkl->kl", Kv, H)
    return val, grad, hess


def inlier_mask(plane_x, plane_n, plane_y, line_x, line_d, line_y, point_x, point_y,
                R, t, thr_plane, thr_line, thr_point):
    """Boolean inlier flags per correspondence, planes then lines then points."""
    e = plane_x @ R.T + t - plane_y
    rp = np.abs(np.einsum("ij,ij->i", plane_n, e))
    e = line_x @ R.T + t - line_y
    e = e - line_d * np.einsum("ij,ij->i", line_d, e)[:, None]
    rl = np.einsum("ij,ij->i", e, e)
    e = point_x @ R.T + t - point_y
    rq = np.einsum("ij,ij->i", e, e)
    return np.concatenate([rp <= thr_plane, rl <= thr_line * thr_line, rq <= thr_point * thr_point])
