# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same functions and signatures as _kernels_py."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef int[22][6] VE = [
    [2, 0, 0, 1, 0, 0], [2, 0, 0, 0, 1, 0], [2, 0, 0, 0, 0, 1], [2, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0],
    [0, 2, 0, 1, 0, 0], [0, 2, 0, 0, 1, 0], [0, 2, 0, 0, 0, 1], [0, 2, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0],
    [0, 0, 2, 1, 0, 0], [0, 0, 2, 0, 1, 0], [0, 0, 2, 0, 0, 1], [0, 0, 2, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1], [0, 0, 0, 0, 0, 0],
]


cdef inline double ipow(double x, int e) nogil:
    cdef double r = 1.0
    cdef int i
    for i in range(e):
        r *= x
    return r


cdef inline double det3(double* c, double* u, double* v) nogil:
    return (c[0] * (u[1] * v[2] - u[2] * v[1])
            - c[1] * (u[0] * v[2] - u[2] * v[0])
            + c[2] * (u[0] * v[1] - u[1] * v[0]))


cdef void quad_form_row(double* c, double[3][3] U, double[3][3] V, double* out) nogil:
    # U[j] and V[l] are columns over the three equations
    cdef double G[3][3]
    cdef int j, l
    for j in range(3):
        for l in range(3):
            G[j][l] = det3(c, U[j], V[l])
    out[0] = G[0][0]
    out[1] = G[1][1]
    out[2] = G[2][2]
    out[3] = G[0][1] + G[1][0]
    out[4] = G[0][2] + G[2][0]
    out[5] = G[1][2] + G[2][1]


cdef void fill_hidden(const double[:, ::1] k, double s3, double* C) nogil:
    cdef double p1[3]
    cdef double p2[3]
    cdef double p3[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double U[3][3]
    cdef double V[3][3]
    cdef int i
    for i in range(3):
        p1[i] = k[i, 4] * s3 + k[i, 6]
        p2[i] = k[i, 5] * s3 + k[i, 7]
        p3[i] = (k[i, 2] * s3 + k[i, 8]) * s3 + k[i, 9]
        k1[i] = k[i, 0]
        k2[i] = k[i, 1]
        C[6 * i + 0] = p3[i]
        C[6 * i + 1] = k[i, 0]
        C[6 * i + 2] = k[i, 1]
        C[6 * i + 3] = p1[i]
        C[6 * i + 4] = p2[i]
        C[6 * i + 5] = k[i, 3]
    # [s0^2, s1, s2]
    for i in range(3):
        U[0][i] = p1[i]; U[1][i] = k[i, 0]; U[2][i] = k[i, 3]
        V[0][i] = p2[i]; V[1][i] = 0.0; V[2][i] = k[i, 1]
    quad_form_row(p3, U, V, C + 18)
    # [s0, s1^2, s2]
    for i in range(3):
        U[0][i] = p3[i]; U[1][i] = p1[i]; U[2][i] = 0.0
        V[0][i] = p2[i]; V[1][i] = k[i, 3]; V[2][i] = k[i, 1]
    quad_form_row(k1, U, V, C + 24)
    # [s0, s1, s2^2]
    for i in range(3):
        U[0][i] = p3[i]; U[1][i] = 0.0; U[2][i] = p2[i]
        V[0][i] = p1[i]; V[1][i] = k[i, 0]; V[2][i] = k[i, 3]
    quad_form_row(k2, U, V, C + 30)


cdef double det6(double* A) nogil:
    # Gaussian elimination with partial pivoting, destroys A
    cdef int i, j, r, p
    cdef double d = 1.0, m, t, best
    for i in range(6):
        p = i
        best = fabs(A[6 * i + i])
        for r in range(i + 1, 6):
            if fabs(A[6 * r + i]) > best:
                best = fabs(A[6 * r + i])
                p = r
        if best == 0.0:
            return 0.0
        if p != i:
            for j in range(6):
                t = A[6 * i + j]; A[6 * i + j] = A[6 * p + j]; A[6 * p + j] = t
            d = -d
        d *= A[6 * i + i]
        for r in range(i + 1, 6):
            m = A[6 * r + i] / A[6 * i + i]
            for j in range(i + 1, 6):
                A[6 * r + j] -= m * A[6 * i + j]
    return d


def hidden_matrix(const double[:, ::1] K, double s3):
    out = np.empty((6, 6))
    cdef double[:, ::1] o = out
    fill_hidden(K, s3, &o[0, 0])
    return out


def hidden_det_samples(const double[:, ::1] K, const double[::1] nodes):
    cdef Py_ssize_t n = nodes.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double C[36]
    with nogil:
        for i in range(n):
            fill_hidden(K, nodes[i], C)
            o[i] = det6(C)
    return out


def cost_terms(const double[:, ::1] K22, x_in):
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=float)
    cdef double v[22]
    cdef double J[22][6]
    cdef double Kv[22]
    cdef double KJ[22][6]
    cdef int m, k, l, n, e, ek, el
    cdef double prod, val = 0.0
    grad_a = np.zeros(6)
    hess_a = np.zeros((6, 6))
    cdef double[::1] grad = grad_a
    cdef double[:, ::1] hess = hess_a
    cdef double[6] pw0
    with nogil:
        for m in range(22):
            prod = 1.0
            for k in range(6):
                prod *= ipow(x[k], VE[m][k])
            v[m] = prod
            for k in range(6):
                ek = VE[m][k]
                if ek == 0:
                    J[m][k] = 0.0
                    continue
                prod = ek
                for n in range(6):
                    e = VE[m][n] - (1 if n == k else 0)
                    prod *= ipow(x[n], e)
                J[m][k] = prod
        for m in range(22):
            Kv[m] = 0.0
            for n in range(22):
                Kv[m] += K22[m, n] * v[n]
            val += v[m] * Kv[m]
            for k in range(6):
                KJ[m][k] = 0.0
        for m in range(22):
            for n in range(22):
                for k in range(6):
                    KJ[m][k] += K22[m, n] * J[n][k]
        for k in range(6):
            for m in range(22):
                grad[k] += 2.0 * J[m][k] * Kv[m]
        for k in range(6):
            for l in range(6):
                prod = 0.0
                for m in range(22):
                    prod += J[m][k] * KJ[m][l]
                hess[k, l] = 2.0 * prod
        # second derivatives of the monomials
        for m in range(22):
            if Kv[m] == 0.0:
                continue
            for k in range(6):
                ek = VE[m][k]
                if ek == 0:
                    continue
                for l in range(6):
                    el = VE[m][l] - (1 if l == k else 0)
                    if el <= 0:
                        continue
                    prod = ek * el
                    for n in range(6):
                        e = VE[m][n] - (1 if n == k else 0) - (1 if n == l else 0)
                        prod *= ipow(x[n], e)
                    hess[k, l] += 2.0 * Kv[m] * prod
    return val, grad_a, hess_a


def inlier_mask(const double[:, ::1] plane_x, const double[:, ::1] plane_n, const double[:, ::1] plane_y,
                const double[:, ::1] line_x, const double[:, ::1] line_d, const double[:, ::1] line_y,
                const double[:, ::1] point_x, const double[:, ::1] point_y,
                const double[:, ::1] R, const double[::1] t,
                double thr_plane, double thr_line, double thr_point):
    cdef Py_ssize_t npl = plane_x.shape[0], nl = line_x.shape[0], npt = point_x.shape[0]
    out = np.empty(npl + nl + npt, dtype=bool)
    cdef cnp.npy_bool[::1] o = out
    cdef Py_ssize_t i
    cdef int r
    cdef double e[3]
    cdef double dot, acc
    cdef double tl2 = thr_line * thr_line, tp2 = thr_point * thr_point
    with nogil:
        for i in range(npl):
            dot = 0.0
            for r in range(3):
                e[r] = R[r, 0] * plane_x[i, 0] + R[r, 1] * plane_x[i, 1] + R[r, 2] * plane_x[i, 2] + t[r] - plane_y[i, r]
                dot += plane_n[i, r] * e[r]
            o[i] = fabs(dot) <= thr_plane
        for i in range(nl):
            dot = 0.0
            for r in range(3):
                e[r] = R[r, 0] * line_x[i, 0] + R[r, 1] * line_x[i, 1] + R[r, 2] * line_x[i, 2] + t[r] - line_y[i, r]
                dot += line_d[i, r] * e[r]
            acc = 0.0
            for r in range(3):
                e[r] -= dot * line_d[i, r]
                acc += e[r] * e[r]
            o[npl + i] = acc <= tl2
        for i in range(npt):
            acc = 0.0
            for r in range(3):
                e[r] = R[r, 0] * point_x[i, 0] + R[r, 1] * point_x[i, 1] + R[r, 2] * point_x[i, 2] + t[r] - point_y[i, r]
                acc += e[r] * e[r]
            o[npl + nl + i] = acc <= tp2
    return out
