"""Least-squares pose from mixed correspondences.

Pipeline:
1. stack all residual rows as A u + B t, with u the quadratic monomials of
   xi = (rho, alpha, beta, gamma) treated as free unknowns
2. eliminate t in closed form, giving a quartic u^T Q u in xi
3. solve its four-cubic stationarity system for every real root
4. turn each root into (s, t) and refine with Newton on the exact
   CGR-parameterized cost, whose gradient is cleared of denominators
5. keep the converged local minimizers, ranked by cost
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .cgr import cgr_to_rotation, rotation_angle
from .errors import (InsufficientDataError, NoSolutionError, SingularParameterizationError,
                     TranslationDegenerateError)
from .geometry import Pose, general_row_arrays
from .polysys import CUBIC_MONOMIALS, CubicSystem4, solve_cubic_stationarity

log = logging.getLogger(__name__)

# u = [a^2, ab, ag, ar, b^2, bg, br, g^2, gr, r^2, 1] with exponents over (r, a, b, g)
U_EXP = np.array([(0, 2, 0, 0), (0, 1, 1, 0), (0, 1, 0, 1), (1, 1, 0, 0), (0, 0, 2, 0),
                  (0, 0, 1, 1), (1, 0, 1, 0), (0, 0, 0, 2), (1, 0, 0, 1), (2, 0, 0, 0),
                  (0, 0, 0, 0)])

# R(xi) = sum_m u_m M[m] for the (unnormalized) quaternion rotation
_M = np.zeros((10, 3, 3))
for _m, _entries in enumerate([
        [(0, 0, 1), (1, 1, -1), (2, 2, -1)],                 # a^2
        [(0, 1, 2), (1, 0, 2)],                              # ab
        [(0, 2, 2), (2, 0, 2)],                              # ag
        [(1, 2, -2), (2, 1, 2)],                             # ar
        [(0, 0, -1), (1, 1, 1), (2, 2, -1)],                 # b^2
        [(1, 2, 2), (2, 1, 2)],                              # bg
        [(0, 2, 2), (2, 0, -2)],                             # br
        [(0, 0, -1), (1, 1, -1), (2, 2, 1)],                 # g^2
        [(0, 1, -2), (1, 0, 2)],                             # gr
        [(0, 0, 1), (1, 1, 1), (2, 2, 1)]]):                 # r^2
    for _i, _j, _v in _entries:
        _M[_m, _i, _j] = _v
M_BASIS = _M
_MFLAT = _M.reshape(10, 9)
_MFLAT_T = np.ascontiguousarray(_MFLAT.T)
_BLOCK = 1024


def _gradient_tensor():
    # T[v, j, m, n]: coefficient of CUBIC_MONOMIALS[j] in d(u_m u_n)/d xi_v
    cidx = {e: i for i, e in enumerate(CUBIC_MONOMIALS)}
    T = np.zeros((4, len(CUBIC_MONOMIALS), 11, 11))
    for m in range(11):
        for n in range(11):
            e = U_EXP[m] + U_EXP[n]
            for v in range(4):
                if e[v] == 0:
                    continue
                d = e.copy()
                d[v] -= 1
                T[v, cidx[tuple(d)], m, n] += e[v]
    return T.reshape(4 * len(CUBIC_MONOMIALS), 121)


_GRAD_T = _gradient_tensor()

# v over (s, t): see _kernels_py.V_EXP for exponents
RATIONAL_MONOMIALS = ["s1^2 t1", "s1^2 t2", "s1^2 t3", "s1^2", "s1 s2", "s1 s3", "s1",
                      "s2^2 t1", "s2^2 t2", "s2^2 t3", "s2^2", "s2 s3", "s2",
                      "s3^2 t1", "s3^2 t2", "s3^2 t3", "s3^2", "s3", "t1", "t2", "t3", "1"]


def u_vector(xi):
    xi = np.asarray(xi, dtype=float)
    return np.prod(xi[None, :] ** U_EXP, axis=1)


def xi_from_cgr(s):
    s = np.asarray(s, dtype=float)
    return np.concatenate([[1.0], s]) / np.sqrt(1.0 + s @ s)


@dataclass(frozen=True)
class StackedSystem:
    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class QuarticCost:
    Q: np.ndarray
    C: np.ndarray
    P: np.ndarray          # (B^T B)^-1 B^T A, so t*(u) = -P u


@dataclass(frozen=True)
class RationalCost:
    """C(s, t) = sum_r (k_r^T v)^2 / (1 + s^T s)^2 with K22 = sum_r k_r k_r^T."""
    k_rows: np.ndarray
    K22: np.ndarray

    def numerators(self, s, t):
        return self.k_rows @ rational_monomials(s, t)

    def cost(self, s, t):
        s = np.asarray(s, dtype=float)
        r = self.numerators(s, t)
        return float(r @ r) / (1.0 + s @ s) ** 2

    def cost_cleared(self, s, t):
        v = rational_monomials(s, t)
        return float(v @ self.K22 @ v)


@dataclass(frozen=True)
class SolutionCandidate:
    pose: Pose
    cost: float
    grad_norm: float
    converged: bool
    newton_iters: int
    s: np.ndarray = None
    tol: float = 0.0
    monotone: bool = True
    cost_increased: bool = False
    min_hessian_eig: float = np.nan
    is_minimizer: bool = True
    selected: bool = False
    info: dict = field(default_factory=dict)


def build_stacked(corrs):
    """Stacked residuals A u + B t over all rows (planes, lines, points)."""
    a, b, c = general_row_arrays(corrs)
    if len(c) == 0:
        raise InsufficientDataError("no correspondences")
    n = len(c)
    A = np.empty((n, 11))
    # blocks keep the outer-product temporary in cache, so time stays linear in n
    for i in range(0, n, _BLOCK):
        j = min(n, i + _BLOCK)
        ab = (a[i:j, :, None] * b[i:j, None, :]).reshape(-1, 9)
        np.matmul(ab, _MFLAT_T, out=A[i:j, :10])
    A[:, 10] = c
    return StackedSystem(A, a.copy())


def eliminate_translation(sys_, max_cond=1e12):
    A, B = sys_.A, sys_.B
    BtB = B.T @ B
    if len(B) < 3 or np.linalg.cond(BtB) > max_cond:
        raise TranslationDegenerateError("translation is not observable (B^T B is singular)")
    P = np.linalg.solve(BtB, B.T @ A)
    C = A - B @ P
    Q = C.T @ C
    Q = 0.5 * (Q + Q.T)
    return QuarticCost(Q, C, P)


def stationarity_system(qc):
    """Exact gradient of u^T Q u with respect to (rho, alpha, beta, gamma)."""
    return CubicSystem4((_GRAD_T @ np.asarray(qc.Q).reshape(-1)).reshape(4, -1))


def recover_pose(xi, sys_or_qc):
    """(s, t) for a relaxation root. xi and -xi give the same result.

    t minimizes the stacked residual for the rotation of xi/|xi|.
    """
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi)
    if nrm == 0 or abs(xi[0]) <= 1e-9 * nrm:
        raise SingularParameterizationError("rho vanishes: rotation near 180 degrees")
    if xi[0] < 0:
        xi = -xi
    s = xi[1:] / xi[0]
    if isinstance(sys_or_qc, QuarticCost):
        P = sys_or_qc.P
    else:
        B, A = sys_or_qc.B, sys_or_qc.A
        P = np.linalg.solve(B.T @ B, B.T @ A)
    t = -P @ u_vector(xi / nrm)
    return s, t


def rational_k_rows(a, b, c):
    """Per-row coefficients k over the 22 rational monomials."""
    m = len(c)
    k = np.zeros((m, 22))
    ab = np.einsum("ij,ij->i", a, b)
    bxa = np.cross(b, a)
    for i, (base, sq, lin) in enumerate([(0, 3, 6), (7, 10, 12), (13, 16, 17)]):
        k[:, base:base + 3] = a
        k[:, sq] = -ab + 2 * a[:, i] * b[:, i] + c
        k[:, lin] = 2 * bxa[:, i]
    k[:, 4] = 2 * (a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0])
    k[:, 5] = 2 * (a[:, 0] * b[:, 2] + a[:, 2] * b[:, 0])
    k[:, 11] = 2 * (a[:, 1] * b[:, 2] + a[:, 2] * b[:, 1])
    k[:, 18:21] = a
    k[:, 21] = ab + c
    return k


def build_rational(corrs):
    a, b, c = general_row_arrays(corrs)
    k = rational_k_rows(a, b, c)
    return RationalCost(k, k.T @ k)


def rational_monomials(s, t):
    s1, s2, s3 = s
    t1, t2, t3 = t
    q1, q2, q3 = s1 * s1, s2 * s2, s3 * s3
    return np.array([q1 * t1, q1 * t2, q1 * t3, q1, s1 * s2, s1 * s3, s1,
                     q2 * t1, q2 * t2, q2 * t3, q2, s2 * s3, s2,
                     q3 * t1, q3 * t2, q3 * t3, q3, s3, t1, t2, t3, 1.0])


def cleared_gradient(rc, x, with_jacobian=True):
    """Gradient of the cost with the (1+s^T s) denominators cleared.

    Returns (G, J, Cbar): G_s = (1+s^T s) dCbar/ds - 4 s Cbar and
    G_t = dCbar/dt, its Jacobian J, and Cbar = v^T K22 v.
    """
    x = np.asarray(x, dtype=float)
    s = x[:3]
    w = 1.0 + s @ s
    val, g, H = kernels.cost_terms(rc.K22, x)
    G = np.empty(6)
    G[:3] = w * g[:3] - 4.0 * s * val
    G[3:] = g[3:]
    if not with_jacobian:
        return G, None, val
    J = np.empty((6, 6))
    J[:3, :3] = 2.0 * np.outer(g[:3], s) + w * H[:3, :3] - 4.0 * val * np.eye(3) - 4.0 * np.outer(s, g[:3])
    J[:3, 3:] = w * H[:3, 3:] - 4.0 * np.outer(s, g[3:])
    J[3:] = H[3:]
    return G, J, val


def cost_gradient(rc, x):
    """Gradient of the exact cost C(s, t) (denominators included)."""
    x = np.asarray(x, dtype=float)
    w = 1.0 + x[:3] @ x[:3]
    G, _, _ = cleared_gradient(rc, x, with_jacobian=False)
    return G / np.array([w ** 3] * 3 + [w ** 2] * 3)


def cost_hessian_at_stationary(rc, x):
    x = np.asarray(x, dtype=float)
    w = 1.0 + x[:3] @ x[:3]
    _, J, _ = cleared_gradient(rc, x)
    H = J / np.array([w ** 3] * 3 + [w ** 2] * 3)[:, None]
    return 0.5 * (H + H.T)


def _gradient_scale(rc, x):
    v = np.abs(rational_monomials(x[:3], x[3:]))
    return (1.0 + x[:3] @ x[:3]) * float(v @ np.abs(rc.K22) @ v)


def cost_derivatives(rc, x):
    """Exact cost C = Cbar / (1+s^T s)^2 with its gradient and Hessian."""
    x = np.asarray(x, dtype=float)
    s = x[:3]
    w = 1.0 + s @ s
    f, g, H = kernels.cost_terms(rc.K22, x)
    a = w ** -2
    da = np.zeros(6)
    da[:3] = -4.0 * s * w ** -3
    d2a = np.zeros((6, 6))
    d2a[:3, :3] = 24.0 * w ** -4 * np.outer(s, s) - 4.0 * w ** -3 * np.eye(3)
    grad = a * g + f * da
    hess = a * H + np.outer(g, da) + np.outer(da, g) + f * d2a
    return a * f, grad, 0.5 * (hess + hess.T)


def _is_pd(H):
    try:
        np.linalg.cholesky(H)
        return True
    except np.linalg.LinAlgError:
        return False


def newton_refine(s0, t0, rc, max_iters=50, tol=None, rtol=1e-10, safeguard=True):
    """Newton iterations on the cleared first-order conditions.

    Stops when the cleared gradient is within tol, which defaults to
    rtol * (1 + scale) with scale bounding the magnitude of the terms summed
    in that gradient. With safeguard, a Newton step is only taken where the
    cost Hessian is positive definite and the cost does not rise; otherwise a
    damped (Levenberg-Marquardt) step on the exact cost is used, so the
    iteration heads for a local minimizer instead of the nearest stationary
    point.
    """
    x = np.concatenate([np.asarray(s0, dtype=float), np.asarray(t0, dtype=float)])
    x_init = x.copy()
    costs = []
    it = 0
    converged = False
    failed = False
    lam = None
    G, J, val = cleared_gradient(rc, x)
    while True:
        w = 1.0 + x[:3] @ x[:3]
        c = val / w ** 2
        costs.append(c)
        scale = _gradient_scale(rc, x)
        thr = tol if tol is not None else rtol * (1.0 + scale)
        gn = float(np.abs(G).max())
        if gn <= thr:
            converged = True
            break
        if it >= max_iters:
            break
        slack = 1e-12 * (1.0 + scale / w ** 3)
        x_new = None
        try:
            dx = np.linalg.solve(J, G)
        except np.linalg.LinAlgError:
            dx = None
        if dx is not None and np.all(np.isfinite(dx)):
            if not safeguard:
                x_new = x - dx
            else:
                _, gc, Hc = cost_derivatives(rc, x)
                if _is_pd(Hc):
                    xt = x - dx
                    _, _, vt = cleared_gradient(rc, xt, with_jacobian=False)
                    if vt / (1.0 + xt[:3] @ xt[:3]) ** 2 <= c + slack:
                        x_new = xt
        if x_new is None and safeguard:
            _, gc, Hc = cost_derivatives(rc, x)
            hmax = max(1e-12, float(np.abs(np.diag(Hc)).max()))
            if lam is None:
                lam = 1e-6 * hmax
            # near a saddle, start just past the negative curvature so the
            # step leaves along it instead of creeping
            ev0 = float(np.linalg.eigvalsh(Hc)[0])
            if ev0 < 0:
                lam = max(lam, -1.01 * ev0 + 1e-6 * hmax)
            for _ in range(40):
                try:
                    d = np.linalg.solve(Hc + lam * np.eye(6), -gc)
                except np.linalg.LinAlgError:
                    lam *= 10.0
                    continue
                xt = x + d
                _, _, vt = cleared_gradient(rc, xt, with_jacobian=False)
                ct = vt / (1.0 + xt[:3] @ xt[:3]) ** 2
                if np.isfinite(ct) and ct < c:
                    x_new = xt
                    lam = max(lam / 10.0, 1e-15)
                    break
                lam *= 10.0
        if x_new is None:
            failed = True
            break
        G_new, J_new, val_new = cleared_gradient(rc, x_new)
        if not np.all(np.isfinite(G_new)):
            failed = True
            break
        x, G, J, val = x_new, G_new, J_new, val_new
        it += 1
    if failed and it == 0:
        x = x_init
    s, t = x[:3], x[3:]
    c0 = rc.cost(x_init[:3], x_init[3:])
    c1 = rc.cost(s, t)
    tail = costs[-4:]
    monotone = all(b <= a * (1 + 1e-12) + 1e-300 for a, b in zip(tail, tail[1:]))
    try:
        pose = Pose(cgr_to_rotation(s), t)
    except Exception:
        pose = Pose.identity()
        converged = False
    return SolutionCandidate(pose=pose, cost=c1, grad_norm=gn, converged=converged,
                             newton_iters=it, s=s.copy(), tol=thr, monotone=monotone,
                             cost_increased=c1 > c0 + 1e-12)


def _classify(rc, cand, rtol=1e-7):
    x = np.concatenate([cand.s, cand.pose.t])
    H = cost_hessian_at_stationary(rc, x)
    ev = np.linalg.eigvalsh(H)
    lam = float(ev[0])
    is_min = lam >= -rtol * max(1e-12, float(np.abs(ev).max()))
    return replace(cand, min_hessian_eig=lam, is_minimizer=bool(is_min))


def _same(c1, c2, cost_rtol=1e-8, pose_tol=1e-6):
    dc = abs(c1.cost - c2.cost) <= cost_rtol * max(c1.cost, c2.cost) + 1e-20
    dp = rotation_angle(c1.pose.R.T @ c2.pose.R) + np.abs(c1.pose.t - c2.pose.t).max() < pose_tol
    return dc and dp


def _sort_key(c):
    return (c.cost, tuple(c.pose.R.ravel()), tuple(c.pose.t))


def min_retained(corrs):
    """Smallest number of minimizers worth reporting for this correspondence mix."""
    n_pl, n_l, n_p = corrs.counts
    return 3 if (n_l == 0 and n_p == 0) else 2


def select_with_prior(cands, prior, cost_factor=1.05, cost_atol=1e-10, translation_scale=1.0):
    """Index of the selected candidate in a cost-sorted list."""
    if not cands:
        return None
    if prior is None:
        return 0
    best = cands[0].cost
    limit = best * cost_factor + cost_atol

    def dist(c):
        return rotation_angle(prior.R.T @ c.pose.R) + np.linalg.norm(prior.t - c.pose.t) / translation_scale

    sel = 0
    dsel = dist(cands[0])
    for i, c in enumerate(cands[1:], 1):
        if c.cost <= limit:
            d = dist(c)
            if d < dsel:
                sel, dsel = i, d
    return sel


def solve_least_squares(corrs, prior=None, keep=None, cost_factor=1.05, cost_atol=1e-10,
                        translation_scale=1.0, max_iters=50, include_saddles=False,
                        method="auto", return_info=False):
    """Local minimizers of the least-squares pose cost, sorted by cost.

    Requires an effective count N >= 7. With a prior pose, a candidate within
    cost_factor * best + cost_atol that is strictly closer to the prior is
    marked selected instead of the cheapest one. keep caps the list length but
    never below min_retained(corrs).
    """
    N = corrs.effective_count
    if N < 7:
        raise InsufficientDataError(f"effective count {N} < 7; use solve-minimal")
    st = build_stacked(corrs)
    qc = eliminate_translation(st)
    sys4 = stationarity_system(qc)
    roots, diag = solve_cubic_stationarity(sys4, method=method, return_diagnostics=True)
    rc = build_rational(corrs)
    cands = []
    dropped = 0
    for xi in roots:
        try:
            s, t = recover_pose(xi, qc)
        except SingularParameterizationError:
            dropped += 1
            log.debug("dropping relaxation root with rho ~ 0: %s", xi)
            continue
        c = newton_refine(s, t, rc, max_iters=max_iters)
        if not c.converged:
            continue
        c = _classify(rc, c)
        if not include_saddles and not c.is_minimizer:
            continue
        if any(_same(c, o) for o in cands):
            continue
        cands.append(c)
    if not cands:
        raise NoSolutionError("no converged local minimizer")
    cands.sort(key=_sort_key)
    if keep is not None:
        cands = cands[:max(keep, min_retained(corrs))]
    sel = select_with_prior(cands, prior, cost_factor, cost_atol, translation_scale)
    cands = [replace(c, selected=(i == sel)) for i, c in enumerate(cands)]
    if return_info:
        diag.update(relaxation_roots=len(roots), dropped_rho0=dropped)
        return cands, diag
    return cands
