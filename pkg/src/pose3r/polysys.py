"""Polynomial kernels.

- real_roots: univariate real roots (companion matrix + Newton polish)
- solve_three_quadrics: three quadrics in three unknowns, by hiding one
  variable and expanding a 6x6 determinant into a degree-8 polynomial
- solve_cubic_stationarity: all real solutions of the four odd cubics that
  make up the gradient of the relaxed quartic rotation cost
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from . import kernels
from .errors import DegenerateError, NumericFailure

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# univariate

def poly_eval(p, x):
    """Evaluate ascending-order coefficients p at x (Horner)."""
    r = np.zeros_like(np.asarray(x, dtype=np.result_type(x, float)))
    for c in p[::-1]:
        r = r * x + c
    return r


def real_roots(p, tol=1e-9, imag_tol=1e-6, cluster_tol=1e-7):
    """Real roots of a polynomial given by ascending-order coefficients.

    Coefficients below tol*max|p| are trimmed from the top, and those below
    the lowest significant one are zeroed, giving an exact root at 0. Roots whose
    imaginary part is within imag_tol*(1+|root|) are projected onto the real
    line, polished with one Newton step, and roots closer than
    cluster_tol*(1+|root|) are averaged, so a multiple root comes back once.
    Raises DegenerateError if all coefficients vanish.
    """
    p = np.asarray(p, dtype=float)
    amax = np.abs(p).max() if p.size else 0.0
    if amax == 0.0 or not np.isfinite(amax):
        raise DegenerateError("polynomial has no nonzero coefficients")
    big = np.nonzero(np.abs(p) > tol * amax)[0]
    p = p[:big[-1] + 1].copy()
    # zero roots from vanishing low-order coefficients
    nz0 = big[0]
    p[:nz0] = 0.0
    out = [0.0] if nz0 > 0 else []
    q = p[nz0:]
    if len(q) > 1:
        z = np.roots(q[::-1])
        keep = np.abs(z.imag) <= imag_tol * (1.0 + np.abs(z))
        out.extend(z[keep].real.tolist())
    if not out:
        return []
    dp = np.arange(1, len(p)) * p[1:]
    r = np.array(out)
    # huge roots may overflow the polish; those keep their eigenvalue estimate
    with np.errstate(over="ignore", invalid="ignore"):
        pv = poly_eval(p, r)
        dv = poly_eval(dp, r)
        ok = np.isfinite(pv) & np.isfinite(dv) & (np.abs(dv) > 0)
        step = np.zeros_like(r)
        step[ok] = pv[ok] / dv[ok]
        r1 = r - step
        better = np.abs(poly_eval(p, r1)) <= np.abs(pv)
    r = np.where(better & ok, r1, r)
    r.sort()
    groups = [[r[0]]]
    for x in r[1:]:
        if abs(x - groups[-1][-1]) <= cluster_tol * (1.0 + abs(x)):
            groups[-1].append(x)
        else:
            groups.append([x])
    return [float(np.mean(g)) for g in groups]


# ---------------------------------------------------------------------------
# three quadrics

QUADRIC_MONOMIALS = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1),
                     (0, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0)]
_QIDX = {e: i for i, e in enumerate(QUADRIC_MONOMIALS)}

# Chebyshev nodes for interpolating det C(s3); the Vandermonde inverse maps
# nine samples to ascending monomial coefficients of a degree-8 polynomial.
CHEB_NODES = np.cos((2 * np.arange(9) + 1) * np.pi / 18)
_VINV = np.linalg.inv(np.vander(CHEB_NODES, 9, increasing=True))


def quadric_monomials(s):
    s1, s2, s3 = s
    return np.array([s1*s1, s2*s2, s3*s3, s1*s2, s1*s3, s2*s3, s1, s2, s3, 1.0])


def quadric_jacobian(K, s):
    s1, s2, s3 = s
    dx = np.array([
        [2*s1, 0, 0], [0, 2*s2, 0], [0, 0, 2*s3],
        [s2, s1, 0], [s3, 0, s1], [0, s3, s2],
        [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    return K @ dx


def permute_quadrics(K, perm):
    """Coefficients of the same system in variables s'_k = s[perm[k]]."""
    K = np.asarray(K, dtype=float)
    out = np.empty_like(K)
    for j, e in enumerate(QUADRIC_MONOMIALS):
        old = [0, 0, 0]
        for k in range(3):
            old[perm[k]] = e[k]
        out[:, j] = K[:, _QIDX[tuple(old)]]
    return out


def hidden_matrix(K, s3):
    """6x6 matrix C(s3) with C(s3) h = 0 at a common root.

    h = [s0^2, s1^2, s2^2, s0 s1, s0 s2, s1 s2]; rows 1-3 are the homogenized
    quadrics, rows 4-6 the determinants of the three regroupings
    [s0^2, s1, s2], [s0, s1^2, s2], [s0, s1, s2^2].
    """
    return kernels.hidden_matrix(np.ascontiguousarray(K, dtype=float), float(s3))


def det_polynomial(K):
    """Ascending coefficients of det C(s3), degree 8, via Chebyshev sampling."""
    d = kernels.hidden_det_samples(np.ascontiguousarray(K, dtype=float), CHEB_NODES)
    return _VINV @ d


@dataclass
class QuadricDiagnostics:
    hidden: int = 2          # -1: affine equations were eliminated first
    degenerate_leading: bool = False
    rejected_roots: int = 0
    ambiguous_roots: int = 0


def _polish_quadrics(K, s, iters=3):
    s = np.array(s, dtype=float)
    f = K @ quadric_monomials(s)
    for _ in range(iters):
        J = quadric_jacobian(K, s)
        try:
            ds = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            break
        s1 = s - ds
        f1 = K @ quadric_monomials(s1)
        if not np.all(np.isfinite(f1)) or np.abs(f1).max() >= np.abs(f).max():
            break
        s, f = s1, f1
    return s


def _solve_hidden_s3(K, diag, root_imag_tol, acc_tol):
    coeffs = det_polynomial(K)
    cscale = np.abs(coeffs).max()
    if not np.isfinite(cscale) or cscale <= 1e-300 * max(1.0, np.abs(K).max() ** 6):
        raise DegenerateError("determinant polynomial vanishes identically")
    lead = np.abs(coeffs[-3:]).max() < 1e-10 * cscale
    diag.degenerate_leading = bool(lead)
    roots = real_roots(coeffs, tol=1e-13, imag_tol=root_imag_tol, cluster_tol=1e-10)
    sols = []
    for r in roots:
        C = hidden_matrix(K, r)
        _, sv, vt = np.linalg.svd(C)
        if sv[0] == 0 or sv[-1] / sv[0] > 1e-6:
            diag.rejected_roots += 1
            continue
        if sv[-2] / sv[0] <= 1e-10:
            diag.ambiguous_roots += 1
            log.debug("ambiguous null space at s3=%g", r)
            continue
        h = vt[-1]
        if abs(h[0]) < 1e-12 * np.abs(h).max():
            diag.rejected_roots += 1
            continue
        s = np.array([h[3] / h[0], h[4] / h[0], r])
        s = _polish_quadrics(K, s)
        x = quadric_monomials(s)
        f = K @ x
        scale = np.abs(K) @ np.abs(x)
        if np.all(np.abs(f) <= acc_tol * scale):
            sols.append(s)
        else:
            diag.rejected_roots += 1
    return sols, lead


def _dedupe(sols, radius):
    out = []
    for s in sols:
        if all(np.abs(s - o).max() > radius * max(1.0, np.abs(o).max()) for o in out):
            out.append(s)
    return out


def _mu_monomials(mu):
    mu = np.atleast_1d(mu)
    if len(mu) == 1:
        return np.array([mu[0] ** 2, mu[0], 1.0])
    a, b = mu
    return np.array([a * a, a * b, b * b, a, b, 1.0])


_MU_SAMPLES = {1: np.array([[-1.0], [0.0], [1.0]]),
               2: np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1]], dtype=float)}


def _restrict(Krow, p, N):
    """Coefficients over _mu_monomials of the quadric Krow at s = p + N mu."""
    S = _MU_SAMPLES[N.shape[1]]
    V = np.array([_mu_monomials(m) for m in S])
    f = np.array([Krow @ quadric_monomials(p + N @ m) for m in S])
    return np.linalg.solve(V, f)


def _solve_reduced(K, r, acc_tol):
    """Common roots when the quadratic parts of K span only r < 3 dimensions.

    Row combinations expose 3 - r affine equations; s is parameterized on
    their solution set and the remaining quadrics are solved there.
    """
    U, _, _ = np.linalg.svd(K[:, :6])
    T = U.T @ K
    T[r:, :6] = 0.0
    L, l0 = T[r:, 6:9], T[r:, 9]
    sv = np.linalg.svd(L, compute_uv=False)
    if sv[-1] <= 1e-10 * max(1.0, sv[0]):
        raise DegenerateError("affine part of the quadric system is rank deficient")
    p = np.linalg.lstsq(L, -l0, rcond=None)[0]
    N = np.linalg.svd(L)[2][3 - r:].T
    if r == 0:
        cands = [p]
    elif r == 1:
        q = _restrict(T[0], p, N)
        cands = [p + N @ [m] for m in real_roots(q[::-1])]
    else:
        # two conics in (mu1, mu2): hide mu2, Sylvester resultant in mu1
        q1, q2 = _restrict(T[0], p, N), _restrict(T[1], p, N)

        def parts(q, b):
            return q[0], q[1] * b + q[3], q[2] * b * b + q[4] * b + q[5]

        def res(b):
            a1, b1, c1 = parts(q1, b)
            a2, b2, c2 = parts(q2, b)
            return (a1 * c2 - a2 * c1) ** 2 - (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1)

        nodes = CHEB_NODES[::2]
        coef = np.linalg.solve(np.vander(nodes, 5, increasing=True), [res(b) for b in nodes])
        cands = []
        for b in real_roots(coef, imag_tol=1e-3):
            a1, b1, c1 = parts(q1, b)
            a2, b2, c2 = parts(q2, b)
            den = a1 * b2 - a2 * b1
            if abs(den) > 1e-12 * max(abs(a1 * c2 - a2 * c1), 1e-300):
                cands.append(p + N @ [-(a1 * c2 - a2 * c1) / den, b])
            else:
                cands.extend(p + N @ [m, b] for m in (real_roots([c1, b1, a1]) if abs(a1) > 0 else []))
    out = []
    for s in cands:
        s = _polish_quadrics(K, s)
        x = quadric_monomials(s)
        if np.all(np.abs(K @ x) <= acc_tol * np.maximum(np.abs(K) @ np.abs(x), 1e-300)):
            out.append(s)
    return out


def solve_three_quadrics(K, hidden=None, acc_tol=1e-8, root_imag_tol=1e-3, return_diagnostics=False):
    """Real common roots s = [s1, s2, s3] of three quadrics.

    K is 3x10 over [s1^2, s2^2, s3^2, s1s2, s1s3, s2s3, s1, s2, s3, 1].
    By default s3 is hidden; if the degree-8 determinant loses its leading
    coefficients or yields nothing, s1 and then s2 are hidden instead.
    hidden=0/1/2 forces one choice. Returns at most 8 solutions.

    When the quadratic parts are linearly dependent (some combination of the
    equations is affine) every hidden determinant vanishes identically, so
    the affine equations are solved first and the rest is solved on their
    solution set.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (3, 10) or not np.all(np.isfinite(K)):
        raise DegenerateError("K must be a finite 3x10 matrix")
    # rows are scaled so coefficients are O(1); roots are unchanged
    K = K / np.abs(K).max(axis=1, keepdims=True).clip(1e-300)
    if not np.any(K):
        raise DegenerateError("all quadric coefficients vanish")
    qs = np.linalg.svd(K[:, :6], compute_uv=False)
    r = int(np.sum(qs > 1e-12 * max(qs[0], 1e-300)))
    if r < 3:
        sols = sorted(_dedupe(_solve_reduced(K, r, acc_tol), 1e-6), key=lambda s: tuple(s))
        if return_diagnostics:
            return sols, QuadricDiagnostics(hidden=-1)
        return sols
    order = [2, 0, 1] if hidden is None else [hidden]
    perms = {2: (0, 1, 2), 0: (1, 2, 0), 1: (2, 0, 1)}
    diag = QuadricDiagnostics()
    best = None
    last_err = None
    for hv in order:
        perm = perms[hv]
        Kp = permute_quadrics(K, perm)
        d = QuadricDiagnostics(hidden=hv)
        try:
            sols, lead = _solve_hidden_s3(Kp, d, root_imag_tol, acc_tol)
        except DegenerateError as e:
            last_err = e
            continue
        back = []
        for sp in sols:
            s = np.empty(3)
            s[list(perm)] = sp
            back.append(s)
        back = _dedupe(back, 1e-6)
        if best is None or len(back) > len(best[0]):
            best = (back, d)
        if back and not lead:
            break
        log.debug("hidden variable %d degenerate or empty, retrying", hv)
    if best is None:
        raise last_err if last_err else DegenerateError("three-quadric system is degenerate")
    sols, diag = best
    sols = sorted(sols, key=lambda s: tuple(s))[:8]
    if return_diagnostics:
        return sols, diag
    return sols


# ---------------------------------------------------------------------------
# four cubics in (rho, alpha, beta, gamma)

def _monos(deg, parity=None):
    out = []
    for d in range(deg + 1):
        if parity is not None and d % 2 != parity:
            continue
        for e in itertools.product(range(d + 1), repeat=4):
            if sum(e) == d:
                out.append(e)
    return out


CUBIC_MONOMIALS = [e for e in _monos(3) if sum(e) == 3] + [e for e in _monos(1) if sum(e) == 1]
_CEXP = np.array(CUBIC_MONOMIALS)


@dataclass(frozen=True)
class CubicSystem4:
    """Four polynomials in xi = (rho, alpha, beta, gamma).

    coeffs[i, j] multiplies CUBIC_MONOMIALS[j] (20 cubic then 4 linear
    monomials) in equation i.
    """
    coeffs: np.ndarray

    def evaluate(self, xi):
        xi = np.asarray(xi)
        m = np.prod(xi[..., None, :] ** _CEXP, axis=-1)
        return m @ self.coeffs.T

    def jacobian(self, xi):
        xi = np.asarray(xi, dtype=float)
        J = np.zeros((4, 4))
        for v in range(4):
            e = _CEXP.copy()
            f = e[:, v].astype(float)
            e[:, v] = np.maximum(e[:, v] - 1, 0)
            J[:, v] = self.coeffs @ (f * np.prod(xi ** e, axis=1))
        return J


# Macaulay matrix at degree 10 restricted to even columns: rows are the four
# equations times every odd monomial of degree <= 7.
_MAC_DEG = 10
_COLS = sorted(_monos(_MAC_DEG, 0), key=lambda e: (sum(e), e))
_CIDX = {e: i for i, e in enumerate(_COLS)}
_DEGS = np.array([sum(e) for e in _COLS])
_SHIFTS = _monos(_MAC_DEG - 3, 1)
_ROW_EQ = np.repeat(np.arange(4), len(_SHIFTS))
_ROW_SD = np.tile([sum(s) for s in _SHIFTS], 4)
_ROW_COLS = np.array([[_CIDX[tuple(np.add(e, s))] for e in CUBIC_MONOMIALS]
                      for _ in range(4) for s in _SHIFTS])
_COLSEL = {d: np.nonzero(_DEGS == d)[0] for d in range(0, _MAC_DEG + 1, 2)}
_QUAD = [e for e in _monos(2) if sum(e) == 2]
_LE8 = np.nonzero(_DEGS <= _MAC_DEG - 2)[0]
_MULT = np.array([[_CIDX[tuple(np.add(_COLS[c], q))] for q in _QUAD] for c in _LE8])
_MULT_ROW = np.full(len(_COLS), -1)
_MULT_ROW[_LE8] = np.arange(len(_LE8))
_LOW = np.nonzero(_DEGS <= 2)[0]
_LOWC = [_COLS[i] for i in _LOW]
_L_ONE = _LOWC.index((0, 0, 0, 0))
_L_SQ = [_LOWC.index(tuple(2 * np.eye(4, dtype=int)[i])) for i in range(4)]
_L_CROSS = np.array([[_LOWC.index(tuple(np.eye(4, dtype=int)[i] + np.eye(4, dtype=int)[j]))
                      for j in range(4)] for i in range(4)])
# fixed random quadratic form used as the multiplication operator
_GQ = np.random.default_rng(123).normal(size=len(_QUAD))


def _macaulay(F):
    M = np.zeros((len(_ROW_EQ), len(_COLS)))
    M[np.arange(len(_ROW_EQ))[:, None], _ROW_COLS] = F[_ROW_EQ]
    return M


def _null_space_blocks(M, tol=1e-10):
    """Orthonormal null space of the degree-graded Macaulay matrix.

    Rows with shift degree k only touch columns of degree k+1 and k+3, so the
    null space is built degree by degree: columns of degree 0 and 2 are free,
    each block adds the constraints that tie the next degree to the lower ones.
    """
    order = list(np.concatenate([_COLSEL[0], _COLSEL[2]]))
    pos = {c: i for i, c in enumerate(order)}
    T = np.eye(len(order))
    for k in range(1, _MAC_DEG - 2, 2):
        rsel = np.nonzero(_ROW_SD == k)[0]
        hi = _COLSEL[k + 3]
        lo = _COLSEL[k + 1]
        Mh = M[np.ix_(rsel, hi)]
        E = M[np.ix_(rsel, lo)] @ T[[pos[c] for c in lo]]
        Qm, R, P = sl.qr(Mh, pivoting=True, mode="economic")
        d = np.abs(np.diag(R))
        r = int(np.sum(d > tol * d[0])) if d.size and d[0] > 0 else 0
        Q1 = Qm[:, :r]
        G = E - Q1 @ (Q1.T @ E)
        _, s, vt = np.linalg.svd(G, full_matrices=G.shape[0] < G.shape[1])
        nz = int(np.sum(s > 1e-9 * max(1.0, np.abs(E).max())))
        Z = vt[nz:].T
        EZ = E @ Z
        R11 = R[:r, :r]
        n_hi = len(hi)
        vw = np.zeros((n_hi, Z.shape[1]))
        vw[P[:r]] = -sl.solve_triangular(R11, Q1.T @ EZ)
        nfree = n_hi - r
        vy = np.zeros((n_hi, nfree))
        if nfree:
            vy[P[:r]] = -sl.solve_triangular(R11, R[:r, r:])
            vy[P[r:]] = np.eye(nfree)
        T = np.block([[T @ Z, np.zeros((T.shape[0], nfree))], [vw, vy]])
        for c in hi:
            pos[c] = len(order)
            order.append(c)
    full = np.zeros((len(_COLS), T.shape[1]))
    full[order] = T
    Qn, _ = np.linalg.qr(full)
    return Qn


def _rank(X, rtol=1e-9):
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return 0, vt
    return int(np.sum(s > s[0] * rtol)), vt


def _tnf_candidates(F):
    """Complex candidate roots from a truncated normal form.

    Returns the (k, 4) complex array of candidate xi and rank diagnostics.
    """
    M = _macaulay(F)
    N = _null_space_blocks(M)
    k = N.shape[1]
    r8, vt8 = _rank(N[_DEGS <= 8])
    r6, _ = _rank(N[_DEGS <= 6])
    if r8 == k:
        W, bdeg = N, 8
    elif r6 == r8:
        # solutions at infinity: compress onto the part that is regular at degree 6
        W, bdeg = N @ vt8[:r8].T, 6
    else:
        raise NumericFailure("no degree gap in the normal form", nullity=k, rank8=r8, rank6=r6)
    dlt = W.shape[1]
    cand = np.nonzero(_DEGS <= bdeg)[0]
    _, piv = sl.qr(W[cand].T, pivoting=True, mode="r")
    B = cand[piv[:dlt]]
    WB = W[B]
    WgB = np.tensordot(_GQ, W[_MULT[_MULT_ROW[B]].T], axes=1)
    try:
        Mult = np.linalg.solve(WB, WgB)
    except np.linalg.LinAlgError:
        raise NumericFailure("singular normal-form basis", nullity=k, rank8=r8, rank6=r6)
    _, V = np.linalg.eig(Mult)
    ev = (W[_LOW] @ V).astype(complex)
    ev = ev[:, np.all(np.isfinite(ev), axis=0)]
    one = ev[_L_ONE]
    good = np.abs(one) > 1e-10 * np.abs(ev).max(axis=0)
    ev = ev[:, good] / one[good]
    sq = ev[_L_SQ]
    i0 = np.argmax(np.abs(sq), axis=0)
    cols = np.arange(ev.shape[1])
    piv_sq = sq[i0, cols]
    nonzero = np.abs(piv_sq) > 1e-14
    xs = []
    for j in cols[nonzero]:
        x = np.empty(4, dtype=complex)
        r0 = np.sqrt(piv_sq[j])
        for v in range(4):
            x[v] = r0 if v == i0[j] else ev[_L_CROSS[i0[j], v], j] / r0
        xs.append(x)
    return np.array(xs).reshape(-1, 4), dict(nullity=k, rank8=r8, rank6=r6, basis_degree=bdeg)


def _polish_cubic(sys4, xi, iters=8):
    g = sys4.evaluate(xi)
    for _ in range(iters):
        try:
            dx = np.linalg.solve(sys4.jacobian(xi), g)
        except np.linalg.LinAlgError:
            break
        x1 = xi - dx
        g1 = sys4.evaluate(x1)
        if not np.all(np.isfinite(g1)) or np.abs(g1).max() >= np.abs(g).max():
            break
        xi, g = x1, g1
    return xi, g


def canonical_sign(xi):
    """Representative of {xi, -xi} with rho >= 0 (ties broken on alpha, beta, gamma)."""
    xi = np.asarray(xi, dtype=float)
    for v in xi:
        if v > 0:
            return xi.copy()
        if v < 0:
            return -xi
    return xi.copy()


def residual_tolerance(sys4, xi, rtol=1e-8):
    """Acceptance bound for |g(xi)|: rtol * max|coeff| * max(1, |xi|)^3."""
    return rtol * np.abs(sys4.coeffs).max() * max(1.0, float(np.linalg.norm(xi))) ** 3


def _finalize(sys4, cands, imag_tol=1e-4):
    out = []
    for x in cands:
        if not np.all(np.isfinite(x)):
            continue
        if np.abs(x.imag).max() > imag_tol * (1.0 + np.abs(x).max()):
            continue
        xi = x.real.copy()
        if np.linalg.norm(xi) < 1e-8:
            continue
        xi, g = _polish_cubic(sys4, xi)
        if not np.all(np.isfinite(g)) or not np.abs(g).max() <= residual_tolerance(sys4, xi):
            continue
        if np.linalg.norm(xi) < 1e-8:
            continue
        xi = canonical_sign(xi)
        if all(np.abs(xi - o).max() > 1e-6 * max(1.0, np.abs(o).max()) for o in out):
            out.append(xi)
    out.sort(key=lambda v: tuple(-v))
    return out


def _sphere_seeds(n=256, seed=7):
    z = np.random.default_rng(seed).normal(size=(n, 4))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


_SEEDS = _sphere_seeds()


def _newton_candidates(sys4, iters=40):
    """Multi-start Newton from a fixed covering of the unit 3-sphere."""
    lin = sys4.coeffs[:, 20:]
    out = []
    for d in _SEEDS:
        # radial scaling: g(r d).d = r^3 c3 + r c1
        c3 = sys4.evaluate(d) @ d - (lin @ d) @ d
        c1 = (lin @ d) @ d
        r = np.sqrt(-c1 / c3) if c3 != 0 and -c1 / c3 > 0 else 1.0
        xi = r * d
        g = sys4.evaluate(xi)
        for _ in range(iters):
            try:
                dx = np.linalg.solve(sys4.jacobian(xi), g)
            except np.linalg.LinAlgError:
                break
            xi = xi - dx
            g = sys4.evaluate(xi)
            if not np.all(np.isfinite(g)):
                break
            if np.abs(g).max() <= 1e-3 * residual_tolerance(sys4, xi):
                break
        if np.all(np.isfinite(xi)):
            out.append(xi.astype(complex))
    return np.array(out).reshape(-1, 4)


def solve_cubic_stationarity(sys4, method="auto", return_diagnostics=False):
    """Real solutions of the four-cubic system, one per +/- pair.

    The zero solution is excluded. method "tnf" uses the normal-form
    eigenvalue solver, "newton" a multi-start Newton sweep, and "auto" the
    normal form with the sweep as fallback when the normal form fails.
    """
    if not isinstance(sys4, CubicSystem4):
        sys4 = CubicSystem4(np.asarray(sys4, dtype=float))
    F = np.asarray(sys4.coeffs, dtype=float)
    scale = np.abs(F).max()
    if scale == 0 or not np.isfinite(scale):
        raise NumericFailure("cubic system has no finite nonzero coefficients")
    diag = {"method": method}
    if method in ("auto", "tnf"):
        try:
            Fn = F / np.abs(F).max(axis=1, keepdims=True).clip(scale * 1e-300)
            cands, d = _tnf_candidates(Fn)
            diag.update(d)
            diag["method"] = "tnf"
        except NumericFailure as e:
            if method == "tnf":
                raise
            log.info("normal form failed (%s), using multi-start Newton", e)
            diag.update(e.diagnostics)
            cands = _newton_candidates(sys4)
            diag["method"] = "newton"
    elif method == "newton":
        cands = _newton_candidates(sys4)
    else:
        raise ValueError(f"unknown method {method!r}")
    sols = _finalize(sys4, cands)
    if return_diagnostics:
        return sols, diag
    return sols
