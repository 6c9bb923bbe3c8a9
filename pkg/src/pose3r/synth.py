"""Synthetic problems, ambiguity fixtures and benchmark drivers.

Geometry is sampled uniformly in a 10 m ball, the ground-truth rotation from
Z-Y-X Euler angles and the translation uniformly per axis. Correspondences
are exact before Gaussian noise is added to the frame-1 points x.
"""
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cgr import rotation_angle
from .errors import DegenerateError, InvalidInputError, Pose3rError
from .geometry import CorrespondenceSet, Pose, rotation_error_deg, translation_error_rel


@dataclass(frozen=True)
class SynthSpec:
    n_points: int = 0
    n_lines: int = 0
    n_planes: int = 0
    noise_sigma: float = 0.0
    sphere_radius: float = 10.0
    translation_range: float = 10.0
    seed: int = 0
    effective_n: int = None

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be >= 0")
        if self.effective_n is None:
            if min(self.n_points, self.n_lines, self.n_planes) < 0:
                raise InvalidInputError("counts must be >= 0")
            if self.n_planes + 2 * self.n_lines + 3 * self.n_points < 6:
                raise InvalidInputError("effective count must be >= 6")
        elif self.effective_n < 6:
            raise InvalidInputError("effective count must be >= 6")


def effective_splits(N):
    """All (n_planes, n_lines, n_points) with n_planes + 2 n_lines + 3 n_points = N."""
    out = []
    for n_p in range(N // 3 + 1):
        for n_l in range((N - 3 * n_p) // 2 + 1):
            out.append((N - 3 * n_p - 2 * n_l, n_l, n_p))
    return out


def random_effective_split(N, seed):
    if N < 6:
        raise InvalidInputError("effective count must be >= 6")
    rng = np.random.default_rng(seed)
    sols = effective_splits(N)
    return sols[int(rng.integers(len(sols)))]


def euler_zyx(a, b, c):
    """R = Rz(a) Ry(b) Rx(c), angles in radians."""
    ca, sa, cb, sb, cc, sc = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    Rz = np.array([[ca, -sa, 0], [sa, ca, 0], [0, 0, 1]])
    Ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    Rx = np.array([[1, 0, 0], [0, cc, -sc], [0, sc, cc]])
    return Rz @ Ry @ Rx


def random_pose(rng, translation_range=10.0, max_angle_deg=179.0):
    while True:
        a, c = rng.uniform(0, 2 * np.pi, 2)
        b = rng.uniform(0, np.pi)
        R = euler_zyx(a, b, c)
        if np.degrees(rotation_angle(R)) <= max_angle_deg:
            break
    t = rng.uniform(-translation_range, translation_range, 3)
    return Pose(R, t)


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_in_ball(rng, n, radius):
    return random_unit(rng, n) * radius * rng.uniform(0, 1, (n, 1)) ** (1.0 / 3.0)


def _counts(spec, rng):
    if spec.effective_n is not None:
        return random_effective_split(spec.effective_n, rng.integers(2**63))
    return spec.n_planes, spec.n_lines, spec.n_points


def generate(spec, rng=None):
    """Random instance for spec. Returns (CorrespondenceSet, ground-truth Pose).

    The random stream draws the same values for any noise_sigma, so sweeping
    sigma with a fixed seed perturbs one geometry by scaled copies of the same
    noise.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    n_pl, n_l, n_p = _counts(spec, rng)
    gt = random_pose(rng, spec.translation_range)
    r = spec.sphere_radius
    xp = random_in_ball(rng, n_pl, r)
    npl = random_unit(rng, n_pl)
    off = np.cross(npl, rng.normal(size=(n_pl, 3)) * r / 2)
    yp = gt.apply(xp) + off
    xl = random_in_ball(rng, n_l, r)
    dl = random_unit(rng, n_l)
    yl = gt.apply(xl) + dl * rng.uniform(-r, r, (n_l, 1))
    xq = random_in_ball(rng, n_p, r)
    yq = gt.apply(xq)
    sig = spec.noise_sigma
    zp, zl, zq = (rng.normal(size=(n, 3)) for n in (n_pl, n_l, n_p))
    corrs = CorrespondenceSet.from_arrays(
        plane_x=xp + sig * zp, plane_n=npl, plane_y=yp,
        line_x=xl + sig * zl, line_d=dl, line_y=yl,
        point_x=xq + sig * zq, point_y=yq)
    return corrs, gt


def add_outliers(corrs, fraction, rng, radius=10.0):
    """Re-target a fraction of each kind to random geometry. Returns (corrs, outlier mask)."""
    def pick(n):
        m = np.zeros(n, bool)
        k = int(round(fraction * n))
        m[rng.choice(n, k, replace=False)] = True
        return m

    mp, ml, mq = pick(corrs.n_planes), pick(corrs.n_lines), pick(corrs.n_points)
    py = corrs.plane_y.copy()
    py[mp] = random_in_ball(rng, mp.sum(), radius * 2)
    pn = corrs.plane_n.copy()
    pn[mp] = random_unit(rng, mp.sum())
    ly = corrs.line_y.copy()
    ly[ml] = random_in_ball(rng, ml.sum(), radius * 2)
    qy = corrs.point_y.copy()
    qy[mq] = random_in_ball(rng, mq.sum(), radius * 2)
    out = CorrespondenceSet.from_arrays(corrs.plane_x, pn, py, corrs.line_x, corrs.line_d, ly,
                                        corrs.point_x, qy)
    return out, np.concatenate([mp, ml, mq])


# ---------------------------------------------------------------------------
# ambiguity fixtures

def make_ambiguous_lines(points, P1, P2, min_sep=1e-9):
    """Lines through both images of each point, so P1 and P2 are exact solutions."""
    x = np.asarray(points, dtype=float).reshape(-1, 3)
    y1, y2 = P1.apply(x), P2.apply(x)
    d = y1 - y2
    nrm = np.linalg.norm(d, axis=1)
    if np.any(nrm <= min_sep):
        raise DegenerateError("a point has coincident images under both poses")
    return CorrespondenceSet.from_arrays(line_x=x, line_d=d / nrm[:, None], line_y=y1)


def make_ambiguous_planes(points, P1, P2, P3, min_area=1e-9):
    """Planes through the three images of each point."""
    x = np.asarray(points, dtype=float).reshape(-1, 3)
    y1, y2, y3 = P1.apply(x), P2.apply(x), P3.apply(x)
    n = np.cross(y2 - y1, y3 - y1)
    nrm = np.linalg.norm(n, axis=1)
    scale = np.linalg.norm(y2 - y1, axis=1) * np.linalg.norm(y3 - y1, axis=1)
    if np.any(nrm <= min_area * np.maximum(scale, 1.0)):
        raise DegenerateError("images of a point are collinear; plane is underdetermined")
    return CorrespondenceSet.from_arrays(plane_x=x, plane_n=n / nrm[:, None], plane_y=y1)


def make_ambiguous_mixed(line_points, plane_points, P1, P2, rng=None, min_sep=1e-9):
    """Lines through both images plus planes containing both images."""
    rng = np.random.default_rng(0) if rng is None else rng
    lines = make_ambiguous_lines(np.reshape(line_points, (-1, 3)), P1, P2, min_sep)
    x = np.asarray(plane_points, dtype=float).reshape(-1, 3)
    y1, y2 = P1.apply(x), P2.apply(x)
    d = y1 - y2
    if np.any(np.linalg.norm(d, axis=1) <= min_sep):
        raise DegenerateError("a point has coincident images under both poses")
    n = np.cross(d, rng.normal(size=d.shape))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    planes = CorrespondenceSet.from_arrays(plane_x=x, plane_n=n, plane_y=y1)
    return planes + lines


def ambiguous_fixture(kind, seed, n_elements=None, radius=10.0, min_angle_deg=20.0):
    """Random fixture of the given kind ("lines", "planes", "mixed").

    Returns (CorrespondenceSet, list of planted poses). The planted poses are
    kept at least min_angle_deg apart in rotation.
    """
    rng = np.random.default_rng(seed)

    def poses(k):
        while True:
            ps = [random_pose(rng) for _ in range(k)]
            ok = all(np.degrees(rotation_angle(p.R.T @ q.R)) > min_angle_deg
                     for i, p in enumerate(ps) for q in ps[i + 1:])
            if ok:
                return ps

    if kind == "lines":
        n = n_elements or 5
        ps = poses(2)
        corrs = make_ambiguous_lines(random_in_ball(rng, n, radius), *ps)
    elif kind == "planes":
        n = n_elements or 8
        ps = poses(3)
        corrs = make_ambiguous_planes(random_in_ball(rng, n, radius), *ps)
    elif kind == "mixed":
        n = n_elements or 3
        ps = poses(2)
        corrs = make_ambiguous_mixed(random_in_ball(rng, n, radius), random_in_ball(rng, n + 1, radius),
                                     ps[0], ps[1], rng)
    else:
        raise InvalidInputError(f"unknown fixture kind {kind!r}")
    return corrs, ps


# ---------------------------------------------------------------------------
# benchmark

BENCH_COLUMNS = ["cell", "n_planes", "n_lines", "n_points", "effective_n", "sigma", "trials",
                 "mean_rot_deg", "median_rot_deg", "mean_trans_rel", "median_trans_rel",
                 "mean_time_ms", "failures"]


def trial_seed(seed, trial):
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0])


def _solve(corrs, solver):
    from .lsq import solve_least_squares
    from .minimal import solve_minimal

    if solver == "ls":
        cands = solve_least_squares(corrs)
        return [c.pose for c in cands if c.selected]
    return solve_minimal(corrs)


def run_trial(spec, trial, solver="ls"):
    """(rotation error deg, translation error rel, seconds) for one trial, errors nan on failure."""
    s = SynthSpec(**{**spec.__dict__, "seed": trial_seed(spec.seed, trial)})
    corrs, gt = generate(s)
    t0 = time.perf_counter()
    try:
        poses = _solve(corrs, solver)
    except Pose3rError:
        poses = []
    dt = time.perf_counter() - t0
    if not poses:
        return np.nan, np.nan, dt
    errs = [(rotation_error_deg(p.R, gt.R), translation_error_rel(p.t, gt.t)) for p in poses]
    re, te = min(errs)
    return re, te, dt


def _run_cell(args):
    spec, trials, solver = args
    return [run_trial(spec, i, solver) for i in range(trials)]


def threads():
    try:
        return max(1, int(os.environ.get("POSE3R_THREADS", "1")))
    except ValueError:
        return 1


def run_benchmark(grid, trials, solver="ls"):
    """Statistics per grid cell as a list of dicts with BENCH_COLUMNS keys.

    Trial i of a cell uses a seed derived from (cell seed, i), so results do
    not depend on scheduling. Failures are counted, not raised.
    """
    rows = []
    if trials <= 0:
        return rows
    jobs = [(spec, trials, solver) for spec in grid]
    nt = threads()
    if nt > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(nt) as ex:
            results = list(ex.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    for i, (spec, res) in enumerate(zip(grid, results)):
        res = np.array(res)
        ok = np.isfinite(res[:, 0])
        re, te = res[ok, 0], res[ok, 1]
        n_pl, n_l, n_p = spec.n_planes, spec.n_lines, spec.n_points
        eff = spec.effective_n if spec.effective_n is not None else n_pl + 2 * n_l + 3 * n_p
        if spec.effective_n is not None:
            n_pl = n_l = n_p = -1
        rows.append(dict(
            cell=i, n_planes=n_pl, n_lines=n_l, n_points=n_p, effective_n=eff,
            sigma=spec.noise_sigma, trials=trials,
            mean_rot_deg=float(np.mean(re)) if ok.any() else np.nan,
            median_rot_deg=float(np.median(re)) if ok.any() else np.nan,
            mean_trans_rel=float(np.mean(te)) if ok.any() else np.nan,
            median_trans_rel=float(np.median(te)) if ok.any() else np.nan,
            mean_time_ms=float(1000 * np.mean(res[:, 2])),
            failures=int((~ok).sum())))
    return rows


def n_grid(n_min=7, n_max=15, sigma=0.05, seed=0):
    return [SynthSpec(effective_n=N, noise_sigma=sigma, seed=seed) for N in range(n_min, n_max + 1)]


def sigma_grid(sigmas=(0.01, 0.03, 0.05, 0.07, 0.09, 0.11), seed=0, n_points=5, effective_n=10):
    """Noise sweep at fixed effective count.

    Two series: point-only with n_points points, and a mixed split with
    effective count effective_n.
    """
    grid = [SynthSpec(n_points=n_points, noise_sigma=s, seed=seed) for s in sigmas]
    grid += [SynthSpec(effective_n=effective_n, noise_sigma=s, seed=seed + 1) for s in sigmas]
    return grid
