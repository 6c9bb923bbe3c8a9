"""RANSAC over the minimal solver with a least-squares polish."""
import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoConsensusError, Pose3rError, UnsupportedConfigurationError
from .lsq import solve_least_squares
from .minimal import CONFIGS
from .synth import trial_seed

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class RansacParams:
    max_iterations: int = 1000
    threshold_plane: float = DEFAULT_THRESHOLD
    threshold_line: float = DEFAULT_THRESHOLD
    threshold_point: float = DEFAULT_THRESHOLD
    confidence: float = 0.99
    seed: int = 0
    polish_rounds: int = 3

    def __post_init__(self):
        if min(self.threshold_plane, self.threshold_line, self.threshold_point) <= 0:
            raise ValueError("thresholds must be > 0")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @classmethod
    def from_sigma(cls, sigma, **kw):
        """Thresholds of 3 sigma for every residual kind."""
        return cls(threshold_plane=3 * sigma, threshold_line=3 * sigma, threshold_point=3 * sigma, **kw)

    @classmethod
    def uniform(cls, threshold, **kw):
        return cls(threshold_plane=threshold, threshold_line=threshold, threshold_point=threshold, **kw)


@dataclass(frozen=True)
class RansacResult:
    pose: object
    inliers: np.ndarray
    iterations: int
    hypothesis_inliers: int
    polished: bool


def feasible_configs(corrs):
    """Minimal configurations that fit the available counts, fewest elements first."""
    n_pl, n_l, n_p = corrs.counts
    out = [(k, v) for k, v in CONFIGS.items() if k[0] <= n_p and k[1] <= n_l and k[2] <= n_pl]
    out.sort(key=lambda kv: (sum(kv[0]), kv[1]))
    return out


def inlier_mask(corrs, pose, params):
    return kernels.inlier_mask(
        corrs.plane_x, corrs.plane_n, corrs.plane_y, corrs.line_x, corrs.line_d, corrs.line_y,
        corrs.point_x, corrs.point_y, np.ascontiguousarray(pose.R), np.ascontiguousarray(pose.t),
        params.threshold_plane, params.threshold_line, params.threshold_point)


def _split(mask, corrs):
    n_pl, n_l, _ = corrs.counts
    idx = np.nonzero(mask)[0]
    return idx[idx < n_pl], idx[(idx >= n_pl) & (idx < n_pl + n_l)] - n_pl, idx[idx >= n_pl + n_l] - n_pl - n_l


def _effective(mask, corrs):
    p, l, q = _split(mask, corrs)
    return len(p) + 2 * len(l) + 3 * len(q)


def _required_iterations(ratio, m, confidence):
    if ratio >= 1.0:
        return 1
    if ratio <= 0.0:
        return np.inf
    p = ratio ** m
    if p <= 1e-300:
        return np.inf
    return np.log(1 - confidence) / np.log1p(-p)


def ransac_estimate(corrs, params=RansacParams()):
    """Robust pose. Returns RansacResult(pose, inlier mask, iterations, ...).

    The mask is ordered planes, lines, points. Each iteration draws from its
    own random stream seeded by (seed, iteration), so results are
    reproducible for a fixed seed.
    """
    from .minimal import solve_minimal

    if corrs.effective_count < 7:
        raise NoConsensusError("need an effective count of at least 7")
    cfgs = feasible_configs(corrs)
    if not cfgs:
        raise UnsupportedConfigurationError("no minimal configuration fits the available correspondence kinds")
    m_min = sum(cfgs[0][0])
    smallest = [kv for kv in cfgs if sum(kv[0]) == m_min]
    n_total = corrs.n_planes + corrs.n_lines + corrs.n_points
    best_mask, best_pose, best_n = None, None, -1
    limit = params.max_iterations
    it = 0
    while it < min(limit, params.max_iterations):
        rng = np.random.default_rng(trial_seed(params.seed, it))
        it += 1
        (n_p, n_l, n_pl), _ = smallest[int(rng.integers(len(smallest)))]
        sub = corrs.subset(planes=rng.choice(corrs.n_planes, n_pl, replace=False),
                           lines=rng.choice(corrs.n_lines, n_l, replace=False),
                           points=rng.choice(corrs.n_points, n_p, replace=False))
        try:
            poses = solve_minimal(sub)
        except Pose3rError:
            continue
        for pose in poses:
            mask = inlier_mask(corrs, pose, params)
            n = int(mask.sum())
            if n > best_n:
                best_mask, best_pose, best_n = mask, pose, n
                limit = _required_iterations(n / n_total, m_min, params.confidence)
    if best_mask is None or _effective(best_mask, corrs) < 7:
        raise NoConsensusError("no hypothesis reached an effective inlier count of 7")
    pose, mask, polished = best_pose, best_mask, False
    for _ in range(params.polish_rounds):
        p, l, q = _split(mask, corrs)
        try:
            cands = solve_least_squares(corrs.subset(p, l, q), prior=pose)
        except Pose3rError as e:
            log.debug("polish failed: %s", e)
            break
        new_pose = next(c.pose for c in cands if c.selected)
        new_mask = inlier_mask(corrs, new_pose, params)
        if np.any(best_mask & ~new_mask):
            break
        grew = new_mask.sum() > mask.sum()
        pose, mask, polished = new_pose, new_mask, True
        if not grew:
            break
    return RansacResult(pose, mask, it, best_n, polished)
