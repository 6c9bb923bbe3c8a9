import numpy as np
import pytest

from pose3r.cgr import rotation_to_cgr
from pose3r.errors import DegenerateError, UnsupportedConfigurationError
from pose3r.geometry import CorrespondenceSet, Pose, residual_arrays, rotation_error_deg
from pose3r.minimal import (CONFIGS, MinimalConfig, build_minimal_equations, quadratic_rows,
                            reduce_to_quadrics, select_six, solve_minimal)
from pose3r.polysys import quadric_monomials
from pose3r.synth import SynthSpec, generate


def _planted(cfg, seed, pose=None):
    n_p, n_l, n_pl = cfg
    corrs, gt = generate(SynthSpec(n_points=n_p, n_lines=n_l, n_planes=n_pl, seed=seed))
    return corrs, gt


def test_config_counts():
    assert MinimalConfig.from_tag("Pt0L0Pl6").n_equations == 6
    assert MinimalConfig.from_tag("Pt2L0Pl1").n_equations == 7
    assert len(CONFIGS) == 7
    with pytest.raises(UnsupportedConfigurationError):
        MinimalConfig(1, 1, 0)
    with pytest.raises(UnsupportedConfigurationError):
        MinimalConfig.from_tag("Pt9")


def test_quadratic_rows_match_residuals(rng):
    # C x(s) + A y = (1 + s^T s) r with y = (1 + s^T s) t
    corrs, _ = generate(SynthSpec(n_points=2, n_lines=2, n_planes=2, seed=1))
    eqs = build_minimal_equations.__wrapped__(corrs) if hasattr(build_minimal_equations, "__wrapped__") else None
    from pose3r.geometry import general_row_arrays

    a, b, c = general_row_arrays(corrs)
    C = quadratic_rows(a, b, c)
    for _ in range(20):
        s = rng.standard_normal(3)
        t = rng.standard_normal(3)
        w = 1 + s @ s
        rp, rl, rq = residual_arrays(corrs, Pose.from_cgr(s, t))
        r = np.concatenate([rp, rl.ravel(), rq.ravel()])
        np.testing.assert_allclose(C @ quadric_monomials(s) + a @ (w * t), w * r, atol=1e-10)


def test_quadrics_vanish_at_ground_truth():
    for seed, cfg in enumerate(CONFIGS):
        corrs, gt = _planted(cfg, seed)
        blocks = select_six(build_minimal_equations(corrs))
        K, Ymap = reduce_to_quadrics(blocks)
        s = rotation_to_cgr(gt.R)
        x = quadric_monomials(s)
        assert np.abs(K @ x).max() <= 1e-9 * np.abs(K).max() * max(1, s @ s)
        np.testing.assert_allclose(Ymap @ x, (1 + s @ s) * gt.t, atol=1e-9 * (1 + s @ s) * 10)


def test_zero_rotation_constant_terms():
    corrs, gt = generate(SynthSpec(n_points=1, n_lines=1, n_planes=1, seed=2))
    ident = CorrespondenceSet.from_arrays(
        plane_x=corrs.plane_x, plane_n=corrs.plane_n, plane_y=corrs.plane_x + gt.t,
        line_x=corrs.line_x, line_d=corrs.line_d, line_y=corrs.line_x + gt.t,
        point_x=corrs.point_x, point_y=corrs.point_x + gt.t)
    K, _ = reduce_to_quadrics(select_six(build_minimal_equations(ident)))
    assert np.abs(K[:, 9]).max() <= 1e-12 * np.abs(K).max()


def test_every_config_recovers():
    for cfg, tag in CONFIGS.items():
        for seed in range(20):
            corrs, gt = _planted(cfg, 1000 + seed)
            poses, info = solve_minimal(corrs, return_info=True)
            assert info["config"] == tag
            assert 0 < len(poses) <= 8
            assert min(rotation_error_deg(p.R, gt.R) for p in poses) < 1e-6
            assert max(info["max_residuals"]) < 1e-8 * 100


def test_parallel_planes_degenerate():
    rng = np.random.default_rng(0)
    n = np.tile([[0.0, 0.0, 1.0]], (6, 1))
    corrs = CorrespondenceSet.from_arrays(plane_x=rng.standard_normal((6, 3)), plane_n=n,
                                          plane_y=rng.standard_normal((6, 3)))
    with pytest.raises(DegenerateError):
        solve_minimal(corrs)


def test_unsupported_counts():
    corrs, _ = generate(SynthSpec(n_points=3, seed=0))
    with pytest.raises(UnsupportedConfigurationError):
        solve_minimal(corrs)


def test_every_triple_split_recovers():
    # downstream recovery works for any admissible well-conditioned split, not just the best one
    import itertools

    from pose3r.minimal import _compressed_rows
    from pose3r.polysys import solve_three_quadrics

    corrs, gt = _planted((0, 0, 6), 5)
    C, A, _ = _compressed_rows(build_minimal_equations(corrs))
    s_gt = rotation_to_cgr(gt.R)
    for tri in itertools.combinations(range(6), 3):
        rest = [i for i in range(6) if i not in tri]
        if np.linalg.cond(A[list(tri)]) > 1e8:
            continue
        K, _ = reduce_to_quadrics((C[list(tri)], A[list(tri)], C[rest], A[rest]))
        sols = solve_three_quadrics(K)
        assert min(np.abs(s - s_gt).max() for s in sols) < 1e-7
