import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from pose3r.cgr import cgr_to_rotation, rotation_to_cgr
from pose3r.errors import InsufficientDataError, TranslationDegenerateError
from pose3r.geometry import CorrespondenceSet, Pose, cost, general_row_arrays, residual_arrays, rotation_error_deg
from pose3r.lsq import (QuarticCost, StackedSystem, build_rational, build_stacked, cleared_gradient,
                        cost_derivatives, eliminate_translation, newton_refine, recover_pose,
                        solve_least_squares, stationarity_system, u_vector, xi_from_cgr)
from pose3r.polysys import solve_cubic_stationarity
from pose3r.synth import SynthSpec, ambiguous_fixture, generate

from conftest import random_pose


def _residual_vector(corrs, pose):
    rp, rl, rq = residual_arrays(corrs, pose)
    return np.concatenate([rp, rl.ravel(), rq.ravel()])


def test_stacked_shapes():
    corrs, _ = generate(SynthSpec(n_points=1, n_lines=1, n_planes=1, seed=0))
    st = build_stacked(corrs)
    assert st.A.shape == (7, 11) and st.B.shape == (7, 3)


def test_stacked_matches_residuals(rng):
    for _ in range(50):
        corrs, _ = generate(SynthSpec(effective_n=int(rng.integers(7, 20)), seed=int(rng.integers(1e9))))
        st = build_stacked(corrs)
        s = rng.standard_normal(3)
        t = rng.standard_normal(3) * 5
        u = u_vector(xi_from_cgr(s))
        np.testing.assert_allclose(st.A @ u + st.B @ t, _residual_vector(corrs, Pose.from_cgr(s, t)), atol=1e-12)
        # s = 0 is the identity rotation
        np.testing.assert_allclose(st.A @ u_vector([1, 0, 0, 0]) + st.B @ t,
                                   _residual_vector(corrs, Pose(np.eye(3), t)), atol=1e-12)


def test_eliminate_translation(rng):
    corrs, _ = generate(SynthSpec(effective_n=12, noise_sigma=0.1, seed=3))
    st = build_stacked(corrs)
    qc = eliminate_translation(st)
    assert np.abs(qc.Q - qc.Q.T).max() <= 1e-12
    for _ in range(20):
        u = u_vector(rng.standard_normal(4))
        val = u @ qc.Q @ u
        t_star = np.linalg.lstsq(st.B, -st.A @ u, rcond=None)[0]
        assert val == pytest.approx(np.sum((st.A @ u + st.B @ t_star) ** 2), rel=1e-10, abs=1e-10)
        for t in rng.standard_normal((100, 3)) * 3:
            assert val <= np.sum((st.A @ u + st.B @ t) ** 2) + 1e-9


def test_translation_degenerate():
    # every plane normal lies in the xy-plane: t_z is unobservable
    rng = np.random.default_rng(0)
    n = rng.standard_normal((8, 3))
    n[:, 2] = 0
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    corrs = CorrespondenceSet.from_arrays(plane_x=rng.standard_normal((8, 3)), plane_n=n,
                                          plane_y=rng.standard_normal((8, 3)))
    with pytest.raises(TranslationDegenerateError):
        eliminate_translation(build_stacked(corrs))


def test_stationarity_zero_and_odd(rng):
    sys0 = stationarity_system(QuarticCost(np.zeros((11, 11)), None, None))
    assert not np.any(sys0.coeffs)
    corrs, _ = generate(SynthSpec(effective_n=10, noise_sigma=0.05, seed=8))
    sys4 = stationarity_system(eliminate_translation(build_stacked(corrs)))
    for xi in rng.standard_normal((100, 4)):
        np.testing.assert_allclose(sys4.evaluate(-xi), -sys4.evaluate(xi), atol=1e-12)


def test_stationarity_finite_differences(rng):
    corrs, _ = generate(SynthSpec(effective_n=11, noise_sigma=0.05, seed=9))
    qc = eliminate_translation(build_stacked(corrs))
    sys4 = stationarity_system(qc)
    f = lambda x: u_vector(x) @ qc.Q @ u_vector(x)  # noqa: E731
    h = 1e-5
    for xi in rng.standard_normal((100, 4)):
        fd = np.array([(f(xi + h * e) - f(xi - h * e)) / (2 * h) for e in np.eye(4)])
        g = sys4.evaluate(xi)
        assert np.abs(g - fd).max() <= 1e-6 * max(1.0, np.abs(g).max())


def test_recover_pose_examples(rng):
    corrs, gt = generate(SynthSpec(effective_n=10, seed=11))
    qc = eliminate_translation(build_stacked(corrs))
    s, t = recover_pose([1.0, 0, 0, 0], qc)
    assert np.array_equal(s, np.zeros(3))
    xi = rng.standard_normal(4)
    s1, t1 = recover_pose(xi, qc)
    s2, t2 = recover_pose(-xi, qc)
    np.testing.assert_array_equal(s1, s2)
    np.testing.assert_allclose(t1, t2, atol=1e-12)
    # planted: a relaxation root reproduces the ground truth before refinement
    s_gt = rotation_to_cgr(gt.R)
    roots = solve_cubic_stationarity(stationarity_system(qc))
    errs = [np.abs(recover_pose(x, qc)[0] - s_gt).max() for x in roots]
    assert min(errs) < 1e-8


def test_rational_cost_matches_geometry(rng):
    corrs, _ = generate(SynthSpec(effective_n=13, noise_sigma=0.1, seed=12))
    rc = build_rational(corrs)
    for _ in range(50):
        s = rng.standard_normal(3)
        t = rng.standard_normal(3) * 4
        c = cost(corrs, Pose.from_cgr(s, t))
        assert rc.cost(s, t) == pytest.approx(c, rel=1e-10)
        assert rc.cost_cleared(s, t) / (1 + s @ s) ** 2 == pytest.approx(c, rel=1e-8)


def test_cleared_gradient_finite_differences(rng):
    corrs, _ = generate(SynthSpec(effective_n=12, noise_sigma=0.05, seed=13))
    rc = build_rational(corrs)
    h = 1e-6
    for _ in range(100):
        x = np.concatenate([rng.uniform(-1, 1, 3), rng.uniform(-5, 5, 3)])
        w = 1 + x[:3] @ x[:3]
        C = lambda y: cost(corrs, Pose.from_cgr(y[:3], y[3:]))  # noqa: E731
        fd = np.array([(C(x + h * e) - C(x - h * e)) / (2 * h) for e in np.eye(6)])
        G, J, _ = cleared_gradient(rc, x)
        ref = fd * np.array([w ** 3] * 3 + [w ** 2] * 3)
        assert np.abs(G - ref).max() <= 1e-6 * max(1.0, np.abs(ref).max())
        # Jacobian against differences of G itself
        Jfd = np.column_stack([(cleared_gradient(rc, x + h * e, False)[0] - cleared_gradient(rc, x - h * e, False)[0])
                               / (2 * h) for e in np.eye(6)])
        assert np.abs(J - Jfd).max() <= 1e-5 * max(1.0, np.abs(J).max())
        _, g, H = cost_derivatives(rc, x)
        np.testing.assert_allclose(g, fd, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_newton_fixed_point_and_noise_free():
    corrs, gt = generate(SynthSpec(effective_n=12, seed=14))
    rc = build_rational(corrs)
    c = newton_refine(rotation_to_cgr(gt.R), gt.t, rc)
    assert c.converged and c.newton_iters <= 1 and c.grad_norm <= 1e-10
    assert rotation_error_deg(c.pose.R, gt.R) < 1e-9


def test_newton_converges_from_nearby(rng):
    corrs, gt = generate(SynthSpec(effective_n=15, noise_sigma=0.02, seed=15))
    rc = build_rational(corrs)
    s0 = rotation_to_cgr(gt.R) + 0.05 * rng.standard_normal(3)
    c = newton_refine(s0, gt.t + 0.2, rc)
    assert c.converged and c.cost <= cost(corrs, gt)


def test_least_squares_noise_free():
    for seed in range(20):
        corrs, gt = generate(SynthSpec(effective_n=10 + seed % 6, seed=seed))
        cands = solve_least_squares(corrs)
        best = cands[0]
        assert best.selected
        assert rotation_error_deg(best.pose.R, gt.R) < 1e-6
        assert np.linalg.norm(best.pose.t - gt.t) / np.linalg.norm(gt.t) < 1e-6
        costs = [c.cost for c in cands]
        assert costs == sorted(costs)
        assert sum(c.selected for c in cands) == 1
        assert all(c.converged and c.grad_norm <= c.tol for c in cands)


def test_least_squares_ambiguous_lines():
    corrs, planted = ambiguous_fixture("lines", 3)
    cands = solve_least_squares(corrs)
    for P in planted:
        assert any(rotation_error_deg(c.pose.R, P.R) < 1e-6 and c.cost < 1e-10 for c in cands)
    # the prior picks the second planted pose
    for P in planted:
        sel = next(c for c in solve_least_squares(corrs, prior=P) if c.selected)
        assert rotation_error_deg(sel.pose.R, P.R) < 1e-6


def test_point_only_matches_procrustes(rng):
    for seed in range(10):
        corrs, _ = generate(SynthSpec(n_points=4, noise_sigma=0.05, seed=seed))
        x, y = corrs.point_x, corrs.point_y
        xc, yc = x - x.mean(0), y - y.mean(0)
        rot, _ = Rotation.align_vectors(yc, xc)
        R = rot.as_matrix()
        t = y.mean(0) - R @ x.mean(0)
        best = solve_least_squares(corrs)[0]
        assert rotation_error_deg(best.pose.R, R) < 1e-6
        assert np.abs(best.pose.t - t).max() < 1e-8


def test_least_squares_rejects_minimal():
    corrs, _ = generate(SynthSpec(n_points=1, n_lines=1, n_planes=1, seed=0))
    with pytest.raises(InsufficientDataError, match="solve-minimal"):
        solve_least_squares(corrs)


def test_keep_respects_minimum():
    corrs, _ = ambiguous_fixture("planes", 2)
    cands = solve_least_squares(corrs, keep=1)
    assert len(cands) == 3


def test_include_saddles_superset():
    corrs, _ = generate(SynthSpec(effective_n=8, noise_sigma=0.05, seed=21))
    a = solve_least_squares(corrs)
    b = solve_least_squares(corrs, include_saddles=True)
    assert len(b) >= len(a)
    assert all(c.is_minimizer for c in a)
