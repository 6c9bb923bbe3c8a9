import numpy as np
import pytest

from pose3r.errors import DegenerateMetricError, InvalidInputError
from pose3r.geometry import (CorrespondenceSet, Pose, PointToLine, PointToPlane, PointToPoint, cost,
                             general_row_arrays, residual_line, residual_plane, residual_point,
                             rotation_error_deg, to_general_rows, translation_error_rel)
from pose3r.synth import SynthSpec, generate

from conftest import random_pose


def test_plane_examples():
    assert residual_plane(PointToPlane([1, 2, 3], [0, 0, 1], [0, 0, 5]), Pose.identity()) == -2
    assert residual_plane(PointToPlane([0, 0, 0], [1, 0, 0], [0, 0, 0]), Pose(np.eye(3), [4, 5, 6])) == 4


def test_line_examples(rng):
    np.testing.assert_array_equal(residual_line(PointToLine([1, 2, 3], [0, 0, 1], [0, 0, 0]), Pose.identity()),
                                  [1, 2, 0])
    P = random_pose(rng)
    x = rng.standard_normal(3)
    d = rng.standard_normal(3)
    d /= np.linalg.norm(d)
    on = P.apply(x) + 2.5 * d
    np.testing.assert_allclose(residual_line(PointToLine(x, d, on), P), 0, atol=1e-12)
    r = residual_line(PointToLine(x, d, rng.standard_normal(3)), P)
    assert abs(r @ d) < 1e-12


def test_point_examples(rng):
    np.testing.assert_array_equal(residual_point(PointToPoint([1, 2, 3], [1, 2, 3]), Pose.identity()), 0)
    np.testing.assert_array_equal(residual_point(PointToPoint([1, 0, 0], [0, 0, 0]), Pose(np.eye(3), [0, 1, 0])),
                                  [1, 1, 0])
    P = random_pose(rng)
    x = rng.standard_normal(3)
    np.testing.assert_allclose(residual_point(PointToPoint(x, P.apply(x)), P), 0, atol=1e-12)


def test_unit_normalization():
    c = PointToPlane([0, 0, 0], [0, 0, 1 + 5e-7], [0, 0, 0])
    assert np.linalg.norm(c.n) == pytest.approx(1, abs=1e-15)
    with pytest.raises(InvalidInputError):
        PointToPlane([0, 0, 0], [0, 0, 2], [0, 0, 0])
    with pytest.raises(InvalidInputError):
        PointToPoint([0, np.nan, 0], [0, 0, 0])


def test_pose_invariants():
    with pytest.raises(InvalidInputError):
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(InvalidInputError):
        Pose(np.eye(3) * 1.001, np.zeros(3))


def test_general_rows_match_residuals(rng):
    for _ in range(20):
        corrs, _ = generate(SynthSpec(n_points=2, n_lines=3, n_planes=4, seed=int(rng.integers(1e9))))
        P = random_pose(rng)
        rows = to_general_rows(corrs)
        ev = np.array([r.evaluate(P) for r in rows])
        ref = np.concatenate([[residual_plane(c, P) for c in corrs.planes],
                              np.concatenate([residual_line(c, P) for c in corrs.lines]),
                              np.concatenate([residual_point(c, P) for c in corrs.points])])
        np.testing.assert_allclose(ev, ref, atol=1e-12)
        assert cost(corrs, P) == pytest.approx(float(ev @ ev), rel=1e-10)


def test_plane_row_form():
    c = PointToPlane([1, 2, 3], [0.6, 0.8, 0], [4, 5, 6])
    a, b, cc = general_row_arrays(CorrespondenceSet(planes=[c]))
    assert a.shape == (1, 3)
    np.testing.assert_array_equal(a[0], c.n)
    assert cc[0] == -(c.n @ c.y)


def test_counts():
    cs = CorrespondenceSet(planes=[PointToPlane([0, 0, 0], [0, 0, 1], [0, 0, 0])] * 2,
                           lines=[PointToLine([0, 0, 0], [0, 0, 1], [0, 0, 0])],
                           points=[PointToPoint([0, 0, 0], [1, 1, 1])] * 3)
    assert cs.counts == (2, 1, 3)
    assert cs.effective_count == 2 + 2 + 9
    assert cs.n_rows == 2 + 3 + 9
    assert cs.subset(planes=[0], points=[1, 2]).counts == (1, 0, 2)
    assert (cs + cs).counts == (4, 2, 6)


def test_cost_examples():
    cs = CorrespondenceSet(planes=[PointToPlane([1, 2, 3], [0, 0, 1], [0, 0, 5])])
    assert cost(cs, Pose.identity()) == 4.0
    corrs, gt = generate(SynthSpec(n_points=1, n_lines=1, n_planes=1, seed=0))
    assert cost(corrs, gt) < 1e-18


def test_error_metrics():
    R = random_pose(np.random.default_rng(0)).R
    assert rotation_error_deg(R, R) < 1e-6
    Rx = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    assert rotation_error_deg(R @ Rx, R) == pytest.approx(90.0, abs=1e-12)
    assert translation_error_rel([9, 0, 0], [10, 0, 0]) == pytest.approx(0.1)
    with pytest.raises(DegenerateMetricError):
        translation_error_rel([1, 0, 0], [0, 0, 0])
