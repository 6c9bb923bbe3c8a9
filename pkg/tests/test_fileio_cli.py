import json
import os

import numpy as np
import pytest

from pose3r import cli, fileio
from pose3r.geometry import Pose, rotation_error_deg
from pose3r.synth import SynthSpec, generate

HERE = os.path.dirname(__file__)
SAMPLE = os.path.join(HERE, "..", "data", "sample_problem.json")


def _run(*argv):
    return cli.main([str(a) for a in argv])


def test_problem_round_trip_bit_exact(tmp_path):
    corrs, gt = generate(SynthSpec(n_points=2, n_lines=3, n_planes=4, noise_sigma=0.03, seed=5))
    p = tmp_path / "p.json"
    fileio.save_problem(p, corrs, prior=gt, ground_truth=gt, meta={"k": 1})
    back = fileio.load_problem(p)
    for name in ("plane_x", "plane_n", "plane_y", "line_x", "line_d", "line_y", "point_x", "point_y"):
        assert np.array_equal(getattr(back.corrs, name), getattr(corrs, name))
    assert np.array_equal(back.prior.R, gt.R) and np.array_equal(back.ground_truth.t, gt.t)
    assert back.meta == {"k": 1}


def test_solve_round_trip(tmp_path):
    p, s = tmp_path / "p.json", tmp_path / "s.json"
    assert _run("gen", "--effective-n", 11, "--seed", 3, "--output", p) == 0
    assert _run("solve-ls", "--input", p, "--output", s) == 0
    raw = json.loads(s.read_text())
    sol = fileio.load_solution(s)
    costs = [c["cost"] for c in raw["candidates"]]
    assert costs == sorted(costs)
    assert sum(c["selected"] for c in raw["candidates"]) == 1
    for c, r in zip(sol["candidates"], raw["candidates"]):
        assert list(c["pose"].R.ravel()) == r["R"] and list(c["pose"].t) == r["t"]
    # re-serializing parsed floats reproduces the file
    assert json.loads(json.dumps(raw)) == raw
    gt = fileio.load_problem(p).ground_truth
    assert rotation_error_deg(sol["candidates"][0]["pose"].R, gt.R) < 1e-6


def test_sample_fixture_expected_pose(tmp_path):
    s = tmp_path / "s.json"
    assert _run("solve-ls", "--input", SAMPLE, "--output", s) == 0
    best = fileio.load_solution(s)["candidates"][0]["pose"]
    expected = fileio.load_problem(SAMPLE).ground_truth
    assert rotation_error_deg(best.R, expected.R) < 1e-6
    np.testing.assert_allclose(best.t, [3.9473605811872776, -8.11645304224701, 9.512447032735118], atol=1e-8)


def test_minimal_input_rejected_by_ls(tmp_path, capsys):
    p = tmp_path / "m.json"
    _run("gen", "--np", 1, "--nl", 1, "--npl", 1, "--output", p)
    assert _run("solve-ls", "--input", p, "--output", tmp_path / "x.json") == 3
    err = json.loads(capsys.readouterr().err)
    assert "use solve-minimal" in err["message"]


def test_solve_minimal_cli(tmp_path):
    p, s = tmp_path / "m.json", tmp_path / "s.json"
    _run("gen", "--np", 1, "--nl", 1, "--npl", 1, "--seed", 9, "--output", p)
    assert _run("solve-minimal", "--input", p, "--output", s) == 0
    d = json.loads(s.read_text())
    assert d["metadata"]["configuration"] == "Pt1L1Pl1"
    assert 1 <= len(d["candidates"]) <= 8
    assert all("max_residual" in c for c in d["candidates"])
    p2 = tmp_path / "u.json"
    _run("gen", "--np", 2, "--nl", 1, "--output", p2)
    assert _run("solve-minimal", "--input", p2, "--output", s) == 3


def test_ransac_cli(tmp_path, capsys):
    p, s = tmp_path / "p.json", tmp_path / "r.json"
    _run("gen", "--nl", 6, "--npl", 10, "--sigma", 0.01, "--seed", 2, "--output", p)
    assert _run("ransac", "--input", p, "--sigma", 0.01, "--seed", 4, "--output", s) == 0
    d = json.loads(s.read_text())
    assert len(d["inliers"]) == 16 and all(d["inliers"])
    assert _run("ransac", "--input", p, "--threshold", 0.05) == 0
    assert json.loads(capsys.readouterr().out)["solver"] == "ransac"


def test_all_minima_and_prior(tmp_path):
    p, s = tmp_path / "a.json", tmp_path / "s.json"
    _run("gen", "--ambiguous", "planes", "--seed", 1, "--output", p)
    assert _run("solve-ls", "--input", p, "--output", s, "--all-minima") == 0
    n_all = len(json.loads(s.read_text())["candidates"])
    prob = fileio.load_problem(p)
    assert n_all >= 3
    # prior file: a plain pose
    for P in prob.planted:
        pf = tmp_path / "prior.json"
        pf.write_text(json.dumps(fileio.pose_to_dict(P)))
        assert _run("solve-ls", "--input", p, "--output", s, "--prior", pf) == 0
        sel = next(c for c in fileio.load_solution(s)["candidates"] if c["selected"])
        assert rotation_error_deg(sel["pose"].R, P.R) < 1e-6


def test_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "pose3r.problem",\n "version": 1,\n "planes": [}')
    assert _run("solve-ls", "--input", bad, "--output", tmp_path / "o.json") == 2
    assert "line 3" in json.loads(capsys.readouterr().err)["message"]
    bad.write_text(json.dumps({"schema": "pose3r.problem", "version": 1,
                               "lines": [{"x": [0, 0, 0], "d": [0, 0, 3], "y": [0, 0, 0]}]}))
    with pytest.raises(fileio.ParseError):
        fileio.load_problem(bad)
    bad.write_text(json.dumps({"schema": "pose3r.problem", "version": 1,
                               "points": [{"x": [0, 0, "a"], "y": [0, 0, 0]}]}))
    with pytest.raises(fileio.ParseError, match=r"points\[0\]\.x\[2\]"):
        fileio.load_problem(bad)
    assert _run("solve-ls", "--input", tmp_path / "missing.json", "--output", tmp_path / "o.json") == 2


def test_near_unit_normalized_on_load(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"schema": "pose3r.problem", "version": 1,
                             "planes": [{"x": [0, 0, 0], "n": [0, 0, 1.0000005], "y": [0, 0, 0]}]}))
    assert np.linalg.norm(fileio.load_problem(p).corrs.plane_n[0]) == pytest.approx(1, abs=1e-15)


def test_solution_requires_one_selected():
    rec = fileio.candidate_record(Pose.identity(), 0.0)
    with pytest.raises(ValueError):
        fileio.solution_to_dict([rec], "x")


def test_bench_cli(tmp_path):
    csv = tmp_path / "b.csv"
    assert _run("bench", "--n-min", 9, "--n-max", 10, "--trials", 2, "--sigma", 0.01,
                "--sigmas", 0.01, 0.03, "--csv", csv, "--svg", tmp_path / "svg") == 0
    rows = fileio.read_csv(csv)
    assert len(rows) == 2 + 4
    assert list(rows[0]) == __import__("pose3r.synth", fromlist=["x"]).BENCH_COLUMNS
    assert sorted(os.listdir(tmp_path / "svg")) == ["rotation_vs_n.svg", "rotation_vs_sigma.svg",
                                                    "time_vs_n.svg", "translation_vs_n.svg"]


def test_gen_rejects_small_n(tmp_path):
    assert _run("gen", "--effective-n", 5, "--output", tmp_path / "x.json") == 2
