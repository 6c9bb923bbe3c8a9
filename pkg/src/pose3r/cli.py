"""Command-line interface.

Exit codes: 0 ok, 2 parse/invalid input, 3 degenerate, 4 no solution or
no consensus, 5 internal numeric failure.
"""
import argparse
import json
import sys
import time

import numpy as np

from . import fileio
from .errors import InsufficientDataError, NoSolutionError, Pose3rError
from .geometry import cost, rotation_error_deg, translation_error_rel

DEFAULT_TOP = 3


def _gt_errors(problem, pose):
    gt = problem.ground_truth
    if gt is None:
        return None
    out = {"rotation_deg": rotation_error_deg(pose.R, gt.R)}
    if np.linalg.norm(gt.t) > 0:
        out["translation_rel"] = translation_error_rel(pose.t, gt.t)
    return out


def cmd_solve_ls(args):
    from .lsq import solve_least_squares

    prob = fileio.load_problem(args.input)
    if prob.corrs.effective_count < 7:
        raise InsufficientDataError(
            f"effective count {prob.corrs.effective_count} < 7; use solve-minimal")
    prior = fileio.load_pose(args.prior) if args.prior else None
    t0 = time.perf_counter()
    cands = solve_least_squares(prob.corrs, prior=prior)
    dt = time.perf_counter() - t0
    if not args.all_minima:
        top = cands[:DEFAULT_TOP]
        top += [c for c in cands[DEFAULT_TOP:] if c.selected]
        cands = top
    recs = [fileio.candidate_record(c.pose, c.cost, c.grad_norm, c.converged, c.selected,
                                    newton_iters=c.newton_iters, is_minimizer=c.is_minimizer)
            for c in cands]
    sel = next(c for c in cands if c.selected)
    meta = {"time_ms": 1000 * dt, "effective_n": prob.corrs.effective_count,
            "counts": dict(zip(("planes", "lines", "points"), prob.corrs.counts)),
            "prior_used": prior is not None}
    err = _gt_errors(prob, sel.pose)
    if err:
        meta["selected_vs_ground_truth"] = err
    fileio.save_solution(args.output, recs, "least_squares", meta)
    return 0


def cmd_solve_minimal(args):
    from .minimal import solve_minimal

    prob = fileio.load_problem(args.input)
    t0 = time.perf_counter()
    poses, info = solve_minimal(prob.corrs, return_info=True)
    dt = time.perf_counter() - t0
    if not poses:
        raise NoSolutionError("minimal solver returned no real solution")
    costs = [cost(prob.corrs, p) for p in poses]
    best = int(np.argmin(costs))
    recs = [fileio.candidate_record(p, c, 0.0, True, i == best, max_residual=r)
            for i, (p, c, r) in enumerate(zip(poses, costs, info["max_residuals"]))]
    meta = {"time_ms": 1000 * dt, "configuration": info["config"]}
    fileio.save_solution(args.output, recs, "minimal", meta)
    return 0


def cmd_ransac(args):
    from .ransac import DEFAULT_THRESHOLD, RansacParams, _split, ransac_estimate

    prob = fileio.load_problem(args.input)
    kw = dict(seed=args.seed, confidence=args.confidence, max_iterations=args.max_iterations)
    if args.threshold is not None:
        params = RansacParams.uniform(args.threshold, **kw)
    elif args.sigma is not None:
        params = RansacParams.from_sigma(args.sigma, **kw)
    else:
        params = RansacParams.uniform(DEFAULT_THRESHOLD, **kw)
    t0 = time.perf_counter()
    res = ransac_estimate(prob.corrs, params)
    dt = time.perf_counter() - t0
    inl = prob.corrs.subset(*_split(res.inliers, prob.corrs))
    rec = fileio.candidate_record(res.pose, cost(inl, res.pose), selected=True)
    meta = {"time_ms": 1000 * dt, "iterations": res.iterations, "n_inliers": int(res.inliers.sum()),
            "polished": res.polished, "seed": args.seed,
            "thresholds": [params.threshold_plane, params.threshold_line, params.threshold_point]}
    err = _gt_errors(prob, res.pose)
    if err:
        meta["selected_vs_ground_truth"] = err
    if args.output:
        fileio.save_solution(args.output, [rec], "ransac", meta, inliers=res.inliers)
    else:
        d = fileio.solution_to_dict([rec], "ransac", meta, inliers=res.inliers)
        print(json.dumps(d, indent=1, allow_nan=False))
    return 0


def cmd_bench(args):
    from .synth import BENCH_COLUMNS, n_grid, run_benchmark, sigma_grid

    rows = run_benchmark(n_grid(args.n_min, args.n_max, args.sigma, args.seed), args.trials)
    sig_rows = []
    if args.sigmas:
        sig_rows = run_benchmark(sigma_grid(tuple(args.sigmas), seed=args.seed), args.trials)
        for i, r in enumerate(sig_rows):
            r["cell"] = len(rows) + i
    fileio.write_csv(rows + sig_rows, args.csv, BENCH_COLUMNS)
    if args.svg:
        fileio.write_svg_charts(rows, args.svg, sig_rows)
    return 0


def cmd_gen(args):
    from .synth import SynthSpec, ambiguous_fixture, generate

    if args.ambiguous:
        corrs, planted = ambiguous_fixture(args.ambiguous, args.seed)
        fileio.save_problem(args.output, corrs, ground_truth=planted[0], planted=planted,
                            meta={"ambiguous": args.ambiguous, "seed": args.seed})
        return 0
    if args.effective_n is not None:
        spec = SynthSpec(effective_n=args.effective_n, noise_sigma=args.sigma, seed=args.seed)
    else:
        spec = SynthSpec(n_points=args.np, n_lines=args.nl, n_planes=args.npl,
                         noise_sigma=args.sigma, seed=args.seed)
    corrs, gt = generate(spec)
    fileio.save_problem(args.output, corrs, ground_truth=gt,
                        meta={"sigma": args.sigma, "seed": args.seed})
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="pose3r", description="Rigid pose from point, line and plane correspondences")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-ls", help="least-squares solve with local-minimizer enumeration")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--prior", help="pose file (or problem file with a prior) used to pick among minimizers")
    s.add_argument("--all-minima", action="store_true", help=f"write every minimizer (default: top {DEFAULT_TOP})")
    s.set_defaults(func=cmd_solve_ls)

    s = sub.add_parser("solve-minimal", help="minimal solve (6 effective constraints, or 2 points + 1 plane)")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_solve_minimal)

    s = sub.add_parser("ransac", help="robust estimate with RANSAC and least-squares polish")
    s.add_argument("--input", required=True)
    s.add_argument("--output")
    s.add_argument("--threshold", type=float, help="inlier threshold in meters for every residual kind")
    s.add_argument("--sigma", type=float, help="noise level; threshold becomes 3 sigma")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--confidence", type=float, default=0.99)
    s.add_argument("--max-iterations", type=int, default=1000)
    s.set_defaults(func=cmd_ransac)

    s = sub.add_parser("bench", help="synthetic benchmark to CSV")
    s.add_argument("--n-min", type=int, default=7)
    s.add_argument("--n-max", type=int, default=15)
    s.add_argument("--sigma", type=float, default=0.05)
    s.add_argument("--sigmas", type=float, nargs="*", help="also sweep these noise levels")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv", required=True)
    s.add_argument("--svg", help="directory for SVG line charts")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("gen", help="generate a synthetic problem file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--effective-n", type=int)
    g.add_argument("--ambiguous", choices=["lines", "planes", "mixed"])
    g.add_argument("--counts", action="store_true", help="use --np/--nl/--npl")
    s.add_argument("--np", type=int, default=0, help="point-to-point count")
    s.add_argument("--nl", type=int, default=0, help="point-to-line count")
    s.add_argument("--npl", type=int, default=0, help="point-to-plane count")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_gen)
    return p


def _fix_gen_argv(argv):
    # --np/--nl/--npl alone select the counts mode
    if argv and argv[0] == "gen" and not any(a in argv for a in ("--effective-n", "--ambiguous", "--counts")):
        if any(a in argv for a in ("--np", "--nl", "--npl")):
            return argv + ["--counts"]
    return argv


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_fix_gen_argv(argv))
    try:
        return args.func(args)
    except Pose3rError as e:
        err = {"error": type(e).__name__, "message": str(e), "exit_code": e.exit_code}
        print(json.dumps(err), file=sys.stderr)
        return e.exit_code
    except (ValueError, np.linalg.LinAlgError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": 5}), file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
