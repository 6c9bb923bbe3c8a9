"""Compiled vs pure-Python kernel timings.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]
"""
import argparse
import time

import numpy as np

from pose3r import kernels
from pose3r.lsq import build_rational, solve_least_squares
from pose3r.minimal import solve_minimal
from pose3r.polysys import CHEB_NODES
from pose3r.ransac import RansacParams, inlier_mask
from pose3r.synth import SynthSpec, generate


def _median_time(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def cases(rng):
    K = rng.standard_normal((3, 10))
    corrs, gt = generate(SynthSpec(effective_n=12, noise_sigma=0.01, seed=1))
    K22 = build_rational(corrs).K22
    x = rng.standard_normal(6) * 0.3
    big, _ = generate(SynthSpec(n_points=2000, n_lines=2000, n_planes=2000, noise_sigma=0.01, seed=2))
    params = RansacParams()
    mini, _ = generate(SynthSpec(n_points=1, n_lines=1, n_planes=1, seed=3))
    return [
        ("hidden_det_samples (9 nodes)", lambda: kernels.hidden_det_samples(K, CHEB_NODES)),
        ("cost_terms (value, grad, hess)", lambda: kernels.cost_terms(K22, x)),
        ("inlier_mask (6000 elements)", lambda: inlier_mask(big, gt, params)),
        ("solve_minimal Pt1L1Pl1", lambda: solve_minimal(mini)),
        ("solve_least_squares N=12", lambda: solve_least_squares(corrs)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    rows = []
    for name, fn in cases(np.random.default_rng(0)):
        times = {}
        for b in backends:
            prev = kernels.set_backend(b)
            try:
                fn()  # warm up
                times[b] = _median_time(fn, args.repeat)
            finally:
                kernels.set_backend(prev)
        rows.append((name, times))
    print(f"{'kernel':34s}" + "".join(f"{b + ' (ms)':>16s}" for b in backends) + f"{'speedup':>10s}")
    for name, times in rows:
        line = f"{name:34s}" + "".join(f"{1000 * times[b]:16.4f}" for b in backends)
        if "compiled" in times:
            line += f"{times['python'] / times['compiled']:9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
