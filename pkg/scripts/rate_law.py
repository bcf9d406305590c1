"""Compare the measured RAS convergence rate with the squared second singular value.

Usage: python scripts/rate_law.py [--n 10] [--trials 5] [--seed 0]
"""
import argparse

import numpy as np

from scalekit import MarginSpec, SolverConfig, ras_scale, rate_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    m = MarginSpec.uniform(args.n)
    cfg = SolverConfig(tol=1e-13, max_iters=20000)
    print(f"{'trial':>5} {'iters':>6} {'measured':>10} {'sigma2^2':>10} {'ratio':>7}")
    for t in range(args.trials):
        A = np.eye(args.n) + 0.02 * rng.uniform(size=(args.n, args.n))
        res = ras_scale(A, m, cfg)
        est = rate_estimate(res.trace, res.B, window=20)
        ratio = est.measured_rate / est.sigma2_squared
        print(f"{t:>5} {res.iterations:>6} {est.measured_rate:>10.6f} "
              f"{est.sigma2_squared:>10.6f} {ratio:>7.4f}")


if __name__ == "__main__":
    main()
