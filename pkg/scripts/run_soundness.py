#!/usr/bin/env python3
"""Empirical soundness check of the certification procedure.

Certifies one point of a hard linear classifier thousands of times with
fresh noise and counts how often the returned radius exceeds the true
distance to the decision boundary. With an exact binomial lower bound the
rate must stay below the failure probability alpha.

Usage: python scripts/run_soundness.py [--runs 2000] [--alpha 0.01]
"""

import argparse
import math

import numpy as np

from sween.numerics import NoiseStreamKey, std_normal_quantile
from sween.smoothing import certify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.01)
    ap.add_argument("--n0", type=int, default=50)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--p-true", type=float, default=0.86,
                    help="smoothed vote probability at the test point")
    ap.add_argument("--seed", type=int, default=99)
    args = ap.parse_args()

    x = np.array([args.sigma * std_normal_quantile(args.p_true), 0.0])
    true_radius = float(x[0])

    def prob_fn(batch):
        pos = (batch[:, 0] > 0.0).astype(float)
        return np.stack([1.0 - pos, pos], axis=1)

    violations = 0
    abstains = 0
    for run in range(args.runs):
        res = certify(prob_fn, x, args.sigma, args.n0, args.n, args.alpha, 1e9,
                      NoiseStreamKey(args.seed, point_index=run))
        if res.prediction == -1:
            abstains += 1
        elif res.prediction == 1 and res.radius > true_radius + 1e-12:
            violations += 1

    rate = violations / args.runs
    limit = args.alpha + 3.0 * math.sqrt(args.alpha / args.runs)
    print(f"true radius {true_radius:.4f}; {args.runs} runs at alpha={args.alpha}, "
          f"n0={args.n0}, n={args.n}")
    print(f"violations {violations} ({rate:.4f}), abstentions {abstains}; "
          f"bound {limit:.4f} -> {'OK' if rate <= limit else 'VIOLATED'}")


if __name__ == "__main__":
    main()
