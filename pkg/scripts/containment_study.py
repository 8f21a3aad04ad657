"""How often a point of a polygon falls outside its smoothed over-approximation.

Samples random convex polygons and uniform points inside them, then reports the
fraction with positive membership margin, per epsilon, for the ``log(q)/eps``
threshold and for the looser ``log(q+1)/eps`` one.
"""

import argparse

import numpy as np

from setcbf.corpus import random_polygon, uniform_in_polygon
from setcbf.lse import lse_eps_plus_value
from setcbf.sets import eval_stack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.5, 1, 5, 20, 100])
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'eps':>7} {'out(log q)':>11} {'worst':>8} {'out(log q+1)':>13}")
    for eps in args.epsilons:
        out_q, out_q1, worst = 0, 0, -np.inf
        for _ in range(args.samples):
            q = int(rng.integers(3, 9))
            P = random_polygon(rng, q, eps)
            lam = rng.normal(size=3)
            x = uniform_in_polygon(rng, P, lam, 1)[0]
            v = lse_eps_plus_value(eval_stack(P, x, lam).F, eps)
            worst = max(worst, v - np.log(q) / eps)
            out_q += v > np.log(q) / eps
            out_q1 += v > np.log(q + 1) / eps
        print(f"{eps:7.3g} {out_q:>6}/{args.samples:<4} {worst:8.3g} {out_q1:>8}/{args.samples}")


if __name__ == "__main__":
    main()
