"""Compare ball statistics across container factors on identical seeds.

The sampled tree is the wired UST of a finite box standing in for the
infinite tree; this reports how much the box size moves the quantities
used downstream.
"""

import argparse
import json

import numpy as np

from ustcollide.cli import sample_tree
from ustcollide.network import resistance_tree
from ustcollide.treemetrics import intrinsic_ball


def summarise(r, trees, factor, seed):
    sizes, reff = [], []
    for i in range(trees):
        tree = sample_tree(r, i, seed, factor)
        ball = intrinsic_ball(tree, (0, 0, 0), r)
        sizes.append(len(ball))
        reff.append(resistance_tree(ball))
    sizes, reff = np.array(sizes), np.array(reff)
    return {
        "factor": factor, "r": r, "trees": trees,
        "ball_size_mean": float(sizes.mean()), "ball_size_se": float(sizes.std(ddof=1) / np.sqrt(trees)),
        "reff_mean": float(reff.mean()), "reff_se": float(reff.std(ddof=1) / np.sqrt(trees)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=int, default=15)
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--factors", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for f in args.factors:
        print(json.dumps(summarise(args.r, args.trees, f, args.seed)))


if __name__ == "__main__":
    main()
