"""Estimate P(Z_B >= N) on one tree for growing N with B = B_U(0, N/eps).

A probability that stays above eps^2/12 as N grows is the signature of
infinitely many collisions.
"""

import argparse
import json
from dataclasses import asdict

from ustcollide import RngStream, infinite_collision_demo
from ustcollide.cli import sample_tree


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[2, 4, 8])
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--runs", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    radius = int(max(args.N) / args.eps) + 1
    tree = sample_tree(radius, 0, args.seed, 4.0)
    for cert in infinite_collision_demo(tree, args.N, RngStream(args.seed).child(10**6), args.eps, args.runs):
        print(json.dumps(asdict(cert)))


if __name__ == "__main__":
    main()
