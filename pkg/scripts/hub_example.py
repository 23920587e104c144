"""Exact collision moments on a small tree with one high-degree vertex.

Shows that E Z can exceed the return Green function G(0,0) when degrees
differ, while R(0 <-> exits) * degree bounds still bracket it.
"""

from fractions import Fraction

import numpy as np

from ustcollide import RngStream, exact_moments, sample_Z_many
from ustcollide.network import green_diagonal, resistance_tree
from ustcollide.treemetrics import IntrinsicBall


def main():
    # origin (degree 1) -> hub with four leaves and one exit edge
    ball = IntrinsicBall.from_structure([-1, 0, 1, 1, 1, 1], [1])
    m = exact_moments(ball)
    z = sample_Z_many(ball, 100_000, RngStream(7))
    R = resistance_tree(ball)
    print(f"E Z exact      {m.EZ:.6f}  ({Fraction(m.EZ).limit_denominator(1000)})")
    print(f"E Z simulated  {z.mean():.6f} +- {z.std(ddof=1) / np.sqrt(len(z)):.6f}")
    print(f"G(0,0)         {green_diagonal(ball):.6f}")
    print(f"R * min/max deg  [{R * ball.degrees.min():.3f}, {R * ball.degrees.max():.3f}]")


if __name__ == "__main__":
    main()
