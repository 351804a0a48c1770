"""Dirichlet heat flow keeps negative convex data negative convex, while
convex data with nonzero boundary values lose convexity; Neumann flow loses
convexity of (x - pi/2)^2 near the walls."""
import math

import numpy as np

from shapelab.corpus import random_negative_convex
from shapelab.functions import Polynomial
from shapelab.grid import Grid, sample, second_difference
from shapelab.semigroups import DirichletHeat, NeumannHeat
from shapelab.shape import CONVEX, NEGATIVE_CONVEX, is_member


def main():
    g = Grid(0.0, math.pi, 513)
    rng = np.random.default_rng(0)
    f = random_negative_convex(rng, g)
    for t in (0.01, 0.1, 1.0):
        rep = is_member(DirichletHeat().apply(t, f), NEGATIVE_CONVEX)
        print(f"Dirichlet, negative convex data, t={t}: member={rep.member}")
    u = DirichletHeat().apply(0.05, sample(Polynomial((0.0, 0.0, 1.0)), g))
    print(f"Dirichlet, x^2, t=0.05: min second difference {np.min(second_difference(u).values[1:-1]):.2f}")
    q = sample(Polynomial((math.pi**2 / 4, -math.pi, 1.0)), g)
    rep = is_member(NeumannHeat().apply(0.1, q), CONVEX)
    print(f"Neumann, (x - pi/2)^2, t=0.1: member={rep.member}, witness x={rep.witness:.3f}")


if __name__ == "__main__":
    main()
