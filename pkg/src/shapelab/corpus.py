"""Seeded random test data with known shape.

Non-increasing data are cumulative sums of negative increments; convex data
come from sorted random slopes.  All generators take a
``numpy.random.Generator`` so runs are reproducible from a seed.
"""
from __future__ import annotations

import numpy as np

from .functions import Table, Tanh
from .grid import Extension, Grid, GridFunction, sample
from .shape import approximate_convex


def random_nonincreasing(rng: np.random.Generator, grid: Grid, n_knots: int = 8,
                         margin: float = 0.2, base: float = 0.0) -> GridFunction:
    """Non-increasing, nonnegative table function, constant near both window edges.

    Knots lie inside the central (1 - 2 margin) part of the window; values are
    ``base`` plus the reversed cumulative sum of positive drops.
    """
    L = grid.b - grid.a
    lo, hi = grid.a + margin * L, grid.b - margin * L
    knots = np.sort(rng.uniform(lo, hi, n_knots))
    knots[0], knots[-1] = lo, hi
    knots = np.unique(knots)
    drops = rng.exponential(1.0, len(knots) - 1)
    values = base + np.concatenate([np.cumsum(drops[::-1])[::-1], [0.0]])
    return sample(Table(tuple(knots), tuple(values)), grid)


def random_sigmoid(rng: np.random.Generator, grid: Grid, width=(0.5, 2.0)) -> GridFunction:
    """Smooth non-increasing, nonnegative tanh step centred in the window."""
    L = grid.b - grid.a
    mid = 0.5 * (grid.a + grid.b)
    amp = rng.uniform(0.5, 2.0)
    center = mid + rng.uniform(-0.1, 0.1) * L
    w = rng.uniform(*width)
    floor = rng.uniform(0.0, 1.0)
    return sample(Tanh(-0.5 * amp, center, w, 0.5 * amp + floor), grid)


def random_convex_pl(rng: np.random.Generator, grid: Grid, n_knots: int = 6,
                     zero_ends: bool = True):
    """Convex piecewise-linear samples with kinks at random grid nodes.

    Returns (f, mesh) with ``mesh`` the kink node indices including both
    endpoints.  With ``zero_ends`` a linear function is subtracted so that
    f(a) = f(b) = 0, which makes f <= 0.
    """
    interior = rng.choice(np.arange(3, grid.n - 3), size=n_knots, replace=False)
    mesh = np.unique(np.concatenate([[0], interior, [grid.n - 1]]))
    slopes = np.sort(rng.normal(0.0, 1.0, len(mesh) - 1))
    x = grid.x
    knot_x = x[mesh]
    knot_v = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knot_x))])
    values = np.interp(x, knot_x, knot_v)
    if zero_ends:
        values = values - (knot_v[0] + (knot_v[-1] - knot_v[0]) * (x - x[0]) / (x[-1] - x[0]))
        values[[0, -1]] = 0.0
    return GridFunction(grid, values, Extension.CONSTANT), [int(i) for i in mesh]


def random_negative_convex(rng: np.random.Generator, grid: Grid, n_knots: int = 6,
                           smoothing: float = 0.4) -> GridFunction:
    """Negative convex data: a random convex piecewise-linear function with
    zero end values, corners rounded by the convex blend.  The blend radius is
    ``smoothing`` times half the smallest knot gap."""
    f, mesh = random_convex_pl(rng, grid, n_knots)
    gaps = np.diff(grid.x[mesh])
    radius = smoothing * 0.5 * float(np.min(gaps))
    radius = min(radius, 0.9 * (float(min(gaps[0], gaps[-1])) - 2 * grid.h))
    return approximate_convex(f, mesh, max(radius, 0.0))
