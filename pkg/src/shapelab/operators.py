"""Bounded operators on grid functions and their exponential series.

These are the bounded perturbations B of a generator: multiplication by a
coefficient, fixed shifts, the half-shift of the delayed diffusion problem,
and finite sums of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SeriesTruncationError
from .grid import Extension, GridFunction

SERIES_TOL = 1e-15
SERIES_CAP = 200


class BoundedOperator:
    """Base class: a linear map GridFunction -> GridFunction with a norm bound."""

    def apply(self, f: GridFunction) -> GridFunction:
        raise NotImplementedError

    def norm_bound(self) -> float:
        """Upper bound for the sup-norm operator norm."""
        raise NotImplementedError

    def __call__(self, f):
        return self.apply(f)

    def __add__(self, other):
        return OperatorSum((self, other))

    def __rmul__(self, c):
        return ScaledOperator(float(c), self)


def _coefficient_on(beta: GridFunction, f: GridFunction) -> np.ndarray:
    if beta.grid == f.grid:
        return beta.values
    return beta.at(f.grid.x)


@dataclass(frozen=True)
class ZeroOperator(BoundedOperator):
    def apply(self, f):
        return f.zeros_like()

    def norm_bound(self):
        return 0.0


@dataclass(frozen=True)
class MultiplicationOperator(BoundedOperator):
    """(B f)(x) = beta(x) f(x)."""

    beta: GridFunction

    def apply(self, f):
        values = _coefficient_on(self.beta, f) * f.values
        ext = Extension.ZERO if f.extension is Extension.ZERO else Extension.CONSTANT
        return GridFunction(f.grid, values, ext)

    def norm_bound(self):
        return self.beta.sup_norm()


@dataclass(frozen=True)
class ShiftOperator(BoundedOperator):
    """(B f)(x) = coefficient * f(x + offset), off-window values from f's extension."""

    offset: float
    coefficient: float = 1.0

    def apply(self, f):
        values = self.coefficient * f.at(f.grid.x + self.offset)
        ext = Extension.ZERO if f.extension is Extension.ZERO else Extension.CONSTANT
        return GridFunction(f.grid, values, ext)

    def norm_bound(self):
        return abs(self.coefficient)


@dataclass(frozen=True)
class HalfShiftOperator(BoundedOperator):
    """Swap the two halves of [a, b]: x in the left half reads f(x + L/2),
    x in the right half reads f(x - L/2); endpoint values pinned to zero.

    At the midpoint both branches read an endpoint value.
    """

    coefficient: float = 1.0
    pin_boundary: bool = True

    def apply(self, f):
        g = f.grid
        half = 0.5 * (g.b - g.a)
        mid = g.a + half
        x = g.x
        src = np.where(x <= mid, x + half, x - half)
        values = self.coefficient * f.at(src)
        if self.pin_boundary:
            values[[0, -1]] = 0.0
        return GridFunction(g, values, Extension.ZERO if self.pin_boundary else Extension.CONSTANT)

    def norm_bound(self):
        return abs(self.coefficient)


@dataclass(frozen=True)
class ScaledOperator(BoundedOperator):
    c: float
    op: BoundedOperator

    def apply(self, f):
        return self.c * self.op.apply(f)

    def norm_bound(self):
        return abs(self.c) * self.op.norm_bound()


@dataclass(frozen=True)
class OperatorSum(BoundedOperator):
    terms: tuple

    def apply(self, f):
        out = self.terms[0].apply(f)
        for op in self.terms[1:]:
            out = out + op.apply(f)
        return out

    def norm_bound(self):
        return float(sum(op.norm_bound() for op in self.terms))


def exp_series(op: BoundedOperator, h: float, f: GridFunction,
               tol: float = SERIES_TOL, cap: int = SERIES_CAP) -> GridFunction:
    """sum_k (h B)^k f / k!, stopped when a term's sup norm drops below ``tol``.

    Raises
    ------
    SeriesTruncationError
        If ``cap`` terms do not reach ``tol``.
    """
    total = f
    term = f
    for k in range(1, cap + 1):
        if term.sup_norm() < tol:
            return total
        term = (h / k) * op.apply(term)
        total = total + term
    if term.sup_norm() < tol:
        return total
    raise SeriesTruncationError(
        f"exponential series for h={h} did not reach term norm {tol} in {cap} terms "
        f"(last term norm {term.sup_norm():.3e}, bound {math.exp(h * op.norm_bound()):.3e})")
