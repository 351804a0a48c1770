"""Closed catalogue of analytic function descriptors.

Every descriptor is an immutable, vectorised callable.  One-dimensional
descriptors take an array ``x``; :class:`Polynomial2D` takes ``(x, y)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class FunctionSpec:
    dim = 1

    def __call__(self, *xs):
        raise NotImplementedError

    def __add__(self, other):
        return Combination(((1.0, self), (1.0, other)))

    def __mul__(self, c):
        return Combination(((float(c), self),))

    __rmul__ = __mul__

    def __neg__(self):
        return Combination(((-1.0, self),))

    def __sub__(self, other):
        return Combination(((1.0, self), (-1.0, other)))


@dataclass(frozen=True)
class Polynomial(FunctionSpec):
    """sum_k coeffs[k] * x**k (ascending powers)."""

    coeffs: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out


@dataclass(frozen=True)
class Exp(FunctionSpec):
    """scale * exp(rate * x) + offset."""

    scale: float = 1.0
    rate: float = 1.0
    offset: float = 0.0

    def __call__(self, x):
        return self.scale * np.exp(self.rate * np.asarray(x, dtype=float)) + self.offset


@dataclass(frozen=True)
class Trig(FunctionSpec):
    """amplitude * sin(freq * x + phase) (or cos)."""

    kind: str = "sin"
    amplitude: float = 1.0
    freq: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"unknown trig kind {self.kind!r}")

    def __call__(self, x):
        fn = np.sin if self.kind == "sin" else np.cos
        return self.amplitude * fn(self.freq * np.asarray(x, dtype=float) + self.phase) + self.offset


@dataclass(frozen=True)
class Tanh(FunctionSpec):
    """offset + amplitude * tanh((x - center) / width)."""

    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0
    offset: float = 0.0

    def __call__(self, x):
        return self.offset + self.amplitude * np.tanh((np.asarray(x, dtype=float) - self.center) / self.width)


@dataclass(frozen=True)
class PiecewiseLinear(FunctionSpec):
    """Linear interpolation through knots, linearly continued outside."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        if len(k) < 2 or len(k) != len(self.values) or np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing and match values")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        out = np.interp(x, k, v)
        lo_slope = (v[1] - v[0]) / (k[1] - k[0])
        hi_slope = (v[-1] - v[-2]) / (k[-1] - k[-2])
        out = np.where(x < k[0], v[0] + lo_slope * (x - k[0]), out)
        return np.where(x > k[-1], v[-1] + hi_slope * (x - k[-1]), out)


@dataclass(frozen=True)
class Table(FunctionSpec):
    """User table: linear interpolation, constant outside the table."""

    x: tuple
    values: tuple

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), np.asarray(self.x, float), np.asarray(self.values, float))


@dataclass(frozen=True)
class Polynomial2D(FunctionSpec):
    """sum over (i, j) of c * x**i * y**j."""

    terms: tuple  # ((i, j, c), ...)
    dim = 2

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for i, j, c in self.terms:
            out = out + c * x**i * y**j
        return out


@dataclass(frozen=True)
class Combination(FunctionSpec):
    """Weighted sum of catalogue members."""

    terms: tuple  # ((weight, spec), ...)

    @property
    def dim(self):
        return self.terms[0][1].dim

    def __call__(self, *xs):
        out = 0.0
        for w, spec in self.terms:
            out = out + w * spec(*xs)
        return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class Shifted(FunctionSpec):
    """x -> base(x + offset); used for exact translated continuations."""

    base: Callable
    offset: float

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) + self.offset)


def shifted(base, offset: float) -> Shifted:
    """base(x + offset), collapsing nested shifts."""
    if isinstance(base, Shifted):
        return Shifted(base.base, base.offset + offset)
    return Shifted(base, offset)


def constant(c: float) -> Polynomial:
    return Polynomial((float(c),))


def linear(slope: float, intercept: float = 0.0) -> Polynomial:
    return Polynomial((float(intercept), float(slope)))
