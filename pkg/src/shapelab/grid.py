"""Uniform grids, sampled functions, stencils and quadrature.

A :class:`GridFunction` is the concrete stand-in for an element of a function
space such as BUC(R), C[0, 1] or L^2(0, pi).  Values outside the sampling
window are described by its :class:`Extension`.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, GridError
from .functions import Combination, FunctionSpec, Polynomial

_SNAP = 1e-9  # relative (in units of h) distance at which a query snaps to a node


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [a, b] with ``n`` points per axis.

    Two-dimensional grids are the tensor product of the 1D grid with itself.
    """

    a: float
    b: float
    n: int
    dim: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.b > self.a:
            raise GridError(f"need finite a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < 3:
            raise GridError(f"need n >= 3 points, got {self.n}")
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.a + np.arange(self.n) * self.h
        x.flags.writeable = False
        return x

    @property
    def xmax(self) -> float:
        return float(self.x[-1])

    @property
    def shape(self):
        return (self.n,) * self.dim

    def mesh(self):
        """Coordinate arrays (X, Y) with ``indexing='ij'`` for 2D grids."""
        if self.dim != 2:
            raise DimensionError("mesh() is only defined for 2D grids")
        return np.meshgrid(self.x, self.x, indexing="ij")

    def refine(self) -> "Grid":
        """Grid with 2n - 1 points; every old point is a new even-indexed point."""
        return Grid(self.a, self.b, 2 * self.n - 1, self.dim)

    def with_dim(self, dim: int) -> "Grid":
        return Grid(self.a, self.b, self.n, dim)


class Extension(enum.Enum):
    """Behaviour of a sampled function outside its window.

    CONSTANT   -- f(x) = f(a) left of the window and f(b) right of it.
    REFLECT2F0 -- only for a = 0: f(x) = 2 f(0) - f(-x) for x < 0, constant on the right.
    ZERO       -- f vanishes outside the window.
    ANALYTIC   -- a callable gives the values outside the window.
    NONE       -- no information; off-window evaluation is an error.
    """

    CONSTANT = "constant"
    REFLECT2F0 = "reflect2f0"
    ZERO = "zero"
    ANALYTIC = "analytic"
    NONE = "none"


class GridFunction:
    """Immutable samples of a real function on a :class:`Grid`.

    Parameters
    ----------
    grid : Grid
    values : array_like
        Shape ``grid.shape``.
    extension : Extension
    analytic : callable, optional
        Required for ``Extension.ANALYTIC``; vectorised in x (or x, y in 2D).
    valid : array of bool, optional
        Entries that carry a value.  Invalid entries are NaN (e.g. stencil
        values that would need unavailable off-window data).
    """

    __slots__ = ("grid", "values", "extension", "analytic", "valid")

    def __init__(self, grid: Grid, values, extension: Extension = Extension.CONSTANT,
                 analytic: Optional[Callable] = None, valid=None):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise GridError(f"values shape {values.shape} does not match grid {grid.shape}")
        if valid is not None:
            valid = np.array(valid, dtype=bool)
            if valid.shape != grid.shape:
                raise GridError("valid mask shape does not match grid")
            if valid.all():
                valid = None
        check = values if valid is None else values[valid]
        if not np.all(np.isfinite(check)):
            bad = np.argwhere(~np.isfinite(values if valid is None else np.where(valid, values, 0.0)))[0]
            raise GridError(f"non-finite value at index {tuple(int(i) for i in bad)}")
        extension = Extension(extension)
        if extension is Extension.ANALYTIC and analytic is None:
            raise GridError("ANALYTIC extension needs a callable")
        if extension is Extension.REFLECT2F0 and (grid.a != 0.0 or grid.dim != 1):
            raise GridError("REFLECT2F0 extension requires a 1D grid with a = 0")
        values.flags.writeable = False
        if valid is not None:
            valid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "extension", extension)
        object.__setattr__(self, "analytic", analytic if extension is Extension.ANALYTIC else None)
        object.__setattr__(self, "valid", valid)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __repr__(self):
        return (f"GridFunction(grid={self.grid!r}, extension={self.extension.value}, "
                f"range=[{np.nanmin(self.values):.6g}, {np.nanmax(self.values):.6g}])")

    # -- construction helpers -------------------------------------------------
    def with_values(self, values, extension=None, analytic=None) -> "GridFunction":
        if extension is None:
            extension, analytic = self.extension, self.analytic
        return GridFunction(self.grid, values, extension, analytic)

    # -- evaluation -------------------------------------------------------------
    def at(self, xq) -> np.ndarray:
        """Evaluate at arbitrary points (1D).

        Inside the window: node values (queries within 1e-9 h of a node snap to
        it) and linear interpolation between nodes.  Outside: the extension.
        """
        if self.grid.dim != 1:
            raise DimensionError("at() is only defined for 1D functions")
        g = self.grid
        xq = np.asarray(xq, dtype=float)
        out = np.empty(xq.shape)
        pos = (xq - g.a) / g.h
        near = np.rint(pos)
        snap = np.abs(pos - near) < _SNAP
        pos = np.where(snap, near, pos)
        inside = (pos >= 0) & (pos <= g.n - 1)
        if np.any(inside):
            p = pos[inside]
            j = np.minimum(np.floor(p).astype(int), g.n - 2)
            theta = p - j
            v = self.values
            exact = theta == 0.0
            interp = v[j] + theta * (v[j + 1] - v[j])
            interp[theta == 1.0] = v[j + 1][theta == 1.0]
            out[inside] = np.where(exact, v[j], interp)
        left = pos < 0
        right = pos > g.n - 1
        if np.any(left):
            out[left] = self._outside(xq[left], left=True)
        if np.any(right):
            out[right] = self._outside(xq[right], left=False)
        return out

    def _outside(self, xq, left: bool):
        ext = self.extension
        if ext is Extension.NONE:
            raise GridError(f"no extension: cannot evaluate at x={float(xq.flat[0])!r}")
        if ext is Extension.ZERO:
            return np.zeros(xq.shape)
        if ext is Extension.ANALYTIC:
            return np.asarray(self.analytic(xq), dtype=float) * np.ones(xq.shape)
        if ext is Extension.REFLECT2F0 and left:
            return 2.0 * self.values[0] - self.at(-xq)
        return np.full(xq.shape, self.values[0] if left else self.values[-1])

    def has_extension(self) -> bool:
        return self.extension is not Extension.NONE

    # -- arithmetic -------------------------------------------------------------
    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            values = op(self.values, other.values)
            ext, analytic = _combined_extension(self, other, op)
            return GridFunction(self.grid, values, ext, analytic)
        c = float(other)
        analytic = None
        ext = self.extension
        if ext is Extension.ANALYTIC:
            analytic = _spec_scalar_op(self.analytic, c, op)
            if analytic is None:
                ext = Extension.CONSTANT
        if ext is Extension.ZERO and op(0.0, c) != 0.0:
            ext = Extension.CONSTANT
        if ext is Extension.REFLECT2F0 and op is not np.multiply:
            ext = Extension.CONSTANT
        return GridFunction(self.grid, op(self.values, c), ext, analytic)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return NotImplemented
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __neg__(self):
        return self * -1.0

    def sup_norm(self) -> float:
        v = self.values if self.valid is None else self.values[self.valid]
        return float(np.max(np.abs(v))) if v.size else 0.0

    norm = sup_norm

    def zeros_like(self) -> "GridFunction":
        return GridFunction(self.grid, np.zeros(self.grid.shape), Extension.ZERO)

    # -- serialisation ----------------------------------------------------------
    def to_csv(self, target=None) -> str:
        """Write ``x,value`` (or ``x,y,value``) rows with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.grid.dim == 1:
            w.writerow(["x", "value"])
            for x, v in zip(self.grid.x, self.values):
                w.writerow([_fmt(x), _fmt(v)])
        else:
            w.writerow(["x", "y", "value"])
            X, Y = self.grid.mesh()
            for x, y, v in zip(X.ravel(), Y.ravel(), self.values.ravel()):
                w.writerow([_fmt(x), _fmt(y), _fmt(v)])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, extension=Extension.CONSTANT) -> "GridFunction":
        text = source if "\n" in str(source) else open(source).read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        if header == ["x", "value"]:
            x, v = body[:, 0], body[:, 1]
            return cls(Grid(x[0], x[-1], len(x)), v, extension)
        if header == ["x", "y", "value"]:
            n = int(round(math.sqrt(len(body))))
            x = body[:, 0].reshape(n, n)[:, 0]
            return cls(Grid(x[0], x[-1], n, 2), body[:, 2].reshape(n, n), extension)
        raise GridError(f"unrecognised CSV header {header}")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridError(f"grid mismatch: {f.grid} vs {g.grid}")


def _spec_scalar_op(spec, c, op):
    """Catalogue form of spec (op) c, or None when spec is not a catalogue member."""
    if not isinstance(spec, FunctionSpec):
        return None
    if op is np.multiply:
        return Combination(((c, spec),))
    if op is np.add:
        return Combination(((1.0, spec), (c, Polynomial((1.0,)))))
    if op is np.subtract:
        return Combination(((1.0, spec), (-c, Polynomial((1.0,)))))
    return None


def _combined_extension(f, g, op):
    # Only catalogue descriptors are combined symbolically; arbitrary closures
    # would nest without bound along long compositions.
    if (f.extension is Extension.ANALYTIC and g.extension is Extension.ANALYTIC
            and isinstance(f.analytic, FunctionSpec) and isinstance(g.analytic, FunctionSpec)
            and op in (np.add, np.subtract)):
        sign = 1.0 if op is np.add else -1.0
        return Extension.ANALYTIC, Combination(((1.0, f.analytic), (sign, g.analytic)))
    if f.extension is g.extension and f.extension in (Extension.CONSTANT, Extension.ZERO,
                                                      Extension.REFLECT2F0):
        return f.extension, None
    if Extension.NONE in (f.extension, g.extension):
        return Extension.NONE, None
    return Extension.CONSTANT, None


# -- construction ------------------------------------------------------------------

def sample(spec, grid: Grid, extension: Optional[Extension] = None) -> GridFunction:
    """Sample an analytic descriptor on ``grid``.

    The default extension is ANALYTIC (the descriptor itself continues the
    function outside the window).
    """
    if grid.dim == 1:
        values = np.asarray(spec(grid.x), dtype=float) * np.ones(grid.n)
    else:
        X, Y = grid.mesh()
        values = np.asarray(spec(X, Y), dtype=float) * np.ones(grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        pt = grid.x[idx[0]] if grid.dim == 1 else (grid.x[idx[0]], grid.x[idx[1]])
        raise GridError(f"non-finite sample at index {idx}, point {pt}")
    if extension is None:
        extension = Extension.ANALYTIC
    extension = Extension(extension)
    return GridFunction(grid, values, extension, spec if extension is Extension.ANALYTIC else None)


# -- stencils ----------------------------------------------------------------------

def _require_1d(f: GridFunction):
    if f.grid.dim != 1:
        raise DimensionError("operation needs a 1D grid function")


def first_difference(f: GridFunction) -> GridFunction:
    """Central first difference.

    Endpoints use the central stencil with off-window values from the
    extension; without an extension the one-sided second-order stencil.
    """
    _require_1d(f)
    v, h, g = f.values, f.grid.h, f.grid
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    if f.has_extension():
        outside = f.at(np.array([g.a - h, g.xmax + h]))
        d[0] = (v[1] - outside[0]) / (2 * h)
        d[-1] = (outside[1] - v[-2]) / (2 * h)
    else:
        d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
        d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    if f.extension is Extension.ANALYTIC:
        F = f.analytic
        return GridFunction(g, d, Extension.ANALYTIC, lambda x: (F(x + h) - F(x - h)) / (2 * h))
    if f.extension in (Extension.CONSTANT, Extension.ZERO):
        return GridFunction(g, d, Extension.ZERO)
    return GridFunction(g, d, Extension.NONE)


def second_difference(f: GridFunction) -> GridFunction:
    """(f(x-h) - 2 f(x) + f(x+h)) / h^2.

    Endpoint values come from the extension; without one they are flagged
    invalid (NaN).
    """
    _require_1d(f)
    v, h, g = f.values, f.grid.h, f.grid
    d = np.full_like(v, np.nan)
    d[1:-1] = (v[:-2] - 2 * v[1:-1] + v[2:]) / h**2
    valid = None
    if f.has_extension():
        outside = f.at(np.array([g.a - h, g.xmax + h]))
        d[0] = (outside[0] - 2 * v[0] + v[1]) / h**2
        d[-1] = (v[-2] - 2 * v[-1] + outside[1]) / h**2
    else:
        valid = np.ones(v.shape, dtype=bool)
        valid[[0, -1]] = False
    if f.extension is Extension.ANALYTIC:
        F = f.analytic
        return GridFunction(g, d, Extension.ANALYTIC,
                            lambda x: (F(x - h) - 2 * F(x) + F(x + h)) / h**2)
    if f.extension in (Extension.CONSTANT, Extension.ZERO):
        return GridFunction(g, d, Extension.ZERO, valid=valid)
    if f.extension is Extension.REFLECT2F0:
        return GridFunction(g, d, Extension.REFLECT2F0, valid=valid)
    return GridFunction(g, d, Extension.NONE, valid=valid)


def hessian(f: GridFunction) -> np.ndarray:
    """Discrete Hessian field, shape (n, n, 2, 2); boundary entries are NaN."""
    if f.grid.dim != 2:
        raise DimensionError("hessian needs a 2D grid function")
    v, h, n = f.values, f.grid.h, f.grid.n
    H = np.full((n, n, 2, 2), np.nan)
    c = v[1:-1, 1:-1]
    fxx = (v[:-2, 1:-1] - 2 * c + v[2:, 1:-1]) / h**2
    fyy = (v[1:-1, :-2] - 2 * c + v[1:-1, 2:]) / h**2
    fxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h**2)
    H[1:-1, 1:-1, 0, 0] = fxx
    H[1:-1, 1:-1, 1, 1] = fyy
    H[1:-1, 1:-1, 0, 1] = fxy
    H[1:-1, 1:-1, 1, 0] = fxy
    return H


# -- quadrature --------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _gauss_legendre(fn, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.0
    panels = max(1, int(math.ceil(abs(hi - lo))))
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0
    for p, q in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (p + q), 0.5 * (q - p)
        total += half * float(np.dot(_GL_W, fn(mid + half * _GL_X)))
    return total


def antiderivative(f: GridFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Return F with F(y) = integral from a to y of f.

    Inside the window the piecewise-linear interpolant is integrated exactly
    (composite trapezoid with linearly interpolated end fractions); outside,
    the extension is integrated.
    """
    _require_1d(f)
    g = f.grid
    v, h = f.values, g.h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])

    def inside(y):
        pos = np.clip((y - g.a) / h, 0.0, g.n - 1)
        j = np.minimum(np.floor(pos).astype(int), g.n - 2)
        theta = pos - j
        return cum[j] + h * (theta * v[j] + 0.5 * theta**2 * (v[j + 1] - v[j]))

    def right_tail(y):
        ext = f.extension
        if ext is Extension.NONE:
            raise GridError("no extension: cannot integrate beyond the window")
        if ext is Extension.ZERO:
            return np.zeros(y.shape)
        if ext is Extension.ANALYTIC:
            return np.array([_gauss_legendre(f.analytic, g.xmax, float(t)) for t in y])
        return v[-1] * (y - g.xmax)

    def F(y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        out = inside(y)
        right = y > g.xmax
        if right.any():
            out[right] = cum[-1] + right_tail(y[right])
        left = y < g.a
        if left.any():
            yl = y[left]
            ext = f.extension
            if ext is Extension.NONE:
                raise GridError("no extension: cannot integrate beyond the window")
            if ext is Extension.ZERO:
                out[left] = 0.0
            elif ext is Extension.ANALYTIC:
                out[left] = [-_gauss_legendre(f.analytic, float(t), g.a) for t in yl]
            elif ext is Extension.REFLECT2F0:
                out[left] = -(2.0 * v[0] * (-yl) - F(-yl))
            else:
                out[left] = -v[0] * (g.a - yl)
        return out[0] if scalar else out

    return F


def trapezoid(f: GridFunction, lo: float, hi: float) -> float:
    """Composite trapezoid integral of f over [lo, hi].

    Fractional end cells are handled by linear interpolation onto lo and hi;
    parts outside the window integrate the extension.  ``lo > hi`` is rejected.
    """
    if lo > hi:
        raise GridError(f"trapezoid needs lo <= hi, got lo={lo}, hi={hi}")
    F = antiderivative(f)
    return float(F(hi) - F(lo))


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.n, grid.h)
    w[[0, -1]] *= 0.5
    return w


def lp_norm(f: GridFunction, p: float) -> float:
    """Discrete L^p norm (trapezoid weights)."""
    _require_1d(f)
    w = trapezoid_weights(f.grid)
    if math.isinf(p):
        return f.sup_norm()
    return float(np.sum(w * np.abs(f.values) ** p) ** (1.0 / p))


def sup_distance(f: GridFunction, g: GridFunction) -> float:
    """max over grid points of |f - g| (entries invalid in either are skipped)."""
    _same_grid(f, g)
    d = np.abs(f.values - g.values)
    mask = np.ones(d.shape, dtype=bool)
    for fn in (f, g):
        if fn.valid is not None:
            mask &= fn.valid
    return float(np.max(d[mask])) if mask.any() else 0.0
