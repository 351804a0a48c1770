"""Shape cones, membership tests and the smooth-approximation constructions.

A cone is the (closure of the) set where a shape operator S is nonnegative:
S = -d/dx gives non-increasing functions, S = d^2/dx^2 convex functions,
S = (-f, f'') negative convex functions, the 2D Hessian convex surfaces and
S = identity the positive functions.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, GridError, PreconditionError
from .grid import (Extension, Grid, GridFunction, hessian, lp_norm,
                   second_difference, sup_distance)


class ConeKind(enum.Enum):
    MONOTONE_NONINCREASING = "monotone-nonincreasing"
    CONVEX = "convex"
    NEGATIVE_CONVEX = "negative-convex"
    HESSIAN_PSD = "hessian-psd"
    POSITIVE = "positive"


CURVATURE_FACTOR = 10.0
ABSOLUTE_FLOOR = 1e-9


@dataclass(frozen=True)
class ConeSpec:
    """A shape cone plus its tolerance policy.

    With ``curvature_scaled`` the tolerance for derivative-based cones is
    ``max(absolute, 10 h^2 max|f|)``; the positive cone always uses ``absolute``.
    """

    kind: ConeKind
    absolute: float = ABSOLUTE_FLOOR
    curvature_scaled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", ConeKind(self.kind))
        if self.absolute < 0:
            raise ValueError("absolute tolerance must be >= 0")

    def tolerance(self, f: GridFunction) -> float:
        if not self.curvature_scaled or self.kind is ConeKind.POSITIVE:
            return self.absolute
        return max(self.absolute, CURVATURE_FACTOR * f.grid.h**2 * f.sup_norm())

    @classmethod
    def exact(cls, kind) -> "ConeSpec":
        """Rounding-level check (absolute 1e-9, no curvature scaling)."""
        return cls(ConeKind(kind), ABSOLUTE_FLOOR, False)


MONOTONE = ConeSpec(ConeKind.MONOTONE_NONINCREASING)
CONVEX = ConeSpec(ConeKind.CONVEX)
NEGATIVE_CONVEX = ConeSpec(ConeKind.NEGATIVE_CONVEX)
HESSIAN_PSD = ConeSpec(ConeKind.HESSIAN_PSD)
POSITIVE = ConeSpec(ConeKind.POSITIVE)


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    worst_violation: float
    witness: Optional[object]
    tol_used: float

    def csv_row(self, t: float) -> list:
        w = self.witness
        if w is None:
            wx = ""
        elif isinstance(w, tuple):
            wx = ";".join(format(float(c), ".17g") for c in w)
        else:
            wx = format(float(w), ".17g")
        return [format(float(t), ".17g"), str(self.member).lower(),
                format(self.worst_violation, ".17g"), wx, format(self.tol_used, ".17g")]


def _violation_1d(values: np.ndarray, x: np.ndarray):
    """(max violation >= 0, location) for 'values >= 0'."""
    i = int(np.argmin(values))
    return max(0.0, -float(values[i])), float(x[i])


def is_member(f: GridFunction, cone: ConeSpec = MONOTONE) -> MembershipReport:
    """Discrete cone membership with tolerance and violation witness.

    Monotonicity is tested on forward differences, which characterise
    non-increasing sequences exactly; convexity on interior second
    differences; the Hessian cone on the smaller eigenvalue of the interior
    discrete Hessian.
    """
    kind = cone.kind
    dim = f.grid.dim
    if kind is ConeKind.HESSIAN_PSD and dim != 2:
        raise DimensionError("HESSIAN_PSD membership needs a 2D function")
    if kind not in (ConeKind.HESSIAN_PSD, ConeKind.POSITIVE) and dim != 1:
        raise DimensionError(f"{kind.value} membership needs a 1D function")
    tol = cone.tolerance(f)
    g = f.grid
    v = f.values

    if kind is ConeKind.MONOTONE_NONINCREASING:
        slope = -np.diff(v) / g.h
        viol, where = _violation_1d(slope, g.x[:-1])
    elif kind is ConeKind.CONVEX:
        d2 = second_difference(f).values[1:-1]
        viol, where = _violation_1d(d2, g.x[1:-1])
    elif kind is ConeKind.NEGATIVE_CONVEX:
        d2 = second_difference(f).values[1:-1]
        viol, where = _violation_1d(d2, g.x[1:-1])
        viol_sign, where_sign = _violation_1d(-v, g.x)
        if viol_sign > viol:
            viol, where = viol_sign, where_sign
    elif kind is ConeKind.HESSIAN_PSD:
        H = hessian(f)[1:-1, 1:-1]
        a, b, c = H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]
        lam = 0.5 * (a + c) - np.sqrt((0.5 * (a - c)) ** 2 + b**2)
        i, j = np.unravel_index(int(np.argmin(lam)), lam.shape)
        viol = max(0.0, -float(lam[i, j]))
        where = (float(g.x[i + 1]), float(g.x[j + 1]))
    else:
        i = np.unravel_index(int(np.argmin(v)), v.shape)
        viol = max(0.0, -float(v[i]))
        where = float(g.x[i[0]]) if dim == 1 else (float(g.x[i[0]]), float(g.x[i[1]]))

    member = viol <= tol
    return MembershipReport(member, viol, None if member else where, tol)


class WitnessLog(list):
    """List of (t, MembershipReport) with a summary flag."""

    @property
    def all_member(self) -> bool:
        return all(r.member for _, r in self)

    def failures(self):
        return [(t, r) for t, r in self if not r.member]

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "member", "worst_violation", "witness_x", "tol"])
        for t, r in self:
            w.writerow(r.csv_row(t))
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def project_witnesses(trajectory, cone: ConeSpec) -> WitnessLog:
    """Membership report for every (t, f) of a trajectory."""
    trajectory = list(trajectory)
    if not trajectory:
        raise PreconditionError("empty trajectory")
    grid = trajectory[0][1].grid
    log = WitnessLog()
    for t, f in trajectory:
        if f.grid != grid:
            raise GridError("trajectory mixes grids")
        log.append((float(t), is_member(f, cone)))
    return log


def _require_member(f: GridFunction, cone: ConeSpec, what: str):
    rep = is_member(f, cone)
    if not rep.member:
        raise PreconditionError(
            f"{what}: input is not {cone.kind.value} (violation {rep.worst_violation:.3g} "
            f"at {rep.witness})", rep)
    return rep


# -- monotone approximation -----------------------------------------------------------

class CosineArcApproximant:
    """C^1 non-increasing function made of half-cosine arcs.

    On each cell [p, q] of the mesh the arc runs from f(p) down to f(q) with
    zero slope at both ends; it is flat outside the mesh.
    """

    def __init__(self, mesh, levels, edges_flat=True):
        self.mesh = np.asarray(mesh, dtype=float)
        self.levels = np.asarray(levels, dtype=float)
        self.edges_flat = edges_flat

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        m, lv = self.mesh, self.levels
        j = np.clip(np.searchsorted(m, x, side="right") - 1, 0, len(m) - 2)
        p, q = m[j], m[j + 1]
        c, d = lv[j], lv[j + 1]
        u = np.clip((x - p) / (q - p), 0.0, 1.0)
        out = d + (c - d) * 0.5 * (1.0 + np.cos(np.pi * u))
        out = np.where(x <= m[0], lv[0], out)
        return np.where(x >= m[-1], lv[-1], out)

    def max_cell_drop(self) -> float:
        return float(np.max(-np.diff(self.levels))) if len(self.levels) > 1 else 0.0


def monotone_approximant(f: GridFunction, eps: float) -> CosineArcApproximant:
    """Build the cosine-arc approximant of a non-increasing f within eps.

    Mesh points are chosen greedily on the piecewise-linear f so that the drop
    across every cell is at most eps/2; extra mesh points are inserted inside
    grid cells whose drop is larger.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if f.grid.dim != 1:
        raise DimensionError("monotone approximation needs a 1D function")
    _require_member(f, ConeSpec(ConeKind.MONOTONE_NONINCREASING, 0.0, False), "approximate_monotone")
    x, v = f.grid.x, f.values
    delta = 0.5 * eps
    mesh, levels = [float(x[0])], [float(v[0])]
    k = 0  # the current mesh point lies in grid cell [x[k], x[k+1])
    while mesh[-1] < x[-1]:
        level = levels[-1]
        bad = np.nonzero(level - v[k + 1:] >= delta)[0]
        if bad.size == 0:
            mesh.append(float(x[-1]))
            levels.append(float(v[-1]))
            break
        if bad[0] > 0:
            k = k + bad[0]
            mesh.append(float(x[k]))
            levels.append(float(v[k]))
            continue
        # the next node drops by delta or more: cut the cell at level - delta
        target = level - delta
        p = x[k] + (x[k + 1] - x[k]) * (v[k] - target) / (v[k] - v[k + 1])
        if not mesh[-1] < p < x[k + 1]:
            k += 1
            mesh.append(float(x[k]))
            levels.append(float(v[k]))
            continue
        mesh.append(float(p))
        levels.append(float(target))
    span = max(1e-300, float(v[0] - v[-1]))
    edge = max(1, len(x) // 50)
    edges_flat = (v[0] - v[edge]) <= 1e-6 * max(span, 1.0) and (v[-edge - 1] - v[-1]) <= 1e-6 * max(span, 1.0)
    return CosineArcApproximant(mesh, levels, bool(edges_flat))


def approximate_monotone(f: GridFunction, eps: float, out_grid: Optional[Grid] = None) -> GridFunction:
    """C^1 non-increasing approximation of a non-increasing f within eps.

    The result is sampled on ``out_grid`` (default: f's grid) and carries the
    exact arc formula as its analytic extension.
    """
    approx = monotone_approximant(f, eps)
    grid = f.grid if out_grid is None else out_grid
    values = approx(grid.x)
    values = np.minimum.accumulate(values)  # guard against 1-ulp rounding upticks
    return GridFunction(grid, values, Extension.ANALYTIC, approx)


# -- convex approximation -------------------------------------------------------------

def _blend_profile(u):
    """Twice-integrated normalised curvature bump (15/16)(1-u^2)^2 on [-1, 1].

    Rises from 0 at u = -1 to 1 at u = 1 with matching first and second
    derivatives of the two adjacent lines.
    """
    u = np.asarray(u, dtype=float)
    return (15.0 / 16.0) * (u**2 / 2 - u**4 / 6 + u**6 / 30 + 8 * u / 15) + 5.0 / 32.0


class ConvexBlendApproximant:
    """Piecewise-linear interpolant with C^2 rounded corners; linear outside the mesh."""

    def __init__(self, nodes, values, radius):
        self.nodes = np.asarray(nodes, dtype=float)
        self.node_values = np.asarray(values, dtype=float)
        self.radius = float(radius)
        self.slopes = np.diff(self.node_values) / np.diff(self.nodes)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs, vs, s = self.nodes, self.node_values, self.slopes
        j = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        out = vs[j] + s[j] * (x - xs[j])
        r = self.radius
        if r > 0:
            for k in range(1, len(xs) - 1):
                sel = np.abs(x - xs[k]) < r
                if np.any(sel):
                    left = vs[k] + s[k - 1] * (x[sel] - xs[k])
                    out[sel] = left + (s[k] - s[k - 1]) * r * _blend_profile((x[sel] - xs[k]) / r)
        return out


def approximate_convex(f: GridFunction, mesh: Sequence[int], smoothing_radius: float = 0.0) -> GridFunction:
    """Convex approximation: chord interpolant at mesh nodes, corners rounded.

    Each interior mesh corner is replaced within ``smoothing_radius`` by a
    C^2 blend whose curvature is a nonnegative bump, so convexity is kept.
    Mesh node values are copied bit-exactly from f wherever no blend covers
    them; near the endpoints the result is linear (zero second difference).
    """
    if f.grid.dim != 1:
        raise DimensionError("approximate_convex needs a 1D function")
    if smoothing_radius < 0:
        raise ValueError("smoothing_radius must be >= 0")
    idx = np.unique(np.asarray(list(mesh), dtype=int))
    n = f.grid.n
    if idx.size < 2 or idx[0] != 0 or idx[-1] != n - 1:
        raise PreconditionError("mesh must contain both endpoint indices 0 and n-1")
    _require_member(f, ConeSpec.exact(ConeKind.CONVEX), "approximate_convex")
    x = f.grid.x
    nodes = x[idx]
    r = float(smoothing_radius)
    if r > 0:
        h = f.grid.h
        if nodes[1] - nodes[0] - h < r and len(nodes) > 2:
            raise PreconditionError(f"smoothing radius {r} reaches the first cell (nodes {idx[0]}, {idx[1]})")
        if nodes[-1] - nodes[-2] - h < r and len(nodes) > 2:
            raise PreconditionError(f"smoothing radius {r} reaches the last cell (nodes {idx[-2]}, {idx[-1]})")
        for k in range(1, len(nodes) - 2):
            if nodes[k + 1] - nodes[k] < 2 * r:
                raise PreconditionError(
                    f"smoothing radii overlap between mesh nodes {idx[k]} and {idx[k + 1]}")
    approx = ConvexBlendApproximant(nodes, f.values[idx], r)
    values = approx(x)
    keep = np.ones(idx.size, dtype=bool)
    if r > 0:
        keep[1:-1] = False  # interior nodes sit at blend centres
    values[idx[keep]] = f.values[idx[keep]]
    return GridFunction(f.grid, values, Extension.ANALYTIC, approx)


def _bump_stencil(m: int = 6):
    z = np.arange(-m, m + 1) / (m + 1)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    r2 = Z1**2 + Z2**2
    inside = r2 < 1
    w = np.exp(-1.0 / (1.0 - r2[inside]))
    return Z1[inside], Z2[inside], w / w.sum()


class MollifiedSurface:
    """x -> sum_k w_k F(x + r z_k) for a convex F defined on the whole plane."""

    def __init__(self, base, radius, m=6):
        self.base = base
        self.radius = float(radius)
        self.z1, self.z2, self.w = _bump_stencil(m)

    def second_moment(self) -> float:
        return float(np.sum(self.w * (self.z1**2 + self.z2**2)))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xf, yf = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        out = np.zeros(xf.size)
        for z1, z2, w in zip(self.z1, self.z2, self.w):
            out += w * self.base(xf + self.radius * z1, yf + self.radius * z2)
        return out.reshape(shape)


class TangentPlaneEnvelope:
    """max over grid nodes of the tangent planes; a convex extension of sampled data."""

    def __init__(self, f: GridFunction):
        X, Y = f.grid.mesh()
        gx, gy = np.gradient(f.values, f.grid.h, edge_order=2)
        self.px, self.py = gx.ravel(), gy.ravel()
        self.c = (f.values - gx * X - gy * Y).ravel()

    def __call__(self, x, y, chunk=4096):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        xf, yf = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        out = np.empty(xf.size)
        for s in range(0, xf.size, chunk):
            sl = slice(s, s + chunk)
            vals = np.outer(xf[sl], self.px) + np.outer(yf[sl], self.py) + self.c
            out[sl] = vals.max(axis=1)
        return out.reshape(shape)


def approximate_convex_2d(f: GridFunction, mesh_spacing: float) -> GridFunction:
    """Smooth convex approximation of a convex surface on the unit square.

    The surface (its analytic form when available, otherwise the envelope of
    its discrete tangent planes) is convolved with a nonnegative bump of
    radius ``mesh_spacing``; nonnegative averages of translates of a convex
    function are convex.
    """
    if f.grid.dim != 2:
        raise DimensionError("approximate_convex_2d needs a 2D function")
    if not mesh_spacing > 0:
        raise ValueError("mesh_spacing must be positive")
    _require_member(f, ConeSpec.exact(ConeKind.HESSIAN_PSD), "approximate_convex_2d")
    h = f.grid.h
    v = f.values
    lines = np.concatenate([((v[:-2] - 2 * v[1:-1] + v[2:]) / h**2).ravel(),
                            ((v[:, :-2] - 2 * v[:, 1:-1] + v[:, 2:]) / h**2).ravel()])
    if lines.min() < -ABSOLUTE_FLOOR:
        raise PreconditionError(f"approximate_convex_2d: not convex along grid lines "
                                f"(second difference {lines.min():.3g})")
    base = f.analytic if f.extension is Extension.ANALYTIC else TangentPlaneEnvelope(f)
    smooth = MollifiedSurface(base, mesh_spacing)
    X, Y = f.grid.mesh()
    return GridFunction(f.grid, smooth(X, Y), Extension.ANALYTIC, smooth)


def modulus_of_continuity(f: GridFunction, delta: float) -> float:
    """max |f(x) - f(y)| over grid pairs with |x - y|_inf <= delta."""
    k = int(math.floor(delta / f.grid.h + 1e-9))
    v = f.values
    best = 0.0
    offsets = range(-k, k + 1)
    if f.grid.dim == 1:
        for i in range(1, k + 1):
            best = max(best, float(np.max(np.abs(v[i:] - v[:-i]))))
        return best
    n = f.grid.n
    for di in offsets:
        for dj in offsets:
            a = v[max(di, 0):n + min(di, 0), max(dj, 0):n + min(dj, 0)]
            b = v[max(-di, 0):n + min(-di, 0), max(-dj, 0):n + min(-dj, 0)]
            best = max(best, float(np.max(np.abs(a - b))))
    return best


# -- L^p closure check ------------------------------------------------------------------

@dataclass
class LpClosureReport:
    p: float
    norms: list
    converges: bool
    limit_member: bool
    sequence_members: list = field(default_factory=list)
    limit_report: Optional[MembershipReport] = None

    @property
    def passed(self) -> bool:
        return self.converges and self.limit_member and all(self.sequence_members)


def lp_limit_convexity_check(sequence, limit: GridFunction, p: float = 2.0,
                             threshold: float = 1e-2) -> LpClosureReport:
    """Check that convex f_n approach ``limit`` in L^p and that the limit is convex.

    Convergence means the last distance is below ``threshold`` or the
    distances are non-increasing over the second half of the sequence and
    end below the first one.
    """
    if not p > 1:
        raise ValueError("p must be > 1")
    seq = list(sequence)
    exact = ConeSpec.exact(ConeKind.CONVEX)
    members = [is_member(f, exact).member for f in seq]
    norms = [lp_norm(f - limit, p) for f in seq]
    if not norms:
        converges = True
    elif norms[-1] <= threshold:
        converges = True
    else:
        tail = norms[len(norms) // 2:]
        converges = bool(np.all(np.diff(tail) <= 0)) and norms[-1] < norms[0]
    rep = is_member(limit, CONVEX)
    return LpClosureReport(p, norms, bool(converges), rep.member, members, rep)


def approximation_distance(f: GridFunction, g: GridFunction) -> float:
    return sup_distance(f, g)
