"""Delay equations u'(t) = B u(t) + Phi u_t by the method of steps.

Phi u_t = sum_k eta_k(u(t + s_k)) for finitely many lags s_k in [-1, 0].
The state is the pair (u(t), u_t) with the history segment u_t stored on a
uniform sigma-grid whose spacing equals the solver step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridError, PreconditionError
from .grid import Extension, Grid, GridFunction
from .operators import (BoundedOperator, HalfShiftOperator, MultiplicationOperator,
                        ScaledOperator)
from .semigroups import DirichletHeat, LeftShift, SemigroupEvaluator
from .shape import ConeSpec, WitnessLog, is_member

_SNAP = 1e-9


@dataclass(frozen=True)
class IdentityOperator(BoundedOperator):
    def apply(self, f):
        return f

    def norm_bound(self):
        return 1.0


@dataclass(frozen=True)
class Segment:
    """History window sigma -> u(t + sigma) on sigma_j = -1 + j dsigma."""

    grid: Grid
    values: np.ndarray  # shape (m + 1, n); last row is sigma = 0
    extension: Extension = Extension.CONSTANT

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.grid.n or v.shape[0] < 2:
            raise GridError(f"segment values need shape (m + 1, {self.grid.n}), got {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dsigma(self) -> float:
        return 1.0 / (self.values.shape[0] - 1)

    @property
    def sigma(self) -> np.ndarray:
        return -1.0 + np.arange(self.values.shape[0]) * self.dsigma

    def row(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.values[j], self.extension)

    def head(self) -> GridFunction:
        return self.row(-1)

    def at(self, s: float) -> GridFunction:
        """u(t + s), linearly interpolated between sigma-nodes."""
        if not -1.0 - _SNAP <= s <= _SNAP:
            raise GridError(f"lag {s} outside the covered window [-1, 0]")
        pos = (s + 1.0) / self.dsigma
        j = int(round(pos))
        if abs(pos - j) < _SNAP:
            return self.row(j)
        j = int(math.floor(pos))
        theta = pos - j
        return GridFunction(self.grid, (1 - theta) * self.values[j] + theta * self.values[j + 1],
                            self.extension)

    def advance(self, head: GridFunction) -> "Segment":
        """Drop the oldest row and append ``head`` as the new sigma = 0 row."""
        v = np.vstack([self.values[1:], head.values[None, :]])
        return Segment(self.grid, v, head.extension)

    def members(self, cone: ConeSpec) -> WitnessLog:
        log = WitnessLog()
        for s, j in zip(self.sigma, range(self.values.shape[0])):
            log.append((float(s), is_member(self.row(j), cone)))
        return log


def history_segment(fn: Callable[[float], GridFunction], m: int) -> Segment:
    """Segment with m + 1 sigma-nodes sampled from fn(sigma)."""
    sig = -1.0 + np.arange(m + 1) / m
    rows = [fn(float(s)) for s in sig]
    grid = rows[0].grid
    if any(r.grid != grid for r in rows):
        raise GridError("history rows live on different grids")
    return Segment(grid, np.array([r.values for r in rows]), rows[-1].extension)


@dataclass(frozen=True)
class DelayProblem:
    """u' = B u + sum_k eta_k u(t + s_k), history on [-1, 0]."""

    B: SemigroupEvaluator
    atoms: tuple  # ((lag, operator), ...)
    history: Segment
    horizon: float
    p: float = 2.0
    initial_value: Optional[GridFunction] = None

    def __post_init__(self):
        for s, _ in self.atoms:
            if not -1.0 <= s <= 0.0:
                raise ValueError(f"lag {s} outside [-1, 0]")
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if not 1.0 < self.p < math.inf:
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if self.initial_value is not None:
            if not np.array_equal(self.initial_value.values, self.history.values[-1]):
                raise PreconditionError("history at sigma = 0 must equal the initial value")


@dataclass(frozen=True)
class DelayState:
    t: float
    head: GridFunction
    segment: Segment


def phi_apply(problem: DelayProblem, segment: Segment) -> GridFunction:
    """sum_k eta_k(segment(s_k)); zero when there are no atoms."""
    out = None
    for s, op in problem.atoms:
        term = op.apply(segment.at(s))
        out = term if out is None else out + term
    if out is None:
        return segment.head().zeros_like()
    return out


def _resample(segment: Segment, dt: float) -> Segment:
    """Segment on spacing dt, which must be a multiple of the history spacing."""
    ratio = dt / segment.dsigma
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * max(1.0, ratio):
        raise GridError(f"step {dt} is not a multiple of the history spacing {segment.dsigma}")
    m = segment.values.shape[0] - 1
    if m % r:
        raise GridError(f"step {dt} does not divide the history window [-1, 0]")
    return Segment(segment.grid, segment.values[::r], segment.extension)


def initial_state(problem: DelayProblem, dt: float) -> DelayState:
    seg = _resample(problem.history, dt)
    return DelayState(0.0, seg.head(), seg)


def step(problem: DelayProblem, state: DelayState, dt: float) -> DelayState:
    """One exponential-trapezoid variation-of-constants step

        u+ = T(dt) u + int_0^dt T(dt - s) Phi u_{t+s} ds,

    with Phi u_{t+s} interpolated linearly in s between Phi u_t and
    Phi u_{t+dt}.  Lags shorter than dt read the unknown u(t + dt + s) from
    the explicit predictor T(dt)[u + dt Phi u_t] interpolated against u(t).
    """
    seg = state.segment
    if abs(seg.dsigma - dt) > 1e-12 * dt:
        raise GridError(f"step {dt} does not match the segment spacing {seg.dsigma}")
    u = state.head
    if not problem.atoms:
        new = problem.B.apply(dt, u)
        return DelayState(state.t + dt, new, seg.advance(new))
    phi_now = phi_apply(problem, seg)
    needs_predictor = any(s > -dt + 1e-12 * dt for s, _ in problem.atoms)
    predictor = problem.B.apply(dt, u + dt * phi_now) if needs_predictor else None
    phi_next = None
    for s, op in problem.atoms:
        if s <= -dt + 1e-12 * dt:
            v = seg.at(s + dt)
        else:
            theta = (s + dt) / dt  # position of t + dt + s inside [t, t + dt]
            v = (1.0 - theta) * u + theta * predictor
        term = op.apply(v)
        phi_next = term if phi_next is None else phi_next + term
    new = problem.B.apply(dt, u) + problem.B.integrate_linear(dt, phi_now, phi_next)
    return DelayState(state.t + dt, new, seg.advance(new))


def solve(problem: DelayProblem, dt: float) -> list:
    """Trajectory [state(0), state(dt), ..., state(horizon)]."""
    steps = problem.horizon / dt
    n = int(round(steps))
    if abs(steps - n) > 1e-9 * max(1.0, steps):
        raise GridError(f"horizon {problem.horizon} is not a multiple of the step {dt}")
    state = initial_state(problem, dt)
    out = [state]
    for _ in range(n):
        state = step(problem, state, dt)
        out.append(state)
    return out


def trajectory_csv(states) -> str:
    """Rows t,x,value for every head."""
    lines = ["t,x,value"]
    for st in states:
        for x, v in zip(st.head.grid.x, st.head.values):
            lines.append(f"{st.t:.17g},{x:.17g},{v:.17g}")
    return "\n".join(lines) + "\n"


def head_witnesses(states, cone: ConeSpec) -> WitnessLog:
    log = WitnessLog()
    for st in states:
        log.append((st.t, is_member(st.head, cone)))
    return log


def transport_delay(c: float, tau: float, window: Grid,
                    history: Callable[[float], GridFunction], m: int,
                    horizon: float = 1.0, beta: Optional[GridFunction] = None) -> DelayProblem:
    """u_t = u_x + c u(t - tau, x): B the left shift, one atom c I at lag -tau.

    Lags are physical times inside the unit history window, so tau in (0, 1].
    With ``beta`` the delayed term is c beta(x) u(t - tau, x) instead.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    seg = history_segment(history, m)
    op = IdentityOperator() if beta is None else MultiplicationOperator(beta)
    return DelayProblem(LeftShift(), ((-tau, ScaledOperator(c, op)),), seg, horizon)


def diffusion_delay(c: float, tau: float, n: int,
                    history: Callable[[float], GridFunction], m: int,
                    horizon: float = 1.0, n_modes: int = 256) -> DelayProblem:
    """u_t = u_xx + c u(t - tau, x +- 1/2) on [0, 1] with u(t, 0) = u(t, 1) = 0.

    B is the Dirichlet heat semigroup on [0, 1]; the atom at lag -tau reads
    x + 1/2 on [0, 1/2] and x - 1/2 on [1/2, 1], boundary values pinned to 0.
    ``n`` is the number of spatial grid points.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    seg = history_segment(history, m)
    if seg.grid != Grid(0.0, 1.0, n):
        raise GridError(f"history must live on Grid(0, 1, {n})")
    return DelayProblem(DirichletHeat(n_modes=n_modes), ((-tau, HalfShiftOperator(c)),), seg, horizon)


# -- product-space formulation -------------------------------------------------------------

@dataclass(frozen=True)
class ProductState:
    """(x, f) in X x L^p([-1, 0], X); f stored as rows on a sigma-grid."""

    head: GridFunction
    segment: np.ndarray  # shape (m + 1, n)

    def __add__(self, other):
        return ProductState(self.head + other.head, self.segment + other.segment)

    def __mul__(self, c):
        return ProductState(self.head * c, self.segment * c)

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return max(self.head.sup_norm(), float(np.max(np.abs(self.segment))))


@dataclass(frozen=True)
class ShiftedHistorySemigroup:
    """Unperturbed product semigroup: head evolves by T, the segment shifts
    left and is filled with the head trajectory, T(t + sigma) x for
    sigma > -t.  Time steps must be multiples of the sigma spacing."""

    B: SemigroupEvaluator
    dsigma: float

    def apply(self, t: float, s: ProductState) -> ProductState:
        if t == 0:
            return s
        r = int(round(t / self.dsigma))
        if r < 1 or abs(r * self.dsigma - t) > 1e-9 * t:
            raise GridError(f"time {t} is not a multiple of the sigma spacing {self.dsigma}")
        rows = s.segment
        m = rows.shape[0] - 1
        new_rows = list(rows[r:]) if r <= m else []
        u = s.head
        fill = []
        for _ in range(r):
            u = self.B.apply(self.dsigma, u)
            fill.append(u.values)
        new_rows = (new_rows + fill)[-(m + 1):]
        return ProductState(u, np.array(new_rows))


@dataclass(frozen=True)
class DelayCoupling(BoundedOperator):
    """(x, f) -> (Phi f, 0) for a problem's atoms (lags on the sigma-grid)."""

    problem: DelayProblem

    def apply(self, s: ProductState) -> ProductState:
        seg = Segment(s.head.grid, s.segment, s.head.extension)
        return ProductState(phi_apply(self.problem, seg), np.zeros_like(s.segment))

    def norm_bound(self):
        return float(sum(op.norm_bound() for _, op in self.problem.atoms))
