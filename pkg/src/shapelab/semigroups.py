"""Catalogue of concrete semigroup evaluators t -> e^{tA} on grid functions.

Each evaluator is immutable, declares its growth bound (M, omega) with
``||e^{tA}|| <= M e^{omega t}``, and a backend tolerance used by the
semigroup-law checks.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .errors import DimensionError, GridError, SeriesTruncationError
from .functions import shifted
from .grid import (Extension, Grid, GridFunction, antiderivative, first_difference,
                   second_difference, trapezoid_weights)


class Kind(enum.Enum):
    LEFT_SHIFT = "left-shift"
    GAUSS_WHOLE_LINE = "gauss-whole-line"
    STOPPED_BM_HALFLINE = "stopped-bm-halfline"
    STOPPED_BM_INTERVAL = "stopped-bm-interval"
    DIRICHLET_HEAT = "dirichlet-heat"
    NEUMANN_HEAT = "neumann-heat"
    COMPOUND_POISSON = "compound-poisson"
    MULTIPLICATION = "multiplication"
    FEYNMAN_KAC = "feynman-kac"


GAUSS_CUTOFF = 8.0  # kernel truncated at this many standard deviations
N_MODES = 256
MIN_SPECTRAL_TIME = 1e-4
POISSON_TAIL = 1e-14
POISSON_CAP = 10_000


class SemigroupEvaluator:
    """Base class.  Subclasses implement ``_apply(t, f)`` for t > 0."""

    kind: Kind
    exact_formula = False  # apply(0, f) is f itself for every kind; flag marks closed-form backends
    tolerance = 1e-10

    def growth(self) -> tuple:
        return (1.0, 0.0)

    def apply(self, t: float, f: GridFunction) -> GridFunction:
        t = float(t)
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"time must be finite and >= 0, got {t}")
        self._check(f)
        if t == 0.0:
            return f
        return self._apply(t, f)

    def __call__(self, t, f):
        return self.apply(t, f)

    def _check(self, f: GridFunction):
        if f.grid.dim != 1:
            raise DimensionError(f"{self.kind.value} acts on 1D grid functions")

    def _apply(self, t, f):
        raise NotImplementedError

    @property
    def params(self) -> dict:
        return {}

    def integrate_linear(self, dt: float, g0: GridFunction, g1: GridFunction) -> GridFunction:
        """int_0^dt T(dt - s) [(1 - s/dt) g0 + (s/dt) g1] ds.

        Generic backend: Gauss-Legendre in s with positive weights, so the
        result is a nonnegative combination of semigroup images.
        """
        out = None
        for node, weight in zip(_GLI_X, _GLI_W):
            s = dt * node
            theta = node
            term = (weight * dt) * self.apply(dt - s, (1.0 - theta) * g0 + theta * g1)
            out = term if out is None else out + term
        return out


# Gauss-Legendre nodes and weights mapped to [0, 1]
_GLI_X, _GLI_W = np.polynomial.legendre.leggauss(8)
_GLI_X = 0.5 * (_GLI_X + 1.0)
_GLI_W = 0.5 * _GLI_W


def apply(ev: SemigroupEvaluator, t: float, f: GridFunction) -> GridFunction:
    """Evaluate e^{tA} f for the evaluator ``ev``."""
    return ev.apply(t, f)


def _passthrough_extension(f: GridFunction) -> Extension:
    return Extension.ZERO if f.extension is Extension.ZERO else Extension.CONSTANT


# -- translation-invariant kinds --------------------------------------------------------

@dataclass(frozen=True)
class LeftShift(SemigroupEvaluator):
    """(e^{tA} f)(x) = f(x + t)."""

    kind = Kind.LEFT_SHIFT
    exact_formula = True
    tolerance = 1e-12

    def _apply(self, t, f):
        values = f.at(f.grid.x + t)
        if f.extension is Extension.ANALYTIC:
            return GridFunction(f.grid, values, Extension.ANALYTIC, shifted(f.analytic, t))
        return GridFunction(f.grid, values, _passthrough_extension(f))


def _extended_nodes(f: GridFunction, k: int) -> np.ndarray:
    """Values at x_{-k}, ..., x_{n-1+k} (grid-aligned, off-window from the extension)."""
    g = f.grid
    if k == 0:
        return np.asarray(f.values)
    left = f.at(g.a + np.arange(-k, 0) * g.h)
    right = f.at(g.a + np.arange(g.n, g.n + k) * g.h)
    return np.concatenate([left, f.values, right])


def gaussian_weights(variance: float, h: float) -> np.ndarray:
    """Grid-aligned Gaussian weights, truncated at 8 standard deviations and
    normalised to sum 1 (so constants are reproduced exactly)."""
    sigma = math.sqrt(variance)
    k = max(1, int(math.ceil(GAUSS_CUTOFF * sigma / h)))
    y = np.arange(-k, k + 1) * h
    w = np.exp(-0.5 * y**2 / variance)
    return w / w.sum()


def gaussian_convolve(f: GridFunction, variance: float) -> np.ndarray:
    w = gaussian_weights(variance, f.grid.h)
    k = (len(w) - 1) // 2
    return np.convolve(_extended_nodes(f, k), w, mode="valid")


@dataclass(frozen=True)
class GaussWholeLine(SemigroupEvaluator):
    """Heat semigroup on the line: convolution with the N(0, diffusivity * t) density.

    The integral is the rectangle rule on the grid nodes x + k h, which for the
    Gaussian is spectrally accurate; weights are normalised to sum 1.
    """

    diffusivity: float = 1.0
    kind = Kind.GAUSS_WHOLE_LINE

    def _apply(self, t, f):
        values = gaussian_convolve(f, self.diffusivity * t)
        return GridFunction(f.grid, values, _passthrough_extension(f))

    @property
    def params(self):
        return {"diffusivity": self.diffusivity}


@dataclass(frozen=True)
class StoppedBMHalfLine(SemigroupEvaluator):
    """Brownian motion on [0, inf) stopped at 0: Gaussian convolution of the
    extension f~(x) = 2 f(0) - f(-x), restricted to x >= 0."""

    diffusivity: float = 1.0
    kind = Kind.STOPPED_BM_HALFLINE

    def _check(self, f):
        super()._check(f)
        if f.grid.a != 0.0:
            raise GridError(f"stopped Brownian motion on the half-line needs a = 0, got a = {f.grid.a}")

    def _apply(self, t, f):
        reflected = GridFunction(f.grid, f.values, Extension.REFLECT2F0)
        values = gaussian_convolve(reflected, self.diffusivity * t)
        return GridFunction(f.grid, values, Extension.REFLECT2F0)

    @property
    def params(self):
        return {"diffusivity": self.diffusivity}


def poisson_weights(mean: float) -> np.ndarray:
    """Poisson(mean) probabilities p_0..p_K, K the first index whose tail is
    below 1e-14, renormalised to sum 1."""
    if mean == 0.0:
        return np.ones(1)
    k = np.arange(POISSON_CAP + 1)
    # tail P(N > K) = P(Gamma(K + 1) < mean) = gammainc(K + 1, mean)
    tails = gammainc(k + 1, mean)
    ok = np.nonzero(tails < POISSON_TAIL)[0]
    if ok.size == 0:
        raise SeriesTruncationError(
            f"Poisson tail for mean {mean} not below {POISSON_TAIL} within {POISSON_CAP} terms")
    kmax = int(ok[0])
    logp = -mean + k[:kmax + 1] * math.log(mean) - np.array([math.lgamma(j + 1) for j in range(kmax + 1)])
    p = np.exp(logp)
    return p / p.sum()


@dataclass(frozen=True)
class CompoundPoisson(SemigroupEvaluator):
    """Jumps of size ``jump`` at rate ``rate``, optionally with a Brownian part
    of variance ``diffusion * t`` and a drift; the three parts commute and are
    composed as convolution and shift.

    (e^{tA} f)(x) = sum_k P(N_t = k) f(x + k jump)  (plus Gaussian and drift).
    """

    rate: float = 1.0
    jump: float = 0.1
    diffusion: float = 0.0
    drift: float = 0.0
    kind = Kind.COMPOUND_POISSON
    tolerance = 1e-12

    def __post_init__(self):
        if self.rate < 0 or self.diffusion < 0:
            raise ValueError("rate and diffusion must be nonnegative")

    def _apply(self, t, f):
        p = poisson_weights(self.rate * t)
        x = f.grid.x
        values = np.zeros(f.grid.n)
        for k, pk in enumerate(p):
            values += pk * f.at(x + k * self.jump)
        out = GridFunction(f.grid, values, _passthrough_extension(f))
        if self.diffusion > 0:
            out = GridFunction(f.grid, gaussian_convolve(out, self.diffusion * t), out.extension)
        if self.drift != 0:
            out = GridFunction(f.grid, out.at(x + self.drift * t), out.extension)
        return out

    @property
    def params(self):
        return {"rate": self.rate, "jump": self.jump, "diffusion": self.diffusion, "drift": self.drift}


# -- bounded interval kinds ---------------------------------------------------------------

def expm_scaling_squaring(A: np.ndarray, theta: float = 0.5, degree: int = 18) -> np.ndarray:
    """Matrix exponential: scale so ||A||_1 / 2^s <= theta, Taylor polynomial, square s times."""
    norm = float(np.linalg.norm(A, 1))
    s = max(0, int(math.ceil(math.log2(norm / theta)))) if norm > 0 else 0
    B = A / 2.0**s
    E = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, degree + 1):
        term = term @ B / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def interval_generator(grid: Grid, diffusivity: float = 1.0) -> np.ndarray:
    """Finite-difference d^2/dx^2 with first and last rows zeroed."""
    n, h = grid.n, grid.h
    L = np.zeros((n, n))
    i = np.arange(1, n - 1)
    L[i, i - 1] = 1.0
    L[i, i] = -2.0
    L[i, i + 1] = 1.0
    return diffusivity * L / h**2


@lru_cache(maxsize=64)
def _interval_propagator(grid: Grid, diffusivity: float, t: float) -> np.ndarray:
    E = expm_scaling_squaring(t * interval_generator(grid, diffusivity))
    E.flags.writeable = False
    return E


@dataclass(frozen=True)
class StoppedBMInterval(SemigroupEvaluator):
    """Brownian motion on [a, b] stopped at the boundary: A = d^2/dx^2 with
    f''(a) = f''(b) = 0, realised by the finite-difference generator whose
    boundary rows are zero."""

    diffusivity: float = 1.0
    kind = Kind.STOPPED_BM_INTERVAL

    def _apply(self, t, f):
        E = _interval_propagator(f.grid, self.diffusivity, t)
        return GridFunction(f.grid, E @ f.values, Extension.CONSTANT)

    @property
    def params(self):
        return {"diffusivity": self.diffusivity}


@lru_cache(maxsize=32)
def _sine_basis(a: float, b: float, n: int, modes: int) -> np.ndarray:
    x = a + np.arange(n) * ((b - a) / (n - 1))
    k = np.arange(1, modes + 1)
    S = np.sin(np.outer(k, np.pi * (x - a) / (b - a)))
    S.flags.writeable = False
    return S


@lru_cache(maxsize=32)
def _cosine_basis(a: float, b: float, n: int, modes: int) -> np.ndarray:
    x = a + np.arange(n) * ((b - a) / (n - 1))
    k = np.arange(0, modes + 1)
    C = np.cos(np.outer(k, np.pi * (x - a) / (b - a)))
    C.flags.writeable = False
    return C


def sine_coefficients(f: GridFunction, modes: int) -> np.ndarray:
    """Sine coefficients b_1..b_modes of f on [a, b].

    The linear lift through (a, f(a)) and (b, f(b)) has closed-form
    coefficients; the remainder vanishes at both ends and is transformed with
    the trapezoid rule.
    """
    g = f.grid
    L = g.b - g.a
    v = f.values
    lo, hi = v[0], v[-1]
    u = (g.x - g.a) / L
    lift = lo + (hi - lo) * u
    k = np.arange(1, modes + 1)
    sign = (-1.0) ** k
    lift_coef = lo * 2.0 * (1.0 - sign) / (k * np.pi) + (hi - lo) * 2.0 * (-sign) / (k * np.pi)
    S = _sine_basis(g.a, g.b, g.n, modes)
    rem = (v - lift) * trapezoid_weights(g)
    return lift_coef + (2.0 / L) * (S @ rem)


@dataclass(frozen=True)
class DirichletHeat(SemigroupEvaluator):
    """Heat semigroup on L^2(a, b) with zero Dirichlet data, by sine series.

    Output: sum_k exp(-diffusivity (k pi / L)^2 t) b_k sin(k pi (x - a) / L),
    k <= min(n_modes, n - 2).
    """

    n_modes: int = N_MODES
    diffusivity: float = 1.0
    kind = Kind.DIRICHLET_HEAT

    def modes(self, grid: Grid) -> int:
        return max(1, min(self.n_modes, grid.n - 2))

    def _decay(self, grid, t, start):
        L = grid.b - grid.a
        k = np.arange(start, self.modes(grid) + 1)
        return np.exp(-self.diffusivity * (k * np.pi / L) ** 2 * t)

    def _apply(self, t, f):
        return self.apply_with_tail(t, f)[0]

    def apply_with_tail(self, t: float, f: GridFunction):
        """Return (e^{tA} f, series tail bound exp(-diffusivity (N pi / L)^2 t) ||f||)."""
        if t == 0.0:
            self._check(f)
            return f, 0.0
        if 0.0 < t < MIN_SPECTRAL_TIME:
            raise ValueError(f"t = {t} is below {MIN_SPECTRAL_TIME}: spectral series under-resolved")
        self._check(f)
        g = f.grid
        N = self.modes(g)
        b = sine_coefficients(f, N)
        values = _sine_basis(g.a, g.b, g.n, N).T @ (self._decay(g, t, 1) * b)
        values[[0, -1]] = 0.0
        L = g.b - g.a
        tail = math.exp(-self.diffusivity * (N * np.pi / L) ** 2 * t) * f.sup_norm()
        return GridFunction(g, values, Extension.ZERO), tail

    def apply(self, t, f):
        t = float(t)
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"time must be finite and >= 0, got {t}")
        return self.apply_with_tail(t, f)[0]

    def integrate_linear(self, dt, g0, g1):
        """Exact in sine space: mode k gets dt (E2 b0 + (E1 - E2) b1) with
        z = lambda_k dt, E1 = (1 - e^{-z}) / z, E2 = int_0^1 u e^{-z u} du."""
        self._check(g0)
        g = g0.grid
        N = self.modes(g)
        L = g.b - g.a
        z = self.diffusivity * (np.arange(1, N + 1) * np.pi / L) ** 2 * dt
        E1 = -np.expm1(-z) / z
        small = z < 1e-3
        zs = np.where(small, 1.0, z)
        E2 = np.where(small, 0.5 - z / 3.0 + z**2 / 8.0,
                      (-np.expm1(-zs) - zs * np.exp(-zs)) / zs**2)
        coef = dt * (E2 * sine_coefficients(g0, N) + (E1 - E2) * sine_coefficients(g1, N))
        values = _sine_basis(g.a, g.b, g.n, N).T @ coef
        values[[0, -1]] = 0.0
        return GridFunction(g, values, Extension.ZERO)

    @property
    def params(self):
        return {"n_modes": self.n_modes, "diffusivity": self.diffusivity}


@dataclass(frozen=True)
class NeumannHeat(SemigroupEvaluator):
    """Heat semigroup with zero Neumann data, by cosine series (trapezoid
    coefficients), k <= min(n_modes, n - 2)."""

    n_modes: int = N_MODES
    diffusivity: float = 1.0
    kind = Kind.NEUMANN_HEAT

    def modes(self, grid: Grid) -> int:
        return max(1, min(self.n_modes, grid.n - 2))

    def cosine_coefficients(self, f: GridFunction) -> np.ndarray:
        g = f.grid
        C = _cosine_basis(g.a, g.b, g.n, self.modes(g))
        return (2.0 / (g.b - g.a)) * (C @ (f.values * trapezoid_weights(g)))

    def _apply(self, t, f):
        if t < MIN_SPECTRAL_TIME:
            raise ValueError(f"t = {t} is below {MIN_SPECTRAL_TIME}: spectral series under-resolved")
        g = f.grid
        N = self.modes(g)
        a = self.cosine_coefficients(f)
        L = g.b - g.a
        k = np.arange(N + 1)
        decay = np.exp(-self.diffusivity * (k * np.pi / L) ** 2 * t)
        coef = decay * a
        coef[0] *= 0.5
        values = _cosine_basis(g.a, g.b, g.n, N).T @ coef
        return GridFunction(g, values, Extension.CONSTANT)

    @property
    def params(self):
        return {"n_modes": self.n_modes, "diffusivity": self.diffusivity}


# -- multiplicative kinds -------------------------------------------------------------------

def _coefficient_values(beta: GridFunction, f: GridFunction) -> np.ndarray:
    if beta.grid == f.grid:
        return beta.values
    return beta.at(f.grid.x)


@dataclass(frozen=True)
class Multiplication(SemigroupEvaluator):
    """(e^{tB} f)(x) = exp(t beta(x)) f(x)."""

    beta: GridFunction
    kind = Kind.MULTIPLICATION
    exact_formula = True
    tolerance = 1e-13

    def growth(self):
        return (1.0, max(0.0, float(np.max(self.beta.values))))

    def _apply(self, t, f):
        values = np.exp(t * _coefficient_values(self.beta, f)) * f.values
        return GridFunction(f.grid, values, _passthrough_extension(f))

    @property
    def params(self):
        return {"beta_range": [float(np.min(self.beta.values)), float(np.max(self.beta.values))]}


def identity_semigroup(grid: Grid) -> Multiplication:
    """The trivial semigroup e^{t 0} = I, as multiplication by zero."""
    return Multiplication(GridFunction(grid, np.zeros(grid.n), Extension.ZERO))


@dataclass(frozen=True)
class FeynmanKacTransport(SemigroupEvaluator):
    """Transport with speed eps and reaction beta / eps:

    (e^{tA} f)(x) = exp(eps^{-1} int_{x - eps t}^{x} beta(y) dy) f(x - eps t).

    The integral uses the exact integral of beta's piecewise-linear
    interpolant (beta's extension beyond the window).
    """

    beta: GridFunction
    eps: float = 1.0
    kind = Kind.FEYNMAN_KAC

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    def growth(self):
        return (1.0, max(0.0, float(np.max(self.beta.values))))

    def exponent(self, t: float, x: np.ndarray) -> np.ndarray:
        B = antiderivative(self.beta)
        return (B(x) - B(x - self.eps * t)) / self.eps

    def _apply(self, t, f):
        x = f.grid.x
        values = np.exp(self.exponent(t, x)) * f.at(x - self.eps * t)
        return GridFunction(f.grid, values, _passthrough_extension(f))

    @property
    def params(self):
        return {"eps": self.eps}


def growth_bound_holds(ev: SemigroupEvaluator, t: float, f: GridFunction, rel: float = 1e-8) -> bool:
    """||e^{tA} f|| <= M e^{omega t} ||f|| within ``rel`` relative."""
    M, omega = ev.growth()
    bound = M * math.exp(omega * t) * f.sup_norm()
    return ev.apply(t, f).sup_norm() <= bound * (1.0 + rel) + 1e-300


def commutation_defect(ev: SemigroupEvaluator, t: float, f: GridFunction, S: str = "first") -> float:
    """sup over interior points of |S e^{tA} f - e^{tA} S f|, S a first or second difference."""
    stencil = {"first": first_difference, "second": second_difference}[S]
    lhs = stencil(ev.apply(t, f))
    rhs = ev.apply(t, stencil(f))
    return float(np.nanmax(np.abs(lhs.values[1:-1] - rhs.values[1:-1])))


_FACTORY = {
    "left-shift": LeftShift,
    "gauss-whole-line": GaussWholeLine,
    "stopped-bm-halfline": StoppedBMHalfLine,
    "stopped-bm-interval": StoppedBMInterval,
    "dirichlet-heat": DirichletHeat,
    "neumann-heat": NeumannHeat,
    "compound-poisson": CompoundPoisson,
    "multiplication": Multiplication,
    "feynman-kac": FeynmanKacTransport,
}


def make_evaluator(kind: str, **params) -> SemigroupEvaluator:
    """Build an evaluator from its kind name and keyword parameters.

    ``beta`` (for multiplication and feynman-kac) must already be a GridFunction.
    """
    try:
        cls = _FACTORY[Kind(kind).value]
    except ValueError:
        raise ValueError(f"unknown semigroup kind {kind!r}; expected one of {sorted(_FACTORY)}") from None
    return cls(**params)
