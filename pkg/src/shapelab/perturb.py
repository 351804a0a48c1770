"""Dyson-Phillips series and the empirical Miyadera constant.

For A generating T(t) and a perturbation B with

    int_0^{t0} ||B T(s) x|| ds <= q ||x||,   q < 1,

A + B generates U(t) = sum_n U_n(t), U_0 = T and
U_n(t) x = int_0^t T(t - s) B U_{n-1}(s) x ds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError
from .operators import BoundedOperator

MIYADERA_NODES = 64


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbing operator B with the target constants q in (0, 1) and t0 > 0."""

    B: BoundedOperator
    q_target: float = 0.5
    t0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.q_target < 1.0:
            raise ValueError(f"q_target must lie in (0, 1), got {self.q_target}")
        if not self.t0 > 0.0:
            raise ValueError(f"t0 must be positive, got {self.t0}")


@dataclass(frozen=True)
class DysonState:
    """Terms U_0(t) f, U_1(t) f, ..., their sum, and the geometric tail estimate."""

    terms: tuple
    partial_sum: object
    tail_estimate: float
    q_hat: float

    def term_norms(self) -> list:
        return [u.sup_norm() for u in self.terms]

    def decay_rows(self) -> list:
        """Rows (n, term_norm, tail_estimate) where the tail after term n is
        ||U_n|| q / (1 - q)."""
        q = self.q_hat
        factor = q / (1.0 - q)
        return [(n, u.sup_norm(), u.sup_norm() * factor) for n, u in enumerate(self.terms)]


class MiyaderaEstimate(NamedTuple):
    q: float
    probe_index: int


def _trapezoid_uniform(values, dt):
    values = np.asarray(values, dtype=float)
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])))


def miyadera_estimate(evA, pert: PerturbationSpec, probe_set) -> MiyaderaEstimate:
    """q = max over probes of (trapezoid in s of ||B T(s) x||, 64 nodes on [0, t0]) / ||x||.

    This is an empirical lower estimate of the Miyadera constant.
    """
    probes = list(probe_set)
    if not probes:
        raise ValueError("probe set must be non-empty")
    s = np.linspace(0.0, pert.t0, MIYADERA_NODES)
    best, best_i = -1.0, 0
    for i, x in enumerate(probes):
        nx = x.sup_norm()
        if nx == 0.0:
            raise ValueError(f"probe {i} is the zero function")
        integrand = [pert.B.apply(evA.apply(si, x)).sup_norm() for si in s]
        q = _trapezoid_uniform(integrand, s[1] - s[0]) / nx
        if q > best:
            best, best_i = q, i
    return MiyaderaEstimate(best, best_i)


def dyson_phillips(evA, pert: PerturbationSpec, t: float, n_terms: int, quad_steps: int, f,
                   probe_set=None, q_hat=None) -> DysonState:
    """Truncated Dyson-Phillips series at time t.

    The terms are evaluated on the nodes s_j = j t / (quad_steps - 1).  With
    g_j = B U_{n-1}(s_j) f the composite trapezoid rule for
    U_n(s_j) f = int_0^{s_j} T(s_j - s) g(s) ds is accumulated by

        P_0 = 0,  P_{j+1} = T(dt) (P_j + w_j g_j),  U_n(s_j) f = dt (P_j + g_j / 2),

    w_0 = 1/2 and w_j = 1 otherwise, so each term costs quad_steps - 1
    applications of T(dt).  ``f`` only needs vector-space operations, so
    product-space states work as well.

    Raises
    ------
    DivergenceError
        If the empirical Miyadera constant is >= 1.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if n_terms < 1:
        raise ValueError(f"need n_terms >= 1, got {n_terms}")
    if quad_steps < 4:
        raise ValueError(f"need quad_steps >= 4, got {quad_steps}")
    if q_hat is None:
        q_hat = miyadera_estimate(evA, pert, probe_set if probe_set is not None else [f]).q
    if q_hat >= 1.0:
        raise DivergenceError(f"empirical Miyadera constant {q_hat:.4g} >= 1")
    m = quad_steps
    dt = t / (m - 1)
    # U_0 at every node, each evaluated directly
    prev = [evA.apply(j * dt, f) for j in range(m - 1)] + [evA.apply(t, f)]
    terms = [prev[-1]]
    zero = f * 0.0
    for _ in range(1, n_terms):
        g = [pert.B.apply(u) for u in prev]
        cur = [zero]
        P = zero
        for j in range(m - 1):
            P = evA.apply(dt, P + (0.5 if j == 0 else 1.0) * g[j])
            cur.append(dt * (P + 0.5 * g[j + 1]))
        prev = cur
        terms.append(cur[-1])
    partial = terms[0]
    for u in terms[1:]:
        partial = partial + u
    tail = terms[-1].sup_norm() * q_hat / (1.0 - q_hat)
    return DysonState(tuple(terms), partial, float(tail), float(q_hat))
