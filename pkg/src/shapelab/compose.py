"""Splitting schemes, Chernoff products and Trotter-Kato limit probes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Extension, Grid, GridFunction, sup_distance
from .operators import BoundedOperator, exp_series
from .report import ExperimentReport, Verdict
from .semigroups import SemigroupEvaluator, interval_generator
from .shape import ConeSpec, is_member

ORDER_GUARD = 100 * np.finfo(float).eps


def _check_split_args(t, n):
    if not t >= 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if int(n) != n or n < 1:
        raise ValueError(f"need n >= 1 steps, got {n}")


def _stepper(ev):
    """Uniform callable (h, f) -> f for evaluators and bare callables."""
    if isinstance(ev, SemigroupEvaluator):
        return ev.apply
    return ev


def lie_split(evA, evB, t: float, n: int, f: GridFunction,
              return_states: bool = False, transpose: bool = False):
    """(e^{(t/n)A} e^{(t/n)B})^n f.

    Within each factor the A-step is taken first, following the written
    order of the factor; ``transpose`` swaps the two.  With ``return_states`` the
    pair (result, states) is returned, states listing (time, substep, state)
    after every substep.
    """
    _check_split_args(t, n)
    A, B = _stepper(evA), _stepper(evB)
    if transpose:
        A, B = B, A
    h = t / n
    u = f
    states = []
    for k in range(n):
        u = A(h, u)
        if return_states:
            states.append(((k + 1) * h, "A", u))
        u = B(h, u)
        if return_states:
            states.append(((k + 1) * h, "B", u))
    return (u, states) if return_states else u


def strang_split(evA, evB, t: float, n: int, f: GridFunction,
                 return_states: bool = False, transpose: bool = False):
    """(e^{(t/2n)B} e^{(t/n)A} e^{(t/2n)B})^n f."""
    _check_split_args(t, n)
    A, B = _stepper(evA), _stepper(evB)
    if transpose:
        A, B = B, A
    h = t / n
    u = f
    states = []
    for k in range(n):
        for label, op, step in (("B", B, 0.5 * h), ("A", A, h), ("B", B, 0.5 * h)):
            u = op(step, u)
            if return_states:
                states.append(((k + 1) * h, label, u))
    return (u, states) if return_states else u


@dataclass(frozen=True)
class ChernoffFamily:
    """A family h -> V(h) of bounded operators with V(0) = I and
    ||V(h)^n|| <= M e^{n h omega}."""

    V: Callable[[float, GridFunction], GridFunction]
    stability: tuple = (1.0, 0.0)
    name: str = "chernoff"

    def __call__(self, h: float, f: GridFunction) -> GridFunction:
        if h == 0:
            return f
        return self.V(h, f)

    @classmethod
    def from_semigroup(cls, ev: SemigroupEvaluator) -> "ChernoffFamily":
        return cls(ev.apply, ev.growth(), f"semigroup:{ev.kind.value}")

    @classmethod
    def euler(cls, grid: Grid, diffusivity: float = 1.0) -> "ChernoffFamily":
        """V(h) = I + h L with L the finite-difference Laplacian whose boundary
        rows are zero (frozen boundary values); stable for h <= dx^2 / 2."""
        L = interval_generator(grid, diffusivity)

        def V(h, f):
            return GridFunction(f.grid, f.values + h * (L @ f.values), Extension.CONSTANT)

        return cls(V, (1.0, 0.0), "explicit-euler")

    @classmethod
    def exponential_series(cls, op: BoundedOperator) -> "ChernoffFamily":
        """V(h) = e^{hB} by its power series."""
        return cls(lambda h, f: exp_series(op, h, f), (1.0, op.norm_bound()), "exp-series")


def chernoff_iterate(fam: ChernoffFamily, t: float, n: int, f: GridFunction) -> GridFunction:
    """V(t/n)^n f."""
    _check_split_args(t, n)
    u = f
    h = t / n
    for _ in range(n):
        u = fam(h, u)
    return u


def bounded_perturbation(evA, B: BoundedOperator, t: float, n: int, f: GridFunction,
                         return_states: bool = False):
    """Lie product of e^{(t/n)A} with the series-evaluated e^{(t/n)B}."""
    return lie_split(evA, lambda h, u: exp_series(B, h, u), t, n, f, return_states=return_states)


def order_table(ns, errors) -> list:
    """Rows (n, error, estimated_order); the order compares each n with the
    previous one as log2(e_prev / e) scaled by log2(n / n_prev).  Entries whose
    finer error is below 100 machine epsilons are NaN."""
    rows = []
    for i, (n, e) in enumerate(zip(ns, errors)):
        order = math.nan
        if i > 0:
            e_prev, n_prev = errors[i - 1], ns[i - 1]
            if e > ORDER_GUARD and e_prev > 0:
                order = math.log2(e_prev / e) / math.log2(n / n_prev)
        rows.append((int(n), float(e), order))
    return rows


def self_convergence(scheme: Callable[[int], GridFunction], ns, n_ref: int) -> list:
    """Errors of scheme(n) against scheme(n_ref), as an order table."""
    ref = scheme(n_ref)
    errors = [sup_distance(scheme(n), ref) for n in ns]
    return order_table(list(ns), errors)


def _nonincreasing(seq, slack=1e-14) -> bool:
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def trotter_kato_probe(seq, limit: SemigroupEvaluator, cone: ConeSpec, t: float, corpus,
                       name: str = "trotter-kato-probe", labels: Optional[list] = None) -> ExperimentReport:
    """Compare apply(seq[k], t, f) with apply(limit, t, f) over k for each
    corpus member in the cone; every image (including the limit's) is checked
    for cone membership.  Pass when the errors are non-increasing in k and all
    images are members."""
    labels = labels if labels is not None else list(range(len(seq)))
    report = ExperimentReport(name, {"t": t, "cone": cone.kind.value, "sequence": [str(l) for l in labels]})
    rows = []
    ok = True
    for i, f in enumerate(corpus):
        if not is_member(f, cone).member:
            report.notes.append(f"corpus member {i} is not in the cone; skipped")
            continue
        target = limit.apply(t, f)
        lim_rep = is_member(target, cone)
        ok &= lim_rep.member
        errs = []
        for label, ev in zip(labels, seq):
            img = ev.apply(t, f)
            rep = is_member(img, cone)
            err = sup_distance(img, target)
            errs.append(err)
            ok &= rep.member
            rows.append((i, label, err, rep.member, rep.worst_violation))
        rows.append((i, "limit", 0.0, lim_rep.member, lim_rep.worst_violation))
        if not _nonincreasing(errs):
            ok = False
            report.notes.append(f"corpus member {i}: errors not non-increasing: {errs}")
    report.add_table("errors", ["corpus_index", "k", "error", "member", "worst_violation"], rows)
    report.verdict = Verdict.PASS if ok else Verdict.FAIL
    return report
