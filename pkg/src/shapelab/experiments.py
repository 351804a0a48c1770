"""Registry of runnable experiments.

Each experiment maps one shape-preservation claim to a deterministic run
that produces an :class:`ExperimentReport`.  Parameters are declared with
defaults; overrides are type-checked against them.  Every experiment assumes
that the generators it combines are well posed (for sums A + B this is
assumed, not checked).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .compose import (ChernoffFamily, bounded_perturbation, chernoff_iterate, lie_split,
                      order_table, strang_split, trotter_kato_probe)
from .corpus import (random_convex_pl, random_negative_convex, random_nonincreasing,
                     random_sigmoid)
from .delay import diffusion_delay, head_witnesses, solve, trajectory_csv, transport_delay
from .errors import ConfigError, PreconditionError
from .functions import (Exp, PiecewiseLinear, Polynomial, Polynomial2D, Tanh, Trig, constant,
                        linear)
from .grid import Extension, Grid, GridFunction, sample, second_difference, sup_distance
from .operators import MultiplicationOperator
from .perturb import PerturbationSpec, dyson_phillips, miyadera_estimate
from .report import ExperimentReport, Verdict
from .semigroups import (CompoundPoisson, DirichletHeat, FeynmanKacTransport, GaussWholeLine,
                         LeftShift, Multiplication, NeumannHeat, StoppedBMHalfLine,
                         StoppedBMInterval, identity_semigroup)
from .shape import (CONVEX, HESSIAN_PSD, MONOTONE, NEGATIVE_CONVEX, ConeKind, ConeSpec,
                    WitnessLog, approximate_convex, approximate_convex_2d, approximate_monotone,
                    is_member, lp_limit_convexity_check, modulus_of_continuity, project_witnesses)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    anchor: str
    defaults: dict
    fn: Callable[[dict, np.random.Generator], ExperimentReport]


REGISTRY: dict = {}


def experiment(name, description, anchor, **defaults):
    def deco(fn):
        REGISTRY[name] = Experiment(name, description, anchor, dict(defaults), fn)
        return fn
    return deco


def validate_params(exp: Experiment, overrides: dict) -> dict:
    """Merge ``overrides`` into the defaults, coercing to the default's type."""
    params = dict(exp.defaults)
    for key, value in overrides.items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for {exp.name}; "
                              f"expected one of {sorted(params)}")
        params[key] = _coerce(key, value, params[key])
    return params


def _coerce(key, value, default):
    kind = type(default)
    try:
        if kind is bool:
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(value)
                return value.lower() in ("true", "1")
            if not isinstance(value, (bool, int)):
                raise ValueError(value)
            return bool(value)
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError(value)
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
            return out
        if kind is list:
            if not isinstance(value, (list, tuple)):
                raise ValueError(value)
            return [float(v) for v in value]
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r}: cannot interpret {value!r} as {kind.__name__}") from None


def _verdict(ok: bool) -> Verdict:
    return Verdict.PASS if ok else Verdict.FAIL


def _membership_rows(log: WitnessLog, label):
    return [(label, *rep.csv_row(t)) for t, rep in log]


_MEMBER_HEADER = ["case", "t", "member", "worst_violation", "witness_x", "tol"]


# -- corpora --------------------------------------------------------------------------------

def monotone_corpus(rng, grid, count):
    """Alternating random tables and random sigmoids (non-increasing, >= 0)."""
    return [random_nonincreasing(rng, grid) if i % 2 else random_sigmoid(rng, grid)
            for i in range(count)]


def smooth_sigmoid_corpus(rng, grid, count, width=(30.0, 50.0)):
    """Slowly varying non-increasing sigmoids for the transport-speed limit."""
    out = []
    for _ in range(count):
        amp = rng.uniform(0.5, 2.0)
        center = rng.uniform(-5.0, 5.0)
        w = rng.uniform(*width)
        floor = rng.uniform(0.0, 1.0)
        out.append(sample(Tanh(-0.5 * amp, center, w, 0.5 * amp + floor), grid))
    return out


# -- semigroup catalogue --------------------------------------------------------------------

def _catalogue_monotone(p, rng, name):
    gl = Grid(-p["half_width"], p["half_width"], p["n"])
    gh = Grid(0.0, 2 * p["half_width"], p["n"])
    beta = sample(Tanh(-0.5, 0.0, 3.0), gl)
    cases = [("left-shift", LeftShift(), gl), ("gauss-whole-line", GaussWholeLine(), gl),
             ("stopped-bm-halfline", StoppedBMHalfLine(), gh)]
    for lam in p["rates"]:
        cases.append((f"compound-poisson-rate-{lam:g}", CompoundPoisson(lam, p["jump"]), gl))
    for eps in p["eps"]:
        cases.append((f"feynman-kac-eps-{eps:g}", FeynmanKacTransport(beta, eps), gl))
    report = ExperimentReport(name, dict(p))
    rows, failures = [], 0
    for label, ev, grid in cases:
        for i, f in enumerate(monotone_corpus(rng, grid, p["count"])):
            for t in p["times"]:
                rep = is_member(ev.apply(t, f), MONOTONE)
                failures += not rep.member
                rows.append((f"{label}/{i}", *rep.csv_row(t)))
    report.add_table("membership", _MEMBER_HEADER, rows)
    report.notes.append(f"{failures} membership failures")
    report.verdict = _verdict(failures == 0)
    return report


@experiment("monotone-levy",
            "Levy-type semigroups (shift, Gauss, stopped BM, compound Poisson, Feynman-Kac) keep non-increasing data non-increasing",
            "Levy semigroup examples: non-increasing functions stay non-increasing",
            n=801, half_width=20.0, count=50, times=[0.1, 1.0, 5.0], rates=[0.5, 2.0],
            jump=0.5, eps=[1.0, 0.1])
def _monotone_levy(p, rng):
    return _catalogue_monotone(p, rng, "monotone-levy")


@experiment("feynman-kac-limit",
            "Feynman-Kac transport: closed form for constant beta and monotonicity for non-increasing beta",
            "Feynman-Kac transport example and its eps -> 0 limit",
            n=801, half_width=20.0, c=0.5, t=2.0, eps=[1.0, 0.5, 0.1], count=20)
def _feynman_kac_limit(p, rng):
    g = Grid(-p["half_width"], p["half_width"], p["n"])
    report = ExperimentReport("feynman-kac-limit", dict(p))
    one = sample(constant(1.0), g)
    beta_c = sample(constant(p["c"]), g)
    rows = []
    ok = True
    for eps in p["eps"]:
        out = FeynmanKacTransport(beta_c, eps).apply(p["t"], one)
        err = float(np.max(np.abs(out.values - math.exp(p["c"] * p["t"]))))
        ok &= err <= 1e-12
        rows.append((eps, err))
    report.add_table("constant_beta", ["eps", "error_vs_exp_ct"], rows)
    beta = sample(Tanh(-0.5, 0.0, 3.0), g)
    mrows, fails = [], 0
    for i, f in enumerate(monotone_corpus(rng, g, p["count"])):
        for eps in p["eps"]:
            rep = is_member(FeynmanKacTransport(beta, eps).apply(p["t"], f), MONOTONE)
            fails += not rep.member
            mrows.append((f"eps-{eps:g}/{i}", *rep.csv_row(p["t"])))
    report.add_table("membership", _MEMBER_HEADER, mrows)
    report.verdict = _verdict(ok and fails == 0)
    return report


@experiment("stopped-bm-halfline",
            "Stopped Brownian motion on the half-line by reflection: constants fixed, monotonicity kept",
            "Stopped Brownian motion example, reflection f~(x) = 2 f(0) - f(-x)",
            n=801, length=40.0, count=50, times=[0.1, 1.0, 5.0])
def _stopped_bm(p, rng):
    g = Grid(0.0, p["length"], p["n"])
    ev = StoppedBMHalfLine()
    report = ExperimentReport("stopped-bm-halfline", dict(p))
    c = sample(constant(2.5), g)
    const_err = max(sup_distance(ev.apply(t, c), c) for t in p["times"])
    rows, fails = [], 0
    for i, f in enumerate(monotone_corpus(rng, g, p["count"])):
        for t in p["times"]:
            rep = is_member(ev.apply(t, f), MONOTONE)
            fails += not rep.member
            rows.append((str(i), *rep.csv_row(t)))
    report.add_table("membership", _MEMBER_HEADER, rows)
    report.notes.append(f"constant reproduction error {const_err:.3e}")
    report.verdict = _verdict(fails == 0 and const_err <= 1e-12)
    return report


def convex_pl_analytic(rng, grid):
    """Random convex piecewise-linear data continued linearly past the window,
    so that translated samples stay convex."""
    f, mesh = random_convex_pl(rng, grid, zero_ends=False)
    spec = PiecewiseLinear(tuple(grid.x[mesh]), tuple(f.values[mesh]))
    return sample(spec, grid)


def _convex_catalogue(p, rng, name, ev, grid):
    report = ExperimentReport(name, dict(p))
    rows, fails = [], 0
    for i in range(p["count"]):
        f = convex_pl_analytic(rng, grid)
        for t in p["times"]:
            rep = is_member(ev.apply(t, f), CONVEX)
            fails += not rep.member
            rows.append((str(i), *rep.csv_row(t)))
    report.add_table("membership", _MEMBER_HEADER, rows)
    report.notes.append(f"{fails} membership failures")
    report.verdict = _verdict(fails == 0)
    return report


@experiment("shift-convexity", "The left shift keeps convex data convex",
            "Left shift example: convexity is preserved",
            n=401, count=50, times=[0.1, 1.0, 5.0])
def _shift_convexity(p, rng):
    return _convex_catalogue(p, rng, "shift-convexity", LeftShift(), Grid(0.0, 10.0, p["n"]))


@experiment("wentzell-interval-convexity",
            "Brownian motion on [0, 1] stopped at the boundary (f'' = 0 there) keeps convex data convex",
            "Stopped Brownian motion on an interval, domain f''(0) = f''(1) = 0",
            n=101, count=50, times=[0.01, 0.1, 0.5])
def _wentzell(p, rng):
    return _convex_catalogue(p, rng, "wentzell-interval-convexity", StoppedBMInterval(),
                             Grid(0.0, 1.0, p["n"]))


@experiment("dirichlet-negative-convex",
            "Dirichlet heat flow keeps negative convex data negative and convex",
            "Dirichlet heat example: f <= 0 and f'' >= 0 are preserved",
            n=513, count=50, times=[0.01, 0.1, 0.5, 1.0], n_modes=256)
def _dirichlet_negative_convex(p, rng):
    g = Grid(0.0, math.pi, p["n"])
    ev = DirichletHeat(n_modes=p["n_modes"])
    report = ExperimentReport("dirichlet-negative-convex", dict(p))
    rows, fails = [], 0
    for i in range(p["count"]):
        f = random_negative_convex(rng, g)
        for t in p["times"]:
            rep = is_member(ev.apply(t, f), NEGATIVE_CONVEX)
            fails += not rep.member
            rows.append((str(i), *rep.csv_row(t)))
    report.add_table("membership", _MEMBER_HEADER, rows)
    report.notes.append(f"{fails} membership failures")
    report.verdict = _verdict(fails == 0)
    return report


@experiment("dirichlet-convexity-counterexample",
            "Dirichlet heat flow of x^2 is not convex (it vanishes at both ends)",
            "Dirichlet heat example: g(0) = g(pi) = 0 rules out convexity",
            n=513, t=0.05, threshold=-0.01)
def _dirichlet_counterexample(p, rng):
    g = Grid(0.0, math.pi, p["n"])
    u = DirichletHeat().apply(p["t"], sample(Polynomial((0.0, 0.0, 1.0)), g))
    d2 = second_difference(u).values[1:-1]
    i = int(np.argmin(d2))
    rep = is_member(u, CONVEX)
    report = ExperimentReport("dirichlet-convexity-counterexample", dict(p))
    report.add_table("witness", ["min_second_difference", "witness_x", "member", "tol"],
                     [(float(d2[i]), float(g.x[i + 1]), rep.member, rep.tol_used)])
    report.verdict = _verdict(d2[i] < p["threshold"] and not rep.member)
    return report


def neumann_three_mode_curvature(x, t):
    """Second derivative of the first three non-trivial cosine modes of the
    Neumann flow of (x - pi/2)^2 on [0, pi]: coefficients 4/k^2 for even k."""
    k = np.array([2.0, 4.0, 6.0])
    return float(np.sum(-4.0 * np.exp(-k**2 * t) * np.cos(k * x)))


@experiment("neumann-convexity-counterexample",
            "Neumann heat flow breaks convexity of (x - pi/2)^2",
            "Neumann remark: the only convex functions in the domain are constants",
            n=513, times=[0.05, 0.1, 0.5])
def _neumann_counterexample(p, rng):
    g = Grid(0.0, math.pi, p["n"])
    f = sample(Polynomial((math.pi**2 / 4, -math.pi, 1.0)), g)
    ev = NeumannHeat()
    rows, found = [], False
    for t in p["times"]:
        rep = is_member(ev.apply(t, f), CONVEX)
        oracle = neumann_three_mode_curvature(rep.witness, t) if rep.witness is not None else math.nan
        confirmed = (not rep.member) and oracle < 0
        found |= confirmed
        rows.append((t, rep.member, rep.worst_violation, rep.witness, oracle, confirmed))
    report = ExperimentReport("neumann-convexity-counterexample", dict(p))
    report.add_table("witness", ["t", "member", "worst_violation", "witness_x",
                                 "three_mode_curvature", "confirmed"], rows)
    report.verdict = _verdict(found)
    return report


@experiment("hessian-2d-membership",
            "Hessian cone membership on the unit square and smooth convex approximation",
            "Two-dimensional convexity via positive semidefinite Hessian; smooth convex approximation",
            n=41, radius=0.05)
def _hessian(p, rng):
    g = Grid(0.0, 1.0, p["n"], dim=2)
    cases = [
        ("x2+y2-4", Polynomial2D(((2, 0, 1.0), (0, 2, 1.0), (0, 0, -4.0))), True),
        ("xy", Polynomial2D(((1, 1, 1.0),)), False),
        ("x2y2", Polynomial2D(((2, 2, 1.0),)), False),
        ("x2+xy+y2", Polynomial2D(((2, 0, 1.0), (1, 1, 1.0), (0, 2, 1.0))), True),
    ]
    rows, ok = [], True
    for label, spec, expect in cases:
        rep = is_member(sample(spec, g), HESSIAN_PSD)
        ok &= rep.member == expect
        rows.append((label, rep.member, expect, rep.worst_violation))
    report = ExperimentReport("hessian-2d-membership", dict(p))
    report.add_table("membership", ["case", "member", "expected", "worst_violation"], rows)
    f = sample(cases[0][1], g)
    smooth = approximate_convex_2d(f, p["radius"])
    rep = is_member(smooth, HESSIAN_PSD)
    dist = sup_distance(smooth, f)
    bound = modulus_of_continuity(f, p["radius"])
    ok &= rep.member and dist <= bound
    report.add_table("approximation", ["distance", "modulus_bound", "member"], [(dist, bound, rep.member)])
    report.verdict = _verdict(ok)
    return report


# -- composition ----------------------------------------------------------------------------

def splitting_study(n_grid=513, t=0.5, ns=(16, 32, 64, 128), n_ref=4096, cone_steps=16,
                    transpose=False):
    """Lie and Strang self-convergence for Dirichlet heat + multiplication by -x
    on (0, pi) with f = x^2 - pi x, and per-substep NegativeConvex checks."""
    g = Grid(0.0, math.pi, n_grid)
    A = DirichletHeat()
    B = Multiplication(sample(linear(-1.0), g))
    f = sample(Polynomial((0.0, -math.pi, 1.0)), g)
    out = {}
    for label, scheme in (("lie", lie_split), ("strang", strang_split)):
        ref = scheme(A, B, t, n_ref, f, transpose=transpose)
        errors = [sup_distance(scheme(A, B, t, n, f, transpose=transpose), ref) for n in ns]
        _, states = scheme(A, B, t, cone_steps, f, return_states=True, transpose=transpose)
        log = project_witnesses([(s_t, u) for s_t, _, u in states], NEGATIVE_CONVEX)
        out[label] = (order_table(list(ns), errors), log)
    return f, out


@experiment("splitting-orders",
            "Lie and Strang splitting orders for Dirichlet heat + multiplication, with per-step cone checks",
            "Sequential and Strang splittings are shape preserving",
            n=513, t=0.5, n_ref=4096, cone_steps=16, transpose=False)
def _splitting(p, rng):
    f, out = splitting_study(p["n"], p["t"], (16, 32, 64, 128), p["n_ref"], p["cone_steps"],
                             p["transpose"])
    report = ExperimentReport("splitting-orders", dict(p))
    bands = {"lie": (0.9, 1.1), "strang": (1.8, 2.2)}
    ok = True
    data_member = is_member(f, NEGATIVE_CONVEX).member
    for label, (rows, log) in out.items():
        report.add_table(f"{label}_orders", ["n", "error", "estimated_order"], rows)
        report.add_csv(f"{label}_membership", log.to_csv())
        lo, hi = bands[label]
        orders = [r[2] for r in rows[1:]]
        in_band = all(lo <= o <= hi for o in orders)
        ok &= in_band
        if data_member:
            ok &= log.all_member
        report.notes.append(f"{label}: orders {['%.3f' % o for o in orders]}, "
                            f"{len(log.failures())} of {len(log)} substeps outside NegativeConvex")
    report.verdict = _verdict(ok)
    return report


def euler_chernoff_errors(n_grid=21, t=0.1, ns=(64, 128, 256, 512, 1024, 2048, 4096)):
    g = Grid(0.0, 1.0, n_grid)
    f = sample(Trig("sin", 1.0, math.pi) + Polynomial((0.0, 0.0, 1.0)), g)
    target = StoppedBMInterval().apply(t, f)
    fam = ChernoffFamily.euler(g)
    return g, [sup_distance(chernoff_iterate(fam, t, n, f), target) for n in ns]


@experiment("chernoff-euler",
            "Explicit Euler family I + hL converges to the stopped-interval semigroup",
            "Chernoff product formula V(t/n)^n -> e^{tA}",
            n=21, t=0.1)
def _chernoff(p, rng):
    ns = (64, 128, 256, 512, 1024, 2048, 4096)
    g, errors = euler_chernoff_errors(p["n"], p["t"], ns)
    stable = [i for i, n in enumerate(ns) if p["t"] / n <= 0.5 * g.h**2]
    tail = errors[stable[0]:] if stable else []
    ok = bool(tail) and all(b < a for a, b in zip(tail, tail[1:]))
    report = ExperimentReport("chernoff-euler", dict(p))
    report.add_table("errors", ["n", "error", "estimated_order"], order_table(list(ns), errors))
    report.notes.append(f"errors decrease monotonically from n = {ns[stable[0]] if stable else None}")
    report.verdict = _verdict(ok)
    return report


def trotter_kato_fk(rng, count=10, k_max=6, t=1.0, n=5121, half_width=40.0):
    g = Grid(-half_width, half_width, n)
    beta = sample(Tanh(-0.5, 0.0, 30.0), g)
    corpus = smooth_sigmoid_corpus(rng, g, count)
    seq = [FeynmanKacTransport(beta, 2.0**-k) for k in range(k_max + 1)]
    report = trotter_kato_probe(seq, Multiplication(beta), MONOTONE, t, corpus,
                                name="trotter-kato-feynman-kac",
                                labels=list(range(k_max + 1)))
    return report, corpus, seq, Multiplication(beta)


@experiment("trotter-kato-feynman-kac",
            "Feynman-Kac transport with eps = 2^-k converges to multiplication; all images monotone",
            "Limit semigroup as eps -> 0; invariance of closed cones under strong limits",
            count=10, k_max=6, t=1.0, final_tol=1e-3)
def _trotter_kato(p, rng):
    report, corpus, seq, limit = trotter_kato_fk(rng, p["count"], p["k_max"], p["t"])
    last = max(sup_distance(seq[-1].apply(p["t"], f), limit.apply(p["t"], f)) for f in corpus)
    report.params = dict(p)
    report.notes.append(f"largest error at k = {p['k_max']}: {last:.3e}")
    if last >= p["final_tol"]:
        report.verdict = Verdict.FAIL
    return report


@experiment("bounded-perturbation-monotone",
            "Compound Poisson plus multiplication by a non-increasing beta >= 0 keeps non-increasing data monotone",
            "Bounded perturbation leaving the cone invariant preserves monotonicity",
            n=401, half_width=10.0, count=20, t=1.0, steps=16, rate=1.0, jump=0.25)
def _bounded_perturbation(p, rng):
    g = Grid(-p["half_width"], p["half_width"], p["n"])
    A = CompoundPoisson(p["rate"], p["jump"])
    B = MultiplicationOperator(sample(Tanh(-0.25, 0.0, 2.0, 0.25), g))
    rows, fails = [], 0
    for i, f in enumerate(monotone_corpus(rng, g, p["count"])):
        _, states = bounded_perturbation(A, B, p["t"], p["steps"], f, return_states=True)
        for s_t, label, u in states:
            rep = is_member(u, MONOTONE)
            fails += not rep.member
            rows.append((f"{i}/{label}", *rep.csv_row(s_t)))
    report = ExperimentReport("bounded-perturbation-monotone", dict(p))
    report.add_table("membership", _MEMBER_HEADER, rows)
    report.verdict = _verdict(fails == 0)
    return report


def dyson_closed_form(n=101, t=1.0, n_terms=12, quad_steps=128, beta_slope=-0.5):
    g = Grid(0.0, 1.0, n)
    beta = sample(linear(beta_slope), g)
    f = sample(constant(1.0), g)
    pert = PerturbationSpec(MultiplicationOperator(beta), 0.6, t)
    state = dyson_phillips(identity_semigroup(g), pert, t, n_terms, quad_steps, f)
    err = float(np.max(np.abs(state.partial_sum.values - np.exp(t * beta.values) * f.values)))
    norms = state.term_norms()
    ratios = [b / a for a, b in zip(norms, norms[1:]) if a > 0]
    return state, err, ratios


@experiment("dyson-phillips-closed-form",
            "Dyson-Phillips series for the identity semigroup + multiplication matches exp(t beta) f",
            "Miyadera-Voigt perturbation: U(t) = sum of Dyson-Phillips terms",
            n=101, t=1.0, n_terms=12, quad_steps=128, beta_slope=-0.5)
def _dyson(p, rng):
    state, err, ratios = dyson_closed_form(p["n"], p["t"], p["n_terms"], p["quad_steps"], p["beta_slope"])
    report = ExperimentReport("dyson-phillips-closed-form", dict(p))
    report.add_table("terms", ["n", "term_norm", "tail_estimate"], state.decay_rows())
    report.notes.append(f"sup error vs closed form {err:.3e}; q_hat {state.q_hat:.4f}; "
                        f"largest term ratio {max(ratios):.4f}")
    report.verdict = _verdict(err <= 1e-6 and max(ratios) <= state.q_hat + 0.05)
    return report


@experiment("miyadera-estimate",
            "Empirical Miyadera constant for multiplication perturbations",
            "Miyadera-Voigt condition int_0^t0 ||B e^{tA} x|| dt <= q ||x||",
            n=101, t0=0.5, beta_max=0.8)
def _miyadera(p, rng):
    g = Grid(0.0, 1.0, p["n"])
    beta = sample(linear(p["beta_max"]), g)
    I = identity_semigroup(g)
    probes = [sample(constant(1.0), g), sample(Exp(1.0, -1.0), g)]
    q = miyadera_estimate(I, PerturbationSpec(MultiplicationOperator(beta), 0.9, p["t0"]), probes)
    q10 = miyadera_estimate(I, PerturbationSpec(MultiplicationOperator(10.0 * beta), 0.9, p["t0"]), probes)
    expected = p["t0"] * p["beta_max"]
    report = ExperimentReport("miyadera-estimate", dict(p))
    report.add_table("estimates", ["scale", "q_hat", "probe_index", "expected"],
                     [(1.0, q.q, q.probe_index, expected), (10.0, q10.q, q10.probe_index, 10 * expected)])
    report.notes.append("q_hat is an empirical lower estimate over a finite probe set")
    ok = abs(q.q - expected) <= 1e-12 and abs(q10.q - 10 * q.q) <= 1e-12 * max(1.0, q10.q)
    report.verdict = _verdict(ok)
    return report


# -- delay ----------------------------------------------------------------------------------

def transport_history(grid):
    return lambda s: sample(Tanh(-0.5, 0.5 * s, 1.0, 0.5), grid, Extension.CONSTANT)


def diffusion_history(grid):
    return lambda s: sample(Polynomial((0.0, -1.0 - 0.3 * s, 1.0 + 0.3 * s)), grid, Extension.ZERO)


TRANSPORT_WINDOW = (-5.0, 15.0)


def delay_study(kind, c, tau, horizon, dt, n=None):
    """Solve one delay corollary instance; returns (states, head witnesses).

    The transport grid spacing defaults to dt, so every shift lands on a node.
    """
    if kind == "transport":
        a, b = TRANSPORT_WINDOW
        g = Grid(a, b, n or int(round((b - a) / dt)) + 1)
        prob = transport_delay(c, tau, g, transport_history(g), int(round(1 / dt)), horizon)
        cone = MONOTONE
    else:
        g = Grid(0.0, 1.0, n or 101)
        prob = diffusion_delay(c, tau, g.n, diffusion_history(g), int(round(1 / dt)), horizon)
        cone = NEGATIVE_CONVEX
    states = solve(prob, dt)
    return states, head_witnesses(states, cone)


def step_halving_ratio(kind, c, tau, horizon, dt, n=None):
    """Final-head distances (d(dt, dt/2), d(dt/2, dt/4)), compared on the
    coarsest grid's nodes.  Transport grids refine with the step."""
    finals = []
    for j in range(3):
        head = delay_study(kind, c, tau, horizon, dt / 2**j, n)[0][-1].head
        stride = 2**j if kind == "transport" and n is None else 1
        finals.append(head.values[::stride])
    d1 = float(np.max(np.abs(finals[0] - finals[1])))
    d2 = float(np.max(np.abs(finals[1] - finals[2])))
    return d1, d2


def _delay_experiment(kind, p, name):
    report = ExperimentReport(name, dict(p))
    states, log = delay_study(kind, p["c"], p["tau"], p["horizon"], p["dt"])
    report.add_csv("trajectory", trajectory_csv(states))
    report.add_csv("membership", log.to_csv())
    if p["horizon"] == 0:
        report.notes.append("empty trajectory: horizon 0")
        report.verdict = Verdict.INFORMATIONAL
        return report
    d1, d2 = step_halving_ratio(kind, p["c"], p["tau"], p["horizon"], p["dt"])
    ratio = d2 / d1 if d1 > 0 else 0.0
    report.add_table("step_halving", ["d_dt_vs_half", "d_half_vs_quarter", "ratio"], [(d1, d2, ratio)])
    report.verdict = _verdict(log.all_member and ratio <= 0.55)
    return report


@experiment("delay-transport",
            "Transport with delayed reaction c u(t - tau): monotone histories give monotone heads",
            "Delayed transport corollary: u(t, .) stays monotone",
            c=0.5, tau=0.5, horizon=3.0, dt=0.05)
def _delay_transport(p, rng):
    return _delay_experiment("transport", p, "delay-transport")


@experiment("delay-diffusion",
            "Diffusion with delayed half-shifted reaction: negative convex histories give negative convex heads",
            "Delayed diffusion corollary: u(t, .) stays negative and convex",
            c=0.5, tau=0.5, horizon=2.0, dt=0.025)
def _delay_diffusion(p, rng):
    return _delay_experiment("diffusion", p, "delay-diffusion")


# -- appendix constructions --------------------------------------------------------------------

def monotone_approx_suite(rng, count=50, eps=0.05, n=401):
    g = Grid(-5.0, 5.0, n)
    rows = []
    for i, f in enumerate(monotone_corpus(rng, g, count)):
        a = approximate_monotone(f, eps)
        dist = sup_distance(a, f)
        nonincreasing = bool(np.all(np.diff(a.values) <= 0.0))
        rows.append((i, dist, nonincreasing, dist < eps and nonincreasing))
    return rows


def convex_approx_suite(rng, count=50, n=401, smoothing=0.4):
    g = Grid(0.0, 1.0, n)
    rows = []
    for i in range(count):
        f, mesh = random_convex_pl(rng, g, zero_ends=False)
        a = approximate_convex(f, mesh, 0.0)
        exact_nodes = bool(np.array_equal(a.values[mesh], f.values[mesh]))
        member = is_member(a, CONVEX).member
        gaps = np.diff(g.x[mesh])
        r = smoothing * 0.5 * float(np.min(gaps))
        r = min(r, 0.9 * (float(min(gaps[0], gaps[-1])) - 2 * g.h))
        s = approximate_convex(f, mesh, max(r, 0.0))
        d2 = second_difference(s).values
        endpoint = max(abs(d2[0]), abs(d2[-1]))
        smooth_member = is_member(s, CONVEX).member
        rows.append((i, exact_nodes, member, smooth_member, endpoint,
                     exact_nodes and member and smooth_member and endpoint <= 1e-10))
    return rows


@experiment("appendix-monotone-approx",
            "C^1 non-increasing cosine-arc approximation within eps",
            "Monotone approximation lemma: stretched and translated cosine arcs",
            count=50, eps=0.05, n=401)
def _appendix_monotone(p, rng):
    rows = monotone_approx_suite(rng, p["count"], p["eps"], p["n"])
    report = ExperimentReport("appendix-monotone-approx", dict(p))
    report.add_table("results", ["index", "sup_distance", "nonincreasing", "ok"], rows)
    report.verdict = _verdict(all(r[-1] for r in rows))
    return report


@experiment("appendix-convex-approx",
            "Chord interpolation of convex data and convex corner blending",
            "Convex approximation lemma and the endpoint remark g''(a) = g''(b) = 0",
            count=50, n=401, smoothing=0.4)
def _appendix_convex(p, rng):
    rows = convex_approx_suite(rng, p["count"], p["n"], p["smoothing"])
    report = ExperimentReport("appendix-convex-approx", dict(p))
    report.add_table("results", ["index", "nodes_exact", "member", "smoothed_member",
                                 "endpoint_second_difference", "ok"], rows)
    report.verdict = _verdict(all(r[-1] for r in rows))
    return report


@experiment("lp-closure-convexity",
            "L^p limits of convex functions are convex",
            "Closure lemma: the L^p closure of smooth convex functions consists of convex functions",
            n=401, p=2.0, terms=12)
def _lp_closure(p, rng):
    g = Grid(-1.0, 1.0, p["n"])
    x = g.x
    cases = {
        "x2-plus-1/n": ([GridFunction(g, x**2 + 1.0 / k) for k in range(1, p["terms"] + 1)],
                        GridFunction(g, x**2)),
        "smoothed-abs": ([GridFunction(g, np.sqrt(x**2 + 1.0 / k**2)) for k in range(1, p["terms"] + 1)],
                         GridFunction(g, np.abs(x))),
        "constant": ([GridFunction(g, np.full(g.n, 2.0))] * 3, GridFunction(g, np.full(g.n, 2.0))),
    }
    rows, ok = [], True
    for label, (seq, limit) in cases.items():
        rep = lp_limit_convexity_check(seq, limit, p["p"])
        ok &= rep.passed
        rows.append((label, rep.norms[-1], rep.converges, rep.limit_member, rep.passed))
    report = ExperimentReport("lp-closure-convexity", dict(p))
    report.add_table("results", ["case", "last_distance", "converges", "limit_member", "passed"], rows)
    report.verdict = _verdict(ok)
    return report


# -- compatibility -------------------------------------------------------------------------

def _nearby_member(f: GridFunction, cone: ConeSpec, eps: float) -> GridFunction:
    kind = cone.kind
    if kind is ConeKind.MONOTONE_NONINCREASING:
        return approximate_monotone(f, eps)
    if kind in (ConeKind.CONVEX, ConeKind.NEGATIVE_CONVEX):
        d2 = second_difference(GridFunction(f.grid, f.values, Extension.NONE)).values
        kinks = np.nonzero(d2[1:-1] > 1e-9)[0] + 1
        mesh = np.unique(np.concatenate([[0], kinks, [f.grid.n - 1]]))
        gaps = np.diff(f.grid.x[mesh])
        r = 0.0
        if len(mesh) > 2:
            r = min(0.25 * float(np.min(gaps)), 0.9 * (float(min(gaps[0], gaps[-1])) - 2 * f.grid.h),
                    eps)
        return approximate_convex(f, mesh, max(r, 0.0))
    if kind is ConeKind.HESSIAN_PSD:
        return approximate_convex_2d(f, eps)
    return f


def compatibility_probe(cone: ConeSpec, ev, corpus, eps: float = 0.05,
                        name: str = "compatibility-probe") -> ExperimentReport:
    """For each cone member, construct a nearby smooth cone member with the
    appendix approximators and report the distance.  This is numerical
    evidence for, never a proof of, density of the smooth members.

    Raises
    ------
    PreconditionError
        If a corpus entry is not a cone member (the report carries the witness).
    """
    rows = []
    for i, f in enumerate(corpus):
        rep = is_member(f, ConeSpec.exact(cone.kind))
        if not rep.member:
            raise PreconditionError(f"corpus entry {i} is not in the {cone.kind.value} cone "
                                    f"(witness x = {rep.witness})", rep)
        g = _nearby_member(f, cone, eps)
        dist = sup_distance(f, g)
        smooth_member = is_member(g, cone).member
        image_member = is_member(ev.apply(0.1, g), cone).member if ev is not None else True
        rows.append((i, dist, smooth_member, image_member))
    report = ExperimentReport(name, {"cone": cone.kind.value, "eps": eps,
                                     "evaluator": ev.kind.value if ev is not None else None})
    report.add_table("distances", ["index", "distance", "smooth_member", "image_member"], rows)
    report.verdict = Verdict.INFORMATIONAL
    return report


@experiment("compatibility-probe",
            "Smooth cone members near piecewise-linear convex data (shift semigroup)",
            "Compatibility C = C_A of a cone with the generator",
            n=401, count=20, eps=0.05)
def _compatibility(p, rng):
    g = Grid(0.0, 1.0, p["n"])
    corpus = [random_convex_pl(rng, g, zero_ends=False)[0] for _ in range(p["count"])]
    corpus.append(sample(constant(1.0), g, Extension.CONSTANT))
    report = compatibility_probe(CONVEX, LeftShift(), corpus, p["eps"])
    report.params = dict(p)
    return report
