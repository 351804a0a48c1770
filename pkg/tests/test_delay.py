import math

import numpy as np
import pytest

from shapelab.delay import (DelayCoupling, DelayProblem, IdentityOperator, ProductState,
                            ShiftedHistorySemigroup, diffusion_delay, head_witnesses,
                            history_segment, initial_state, phi_apply, solve, step,
                            trajectory_csv, transport_delay)
from shapelab.errors import GridError
from shapelab.experiments import diffusion_history, step_halving_ratio, transport_history
from shapelab.functions import Polynomial, Tanh, constant
from shapelab.grid import Extension, Grid, GridFunction, sample, sup_distance
from shapelab.operators import ScaledOperator
from shapelab.perturb import PerturbationSpec, dyson_phillips
from shapelab.semigroups import DirichletHeat, LeftShift, identity_semigroup
from shapelab.shape import MONOTONE, NEGATIVE_CONVEX

G = Grid(0.0, 1.0, 11)
LINE = Grid(-5.0, 15.0, 401)


def _const_history(value=1.0, grid=G):
    return lambda s: sample(constant(value), grid, Extension.CONSTANT)


def _problem(atoms, horizon=1.0, m=20):
    return DelayProblem(identity_semigroup(G), atoms, history_segment(_const_history(), m), horizon)


def test_phi_examples():
    seg = history_segment(lambda s: GridFunction(G, np.full(G.n, 2.0 + s)), 10)
    assert phi_apply(_problem(()), seg).sup_norm() == 0.0
    out = phi_apply(_problem(((-1.0, ScaledOperator(0.5, IdentityOperator())),)), seg)
    np.testing.assert_allclose(out.values, 0.5 * 1.0)
    two = ((0.0, IdentityOperator()), (0.0, ScaledOperator(-1.0, IdentityOperator())))
    assert phi_apply(_problem(two), seg).sup_norm() == 0.0


def test_segment_rejects_lags_outside_window():
    seg = history_segment(_const_history(), 10)
    with pytest.raises(GridError):
        seg.at(-1.5)
    with pytest.raises(ValueError):
        _problem(((-2.0, IdentityOperator()),))


def test_no_atoms_is_plain_semigroup_step():
    hist = lambda s: sample(Tanh(-0.5, 0.0, 1.0, 0.5), LINE, Extension.CONSTANT)
    prob = DelayProblem(LeftShift(), (), history_segment(hist, 20), 1.0)
    st = initial_state(prob, 0.05)
    nxt = step(prob, st, 0.05)
    np.testing.assert_array_equal(nxt.head.values, LeftShift().apply(0.05, st.head).values)


@pytest.mark.parametrize("c", [0.0, 0.5, 2.0])
def test_constant_history_first_interval_is_linear(c):
    prob = _problem(((-1.0, ScaledOperator(c, IdentityOperator())),))
    dt = 0.05
    for st in solve(prob, dt):
        np.testing.assert_allclose(st.head.values, 1.0 + c * st.t, atol=c * dt**2 + 1e-13)


def _closed_form_half_lag(c, t):
    # u' = c u(t - 1/2), u = 1 on [-1, 0]
    if t <= 0.5:
        return 1.0 + c * t
    return 1.0 + c * t + c * c * (t - 0.5) ** 2 / 2


def _dyson_product_head(c, m):
    prob = _problem(((-0.5, ScaledOperator(c, IdentityOperator())),), horizon=1.0, m=m)
    seg = prob.history
    x0 = ProductState(seg.head(), np.array(seg.values))
    state = dyson_phillips(ShiftedHistorySemigroup(identity_semigroup(G), 1.0 / m),
                           PerturbationSpec(DelayCoupling(prob)), 1.0, 8, m + 1, x0, q_hat=0.5)
    return state.partial_sum.head.values


def test_solver_matches_closed_form():
    c, dt = 0.5, 0.05
    prob = _problem(((-0.5, ScaledOperator(c, IdentityOperator())),), horizon=1.0)
    for st in solve(prob, dt):
        np.testing.assert_allclose(st.head.values, _closed_form_half_lag(c, st.t), atol=1e-12)


def test_product_space_dyson_converges_first_order_to_closed_form():
    # the segment part of S(tau)(g, 0) jumps where the fill front passes, so
    # trapezoid quadrature in s is first order in the product space
    c = 0.5
    exact = _closed_form_half_lag(c, 1.0)
    errs = [np.max(np.abs(_dyson_product_head(c, m) - exact)) for m in (20, 40, 80)]
    assert errs[0] < 5e-3
    for a, b in zip(errs, errs[1:]):
        assert b / a == pytest.approx(0.5, abs=0.05)


def test_zero_horizon_gives_initial_state_only():
    prob = transport_delay(0.5, 0.5, LINE, transport_history(LINE), 20, horizon=0.0)
    states = solve(prob, 0.05)
    assert len(states) == 1 and states[0].t == 0.0
    assert trajectory_csv(states).splitlines()[0] == "t,x,value"


def test_transport_without_reaction_is_pure_shift():
    prob = transport_delay(0.0, 0.5, LINE, transport_history(LINE), 20, horizon=1.0)
    states = solve(prob, 0.05)
    f0 = states[0].head
    assert sup_distance(states[-1].head, LeftShift().apply(1.0, f0)) < 1e-12


def test_transport_delay_monotone_and_negative_c_flagged():
    states = solve(transport_delay(0.5, 0.5, LINE, transport_history(LINE), 20, horizon=3.0), 0.05)
    assert head_witnesses(states, MONOTONE).all_member
    hist = lambda s: sample(Tanh(-2.0, 0.0, 1.0, 2.0), LINE, Extension.CONSTANT)
    states = solve(transport_delay(-3.0, 1.0, LINE, hist, 20, horizon=3.0), 0.05)
    log = head_witnesses(states, MONOTONE)  # flagged, not raised
    assert len(log) == len(states)


def test_diffusion_zero_history_is_undelayed_heat():
    g = Grid(0.0, 1.0, 101)
    prob = diffusion_delay(0.5, 0.5, 101, lambda s: GridFunction(g, np.zeros(g.n), Extension.ZERO), 40)
    assert max(st.head.sup_norm() for st in solve(prob, 0.025)) == 0.0
    f0 = sample(Polynomial((0.0, -1.0, 1.0)), g, Extension.ZERO)
    hist = lambda s: f0 if s == 0.0 else GridFunction(g, np.zeros(g.n), Extension.ZERO)
    prob = diffusion_delay(0.5, 0.5, 101, hist, 40, horizon=0.5)
    states = solve(prob, 0.025)
    heat = DirichletHeat().apply(0.5, f0)
    # the delayed term only sees history before t = 0, which is zero except at sigma = 0
    assert sup_distance(states[-1].head, heat) < 0.5 * 0.025


def test_diffusion_small_c_approaches_heat_flow():
    g = Grid(0.0, 1.0, 101)
    hist = diffusion_history(g)
    heads = [solve(diffusion_delay(c, 0.5, 101, hist, 40, horizon=1.0), 0.025)[-1].head for c in (1e-1, 1e-3)]
    f0 = hist(0.0)
    heat = DirichletHeat().apply(1.0, f0)
    assert sup_distance(heads[1], heat) < sup_distance(heads[0], heat) / 50


def test_diffusion_delay_negative_convex():
    g = Grid(0.0, 1.0, 101)
    states = solve(diffusion_delay(0.5, 0.5, 101, diffusion_history(g), 40, horizon=2.0), 0.025)
    assert head_witnesses(states, NEGATIVE_CONVEX).all_member


def test_step_halving_first_order_or_better():
    d1, d2 = step_halving_ratio("transport", 0.5, 0.5, 1.0, 0.1)
    assert d2 <= 0.55 * d1


def test_step_must_divide_history_spacing():
    prob = transport_delay(0.5, 0.5, LINE, transport_history(LINE), 20, horizon=1.0)
    with pytest.raises(GridError):
        solve(prob, 0.03)
    with pytest.raises(GridError):
        solve(prob, 0.3)


def test_transport_beta_variant_constant_beta_matches_plain():
    hist = transport_history(LINE)
    plain = solve(transport_delay(0.5, 0.5, LINE, hist, 20, horizon=1.0), 0.05)[-1].head
    ones = sample(constant(1.0), LINE)
    weighted = solve(transport_delay(0.5, 0.5, LINE, hist, 20, horizon=1.0, beta=ones), 0.05)[-1].head
    assert sup_distance(plain, weighted) < 1e-14
