import math

import numpy as np
import pytest

from shapelab.errors import DivergenceError
from shapelab.functions import Exp, Tanh, constant, linear
from shapelab.grid import Grid, sample
from shapelab.operators import MultiplicationOperator, ZeroOperator
from shapelab.perturb import PerturbationSpec, dyson_phillips, miyadera_estimate
from shapelab.semigroups import LeftShift, identity_semigroup
from shapelab.shape import MONOTONE, is_member

UNIT = Grid(0.0, 1.0, 101)
LINE = Grid(-10.0, 10.0, 401)


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(ZeroOperator(), q_target=1.0)
    with pytest.raises(ValueError):
        PerturbationSpec(ZeroOperator(), t0=0.0)


def test_zero_perturbation_gives_unperturbed_term_only():
    f = sample(Tanh(-1.0, 0.0, 1.0, 1.0), LINE)
    state = dyson_phillips(LeftShift(), PerturbationSpec(ZeroOperator()), 1.0, 4, 16, f)
    assert state.q_hat == 0.0
    np.testing.assert_array_equal(state.terms[0].values, LeftShift().apply(1.0, f).values)
    assert all(u.sup_norm() == 0.0 for u in state.terms[1:])
    np.testing.assert_array_equal(state.partial_sum.values, state.terms[0].values)


def test_identity_plus_multiplication_closed_form():
    beta = sample(linear(-0.5), UNIT)
    f = sample(constant(1.0), UNIT)
    state = dyson_phillips(identity_semigroup(UNIT), PerturbationSpec(MultiplicationOperator(beta)),
                           1.0, 12, 128, f)
    taylor_tail = 0.5**12 / math.factorial(12)
    err = np.max(np.abs(state.partial_sum.values - np.exp(beta.values)))
    assert err <= 1e-6
    assert taylor_tail < 1e-9
    norms = state.term_norms()
    ratios = [b / a for a, b in zip(norms, norms[1:])]
    assert max(ratios) <= state.q_hat + 0.05
    # term n is (t beta)^n / n! up to quadrature error
    for n, u in enumerate(state.terms[:6]):
        np.testing.assert_allclose(u.values, beta.values**n / math.factorial(n), atol=1e-5)


def test_shift_with_nonnegative_beta_keeps_terms_monotone():
    beta = sample(Tanh(-0.25, 0.0, 2.0, 0.25), LINE)  # non-increasing, >= 0
    f = sample(Tanh(-0.5, 0.0, 1.5, 0.5), LINE)
    state = dyson_phillips(LeftShift(), PerturbationSpec(MultiplicationOperator(beta), t0=1.0),
                           1.0, 6, 41, f)
    assert all(is_member(u, MONOTONE).member for u in state.terms)
    assert is_member(state.partial_sum, MONOTONE).member


def test_shift_with_nonpositive_beta_terms_leave_the_cone():
    # beta <= 0 non-increasing: B f = beta f is not non-increasing, so the
    # first-order term is not a cone member even though the sum may be.
    beta = sample(Tanh(-0.25, 0.0, 2.0, -0.25), LINE)
    f = sample(Tanh(-0.5, 0.0, 1.5, 0.5), LINE)
    state = dyson_phillips(LeftShift(), PerturbationSpec(MultiplicationOperator(beta), t0=1.0),
                           1.0, 6, 41, f)
    assert not is_member(state.terms[1], MONOTONE).member


def test_miyadera_examples():
    I = identity_semigroup(UNIT)
    probes = [sample(constant(1.0), UNIT), sample(Exp(1.0, -1.0), UNIT)]
    assert miyadera_estimate(I, PerturbationSpec(ZeroOperator()), probes).q == 0.0
    beta = sample(linear(0.8), UNIT)
    q = miyadera_estimate(I, PerturbationSpec(MultiplicationOperator(beta), 0.5, 0.5), probes).q
    assert q == pytest.approx(0.4, abs=1e-14)
    q10 = miyadera_estimate(I, PerturbationSpec(MultiplicationOperator(10 * beta), 0.5, 0.5), probes).q
    assert q10 == pytest.approx(10 * q, rel=1e-13)


def test_miyadera_rejects_empty_or_zero_probes():
    I = identity_semigroup(UNIT)
    with pytest.raises(ValueError):
        miyadera_estimate(I, PerturbationSpec(ZeroOperator()), [])
    with pytest.raises(ValueError):
        miyadera_estimate(I, PerturbationSpec(ZeroOperator()), [sample(constant(0.0), UNIT)])


def test_divergence_diagnostic():
    beta = sample(constant(3.0), UNIT)
    with pytest.raises(DivergenceError):
        dyson_phillips(identity_semigroup(UNIT), PerturbationSpec(MultiplicationOperator(beta)),
                       1.0, 4, 16, sample(constant(1.0), UNIT))


def test_argument_validation():
    f = sample(constant(1.0), UNIT)
    spec = PerturbationSpec(ZeroOperator())
    with pytest.raises(ValueError):
        dyson_phillips(identity_semigroup(UNIT), spec, 1.0, 0, 16, f)
    with pytest.raises(ValueError):
        dyson_phillips(identity_semigroup(UNIT), spec, 1.0, 3, 3, f)
