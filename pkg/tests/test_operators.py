import math

import numpy as np
import pytest

from shapelab.errors import SeriesTruncationError
from shapelab.functions import Polynomial, Tanh, constant, linear
from shapelab.grid import Extension, Grid, GridFunction, sample
from shapelab.operators import (HalfShiftOperator, MultiplicationOperator, OperatorSum,
                                ShiftOperator, ZeroOperator, exp_series)

UNIT = Grid(0.0, 1.0, 101)


def test_half_shift_pointwise_against_direct_evaluation():
    f = sample(Polynomial((0.0, -1.0, 1.0)), UNIT)  # x (x - 1)
    out = HalfShiftOperator(0.5).apply(f)
    x = UNIT.x
    oracle = np.where(x <= 0.5, (x + 0.5) * (x - 0.5), (x - 0.5) * (x - 1.5)) * 0.5
    oracle[[0, -1]] = 0.0
    np.testing.assert_allclose(out.values, oracle, atol=1e-15)
    assert out.values[50] == 0.0  # both branches read an endpoint zero at x = 1/2


def test_shift_operator_uses_extension():
    f = sample(linear(1.0), UNIT, Extension.CONSTANT)
    out = ShiftOperator(0.5, 2.0).apply(f)
    np.testing.assert_allclose(out.values, 2 * np.minimum(UNIT.x + 0.5, 1.0), atol=1e-15)


def test_operator_algebra_and_norm_bounds():
    beta = sample(linear(-2.0), UNIT)
    B = MultiplicationOperator(beta) + 3.0 * ShiftOperator(0.1)
    assert isinstance(B, OperatorSum)
    assert B.norm_bound() == pytest.approx(2.0 + 3.0)
    assert ZeroOperator().norm_bound() == 0.0


def test_exp_series_matches_multiplication_closed_form():
    beta = sample(Tanh(-0.4, 0.5, 0.2), UNIT)
    f = sample(constant(1.0), UNIT)
    out = exp_series(MultiplicationOperator(beta), 1.5, f)
    np.testing.assert_allclose(out.values, np.exp(1.5 * beta.values), atol=1e-14)


def test_exp_series_zero_operator_is_identity():
    f = sample(linear(1.0), UNIT)
    np.testing.assert_array_equal(exp_series(ZeroOperator(), 3.0, f).values, f.values)


def test_exp_series_cap_raises():
    beta = sample(constant(50.0), UNIT)
    with pytest.raises(SeriesTruncationError):
        exp_series(MultiplicationOperator(beta), 2.0, sample(constant(1.0), UNIT), cap=20)
