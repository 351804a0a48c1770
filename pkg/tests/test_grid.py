import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from shapelab.errors import DimensionError, GridError
from shapelab.functions import Polynomial, Polynomial2D, Table, Tanh, Trig, constant, linear
from shapelab.grid import (Extension, Grid, GridFunction, first_difference, hessian, lp_norm,
                           sample, second_difference, sup_distance, trapezoid)


def test_sample_identity_three_points():
    f = sample(linear(1.0), Grid(0.0, 1.0, 3))
    np.testing.assert_array_equal(f.values, [0.0, 0.5, 1.0])


def test_sample_constant_is_all_ones():
    f = sample(constant(1.0), Grid(-3.0, 7.0, 11))
    np.testing.assert_array_equal(f.values, np.ones(11))


def test_sample_sine_exact_values():
    f = sample(Trig("sin"), Grid(0.0, math.pi, 5))
    np.testing.assert_allclose(f.values, [0, math.sqrt(2) / 2, 1, math.sqrt(2) / 2, 0], atol=1e-15)


def test_sample_rejects_non_finite_and_names_point():
    with np.errstate(divide="ignore"), pytest.raises(GridError, match="point"):
        sample(lambda x: 1.0 / x, Grid(0.0, 1.0, 5))


def test_grid_rejects_bad_arguments():
    with pytest.raises(GridError):
        Grid(1.0, 0.0, 5)
    with pytest.raises(GridError):
        Grid(0.0, 1.0, 2)


def test_first_difference_exact_for_linear_and_constant():
    g = Grid(0.0, 1.0, 11)
    np.testing.assert_allclose(first_difference(sample(linear(1.0), g)).values, 1.0, atol=1e-13)
    np.testing.assert_array_equal(first_difference(sample(constant(3.0), g)).values, 0.0)


def test_first_difference_cubic_matches_symbolic_stencil():
    x, h = sp.symbols("x h")
    stencil = sp.expand(((x + h) ** 3 - (x - h) ** 3) / (2 * h))
    assert stencil == 3 * x**2 + h**2
    oracle = float(stencil.subs({x: sp.Rational(1, 2), h: sp.Rational(1, 100)}))
    assert oracle == pytest.approx(0.7501, abs=1e-15)
    g = Grid(0.0, 1.0, 101)
    d = first_difference(sample(Polynomial((0.0, 0.0, 0.0, 1.0)), g))
    assert d.values[50] == pytest.approx(oracle, abs=1e-12)


def test_first_difference_endpoints_without_extension_are_one_sided_second_order():
    g = Grid(0.0, 1.0, 11)
    f = GridFunction(g, g.x**2, Extension.NONE)
    d = first_difference(f)
    np.testing.assert_allclose(d.values[[0, -1]], [0.0, 2.0], atol=1e-12)


def test_second_difference_quadratic_and_linear():
    g = Grid(-1.0, 2.0, 31)
    np.testing.assert_allclose(second_difference(sample(Polynomial((0, 0, 1.0)), g)).values[1:-1], 2.0,
                               atol=1e-10)
    np.testing.assert_allclose(second_difference(sample(linear(3.0, 1.0), g)).values[1:-1], 0.0,
                               atol=1e-10)


def test_second_difference_quartic_matches_symbolic_stencil():
    x, h = sp.symbols("x h")
    stencil = sp.simplify(((x - h) ** 4 - 2 * x**4 + (x + h) ** 4) / h**2)
    assert sp.expand(stencil) == sp.expand(12 * x**2 + 2 * h**2)
    oracle = float(stencil.subs({x: 1, h: sp.Rational(1, 10)}))
    g = Grid(0.0, 2.0, 21)
    d = second_difference(sample(Polynomial((0, 0, 0, 0, 1.0)), g))
    assert d.values[10] == pytest.approx(oracle, abs=1e-10)
    assert oracle == pytest.approx(12.02)


def test_second_difference_flags_endpoints_without_extension():
    g = Grid(0.0, 1.0, 11)
    d = second_difference(GridFunction(g, g.x**2, Extension.NONE))
    assert d.valid is not None and not d.valid[0] and not d.valid[-1]


def test_second_difference_rejects_2d():
    with pytest.raises(DimensionError):
        second_difference(sample(Polynomial2D(((1, 1, 1.0),)), Grid(0.0, 1.0, 5, dim=2)))


def test_hessian_quadratic_and_xy():
    g = Grid(0.0, 1.0, 11, dim=2)
    H = hessian(sample(Polynomial2D(((2, 0, 1.0), (0, 2, 1.0))), g))[1:-1, 1:-1]
    np.testing.assert_allclose(H, np.broadcast_to(2 * np.eye(2), H.shape), atol=1e-9)
    H = hessian(sample(Polynomial2D(((1, 1, 1.0),)), g))[1:-1, 1:-1]
    np.testing.assert_allclose(H, np.broadcast_to([[0, 1], [1, 0]], H.shape), atol=1e-9)
    assert np.isnan(hessian(sample(Polynomial2D(((1, 1, 1.0),)), g))[0, 0]).all()


def test_hessian_x2y2_matches_symbolic_derivatives():
    X, Y = sp.symbols("x y")
    f = X**2 * Y**2
    at = {X: sp.Rational(1, 2), Y: sp.Rational(1, 2)}
    oracle = [[float(sp.diff(f, X, 2).subs(at)), float(sp.diff(f, X, Y).subs(at))],
              [float(sp.diff(f, Y, X).subs(at)), float(sp.diff(f, Y, 2).subs(at))]]
    g = Grid(0.0, 1.0, 21, dim=2)
    H = hessian(sample(Polynomial2D(((2, 2, 1.0),)), g))
    np.testing.assert_allclose(H[10, 10], oracle, atol=1e-10)
    np.testing.assert_allclose(oracle, [[0.5, 1.0], [1.0, 0.5]])


def test_hessian_rejects_1d():
    with pytest.raises(DimensionError):
        hessian(sample(linear(1.0), Grid(0.0, 1.0, 5)))


def test_trapezoid_exact_for_constants_and_linears():
    g = Grid(0.0, 1.0, 11)
    assert trapezoid(sample(constant(1.0), g), 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert trapezoid(sample(linear(1.0), g), 0.0, 1.0) == pytest.approx(0.5, abs=1e-14)


def test_trapezoid_quadratic_error_closed_form():
    g = Grid(0.0, 1.0, 101)
    f = GridFunction(g, g.x**2)
    composite = float(np.sum(g.h * 0.5 * (f.values[1:] + f.values[:-1])))
    assert composite == pytest.approx(1.0 / 3.0 + g.h**2 / 6.0, abs=1e-14)
    assert trapezoid(f, 0.0, 1.0) == pytest.approx(0.333350, abs=1e-9)


def test_trapezoid_rejects_reversed_limits():
    with pytest.raises(GridError):
        trapezoid(sample(constant(1.0), Grid(0.0, 1.0, 5)), 1.0, 0.0)


def test_sup_distance_examples():
    g = Grid(0.0, math.pi, 5)
    f = sample(Trig("sin"), g)
    assert sup_distance(f, f) == 0.0
    assert sup_distance(f.zeros_like(), sample(constant(1.0), g)) == 1.0
    assert sup_distance(f, f.zeros_like()) == pytest.approx(1.0)


def test_sup_distance_rejects_different_grids():
    with pytest.raises(GridError):
        sup_distance(sample(constant(1.0), Grid(0.0, 1.0, 5)), sample(constant(1.0), Grid(0.0, 1.0, 6)))


def test_extensions_off_window():
    g = Grid(0.0, 1.0, 11)
    f = GridFunction(g, 1.0 + g.x, Extension.CONSTANT)
    np.testing.assert_allclose(f.at([-1.0, 2.0]), [1.0, 2.0])
    z = GridFunction(g, 1.0 + g.x, Extension.ZERO)
    np.testing.assert_allclose(z.at([-1.0, 2.0]), [0.0, 0.0])
    r = GridFunction(g, 1.0 + g.x, Extension.REFLECT2F0)
    np.testing.assert_allclose(r.at([-0.5]), [2 * 1.0 - 1.5])
    with pytest.raises(GridError):
        GridFunction(g, g.x, Extension.NONE).at([-1.0])


def test_reflect_requires_origin():
    with pytest.raises(GridError):
        GridFunction(Grid(1.0, 2.0, 5), np.zeros(5), Extension.REFLECT2F0)


def test_table_is_constant_outside():
    f = sample(Table((0.0, 1.0), (2.0, 1.0)), Grid(-1.0, 2.0, 7))
    np.testing.assert_allclose(f.values, [2, 2, 2, 1.5, 1, 1, 1])


def test_csv_round_trip(tmp_path):
    g = Grid(-1.0, 1.0, 9)
    f = sample(Tanh(1.0, 0.0, 0.3), g, Extension.CONSTANT)
    path = tmp_path / "f.csv"
    f.to_csv(str(path))
    back = GridFunction.from_csv(str(path))
    np.testing.assert_array_equal(back.values, f.values)
    assert back.grid == g


def test_lp_norm_of_constant():
    assert lp_norm(sample(constant(2.0), Grid(0.0, 4.0, 9)), 2.0) == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.integers(5, 60))
def test_second_difference_exact_on_quadratics(coeffs, n):
    g = Grid(-1.0, 1.0, n)
    d = second_difference(sample(Polynomial(tuple(coeffs)), g))
    scale = 1.0 + sum(abs(c) for c in coeffs)
    np.testing.assert_allclose(d.values, 2 * coeffs[2], atol=1e-12 * scale / g.h**2)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(3, 40))
def test_trapezoid_exact_on_linears(a, b, n):
    g = Grid(0.0, 2.0, n)
    assert trapezoid(sample(linear(a, b), g), 0.0, 2.0) == pytest.approx(2 * a + 2 * b, abs=1e-12)
