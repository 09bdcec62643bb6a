"""Uniform grids and sampled functions with derivative consistency checks."""

import numpy as np
import pytest

from fracvar.errors import InvalidGrid
from fracvar.grids import GridFunction, fd_deriv, uniform_grid


def test_uniform_grid_shape_and_endpoints():
    g = uniform_grid(0.0, 2.0, 8)
    assert g.shape == (9,)
    assert g[0] == 0.0 and g[-1] == 2.0


def test_uniform_grid_minimum_panels():
    with pytest.raises(InvalidGrid):
        uniform_grid(0.0, 1.0, 7)


def test_fd_deriv_second_order_on_sine():
    for n in (64, 128):
        g = uniform_grid(0.0, 1.0, n)
        d = fd_deriv(np.sin(g), float(g[1] - g[0]))
        err = np.max(np.abs(d - np.cos(g)))
        assert err < 2.0 / n**2


def test_fd_deriv_exact_on_quadratic():
    g = uniform_grid(-1.0, 1.0, 32)
    d = fd_deriv(g * g, float(g[1] - g[0]))
    assert np.max(np.abs(d - 2 * g)) < 1e-13


class TestGridFunction:
    def test_from_callable_with_supplied_derivative(self):
        f = GridFunction.from_callable(np.exp, 0.0, 1.0, 32, deriv=np.exp)
        assert f.n == 32
        assert f.h == pytest.approx(1.0 / 32)
        assert np.array_equal(f.deriv_values(), np.exp(f.grid))

    def test_fd_fallback_when_deriv_missing(self):
        f = GridFunction.from_callable(np.sin, 0.0, 1.0, 64)
        assert np.max(np.abs(f.deriv_values() - np.cos(f.grid))) < 1e-3

    def test_rejects_nonuniform_grid(self):
        g = np.concatenate([np.linspace(0, 0.5, 6), np.linspace(0.6, 1.0, 6)])
        with pytest.raises(InvalidGrid):
            GridFunction(grid=g, values=np.zeros(12))

    def test_rejects_decreasing_grid(self):
        with pytest.raises(InvalidGrid):
            GridFunction(grid=np.linspace(1.0, 0.0, 16), values=np.zeros(16))

    def test_rejects_too_few_nodes(self):
        with pytest.raises(InvalidGrid):
            GridFunction(grid=np.linspace(0, 1, 5), values=np.zeros(5))

    def test_rejects_nonfinite_values(self):
        g = uniform_grid(0.0, 1.0, 16)
        vals = np.ones(17)
        vals[3] = np.inf
        with pytest.raises(InvalidGrid):
            GridFunction(grid=g, values=vals)

    def test_rejects_inconsistent_supplied_derivative(self):
        g = uniform_grid(0.0, 1.0, 64)
        with pytest.raises(InvalidGrid):
            GridFunction(grid=g, values=np.sin(g), derivs=np.zeros(g.size))

    def test_accepts_exact_supplied_derivative(self):
        g = uniform_grid(0.0, 1.0, 64)
        f = GridFunction(grid=g, values=np.sin(g), derivs=np.cos(g))
        assert f.a == 0.0 and f.b == 1.0
