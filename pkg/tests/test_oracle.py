import numpy as np
import pytest

from gfbp.errors import ParameterError, ShapeError, UnsupportedInstanceError
from gfbp.oracle import (GridSpec, box_projection, finite_diff_grad, grid_prox,
                         nullspace_projection, reference_solve, sqrt_decay)


def test_grid_spec():
    g = GridSpec(-1.0, 1.0, 2001)
    assert g.spacing == pytest.approx(1e-3)
    assert GridSpec.around(2.0, 1.0).lower == 1.0
    with pytest.raises(ParameterError):
        GridSpec(1.0, 1.0)
    with pytest.raises(ParameterError):
        GridSpec(0.0, 1.0, 1)


def test_grid_prox_zero_function():
    grid = GridSpec(-5.0, 5.0, 2001)
    assert abs(grid_prox(lambda U: np.zeros(len(U)), 1.0, 1.234, grid)[0] - 1.234) <= grid.spacing


def test_grid_prox_abs_and_square():
    grid = GridSpec(-5.0, 5.0, 2001)
    assert abs(grid_prox(lambda U: np.abs(U[:, 0]), 1.0, 2.0, grid)[0] - 1.0) <= 2 * grid.spacing
    assert abs(grid_prox(lambda U: U[:, 0] ** 2, 0.5, 2.0, grid)[0] - 1.0) <= 2 * grid.spacing


def test_grid_prox_two_dimensional():
    grid = GridSpec(-5.0, 5.0, 201)
    u = grid_prox(lambda U: np.sum(U * U, axis=1), 1.0, [2.0, -4.0], grid)
    np.testing.assert_allclose(u, [2.0 / 3.0, -4.0 / 3.0], atol=2 * grid.spacing)


def test_grid_prox_errors():
    grid = GridSpec(-1.0, 1.0)
    with pytest.raises(ShapeError):
        grid_prox(lambda U: np.zeros(len(U)), 1.0, [0.0, 0.0, 0.0], grid)
    with pytest.raises(ParameterError):
        grid_prox(lambda U: np.zeros(len(U)), 0.0, 0.0, grid)


def test_finite_diff_grad():
    x = np.array([1.0, -2.0, 30.0])
    np.testing.assert_allclose(finite_diff_grad(lambda v: 0.5 * float(v @ v), x), x, rtol=1e-6)
    box = finite_diff_grad(lambda v: 0.5 * float(np.sum((v - np.clip(v, 0, 1)) ** 2)), np.array([1.5]))
    assert box[0] == pytest.approx(0.5, abs=1e-5)
    np.testing.assert_array_equal(finite_diff_grad(lambda v: 4.0, x), 0.0)


def test_reference_solve_square_norm_on_box():
    x, F = reference_solve(lambda v: float(v @ v), box_projection(0.0, 1.0), np.full(4, 0.7), 200,
                           subgradient=lambda v: 2 * v)
    assert F == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(x, 0.0)


def test_reference_solve_one_dimensional_elastic_net():
    def F(v):
        return 0.5 * (v[0] - 3.0) ** 2 + 0.5 * abs(v[0]) + 0.5 * v[0] ** 2

    x, val = reference_solve(F, box_projection(0.0, 1.0), np.array([0.2]), 2000, step_rule=sqrt_decay(0.5))
    dense = np.linspace(0.0, 1.0, 100001)
    grid_vals = 0.5 * (dense - 3) ** 2 + 0.5 * np.abs(dense) + 0.5 * dense ** 2
    assert dense[np.argmin(grid_vals)] == 1.0
    assert np.min(grid_vals) == pytest.approx(3.0)
    assert x[0] == pytest.approx(1.0, abs=1e-6)
    assert val == pytest.approx(3.0, rel=1e-3)


def test_reference_solve_heron_invertible():
    A = np.array([[2.0, 1.0], [0.0, 1.0]])
    centers = [np.array([3.0, 1.0]), np.array([-1.0, 4.0])]

    def F(v):
        return sum(max(np.linalg.norm(v - c) - 1.0, 0.0) for c in centers) + float(v @ v)

    x, val = reference_solve(F, nullspace_projection(A), np.array([1.0, 1.0]), 10)
    np.testing.assert_allclose(x, 0.0, atol=1e-12)
    assert val == pytest.approx(F(np.zeros(2)), rel=1e-3)


def test_reference_solve_nullspace_line():
    # feasible set {x1 = x2}; minimize (x1-1)^2 + (x2-3)^2 -> (2, 2)
    P = nullspace_projection(np.array([[1.0, -1.0]]))
    x, val = reference_solve(lambda v: (v[0] - 1) ** 2 + (v[1] - 3) ** 2, P, np.zeros(2), 5000,
                             step_rule=sqrt_decay(0.5))
    np.testing.assert_allclose(x, [2.0, 2.0], atol=1e-2)
    assert val == pytest.approx(2.0, rel=1e-3)


def test_reference_solve_needs_projection():
    with pytest.raises(UnsupportedInstanceError):
        reference_solve(lambda v: 0.0, None, np.zeros(2), 10)
    with pytest.raises(UnsupportedInstanceError):
        nullspace_projection(np.ones((2, 60)))
