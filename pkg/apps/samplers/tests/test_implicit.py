import numpy as np
import pytest
from hamcrest import assert_that, equal_to

from apps.core.exceptions import ImplicitSolveError, InvalidParameterError
from apps.samplers.implicit import SolverOptions, damped_newton, solve_or_raise


def test_options_default_from_settings():
    options = SolverOptions()
    assert_that((options.tol, options.max_iters, options.max_halvings), equal_to((1e-10, 50, 30)))


def test_invalid_options():
    with pytest.raises(InvalidParameterError):
        SolverOptions(tol=-1.0)


def test_linear_residual_converges_in_one_iteration():
    start = np.array([[1.0, -2.0], [3.0, 0.5]])
    h = 0.2
    result = damped_newton(
        lambda u, rows: u - start[rows] + h * u,
        lambda u, rows: np.broadcast_to((1.0 + h) * np.eye(2), u.shape + (2,)),
        start,
        start,
    )
    assert np.allclose(result.u, start / (1.0 + h), rtol=0, atol=1e-14)
    assert np.array_equal(result.iterations, [1, 1])
    assert np.all(result.converged)


def test_points_already_solved_take_no_iterations():
    start = np.array([[0.0], [2.0]])
    result = damped_newton(lambda u, rows: u**3 - start[rows] ** 3, lambda u, rows: 3 * u[..., None] ** 2, start, start)
    assert np.array_equal(result.iterations, [0, 0])


def test_damping_handles_overshoot():
    # Newton on arctan overshoots from |u| > 1.39 without damping
    start = np.array([[3.0]])
    result = damped_newton(
        lambda u, rows: np.arctan(u),
        lambda u, rows: (1.0 / (1.0 + u**2))[..., None],
        start,
        np.zeros_like(start),
    )
    assert result.converged[0]
    assert np.allclose(result.u, 0.0, rtol=0, atol=1e-10)


def test_non_convergence_raises():
    start = np.array([[3.0]])
    options = SolverOptions(max_iters=2)
    with pytest.raises(ImplicitSolveError):
        solve_or_raise(
            lambda u, rows: np.arctan(u),
            lambda u, rows: (1.0 / (1.0 + u**2))[..., None],
            start,
            np.zeros_like(start),
            options,
        )
