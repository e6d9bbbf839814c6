"""
Damped Newton solver for the implicit half-steps of the split-step schemes.
"""

import logging
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ImplicitSolveError, InvalidParameterError
from apps.core.utils import tmula_setting

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = None
    max_iters: int = None
    max_halvings: int = None

    def __post_init__(self):
        object.__setattr__(self, "tol", float(tmula_setting("IMPLICIT_TOL", self.tol)))
        object.__setattr__(self, "max_iters", int(tmula_setting("IMPLICIT_MAX_ITERS", self.max_iters)))
        object.__setattr__(self, "max_halvings", int(tmula_setting("IMPLICIT_MAX_HALVINGS", self.max_halvings)))
        if self.tol <= 0 or self.max_iters < 1 or self.max_halvings < 0:
            raise InvalidParameterError(f"Invalid implicit solver options {self}")


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


def _sup_norm(values):
    norm = np.max(np.abs(values), axis=-1)
    return np.where(np.isfinite(norm), norm, np.inf)


def damped_newton(residual, jacobian, u0, scale, options=None):
    """
    Solve residual(u, rows) = 0 for a batch of points u of shape (n, d). ``rows`` indexes the
    batch positions of the points passed in, so residuals may depend on per-point data.

    A point has converged when ||residual||_inf <= tol * (1 + ||scale||_inf). The Newton step
    is halved while it increases the residual, at most ``max_halvings`` times per iteration.
    Points are iterated only while unconverged; the result reports per-point iteration counts.
    """
    options = options or SolverOptions()
    u = np.array(u0, dtype=float)
    threshold = options.tol * (1.0 + np.max(np.abs(scale), axis=-1))
    rows = np.arange(u.shape[0])
    norm = _sup_norm(residual(u, rows))
    iterations = np.zeros(u.shape[0], dtype=int)
    stalled = np.zeros(u.shape[0], dtype=bool)

    for _ in range(options.max_iters):
        active = np.flatnonzero((norm > threshold) & ~stalled)
        if active.size == 0:
            break
        base = u[active]
        base_norm = norm[active]
        try:
            step = np.linalg.solve(jacobian(base, active), -residual(base, active)[..., None])[..., 0]
        except np.linalg.LinAlgError as err:
            raise ImplicitSolveError(f"Singular Newton system: {err}") from err
        damping = np.ones(active.size)
        trial = base + step
        trial_norm = _sup_norm(residual(trial, active))
        for _ in range(options.max_halvings):
            worse = trial_norm > base_norm
            if not worse.any():
                break
            damping[worse] *= 0.5
            trial[worse] = base[worse] + damping[worse, None] * step[worse]
            trial_norm[worse] = _sup_norm(residual(trial[worse], active[worse]))
        accepted = trial_norm <= base_norm
        u[active[accepted]] = trial[accepted]
        norm[active[accepted]] = trial_norm[accepted]
        iterations[active] += 1
        stalled[active[~accepted]] = True

    converged = norm <= threshold
    logger.debug(
        f"Newton solve: {int(converged.sum())}/{converged.size} converged, "
        f"max {iterations.max(initial=0)} iterations"
    )
    return NewtonResult(u=u, iterations=iterations, converged=converged)


def solve_or_raise(residual, jacobian, u0, scale, options=None, label="implicit step"):
    result = damped_newton(residual, jacobian, u0, scale, options)
    if not result.converged.all():
        failed = np.flatnonzero(~result.converged)
        raise ImplicitSolveError(f"Newton solve for {label} did not converge at points {failed.tolist()}")
    return result
