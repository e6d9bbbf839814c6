"""
Pushforward densities eta = S#pi in reference coordinates.
"""

import numpy as np

from apps.core.exceptions import StepError
from apps.core.utils import batched_solve


def pushforward_log_density(target, transport_map, x, y=None):
    """log eta(x) = log pi(T(x)) + log det J_T(x)."""
    y = transport_map.inverse(x) if y is None else y
    return target.log_density(y) - transport_map.log_det_jacobian(y)


def pushforward_grad_log_density(target, transport_map, x, y=None):
    """
    Score of the pushforward density,

        grad_x log eta(x) = J_S(y)^{-T} (grad_y log pi(y) - grad_y log det J_S(y)),  y = T(x).

    For triangular maps grad_y log det J_S is the sum of H_i / (dS_i/dy_i).
    """
    y = transport_map.inverse(x) if y is None else y
    rhs = target.grad_log_density(y) - transport_map.grad_log_det(y)
    try:
        return batched_solve(np.swapaxes(transport_map.jacobian(y), -1, -2), rhs)
    except np.linalg.LinAlgError as err:
        raise StepError(f"Singular map Jacobian in pushforward score: {err}") from err


class PushforwardDensity:
    """Reference-space density S#pi of a target under a transport map."""

    def __init__(self, target, transport_map):
        self.base_target = target
        self.map = transport_map
        self.dim = target.dim

    def log_density(self, x):
        return pushforward_log_density(self.base_target, self.map, x)

    def grad_log_density(self, x, y=None):
        return pushforward_grad_log_density(self.base_target, self.map, x, y)

    def __repr__(self):
        return f"PushforwardDensity(target={self.base_target.name!r}, map={self.map!r})"
