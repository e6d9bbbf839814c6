"""
Contraction rate of the preconditioned chain as a function of the pushforward's curvature
bounds, and a sampled proxy for the Lipschitz constant of T.
"""

import numpy as np

from apps.core.exceptions import InvalidParameterError


def optimal_rate(m, L):
    """
    Rate r = 1 - m L / (m + L)^2 at the largest admissible step h = 1/(m + L), with
    dr/dL = m (L - m) / (m + L)^3. r is smallest for an isotropic pushforward.
    """
    if not 0 < m <= L:
        raise InvalidParameterError(f"Need 0 < m <= L, got m={m}, L={L}")
    return {"r": 1.0 - m * L / (m + L) ** 2, "dr_dL": m * (L - m) / (m + L) ** 3}


def jacobian_bound_estimate(transport_map, sample_points):
    """max |J_T(x)|_F over reference points; a lower bound on sup |J_T|, never the sup itself."""
    points = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if points.shape[0] == 0:
        raise InvalidParameterError("Need at least one sample point")
    jacobians = transport_map.inverse_jacobian(points)
    return float(np.max(np.linalg.norm(jacobians, axis=(-2, -1))))
