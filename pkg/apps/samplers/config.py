"""
Sampler configuration shared by the kernels and the chain runner.
"""

from dataclasses import dataclass, field

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import default_skew_matrix, skew_violation

from .implicit import SolverOptions

SCHEMES = ("ula", "tmula", "emrmld", "tmula_irr", "tmuila", "uila", "rmld", "emrmld_irr")
MAP_SCHEMES = frozenset({"tmula", "emrmld", "tmula_irr", "tmuila", "emrmld_irr"})
SKEW_SCHEMES = frozenset({"tmula_irr", "emrmld_irr"})
IMPLICIT_SCHEMES = frozenset({"tmuila", "uila"})
SKEW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SamplerConfig:
    """
    One discretization scheme with its step size.

    ``skew_matrix`` only matters for the irreversible schemes; when omitted they use the
    block rotation generator scaled by ``delta``. ``step_size`` may be zero for degenerate
    checks; JSON configs require it to be positive.
    """

    scheme: str
    step_size: float
    skew_matrix: np.ndarray = None
    delta: float = 1.0
    transport_map: object = None
    implicit_solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"Unknown scheme '{self.scheme}'; expected one of {', '.join(SCHEMES)}")
        if not np.isfinite(self.step_size) or self.step_size < 0:
            raise InvalidParameterError(f"Step size must be nonnegative and finite, got {self.step_size}")
        if self.scheme in MAP_SCHEMES and self.transport_map is None:
            raise InvalidParameterError(f"Scheme '{self.scheme}' needs a transport map")
        if self.skew_matrix is not None:
            skew = np.array(self.skew_matrix, dtype=float)
            if skew.ndim != 2 or skew.shape[0] != skew.shape[1]:
                raise InvalidParameterError(f"Skew matrix must be square, got shape {skew.shape}")
            if skew_violation(skew) > SKEW_TOL:
                raise InvalidParameterError(f"Skew matrix violates D = -D^T by {skew_violation(skew):.3e}")
            skew.setflags(write=False)
            object.__setattr__(self, "skew_matrix", skew)

    @property
    def h(self):
        return self.step_size

    @property
    def needs_map(self):
        return self.scheme in MAP_SCHEMES

    def skew_for(self, dim):
        if self.skew_matrix is None:
            return default_skew_matrix(dim, self.delta)
        if self.skew_matrix.shape != (dim, dim):
            raise InvalidParameterError(f"Skew matrix has shape {self.skew_matrix.shape}, expected ({dim}, {dim})")
        return self.skew_matrix

    def with_step_size(self, step_size):
        return SamplerConfig(
            self.scheme, step_size, self.skew_matrix, self.delta, self.transport_map, self.implicit_solver
        )

    def describe(self):
        description = {"scheme": self.scheme, "h": self.step_size}
        if self.scheme in SKEW_SCHEMES:
            description["delta"] = self.delta
            if self.skew_matrix is not None:
                description["skew_matrix"] = self.skew_matrix.tolist()
        if self.transport_map is not None:
            description["map_kind"] = self.transport_map.kind
        if self.scheme in IMPLICIT_SCHEMES:
            solver = self.implicit_solver
            description["implicit_solver"] = {
                "tol": solver.tol,
                "max_iters": solver.max_iters,
                "max_halvings": solver.max_halvings,
            }
        return description
