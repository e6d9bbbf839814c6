"""
Test functions phi whose ergodic averages are estimated from chains.
"""

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import as_points


@dataclass(frozen=True)
class TestFunction:
    """A named scalar function of the state, evaluated row-wise on (..., d) arrays."""

    __test__ = False

    name: str
    evaluator: Callable
    dim: int = None

    def __call__(self, y):
        y = as_points(y, self.dim)
        return np.asarray(self.evaluator(y), dtype=float)


def _coordinate(index):
    return lambda y: y[..., index]


def _exp_coordinate(index):
    return lambda y: np.exp(y[..., index])


TEST_FUNCTIONS = {
    "sum": lambda y: np.sum(y, axis=-1),
    "sum_sq": lambda y: np.sum(y**2, axis=-1),
    "banana_poly": lambda y: y[..., 0] ** 2 + y[..., 0] + y[..., 1] ** 2 + y[..., 1],
    "constant": lambda y: np.ones(y.shape[:-1]),
}

FIXED_DIMENSION = {"banana_poly": 2}

COORDINATE_PATTERN = re.compile(r"^(exp_)?coord_(\d+)$")


def available_test_functions():
    return sorted(TEST_FUNCTIONS) + ["coord_<k>", "exp_coord_<k>"]


def get_test_function(name, dim=None):
    """
    Look up a test function by name. ``coord_k`` selects the k-th coordinate (1-based) and
    ``exp_coord_k`` its exponential; ``banana_poly`` is y1^2 + y1 + y2^2 + y2.
    """
    match = COORDINATE_PATTERN.match(name)
    if match:
        k = int(match.group(2))
        if k < 1 or (dim is not None and k > dim):
            raise InvalidParameterError(f"Test function '{name}' needs a coordinate in 1..{dim}")
        evaluator = _exp_coordinate(k - 1) if match.group(1) else _coordinate(k - 1)
        return TestFunction(name, evaluator, dim)
    if name not in TEST_FUNCTIONS:
        raise InvalidParameterError(
            f"Unknown test function '{name}'; expected one of {', '.join(available_test_functions())}"
        )
    fixed = FIXED_DIMENSION.get(name)
    if fixed is not None and dim is not None and dim != fixed:
        raise InvalidParameterError(f"Test function '{name}' is defined in dimension {fixed}, not {dim}")
    return TestFunction(name, TEST_FUNCTIONS[name], fixed or dim)
