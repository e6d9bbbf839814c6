"""
Strictly positive rectifiers g used in the monotone component integrand.
"""

import numpy as np
from scipy.special import expit

from apps.core.exceptions import InvalidParameterError

TAIL = 30.0


class Rectifier:
    name = None
    # coefficient a with g(a) = 1
    unit_argument = 0.0

    def value(self, a):
        raise NotImplementedError

    def derivative(self, a):
        raise NotImplementedError

    def second_derivative(self, a):
        raise NotImplementedError

    def log_value(self, a):
        raise NotImplementedError

    def log_derivative(self, a):
        """g'(a) / g(a)."""
        raise NotImplementedError


class Softplus(Rectifier):
    name = "softplus"
    unit_argument = float(np.log(np.e - 1.0))

    def value(self, a):
        return np.logaddexp(0.0, a)

    def derivative(self, a):
        return expit(a)

    def second_derivative(self, a):
        s = expit(a)
        return s * (1.0 - s)

    def log_value(self, a):
        a = np.asarray(a, dtype=float)
        # below the tail softplus(a) == exp(a) to double precision
        safe = np.maximum(a, -TAIL)
        return np.where(a < -TAIL, a, np.log(np.logaddexp(0.0, safe)))

    def log_derivative(self, a):
        a = np.asarray(a, dtype=float)
        safe = np.maximum(a, -TAIL)
        return np.where(a < -TAIL, 1.0, expit(safe) / np.logaddexp(0.0, safe))


class ShiftedElu(Rectifier):
    name = "shifted-elu"
    unit_argument = 0.0

    def value(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, a + 1.0, np.exp(np.minimum(a, 0.0)))

    def derivative(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, 1.0, np.exp(np.minimum(a, 0.0)))

    def second_derivative(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, 0.0, np.exp(np.minimum(a, 0.0)))

    def log_value(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, np.log1p(np.maximum(a, 0.0)), a)

    def log_derivative(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, 1.0 / (1.0 + np.maximum(a, 0.0)), 1.0)


RECTIFIERS = {rectifier.name: rectifier for rectifier in (Softplus(), ShiftedElu())}


def get_rectifier(name):
    try:
        return RECTIFIERS[name]
    except KeyError:
        raise InvalidParameterError(
            f"Unknown rectifier '{name}'; expected one of {sorted(RECTIFIERS)}"
        ) from None
