"""
Utility functions for the application.
"""

import hashlib
import os
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameterError

# Used when library code runs without a configured Django project
DEFAULT_TMULA_SETTINGS = {
    "DIVERGENCE_THRESHOLD": 1e8,
    "NOISE_BLOCK": 1024,
    "FD_STEP": 1e-5,
    "FD_SECOND_STEP": 1e-4,
    "INVERSION_TOL": 1e-12,
    "INVERSION_MAX_DOUBLINGS": 60,
    "IMPLICIT_TOL": 1e-10,
    "IMPLICIT_MAX_ITERS": 50,
    "IMPLICIT_MAX_HALVINGS": 30,
    "QUADRATURE_POINTS": 32,
    "TRAIN_GRAD_TOL": 1e-6,
    "TRAIN_MAX_ITERS": 500,
    "KSD_C": 1.0,
    "KSD_BETA": -0.5,
    "JOBS": 0,
    "OUTPUT_ROOT": Path("runs"),
}

FLOAT_FORMAT = "%.17g"


def tmula_setting(name, override=None):
    """Return a numeric default from ``settings.TMULA`` unless an explicit override is given."""
    if override is not None:
        return override
    from django.conf import settings

    if settings.configured:
        return getattr(settings, "TMULA", {}).get(name, DEFAULT_TMULA_SETTINGS[name])
    return DEFAULT_TMULA_SETTINGS[name]


def resolve_jobs(jobs=None):
    """Worker count; 0 means available parallelism."""
    jobs = tmula_setting("JOBS", jobs)
    if jobs < 0:
        raise InvalidParameterError(f"jobs must be nonnegative, got {jobs}")
    return jobs or os.cpu_count() or 1


def as_points(y, dim=None):
    """Coerce input to a float array with the coordinate axis last."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = y.reshape(1)
    if dim is not None and y.shape[-1] != dim:
        raise InvalidParameterError(f"Expected points of dimension {dim}, got shape {y.shape}")
    return y


def fd_step(y, step=None):
    """Central-difference step scaled by ``1 + ||y||_inf`` for every point in a batch."""
    base = tmula_setting("FD_STEP", step)
    return base * (1.0 + np.max(np.abs(y), axis=-1))


def fd_derivative(func, y, step=None):
    """
    Central finite-difference derivative of ``func`` along each coordinate.

    ``func`` maps points of shape (..., d) to values of shape (...,) + out_shape.
    Returns an array of shape (...,) + out_shape + (d,).
    """
    y = np.asarray(y, dtype=float)
    d = y.shape[-1]
    eps = fd_step(y, step)
    directions = np.concatenate([np.eye(d), -np.eye(d)])
    shifted = y[..., None, :] + eps[..., None, None] * directions
    values = np.asarray(func(shifted))
    batch = y.ndim - 1
    plus = values[(slice(None),) * batch + (slice(0, d),)]
    minus = values[(slice(None),) * batch + (slice(d, 2 * d),)]
    diff = (plus - minus) / (2.0 * eps.reshape(eps.shape + (1,) * (values.ndim - batch)))
    # move the direction axis to the end
    return np.moveaxis(diff, batch, -1)


def fd_gradient(func, y, step=None):
    """Gradient of a scalar field by central differences."""
    return fd_derivative(func, y, step)


def fd_jacobian(func, y, step=None):
    """Jacobian ``[d func_i / d y_j]`` of a vector field by central differences."""
    return fd_derivative(func, y, step)


def fd_divergence(matrix_field, y, step=None):
    """Row divergence ``(div M)_i = sum_j dM_ij/dy_j`` of a matrix field by central differences."""
    derivative = fd_derivative(matrix_field, y, step)
    return np.trace(derivative, axis1=-2, axis2=-1)


def batched_solve(matrix, rhs):
    """Solve ``matrix @ v = rhs`` for stacks of matrices and vectors."""
    return np.linalg.solve(matrix, rhs[..., None])[..., 0]


def matvec(matrix, vector):
    """Row-wise product; the summation order does not depend on the batch size."""
    return (matrix * vector[..., None, :]).sum(axis=-1)


def write_float_csv(path, header, rows, index=None):
    """Write rows as CSV with 17 significant digits; ``index`` adds a leading integer column."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = [FLOAT_FORMAT] * rows.shape[1]
    if index is not None:
        rows = np.column_stack([np.asarray(index, dtype=float), rows])
        fmt = ["%d"] + fmt
    np.savetxt(path, rows, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return path


def read_float_csv(path):
    """Read a CSV written by ``write_float_csv``; returns (header, values)."""
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, values


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def default_skew_matrix(dim, delta=1.0):
    """Block-diagonal rotation generator: ``delta * [[0, 1], [-1, 0]]`` repeated along the diagonal."""
    skew = np.zeros((dim, dim))
    for i in range(0, dim - 1, 2):
        skew[i, i + 1] = delta
        skew[i + 1, i] = -delta
    return skew


def skew_violation(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return float(np.max(np.abs(matrix + matrix.T))) if matrix.size else 0.0


def json_compatible(value):
    """Convert numpy values to plain Python recursively; nonfinite floats become None."""
    if isinstance(value, dict):
        return {str(key): json_compatible(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_compatible(item) for item in value]
    if isinstance(value, np.ndarray):
        return json_compatible(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value
