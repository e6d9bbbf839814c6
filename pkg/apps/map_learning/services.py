"""
Services for training monotone triangular maps from samples.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from apps.core.exceptions import InvalidParameterError
from apps.core.serializers import validate_document
from apps.core.utils import read_float_csv, tmula_setting
from apps.transport.maps import AffineMap, ComposedMap, TriangularMap

from .basis import MAX_TOTAL_ORDER, total_order_multi_indices
from .components import MonotoneComponent
from .objectives import ComponentObjective, negative_log_likelihood
from .serializers import MapTrainingSpecSerializer

logger = logging.getLogger(__name__)

SAMPLES_PER_COEFFICIENT = 10


@dataclass(frozen=True)
class MapTrainingSpec:
    total_order: int = 2
    basis: str = "hermite"
    rectifier: str = "softplus"
    quadrature_points: int = None
    max_iters: int = None
    grad_tol: float = None
    standardize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "quadrature_points", tmula_setting("QUADRATURE_POINTS", self.quadrature_points))
        object.__setattr__(self, "max_iters", tmula_setting("TRAIN_MAX_ITERS", self.max_iters))
        object.__setattr__(self, "grad_tol", tmula_setting("TRAIN_GRAD_TOL", self.grad_tol))
        if not 1 <= self.total_order <= MAX_TOTAL_ORDER:
            raise InvalidParameterError(f"total_order must lie in [1, {MAX_TOTAL_ORDER}], got {self.total_order}")
        if self.quadrature_points < 8:
            raise InvalidParameterError(f"quadrature_points must be at least 8, got {self.quadrature_points}")
        if self.basis != "hermite":
            raise InvalidParameterError(f"Unsupported basis '{self.basis}'")

    @classmethod
    def from_dict(cls, document):
        return cls(**validate_document(MapTrainingSpecSerializer, document or {}))

    def to_dict(self):
        return asdict(self)


@dataclass
class ComponentReport:
    index: int
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""


@dataclass
class TrainingReport:
    n_samples: int
    dim: int
    spec: dict
    negative_log_likelihood: float = None
    components: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    def to_dict(self):
        return asdict(self)


def fit_component(index, samples, spec):
    """Minimize the component objective with BFGS from the identity component."""
    template = MonotoneComponent.identity(index, spec.total_order, spec.rectifier, spec.quadrature_points)
    objective = ComponentObjective(template, samples)
    result = minimize(
        objective,
        template.coefficients.copy(),
        jac=True,
        method="BFGS",
        options={"gtol": spec.grad_tol, "maxiter": spec.max_iters},
    )
    component = template.with_coefficients(result.x)
    value, gradient = objective(result.x)
    report = ComponentReport(
        index=index,
        objective=value,
        grad_norm=float(np.max(np.abs(gradient))),
        iterations=int(result.nit),
        converged=bool(result.success),
        message=str(result.message),
    )
    return component, report


class MapTrainingService:
    """Service for maximum-likelihood training of monotone triangular maps."""

    def __init__(self, spec=None, jobs=1):
        self.spec = spec or MapTrainingSpec()
        self.jobs = jobs

    def standardization(self, samples):
        """Affine pre-map (y - mean) / std per coordinate."""
        mean = samples.mean(axis=0)
        std = samples.std(axis=0)
        if np.any(std <= 0):
            raise InvalidParameterError("Cannot standardize samples with a constant coordinate")
        return AffineMap.diagonal(1.0 / std, -mean / std)

    def _check_samples(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or not np.all(np.isfinite(samples)):
            raise InvalidParameterError("Training samples must be a finite N x d array")
        n_terms = len(total_order_multi_indices(samples.shape[1], self.spec.total_order))
        required = SAMPLES_PER_COEFFICIENT * n_terms
        if samples.shape[0] < required:
            raise InvalidParameterError(
                f"{samples.shape[0]} samples are not enough for {n_terms} coefficients per component "
                f"(need at least {required})"
            )
        return samples

    def train_component(self, index, samples):
        component, report = fit_component(index, np.asarray(samples, dtype=float), self.spec)
        if not report.converged:
            logger.warning(
                f"Component {index} stopped after {report.iterations} iterations "
                f"with gradient norm {report.grad_norm:.3e}: {report.message}"
            )
        else:
            logger.debug(f"Component {index} converged in {report.iterations} iterations")
        return component, report

    def train_map(self, samples):
        """Train every component; returns (map, TrainingReport)."""
        start_time = time.time()
        samples = self._check_samples(samples)
        n_samples, dim = samples.shape
        logger.info(
            f"Training order-{self.spec.total_order} triangular map on {n_samples} samples in dimension {dim}"
        )
        pre_map = self.standardization(samples) if self.spec.standardize else None
        working = pre_map.forward(samples) if pre_map is not None else samples

        if self.jobs > 1 and dim > 1:
            with ProcessPoolExecutor(max_workers=min(self.jobs, dim)) as pool:
                futures = [pool.submit(fit_component, k, working, self.spec) for k in range(dim)]
                fitted = [future.result() for future in futures]
            for _, report in fitted:
                if not report.converged:
                    logger.warning(f"Component {report.index} did not converge: {report.message}")
        else:
            fitted = [self.train_component(k, working) for k in range(dim)]

        triangular = TriangularMap([component for component, _ in fitted])
        transport_map = ComposedMap(triangular, pre_map) if pre_map is not None else triangular
        report = TrainingReport(
            n_samples=n_samples,
            dim=dim,
            spec=self.spec.to_dict(),
            negative_log_likelihood=negative_log_likelihood(transport_map, samples),
            components=[asdict(report) for _, report in fitted],
            elapsed_seconds=time.time() - start_time,
        )
        logger.info(
            f"Map training finished in {report.elapsed_seconds:.2f}s, NLL {report.negative_log_likelihood:.6f}"
        )
        return transport_map, report


def load_samples(path):
    """Samples from a CSV with a header row; a leading ``step`` column (chain files) is dropped."""
    header, values = read_float_csv(path)
    if header and header[0] == "step":
        values = values[:, 1:]
    return values


def train_component(k, samples, spec=None):
    return MapTrainingService(spec).train_component(k, samples)[0]


def train_map(samples, spec=None, jobs=1):
    return MapTrainingService(spec, jobs).train_map(samples)[0]
