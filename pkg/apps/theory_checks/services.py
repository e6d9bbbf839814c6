"""
Verification suites run by the ``verify`` command.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import default_skew_matrix, json_compatible
from apps.diagnostics.bounds import contraction_constant
from apps.map_learning.components import MonotoneComponent
from apps.targets.densities import anisotropic_gaussian, banana, hybrid_rosenbrock
from apps.transport.maps import AffineMap, TriangularMap

from .equivalence import (
    DEFAULT_TOLERANCE,
    LOG_DET_IDENTITY_TOL,
    check_giirr_equivalence,
    check_tmrmld_equivalence,
    log_det_identity_residual,
    sample_box,
)
from .onestep import onestep_discrepancy
from .rates import optimal_rate
from .serializers import VerificationReportSerializer

logger = logging.getLogger(__name__)

SUITES = ("tmrmld", "giirr", "onestep", "rate")
VERIFICATION_VERSION = "1"

ONESTEP_POINT = (1.0, 1.2)
ONESTEP_STEP_SIZE = 1e-3
ONESTEP_REL_TOL = 0.05
ONESTEP_RATIO_RANGE = (3.6, 4.4)
RATE_GRID_POINTS = 20


def matched_pairs():
    """(name, target, exact map) pairs the equivalence suites run on."""
    pairs = []
    for target in (banana(), hybrid_rosenbrock(), anisotropic_gaussian(1.0, 4.0)):
        pairs.append((target.name, target, target.exact_map))
    return pairs


def perturbed_triangular_map(dim=2, order=3, seed=0, scale=0.1):
    """Identity triangular map with seeded perturbations of every coefficient."""
    rng = np.random.default_rng(seed)
    components = []
    for k in range(dim):
        identity = MonotoneComponent.identity(k, order)
        components.append(identity.with_coefficients(identity.coefficients + scale * rng.standard_normal(identity.n_terms)))
    return TriangularMap(components)


def map_kinds():
    return [
        ("banana", banana().exact_map),
        ("rosenbrock", hybrid_rosenbrock().exact_map),
        ("affine", AffineMap([[1.0, 0.4], [-0.7, 2.0]], [0.1, 0.2])),
        ("triangular", perturbed_triangular_map()),
    ]


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(check["passed"] for check in self.checks)

    def to_dict(self):
        return {"suite": self.suite, "passed": self.passed, "checks": self.checks, "summary": self.summary}


class VerificationService:
    """Runs the pointwise and Monte Carlo checks of the continuous-time and one-step theory."""

    def __init__(self, n_points=50, seed=0, n_mc=10**6, tol=DEFAULT_TOLERANCE):
        if n_points < 1:
            raise InvalidParameterError(f"n_points must be positive, got {n_points}")
        self.n_points = int(n_points)
        self.seed = int(seed)
        self.n_mc = int(n_mc)
        self.tol = float(tol)

    def _equivalence_suite(self, suite, with_skew):
        result = SuiteResult(suite)
        for name, target, transport_map in matched_pairs():
            skews = [None]
            if with_skew:
                skews = [np.zeros((target.dim, target.dim)), default_skew_matrix(target.dim)]
            for skew in skews:
                points = sample_box(target.dim, self.n_points, self.seed)
                if skew is None:
                    reports = [check_tmrmld_equivalence(target, transport_map, y, self.tol) for y in points]
                else:
                    reports = [check_giirr_equivalence(target, transport_map, skew, y, self.tol) for y in points]
                failures = [report.to_dict() for report in reports if not report.passed]
                check = {
                    "name": name if skew is None else f"{name}, |D|={float(np.abs(skew).max()):g}",
                    "passed": not failures,
                    "n_points": len(reports),
                    "max_drift_residual": max(report.drift_residual for report in reports),
                    "max_diffusion_residual": max(report.diffusion_residual for report in reports),
                    "failures": failures,
                }
                if skew is not None:
                    check["max_skew_residual"] = max(report.skew_residual for report in reports)
                result.checks.append(check)
        return result

    def tmrmld(self):
        result = self._equivalence_suite("tmrmld", with_skew=False)
        for name, transport_map in map_kinds():
            residual = log_det_identity_residual(transport_map, sample_box(transport_map.dim, self.n_points, self.seed))
            result.checks.append(
                {"name": f"log det identity, {name}", "passed": residual <= LOG_DET_IDENTITY_TOL, "max_residual": residual}
            )
        return result

    def giirr(self):
        return self._equivalence_suite("giirr", with_skew=True)

    def onestep(self):
        result = SuiteResult("onestep")
        target = banana()
        runs = [
            onestep_discrepancy(target, target.exact_map, ONESTEP_POINT, h, self.n_mc, self.seed)
            for h in (ONESTEP_STEP_SIZE, ONESTEP_STEP_SIZE / 2)
        ]
        result.checks.append({"name": "closed form", "passed": runs[0].rel_err <= ONESTEP_REL_TOL, **runs[0].to_dict()})
        ratio = runs[0].mc_estimate / runs[1].mc_estimate if runs[1].mc_estimate > 0 else float("inf")
        low, high = ONESTEP_RATIO_RANGE
        result.checks.append({"name": "h^2 scaling", "passed": bool(low <= ratio <= high), "ratio": ratio})
        result.summary = {"point": list(ONESTEP_POINT), "n_mc": self.n_mc}
        return result

    def rate(self):
        result = SuiteResult("rate")
        isotropic = optimal_rate(1.0, 1.0)
        h = 0.5
        remark = 1.0 - contraction_constant(1.0, 1.0) * h / 2.0
        result.checks.append(
            {
                "name": "isotropic rate",
                "passed": isotropic["r"] == 0.75 and isotropic["dr_dL"] == 0.0 and remark == 0.75,
                **isotropic,
                "contraction_rate": remark,
            }
        )
        m = 1.0
        grid = np.linspace(1.1, 10.0, RATE_GRID_POINTS)
        rates = [optimal_rate(m, L) for L in grid]
        values = np.array([rate["r"] for rate in rates])
        result.checks.append(
            {"name": "rate increases with L", "passed": bool(np.all(np.diff(values) > 0)), "L": grid, "r": values}
        )
        matches = [
            abs(rate["r"] - (1.0 - contraction_constant(m, L) / (2.0 * (m + L)))) <= 1e-12 for rate, L in zip(rates, grid)
        ]
        result.checks.append({"name": "rate at the largest admissible step", "passed": all(matches)})
        derivative_signs = [rate["dr_dL"] > 0 for rate in rates]
        result.checks.append({"name": "derivative sign", "passed": all(derivative_signs)})
        return result

    def run(self, suites=SUITES):
        report = {"version": VERIFICATION_VERSION, "seed": self.seed, "n_points": self.n_points, "suites": {}}
        for suite in suites:
            if suite not in SUITES:
                raise InvalidParameterError(f"Unknown suite '{suite}'; expected one of {', '.join(SUITES)}")
            start_time = time.time()
            result = getattr(self, suite)()
            report["suites"][suite] = result.to_dict()
            log = logger.info if result.passed else logger.warning
            log(f"Suite {suite} {'passed' if result.passed else 'FAILED'} in {time.time() - start_time:.2f}s")
        report["passed"] = all(suite["passed"] for suite in report["suites"].values())
        return json_compatible(VerificationReportSerializer(json_compatible(report)).data)


def write_verification_report(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")
    return path
