"""
Services for turning recorded chains into a DiagnosticsReport.
"""

import logging
import time
from itertools import groupby
from pathlib import Path

import numpy as np

from apps.core.exceptions import ChainTooShortError, InvalidParameterError
from apps.core.utils import resolve_jobs

from .estimators import batch_means_variance, chain_values
from .functionals import get_test_function
from .plots import line_plot
from .report import DiagnosticsReport
from .stein import ksd_series

logger = logging.getLogger(__name__)

DEFAULT_KSD_POINTS = 10_000
KSD_SERIES_LENGTH = 8


def thin(points, n_points):
    """At most ``n_points`` rows taken at evenly spaced indices, first and last included."""
    if points.shape[0] <= n_points:
        return points
    return points[np.linspace(0, points.shape[0] - 1, n_points).round().astype(int)]


def series_sizes(n_points, length=KSD_SERIES_LENGTH):
    """Geometrically spaced sample sizes ending at ``n_points``."""
    sizes = np.unique(np.geomspace(min(10, n_points), n_points, length).round().astype(int))
    return [int(size) for size in sizes]


def chain_group_key(chain):
    return (chain.scheme, float(chain.h))


class DiagnosticsService:
    """
    Diagnostics of chains grouped by (scheme, h): per test function the pooled ergodic mean,
    batch-means AVar and MCSE, plus a KSD series on the pooled retained states.
    """

    def __init__(self, target, phi_names=("sum",), burn_in=0, ksd_points=DEFAULT_KSD_POINTS, ksd=True, jobs=1):
        if burn_in < 0:
            raise InvalidParameterError(f"burn_in must be nonnegative, got {burn_in}")
        self.target = target
        self.phis = [get_test_function(name, target.dim) for name in phi_names]
        self.burn_in = int(burn_in)
        self.ksd_points = int(ksd_points)
        self.ksd = ksd
        self.jobs = resolve_jobs(jobs)

    def _retained(self, chains):
        """Post-burn-in states of the chains that did not diverge."""
        return [
            chain.states[self.burn_in :]
            for chain in chains
            if not chain.diverged and chain.states.shape[0] > self.burn_in
        ]

    def estimate(self, scheme, h, chains, phi):
        kept = self._retained(chains)
        chain_means, chain_avars = [], []
        for states in kept:
            values = chain_values(states, phi)
            chain_means.append(float(np.mean(values)))
            try:
                chain_avars.append(batch_means_variance(values))
            except ChainTooShortError as err:
                logger.warning(f"No AVar for {scheme} (h={h}) on {phi.name}: {err}")
                chain_avars.append(float("nan"))
        n_retained = sum(states.shape[0] for states in kept)
        mean = avar = mcse = float("nan")
        if kept:
            weights = np.array([states.shape[0] for states in kept], dtype=float)
            mean = float(np.average(chain_means, weights=weights))
            avar = float(np.mean(chain_avars))
            mcse = float(np.sqrt(avar / n_retained))
        return {
            "scheme": scheme,
            "h": h,
            "phi": phi.name,
            "mean": mean,
            "avar": avar,
            "mcse": mcse,
            "n_chains": len(kept),
            "n_diverged": sum(chain.diverged for chain in chains),
            "chain_means": chain_means,
            "chain_avars": chain_avars,
        }

    def stein_discrepancy(self, scheme, h, chains):
        retained = self._retained(chains)
        if not retained:
            logger.warning(f"No finite chains for the KSD of {scheme} (h={h})")
            return {"scheme": scheme, "h": h, "n_points": 0, "value": None, "series": []}
        points = thin(np.concatenate(retained), self.ksd_points)
        series = ksd_series(points, self.target.grad_log_density, series_sizes(points.shape[0]), jobs=self.jobs)
        return {
            "scheme": scheme,
            "h": h,
            "n_points": int(points.shape[0]),
            "value": series[-1][1],
            "series": [[float(size), value] for size, value in series],
        }

    def diagnose(self, chains, metadata=None):
        start_time = time.time()
        if not chains:
            raise InvalidParameterError("No chains to diagnose")
        for chain in chains:
            if chain.dim != self.target.dim:
                raise InvalidParameterError(
                    f"Chain {chain.chain_id} has dimension {chain.dim}, target '{self.target.name}' has {self.target.dim}"
                )
        report = DiagnosticsReport(
            metadata={
                "target": self.target.describe(),
                "burn_in": self.burn_in,
                "n_chains": len(chains),
                "seeds": sorted({int(chain.seed) for chain in chains}),
                **(metadata or {}),
            }
        )
        ordered = sorted(chains, key=lambda chain: (chain_group_key(chain), chain.seed, chain.chain_id))
        for (scheme, h), group in groupby(ordered, key=chain_group_key):
            group = list(group)
            for phi in self.phis:
                report.estimates.append(self.estimate(scheme, h, group, phi))
            if self.ksd:
                report.ksd.append(self.stein_discrepancy(scheme, h, group))
        logger.info(
            f"Diagnosed {len(chains)} chain(s) on {self.target.name} in {time.time() - start_time:.2f}s"
        )
        return report


def _magnitude(value):
    return float("nan") if value is None else abs(value)


def write_report_plots(report, directory):
    """KSD against sample size and MSE against chain length, one SVG each when data exist."""
    directory = Path(directory)
    written = []
    ksd = {
        f"{entry['scheme']} h={entry['h']:g}": ([row[0] for row in entry["series"]], [row[1] for row in entry["series"]])
        for entry in report.ksd
        if entry["series"]
    }
    if ksd:
        written.append(
            line_plot(directory / "ksd.svg", ksd, title="KSD", xlabel="samples", ylabel="KSD", logx=True, logy=True)
        )
    mse = {f"{table['scheme']} h={table['h']:g}": (table["lengths"], table["mse"]) for table in report.mse}
    if mse:
        written.append(
            line_plot(directory / "mse.svg", mse, title="MSE", xlabel="chain length", ylabel="MSE", logx=True, logy=True)
        )
    for sweep in report.bias_sweeps:
        rows = sweep["rows"]
        written.append(
            line_plot(
                directory / f"bias_{sweep['scheme']}_{sweep['phi']}_seed{sweep['seed']}.svg",
                {sweep["scheme"]: ([row["h"] for row in rows], [_magnitude(row["error"]) for row in rows])},
                title=f"|e({sweep['phi']}, h)|, seed {sweep['seed']}",
                xlabel="h",
                ylabel="|e|",
                logx=True,
                logy=True,
            )
        )
    return written
