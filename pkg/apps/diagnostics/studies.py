"""
Multi-chain studies: MSE/bias/variance of ergodic averages against chain length, and step-size
sweeps of the asymptotic bias.
"""

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.samplers.runner import EnsembleRunner
from apps.samplers.services import initial_points

from .estimators import StreamingBatchMeans

logger = logging.getLogger(__name__)


@dataclass
class MseTable:
    scheme: str
    h: float
    phi: str
    truth: float
    lengths: list
    bias: list
    variance: list
    mse: list
    n_chains: int
    n_diverged: int
    seeds: list

    def to_dict(self):
        return asdict(self)


@dataclass
class BiasSweepRow:
    h: float
    n_steps: int
    error: float
    error_over_h: float
    stderr: float
    n_chains: int
    n_diverged: int


@dataclass
class BiasSweep:
    scheme: str
    phi: str
    coupled: bool
    horizon: float
    seed: int = 0
    rows: list = field(default_factory=list)

    @property
    def lambda_hat(self):
        """-mean(e/h) over the step sizes with a finite estimate."""
        ratios = [row.error_over_h for row in self.rows if np.isfinite(row.error_over_h)]
        return float(-np.mean(ratios)) if ratios else float("nan")

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "phi": self.phi,
            "coupled": self.coupled,
            "horizon": self.horizon,
            "seed": self.seed,
            "lambda_hat": self.lambda_hat,
            "rows": [asdict(row) for row in self.rows],
        }


def _checkpoints(lengths, n_steps):
    lengths = sorted({int(length) for length in (lengths or [n_steps])})
    if lengths[0] < 1 or lengths[-1] > n_steps:
        raise InvalidParameterError(f"Chain lengths must lie in 1..{n_steps}, got {lengths}")
    return lengths


def ergodic_estimates(target, config, phi, n_steps, seed, n_chains, lengths=None, burn_in=0, y0=None):
    """
    Ergodic averages over states burn_in..L of each chain for every L in ``lengths``, without
    keeping the trajectories. Returns (lengths, estimates of shape (len(lengths), n_chains), alive).
    """
    lengths = _checkpoints(lengths, n_steps)
    if not 0 <= burn_in < lengths[0]:
        raise InvalidParameterError(f"burn_in must be below the shortest length {lengths[0]}, got {burn_in}")
    start = initial_points(target, n_chains, seed, y0)
    runner = EnsembleRunner(target, config, start, seed, range(n_chains))
    totals = np.zeros(n_chains)
    if burn_in == 0:
        totals += phi(start)
    estimates = np.full((len(lengths), n_chains), np.nan)
    alive = np.ones(n_chains, dtype=bool)
    position = 0
    with np.errstate(invalid="ignore"):
        for record in runner.steps(lengths[-1]):
            if record.k >= burn_in:
                totals += np.where(record.alive, phi(np.nan_to_num(record.y)), 0.0)
            alive = record.alive
            if record.k == lengths[position]:
                estimates[position] = totals / (record.k + 1 - burn_in)
                position += 1
    estimates[:, ~alive] = np.nan
    return lengths, estimates, alive


def mse_study(target, configs, phi, truth, n_chains, n_steps, seeds, lengths=None, burn_in=0, y0=None):
    """
    Bias, variance and MSE of the ergodic average of ``phi`` for each sampler configuration,
    over ``n_chains`` chains per seed. Diverged chains are counted and excluded.
    """
    tables = []
    for config in configs:
        start_time = time.time()
        per_seed = [
            ergodic_estimates(target, config, phi, n_steps, seed, n_chains, lengths, burn_in, y0) for seed in seeds
        ]
        checkpoints = per_seed[0][0]
        estimates = np.concatenate([result[1] for result in per_seed], axis=1)
        kept = estimates[:, ~np.isnan(estimates[-1])]
        n_diverged = estimates.shape[1] - kept.shape[1]
        if n_diverged:
            logger.warning(f"{n_diverged} {config.scheme} chains diverged and are excluded from the MSE study")
        if kept.shape[1]:
            errors = kept - truth
            bias = np.mean(kept, axis=1) - truth
            variance = np.var(kept, axis=1)
            mse = np.mean(errors**2, axis=1)
        else:
            bias = variance = mse = np.full(len(checkpoints), np.nan)
        tables.append(
            MseTable(
                scheme=config.scheme,
                h=config.step_size,
                phi=phi.name,
                truth=float(truth),
                lengths=checkpoints,
                bias=bias.tolist(),
                variance=variance.tolist(),
                mse=mse.tolist(),
                n_chains=int(kept.shape[1]),
                n_diverged=int(n_diverged),
                seeds=[int(seed) for seed in seeds],
            )
        )
        logger.info(
            f"MSE study for {config.scheme} (h={config.step_size}) over {estimates.shape[1]} chains "
            f"finished in {time.time() - start_time:.2f}s"
        )
    return tables


def ornstein_uhlenbeck_step(x, h, xi, variance=1.0):
    """Exact transition of dX = -X / v dt + sqrt(2) dW over time h, stationary law N(0, vI)."""
    decay = np.exp(-h / variance)
    return decay * x + np.sqrt(variance * (1.0 - decay**2)) * xi


def _sweep_row(target, config, phi, truth, n_steps, seed, n_chains, burn_in, coupled, y0):
    start = initial_points(target, n_chains, seed, y0)
    runner = EnsembleRunner(target, config, start, seed, range(n_chains))
    accumulator = StreamingBatchMeans(n_steps - burn_in, n_chains)
    exact_map = target.exact_map
    reference = exact_map.forward(start) if coupled else None
    with np.errstate(invalid="ignore"):
        for record in runner.steps(n_steps):
            if coupled:
                reference = ornstein_uhlenbeck_step(reference, config.step_size, record.xi, target.reference_variance)
            if record.k <= burn_in:
                continue
            values = phi(np.nan_to_num(record.y))
            if coupled:
                values = values - phi(exact_map.inverse(reference))
            else:
                values = values - truth
            accumulator.update(np.where(record.alive, values, 0.0))
    alive = record.alive
    if not alive.any():
        return float("nan"), float("nan"), int(n_chains)
    means = accumulator.mean[alive]
    avar = accumulator.avar()[alive]
    error = float(np.mean(means))
    stderr = float(np.sqrt(np.mean(avar) / (accumulator.length * alive.sum())))
    return error, stderr, int((~alive).sum())


def bias_sweep(
    target,
    config,
    phi,
    step_sizes,
    horizon,
    seed,
    truth=None,
    n_chains=1,
    burn_in_fraction=0.1,
    coupled=None,
    y0=None,
):
    """
    Empirical asymptotic bias e(phi, h) for each step size, from ``n_chains`` chains sharing the
    physical time ``horizon``; reports e/h and lambda_hat = -mean(e/h).

    With an exact map the chains are coupled to the exact reference Ornstein-Uhlenbeck process
    driven by the same noise, and e is the mean of phi(Y_k) - phi(T(X_k^ref)). Otherwise e is
    the mean of phi(Y_k) minus ``truth``.
    """
    coupled = target.exact_map is not None if coupled is None else coupled
    if coupled and target.exact_map is None:
        raise InvalidParameterError(f"Target '{target.name}' has no exact map for a coupled bias sweep")
    if not coupled and truth is None:
        raise InvalidParameterError("An uncoupled bias sweep needs the true value of the test function")
    sweep = BiasSweep(
        scheme=config.scheme, phi=phi.name, coupled=bool(coupled), horizon=float(horizon), seed=int(seed)
    )
    for h in step_sizes:
        start_time = time.time()
        n_steps = int(round(horizon / (n_chains * h)))
        burn_in = int(burn_in_fraction * n_steps)
        error, stderr, n_diverged = _sweep_row(
            target, config.with_step_size(h), phi, truth, n_steps, seed, n_chains, burn_in, coupled, y0
        )
        if n_diverged:
            logger.warning(f"{n_diverged}/{n_chains} {config.scheme} chains diverged at h={h}")
        sweep.rows.append(
            BiasSweepRow(
                h=float(h),
                n_steps=n_steps,
                error=error,
                error_over_h=error / h,
                stderr=stderr,
                n_chains=int(n_chains),
                n_diverged=n_diverged,
            )
        )
        logger.info(
            f"Bias sweep {config.scheme} h={h}: e={error:.4g} (se {stderr:.2g}) "
            f"in {time.time() - start_time:.2f}s"
        )
    return sweep
