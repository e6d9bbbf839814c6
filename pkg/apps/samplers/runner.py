"""
Chain runner: advances ensembles of independent chains with deterministic noise and
divergence detection.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.core.exceptions import InvalidParameterError, NumericsError
from apps.core.utils import read_float_csv, tmula_setting, write_float_csv

from .kernels import KernelState, build_kernel
from .noise import NoiseStream

logger = logging.getLogger(__name__)

CHAIN_INDEX_FILE = "chains.json"


@dataclass
class StepRecord:
    k: int
    y: np.ndarray
    xi: np.ndarray
    alive: np.ndarray


@dataclass
class Chain:
    """States Y_0..Y_K of one chain; a diverged chain keeps the finite prefix before ``diverged_at``."""

    states: np.ndarray
    scheme: str
    h: float
    seed: int
    chain_id: int = 0
    diverged_at: int = None

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def n_steps(self):
        return self.states.shape[0] - 1

    @property
    def diverged(self):
        return self.diverged_at is not None

    def describe(self):
        return {
            "scheme": self.scheme,
            "h": self.h,
            "seed": self.seed,
            "chain_id": self.chain_id,
            "n_steps": self.n_steps,
            "diverged_at": self.diverged_at,
        }

    def to_csv(self, path):
        header = ["step"] + [f"y_{i + 1}" for i in range(self.dim)]
        return write_float_csv(path, header, self.states, index=np.arange(self.states.shape[0]))

    @classmethod
    def from_csv(cls, path, **metadata):
        header, values = read_float_csv(path)
        if not header or header[0] != "step":
            raise InvalidParameterError(f"{path} is not a chain CSV (header {header[:2]})")
        return cls(states=values[:, 1:], **metadata)


def _as_initial_points(y0, n_chains, dim):
    y0 = np.array(y0, dtype=float)
    if y0.ndim == 1:
        y0 = np.broadcast_to(y0, (n_chains, y0.shape[0])).copy()
    if y0.shape != (n_chains, dim):
        raise InvalidParameterError(f"Initial points have shape {y0.shape}, expected ({n_chains}, {dim})")
    return y0


class EnsembleRunner:
    """
    Advances chains ``chain_ids`` in one array. Chain i draws its noise from the stream keyed by
    (seed, chain_ids[i]), so its trajectory does not depend on the rest of the ensemble.
    """

    def __init__(self, target, config, y0, seed, chain_ids=None, threshold=None, noise_block=None):
        self.target = target
        self.config = config
        self.kernel = build_kernel(target, config)
        y0 = np.asarray(y0, dtype=float)
        if chain_ids is None:
            chain_ids = range(y0.shape[0] if y0.ndim == 2 else 1)
        self.chain_ids = [int(chain_id) for chain_id in chain_ids]
        if not self.chain_ids:
            raise InvalidParameterError("An ensemble needs at least one chain")
        self.seed = int(seed)
        self.threshold = float(tmula_setting("DIVERGENCE_THRESHOLD", threshold))
        self.y0 = _as_initial_points(y0, len(self.chain_ids), target.dim)
        self.noise = NoiseStream(self.seed, self.chain_ids, target.dim, noise_block)
        self.diverged_at = [None] * len(self.chain_ids)

    def _mark_diverged(self, position, k, reason):
        self.diverged_at[position] = k
        logger.warning(
            f"Chain {self.chain_ids[position]} ({self.config.scheme}, h={self.config.step_size}, "
            f"seed {self.seed}) diverged at step {k}: {reason}"
        )

    def _advance(self, state, xi):
        """Advance all rows; on a numerical failure fall back to one row at a time."""
        try:
            return self.kernel.advance(state, xi), np.zeros(xi.shape[0], dtype=bool)
        except NumericsError as err:
            if xi.shape[0] == 1:
                logger.debug(f"Step failed: {err}")
                x = None if state.x is None else np.full_like(state.x, np.nan)
                return KernelState(np.full_like(state.y, np.nan), x), np.ones(1, dtype=bool)
        failed = np.zeros(xi.shape[0], dtype=bool)
        rows = []
        for i in range(xi.shape[0]):
            advanced, row_failed = self._advance(state.take(slice(i, i + 1)), xi[i : i + 1])
            rows.append(advanced)
            failed[i] = row_failed[0]
        x = None if state.x is None else np.concatenate([row.x for row in rows])
        return KernelState(np.concatenate([row.y for row in rows]), x), failed

    def steps(self, n_steps):
        """Yield a StepRecord for k = 1..n_steps; rows of diverged chains are NaN."""
        if n_steps < 1:
            raise InvalidParameterError(f"Number of steps must be at least 1, got {n_steps}")
        state = self.kernel.initial_state(self.y0)
        alive = np.ones(len(self.chain_ids), dtype=bool)
        for position in np.flatnonzero(state.sup_norm() > self.threshold):
            self._mark_diverged(position, 0, "initial point outside the finite region")
            alive[position] = False

        for k in range(1, n_steps + 1):
            xi = self.noise.draw(k)
            rows = np.flatnonzero(alive)
            if rows.size:
                advanced, failed = self._advance(state.take(rows), xi[rows])
                out_of_range = advanced.sup_norm() > self.threshold
                state.put(rows, advanced)
                for position in rows[failed]:
                    self._mark_diverged(position, k, "numerical failure in the step")
                for position in rows[out_of_range & ~failed]:
                    self._mark_diverged(position, k, f"sup norm above {self.threshold:g}")
                alive[rows[failed | out_of_range]] = False
            y = state.y.copy()
            y[~alive] = np.nan
            yield StepRecord(k=k, y=y, xi=xi, alive=alive.copy())

    def run(self, n_steps):
        """Run and keep every state; returns one Chain per chain id."""
        logger.info(
            f"Running {len(self.chain_ids)} {self.config.scheme} chain(s) for {n_steps} steps "
            f"(h={self.config.step_size}, seed {self.seed})"
        )
        trajectory = np.empty((n_steps + 1,) + self.y0.shape)
        trajectory[0] = self.y0
        for record in self.steps(n_steps):
            trajectory[record.k] = record.y
        chains = []
        for position, chain_id in enumerate(self.chain_ids):
            end = self.diverged_at[position]
            chains.append(
                Chain(
                    states=trajectory[: n_steps + 1 if end is None else end, position].copy(),
                    scheme=self.config.scheme,
                    h=self.config.step_size,
                    seed=self.seed,
                    chain_id=chain_id,
                    diverged_at=end,
                )
            )
        n_diverged = sum(chain.diverged for chain in chains)
        if n_diverged:
            logger.warning(f"{n_diverged}/{len(chains)} {self.config.scheme} chains diverged")
        return chains


def iterate_ensemble(target, config, y0, n_steps, seed, chain_ids=None):
    """Streaming access to an ensemble, for estimators that do not keep the states."""
    runner = EnsembleRunner(target, config, y0, seed, chain_ids)
    return runner, runner.steps(n_steps)


def run_ensemble(target, config, y0, n_steps, seed, chain_ids=None, jobs=1):
    if jobs > 1:
        from .tasks import run_ensemble_parallel

        return run_ensemble_parallel(target, config, y0, n_steps, seed, chain_ids, jobs)
    return EnsembleRunner(target, config, y0, seed, chain_ids).run(n_steps)


def run_chain(target, config, y0, n_steps, seed, chain_id=0):
    """A single chain; identical to member ``chain_id`` of an ensemble with the same seed."""
    y0 = np.asarray(y0, dtype=float)
    return EnsembleRunner(target, config, y0.reshape(1, -1), seed, [chain_id]).run(n_steps)[0]


def chain_file_name(chain):
    return f"{chain.scheme}_h{chain.h:g}_seed{chain.seed}_chain{chain.chain_id}.csv"


def write_chains(directory, chains):
    """Write one CSV per chain plus a ``chains.json`` index with the metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for chain in chains:
        name = chain_file_name(chain)
        chain.to_csv(directory / name)
        index.append({"file": name, **chain.describe()})
    with open(directory / CHAIN_INDEX_FILE, "w", encoding="utf-8") as handle:
        json.dump({"chains": index}, handle, indent=2, sort_keys=True)
    logger.info(f"Wrote {len(chains)} chain(s) to {directory}")
    return directory / CHAIN_INDEX_FILE


def read_chains(directory):
    """Read chains written by ``write_chains``; bare CSVs without an index get default metadata."""
    directory = Path(directory)
    index_path = directory / CHAIN_INDEX_FILE
    if index_path.exists():
        with open(index_path, encoding="utf-8") as handle:
            entries = json.load(handle)["chains"]
        return [
            Chain.from_csv(
                directory / entry["file"],
                scheme=entry["scheme"],
                h=entry["h"],
                seed=entry["seed"],
                chain_id=entry["chain_id"],
                diverged_at=entry["diverged_at"],
            )
            for entry in entries
        ]
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        raise InvalidParameterError(f"No chain CSV files found in {directory}")
    return [
        Chain.from_csv(path, scheme="unknown", h=float("nan"), seed=0, chain_id=position)
        for position, path in enumerate(paths)
    ]
