"""
Worker entry points for running chain groups in separate processes.
"""

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def run_chain_group(target, config, y0, n_steps, seed, chain_ids):
    """Run one group of chains; executed inside a worker process."""
    from .runner import EnsembleRunner

    try:
        return EnsembleRunner(target, config, y0, seed, chain_ids).run(n_steps)
    except Exception as err:
        logger.error(f"Chain group {chain_ids[0]}..{chain_ids[-1]} ({config.scheme}, seed {seed}) failed: {err}")
        raise


def run_ensemble_parallel(target, config, y0, n_steps, seed, chain_ids=None, jobs=2):
    """Split the ensemble into ``jobs`` contiguous groups and run them concurrently."""
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim == 1:
        n_chains = len(chain_ids) if chain_ids is not None else 1
        y0 = np.broadcast_to(y0, (n_chains, y0.shape[0]))
    chain_ids = list(range(y0.shape[0])) if chain_ids is None else [int(c) for c in chain_ids]
    groups = [group for group in np.array_split(np.arange(len(chain_ids)), jobs) if group.size]
    logger.info(f"Running {len(chain_ids)} {config.scheme} chains in {len(groups)} worker(s)")
    with ProcessPoolExecutor(max_workers=len(groups)) as pool:
        futures = [
            pool.submit(run_chain_group, target, config, y0[group], n_steps, seed, [chain_ids[i] for i in group])
            for group in groups
        ]
        return [chain for future in futures for chain in future.result()]
