"""
Counter-based Gaussian noise for chains.

Every chain owns a Philox stream keyed by (seed, chain_id). Step k (1-based) takes row
(k - 1) % block of block (k - 1) // block, and each block is generated from its own counter
position, so the noise of a chain does not depend on which other chains run beside it.
"""

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import tmula_setting

MAX_KEY = 2**64 - 1


def chain_generator(seed, chain_id, block_index=0):
    """Generator positioned at the start of one noise block of one chain."""
    if not (0 <= seed <= MAX_KEY and 0 <= chain_id <= MAX_KEY):
        raise InvalidParameterError(f"seed and chain_id must be unsigned 64-bit integers, got {seed}, {chain_id}")
    key = np.array([seed, chain_id], dtype=np.uint64)
    counter = np.array([0, 0, 0, block_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class NoiseStream:
    """Standard normal increments for an ensemble of chains, shape (n_chains, dim) per step."""

    def __init__(self, seed, chain_ids, dim, block=None):
        self.seed = int(seed)
        self.chain_ids = [int(chain_id) for chain_id in chain_ids]
        self.dim = int(dim)
        self.block = int(tmula_setting("NOISE_BLOCK", block))
        if self.block < 1:
            raise InvalidParameterError(f"Noise block must be positive, got {self.block}")
        for chain_id in self.chain_ids:
            chain_generator(self.seed, chain_id)
        self._block_index = None
        self._buffer = None

    def _fill(self, block_index):
        self._buffer = np.stack(
            [
                chain_generator(self.seed, chain_id, block_index).standard_normal((self.block, self.dim))
                for chain_id in self.chain_ids
            ],
            axis=1,
        )
        self._block_index = block_index

    def draw(self, k):
        """Noise for step k >= 1."""
        if k < 1:
            raise InvalidParameterError(f"Steps are numbered from 1, got {k}")
        block_index, row = divmod(k - 1, self.block)
        if block_index != self._block_index:
            self._fill(block_index)
        return self._buffer[row].copy()

