"""
Ergodic averages and batch-means asymptotic variance.
"""

import numpy as np

from apps.core.exceptions import ChainTooShortError, InvalidParameterError

MIN_BATCH_MEANS_LENGTH = 100


def chain_values(chain, phi, burn_in=0):
    """phi evaluated on the retained states of a Chain or a (K, d) array."""
    states = getattr(chain, "states", chain)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if not 0 <= burn_in < states.shape[0]:
        raise InvalidParameterError(f"burn_in must lie in [0, {states.shape[0]}), got {burn_in}")
    return np.asarray(phi(states[burn_in:]), dtype=float)


def ergodic_average(chain, phi, burn_in=0):
    return float(np.mean(chain_values(chain, phi, burn_in)))


def batch_layout(length):
    """(number of batches, batch size) = (floor(sqrt K), floor(K / M))."""
    if length < MIN_BATCH_MEANS_LENGTH:
        raise ChainTooShortError(
            f"Batch means need at least {MIN_BATCH_MEANS_LENGTH} retained states, got {length}"
        )
    n_batches = int(np.floor(np.sqrt(length)))
    return n_batches, length // n_batches


def batch_means_variance(values):
    """Asymptotic variance of the mean of a scalar series by non-overlapping batch means."""
    values = np.asarray(values, dtype=float)
    n_batches, size = batch_layout(values.shape[0])
    means = values[: n_batches * size].reshape(n_batches, size).mean(axis=1)
    return float(size * np.var(means, ddof=1))


def batch_means_avar(chain, phi, burn_in=0):
    return batch_means_variance(chain_values(chain, phi, burn_in))


def mcse(chain, phi, burn_in=0):
    """Monte Carlo standard error sqrt(AVar / K) of the ergodic average."""
    values = chain_values(chain, phi, burn_in)
    return float(np.sqrt(batch_means_variance(values) / values.shape[0]))


class StreamingBatchMeans:
    """
    Batch means for series that are not kept in memory. The length is fixed in advance;
    ``update`` takes one value per series (shape (n_series,)) per call.
    """

    def __init__(self, length, n_series=1):
        self.length = int(length)
        self.n_batches, self.size = batch_layout(self.length)
        self.sums = np.zeros((self.n_batches, n_series))
        self.total = np.zeros(n_series)
        self.count = 0

    def update(self, values):
        values = np.asarray(values, dtype=float)
        batch = self.count // self.size
        if batch < self.n_batches:
            self.sums[batch] += values
        self.total += values
        self.count += 1

    @property
    def mean(self):
        return self.total / self.count

    def avar(self):
        if self.count != self.length:
            raise InvalidParameterError(f"Expected {self.length} values, got {self.count}")
        means = self.sums / self.size
        return self.size * np.var(means, axis=0, ddof=1)
