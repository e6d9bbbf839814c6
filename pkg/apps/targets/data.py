"""
Shipped data for the funnel posterior.
"""

import logging
from pathlib import Path

import numpy as np

from apps.core.utils import read_float_csv, write_float_csv

logger = logging.getLogger(__name__)

FUNNEL_SEED = 20240601
FUNNEL_SIZE = 30
FUNNEL_DATA_FILE = Path(__file__).resolve().parent / "fixtures" / "funnel_data.csv"


def generate_funnel_data(seed=FUNNEL_SEED, size=FUNNEL_SIZE):
    return np.random.default_rng(seed).standard_normal(size)


def write_funnel_data(path=None, seed=FUNNEL_SEED, size=FUNNEL_SIZE):
    path = Path(path or FUNNEL_DATA_FILE)
    write_float_csv(path, ["x"], generate_funnel_data(seed, size))
    logger.info(f"Wrote {size} funnel observations (seed {seed}) to {path}")
    return path


def load_funnel_data(path=None):
    """Read the shipped observations, regenerating them from the fixed seed when the file is absent."""
    path = Path(path or FUNNEL_DATA_FILE)
    if path.exists():
        _, values = read_float_csv(path)
        return values[:, 0]
    logger.debug(f"{path} not found; regenerating funnel data from seed {FUNNEL_SEED}")
    return generate_funnel_data()
