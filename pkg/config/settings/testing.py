"""
Testing settings for the tmula project.
"""
from .base import *

DEBUG = True

# Run everything in-process
TMULA = {**TMULA, 'JOBS': 1, 'OUTPUT_ROOT': Path('/tmp/tmula-test-runs')}

# Disable logging during tests
LOGGING_CONFIG = None
