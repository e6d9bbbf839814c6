"""
Base settings for the tmula project.
"""
import os
import logging
from pathlib import Path
from decouple import config
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Set up basic logging for startup messages
logging.basicConfig(level=logging.INFO)

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = os.environ.get('SECRET_KEY', 'tmula-local-only')

DEBUG = False

ALLOWED_HOSTS = []

# Application definition
DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'apps.core',
    'apps.targets',
    'apps.transport',
    'apps.map_learning',
    'apps.samplers',
    'apps.diagnostics',
    'apps.theory_checks',
    'apps.experiments',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# No persistence: every artifact is a file in the run directory
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework (serializers only)
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# Numerical defaults
TMULA = {
    # Chains
    'DIVERGENCE_THRESHOLD': config('TMULA_DIVERGENCE_THRESHOLD', default=1e8, cast=float),
    'NOISE_BLOCK': config('TMULA_NOISE_BLOCK', default=1024, cast=int),
    # Finite differences
    'FD_STEP': config('TMULA_FD_STEP', default=1e-5, cast=float),
    'FD_SECOND_STEP': config('TMULA_FD_SECOND_STEP', default=1e-4, cast=float),
    # Triangular inversion
    'INVERSION_TOL': config('TMULA_INVERSION_TOL', default=1e-12, cast=float),
    'INVERSION_MAX_DOUBLINGS': config('TMULA_INVERSION_MAX_DOUBLINGS', default=60, cast=int),
    # Split-step implicit solver
    'IMPLICIT_TOL': config('TMULA_IMPLICIT_TOL', default=1e-10, cast=float),
    'IMPLICIT_MAX_ITERS': config('TMULA_IMPLICIT_MAX_ITERS', default=50, cast=int),
    'IMPLICIT_MAX_HALVINGS': config('TMULA_IMPLICIT_MAX_HALVINGS', default=30, cast=int),
    # Map training
    'QUADRATURE_POINTS': config('TMULA_QUADRATURE_POINTS', default=32, cast=int),
    'TRAIN_GRAD_TOL': config('TMULA_TRAIN_GRAD_TOL', default=1e-6, cast=float),
    'TRAIN_MAX_ITERS': config('TMULA_TRAIN_MAX_ITERS', default=500, cast=int),
    # Kernelized Stein discrepancy (IMQ kernel)
    'KSD_C': config('TMULA_KSD_C', default=1.0, cast=float),
    'KSD_BETA': config('TMULA_KSD_BETA', default=-0.5, cast=float),
    # Orchestration
    'JOBS': config('TMULA_JOBS', default=0, cast=int),
    'OUTPUT_ROOT': BASE_DIR / config('TMULA_OUTPUT_ROOT', default='runs'),
}

logger = logging.getLogger(__name__)
logger.info(f"Run artifacts will be written under {TMULA['OUTPUT_ROOT']}")
if TMULA['JOBS'] > 0:
    logger.info(f"Worker pool pinned to {TMULA['JOBS']} processes")
