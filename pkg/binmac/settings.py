"""
Django settings for the binmac project.

binmac computes weighted-sum-rate optimal inputs and the capacity region of
the two-user binary-input binary-output multiple-access channel. The project
has no database; Django provides the command-line surface (management
commands), a thin JSON API, settings and logging.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env at project root
load_dotenv(BASE_DIR / '.env')


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('BINMAC_SECRET_KEY', 'django-insecure-binmac-local-development-only')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('BINMAC_DEBUG', '0').lower() in ('1', 'true', 'yes')

ALLOWED_HOSTS = ["localhost", "127.0.0.1", "[::1]", "testserver"]


# Application definition

INSTALLED_APPS = [
    'core',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'binmac.urls'

TEMPLATES = []

WSGI_APPLICATION = 'binmac.wsgi.application'


# No persistence: every result is recomputed from the channel parameters.
DATABASES = {}


# Internationalization
LANGUAGE_CODE = 'en-us'

USE_I18N = False


# Logging
LOG_LEVEL = os.getenv('BINMAC_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'services': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
        'core': {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False},
    },
}


# binmac numerical defaults
CAPACITY_EPS = 1e-9          # p2 deviation tolerance of the 1-D solvers
CAPACITY_GRID = 4096         # grid points of the general 1-D scan over P2
REGION_SWEEP = 201           # weight vectors in a region sweep
REGION_N_JOBS = int(os.getenv('BINMAC_REGION_N_JOBS', '1'))
VERIFY_N_JOBS = int(os.getenv('BINMAC_VERIFY_N_JOBS', '1'))
TOL_H2 = 1e-12               # |h2(p)| at or below this counts as outside P2
KKT_TOL = 1e-8
KKT_SEED_GRID = 64
G1_GRID = 512
G1_BINS = 1024
ORACLE_GRID = 2000           # (ORACLE_GRID + 1)^2 brute-force evaluations
VERIFY_FIXTURES = BASE_DIR / 'fixtures' / 'channels.json'

# Security headers for the JSON endpoints
SECURE_CONTENT_TYPE_NOSNIFF = True
X_FRAME_OPTIONS = 'DENY'
