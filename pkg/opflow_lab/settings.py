"""
Django settings for the opflow_lab project.

The project hosts a single app, ``scheduling``, driven entirely through
management commands. Tunables are read from the environment (or a ``.env``
file) with python-decouple.
"""

from pathlib import Path
from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='opflow-lab-local-only')

DEBUG = config('DEBUG', default=True, cast=bool)


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'scheduling',
]


# Database
# Run records go to DATABASE_URL if set, otherwise a local SQLite file

DATABASE_URL = config('DATABASE_URL', default=None)

if DATABASE_URL:
    DATABASES = {
        'default': dj_database_url.parse(DATABASE_URL, conn_max_age=600)
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'db.sqlite3',
        }
    }

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'


# Simulation settings

OPFLOW_SEED = config('OPFLOW_SEED', default=0, cast=int)

# Brute-force oracle refuses instances whose total size exceeds this
OPFLOW_BRUTE_FORCE_CAP = config('OPFLOW_BRUTE_FORCE_CAP', default=20, cast=int)

# Random subsets drawn per primal feasibility check
OPFLOW_PRIMAL_SAMPLES = config('OPFLOW_PRIMAL_SAMPLES', default=10_000, cast=int)

# Upper bound on the total volume a generator may emit
OPFLOW_MAX_VOLUME = config('OPFLOW_MAX_VOLUME', default=4_194_304, cast=int)

# O(|J(t)|)-per-step assertions inside the chunk policy
OPFLOW_STRICT_CHECKS = config('OPFLOW_STRICT_CHECKS', default=False, cast=bool)

# Default worker count for batch fan-out
OPFLOW_JOBS = config('OPFLOW_JOBS', default=1, cast=int)

OPFLOW_LOG_LEVEL = config('OPFLOW_LOG_LEVEL', default='WARNING')


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'scheduling': {
            'handlers': ['console'],
            'level': OPFLOW_LOG_LEVEL,
            'propagate': False,
        },
    },
}
