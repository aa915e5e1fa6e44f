"""
Django settings for the twingym project.

twingym has no web surface; Django provides settings, logging
configuration, management commands and the test runner.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
import os
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# override in localsettings for anything other than local runs
SECRET_KEY = 'twingym-development-only'

DEBUG = False

# Application definition

INSTALLED_APPS = [
    'twingym.core',
    'twingym.envs',
    'twingym.verify',
    'twingym.transfer',
    'twingym.bench',
    'twingym.reports',
]

# no models; the test runner still expects a database configuration
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.path.join(BASE_DIR, 'twingym.sqlite3'),
    }
}

USE_TZ = True

TIME_ZONE = 'America/New_York'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'basic': {
            'format': '[%(asctime)s] %(levelname)s:%(name)s::%(message)s',
            'datefmt': '%d/%b/%Y %H:%M:%S',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'basic',
        },
    },
    'loggers': {
        'twingym': {
            'handlers': ['console'],
            'level': 'INFO',
        },
    },
}

##
# verification defaults
##

# L3 episode count and seed streams 0..N-1
TWINGYM_EPISODES = 100
TWINGYM_BASE_SEED = 0
# default comparison mode per environment; epsilon is the L-infinity tolerance
TWINGYM_MODES = {
    'pong': 'exact',
    'cartpole': 'epsilon',
}
TWINGYM_EPSILON = 1e-5
# L3 episodes per mutant when running the mutation matrix
TWINGYM_MUTATION_EPISODES = 10

##
# policy transfer defaults
##

TWINGYM_ALPHA = 0.05
# equivalence margin in return units
TWINGYM_DELTA = {
    'pong': 1.0,
    'cartpole': 25.0,
}
TWINGYM_EVAL_EPISODES = 20
TWINGYM_N_SEEDS = 10
TWINGYM_CEM = {
    'generations': 30,
    'population': 64,
    'elite_frac': 0.125,
}

##
# benchmark defaults
##

TWINGYM_BENCH_BATCHES = [32, 128, 512, 2048, 8192]
TWINGYM_BENCH_RUNS = 5
TWINGYM_BENCH_STEPS = 5000
# the serial baseline is measured once, at its own batch size and step
# count, and every row's speedup is relative to it
TWINGYM_BENCH_BASELINE_BATCH = 64
TWINGYM_BENCH_BASELINE_STEPS = 200
# each timed run must last at least this long (timer resolution guard)
TWINGYM_MIN_RUN_SECONDS = 0.1
TWINGYM_CV_THRESHOLD = 0.03

# worker threads/processes for batched stepping and evaluation;
# None uses os.cpu_count()
TWINGYM_WORKERS = None
# smallest slice of a batch handed to a worker thread
TWINGYM_MIN_CHUNK = 16384

# where commands write JSON reports and L3 gate artifacts
TWINGYM_REPORT_DIR = os.path.join(BASE_DIR, 'reports')
TWINGYM_GATE_DIR = os.path.join(BASE_DIR, 'reports', 'gates')

try:
    from twingym.localsettings import *
except ImportError:
    pass
