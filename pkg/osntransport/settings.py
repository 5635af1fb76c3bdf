"""
Settings used by the console entry point, ie. `python -m osntransport`.
"""

import os
from pathlib import Path


DEBUG = False
SITE_ROOT = Path(__file__).parents[1]
SECRET_KEY = "osntransport-console-not-secret"
INSTALLED_APPS = [
    'osntransport',
]
DATABASES = {}
USE_TZ = True

# Simulator
OSN_BOUNDING_BOX = (7.0, 72.0, -170.0, -50.0)
OSN_FIT_TOLERANCE = 0.15
OSN_GOWALLA_FOLDER = os.environ.get('OSN_GOWALLA_FOLDER') or None
OSN_PRIM_CUTOFF = 2048
OSN_THREADS = None
OSN_TIE_TOLERANCE = 1e-12
