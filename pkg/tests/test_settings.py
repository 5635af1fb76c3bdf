from pathlib import Path
import os


DEBUG = False
TESTING = True

SITE_ROOT = Path(__file__).parents[1]
SECRET_KEY = "fake-key"
INSTALLED_APPS = [
    'osntransport',
]

# Databases
DATABASES = {
    'default': {
        'ATOMIC_REQUESTS': False,
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    },
}

# Simulator
OSN_BOUNDING_BOX = (7.0, 72.0, -170.0, -50.0)
OSN_FIT_TOLERANCE = 0.15
OSN_GOWALLA_FOLDER = os.environ.get('OSN_GOWALLA_FOLDER') or None
OSN_PRIM_CUTOFF = 2048
OSN_THREADS = 1
OSN_TIE_TOLERANCE = 1e-12

# Time/date
USE_TZ = True
TIME_ZONE = 'Pacific/Auckland'
