"""
Optional project settings, with defaults.

Library code never imports `django.conf.settings` directly, so that the
simulator can be used from a plain Python session. Use `get_setting()`.
"""

import logging
import os
from typing import Any, Dict, Optional

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


logger = logging.getLogger(__name__)


DEFAULTS: Dict[str, Any] = {
    'OSN_BOUNDING_BOX': (7.0, 72.0, -170.0, -50.0),
    'OSN_FIT_TOLERANCE': 0.15,
    'OSN_GOWALLA_FOLDER': None,
    'OSN_PRIM_CUTOFF': 2048,
    'OSN_THREADS': None,
    'OSN_TIE_TOLERANCE': 1e-12,
}


def get_setting(name: str) -> Any:
    """
    Fetch an `OSN_*` setting, falling back to its default.

        >>> get_setting('OSN_PRIM_CUTOFF')
        2048

    Args:
        name:
            Name of setting, eg. 'OSN_THREADS'

    Raises:
        ImproperlyConfigured:
            If name is not one of ours.

    Returns:
        Value from Django settings if present, otherwise our default.
    """
    if name not in DEFAULTS:
        raise ImproperlyConfigured(f"Unknown setting: {name!r}")
    if not settings.configured:
        return DEFAULTS[name]
    return getattr(settings, name, DEFAULTS[name])


def worker_count(threads: Optional[int] = None) -> int:
    """
    Size of worker pool to use.

    Precedence is the explicit argument (ie. the `--threads` flag), then the
    `OSN_THREADS` environment variable, then the `OSN_THREADS` setting, then
    the number of available processors.

        >>> worker_count(3)
        3

    Raises:
        ImproperlyConfigured:
            If the resulting value is not a positive integer.
    """
    value: Any = threads
    if value is None:
        value = os.environ.get('OSN_THREADS') or None
    if value is None:
        value = get_setting('OSN_THREADS')
    if value is None:
        value = os.cpu_count() or 1

    try:
        count = int(value)
    except (TypeError, ValueError):
        raise ImproperlyConfigured(f"Invalid thread count: {value!r}") from None
    if count < 1:
        raise ImproperlyConfigured(f"Thread count must be positive: {count!r}")
    return count
