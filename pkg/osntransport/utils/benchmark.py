from contextlib import contextmanager
from functools import wraps
import logging
import time
from typing import Any


__all__ = (
    'benchmark',
    'Timer',
)


logger = logging.getLogger(__name__)


class Timer:
    """
    Wall-clock seconds taken by a `benchmark()` block, set when it exits.
    """
    seconds: float = 0.0


def benchmark(obj: Any) -> Any:
    """
    Benchmarking tool that can be used as a decorator or a context manager.

    As a context manager it yields a `Timer`, so the caller can keep the
    measurement as well as having it logged:

        with benchmark('trial') as timer:
            run()
        print(timer.seconds)

    Credit for the heavy lifting to Dave Beazley:
    http://dabeaz.blogspot.co.nz/2010/02/function-that-works-as-context-manager.html
    """
    @contextmanager
    def timethis() -> Any:
        timer = Timer()
        start = time.perf_counter()
        try:
            yield timer
        finally:
            timer.seconds = time.perf_counter() - start
            label = obj.__name__ + '()' if hasattr(obj, '__name__') else str(obj)
            logger.info("%s: %0.3fms", label, timer.seconds * 1000)

    # Callable?
    if hasattr(obj, '__call__'):
        @wraps(obj)
        def timed(*args: Any, **kwargs: Any) -> Any:
            with timethis():
                return obj(*args, **kwargs)
        return timed
    else:
        return timethis()
