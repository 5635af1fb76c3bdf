import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats


__all__ = (
    'confidence_interval',
    'log_bin_edges',
    'mean_stderr',
    'MeanStderr',
    'StatisticsError',
)


class StatisticsError(ValueError):
    pass


class MeanStderr(NamedTuple):
    mean: float
    stderr: float
    count: int


def mean_stderr(data: Sequence[float]) -> MeanStderr:
    """
    Sample mean and its standard error.

        >>> mean_stderr([1.0, 2.0, 3.0])
        MeanStderr(mean=2.0, stderr=0.5773502691896258, count=3)
        >>> mean_stderr([4.0])
        MeanStderr(mean=4.0, stderr=0.0, count=1)

    Raises:
        StatisticsError:
            If there is no data.

    Returns:
        Named three-tuple. The error of a single value is zero.
    """
    values = np.asarray(data, dtype=np.float64)
    if values.size == 0:
        raise StatisticsError("Mean of empty data")
    mean = math.fsum(values.tolist()) / values.size
    if values.size == 1:
        return MeanStderr(mean, 0.0, 1)
    stderr = float(np.std(values, ddof=1)) / math.sqrt(values.size)
    return MeanStderr(mean, stderr, int(values.size))


def confidence_interval(estimate: float, stderr: float, dof: int, confidence: float = 0.95) -> tuple:
    """
    Two-sided Student-t interval around an estimate.

        >>> confidence_interval(1.0, 0.0, 5)
        (1.0, 1.0)

    Raises:
        StatisticsError:
            If there are no degrees of freedom, or confidence is not in (0, 1).
    """
    if dof < 1:
        raise StatisticsError(f"Need at least one degree of freedom, found: {dof!r}")
    if not 0.0 < confidence < 1.0:
        raise StatisticsError(f"Confidence must lie strictly between 0 and 1: {confidence!r}")
    half = float(stats.t.ppf(0.5 + confidence / 2.0, dof)) * stderr
    return (estimate - half, estimate + half)


def log_bin_edges(low: float, high: float, per_decade: int = 5) -> np.ndarray:
    """
    Logarithmically spaced bin edges covering `[low, high]`.

        >>> log_bin_edges(1, 100, per_decade=1).tolist()
        [1.0, 10.0, 100.0]

    Raises:
        StatisticsError:
            If the range is empty or not positive.
    """
    if not (0 < low < high):
        raise StatisticsError(f"Need 0 < low < high, found: {low!r}, {high!r}")
    if per_decade < 1:
        raise StatisticsError(f"Need at least one bin per decade: {per_decade!r}")
    decades = math.log10(high) - math.log10(low)
    count = max(1, math.ceil(decades * per_decade - 1e-9))
    return np.logspace(math.log10(low), math.log10(high), count + 1)
