"""
Sweeps over network size, and scaling-exponent fits.

A sweep runs independent trials for each size `n` and replicate, measures
the chosen quantity in each, then fits `log(value) = a·log(n) + b` (with an
optional `c·log(log(n))` term) by least squares. The fitted exponent passes
if the predicted polynomial exponent lies inside its confidence interval,
widened by a tolerance.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import repeat
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .complexity import (
    anchor_offset_sum, AsymptoticOrder, MEASUREMENTS, predicted_order, PredictorError,
    SteinerRatioBound, total_transport_complexity, TransportComplexity,
)
from .conf import get_setting, worker_count
from .geometry import GeometryError
from .model import (
    form_social_graph, ModelConfig, ModelError, node_rng, sample_deployment,
    SocialGraph, STREAM_DEPLOYMENT, TorusDeployment,
)
from .serialisers import dump_json, write_csv
from .sessions import (
    DisseminationSession, gen_broadcast_sessions, gen_multicast_sessions, PATTERNS,
    SessionError,
)
from .utils.benchmark import benchmark
from .utils.math import confidence_interval, mean_stderr, StatisticsError


__all__ = (
    'fit_scaling_exponent',
    'judge',
    'run_sweep',
    'run_trial',
    'ScalingFitReport',
    'simulate',
    'Simulation',
    'SweepError',
    'SweepPlan',
    'SweepResult',
    'trial_seed',
    'TrialRecord',
    'write_sweep',
)


logger = logging.getLogger(__name__)

TRIAL_FIELDS = ('n', 'replicate', 'seed', 'measurement', 'value', 'seconds')
SUMMARY_FIELDS = ('n', 'mean', 'stderr', 'fitted')
MIN_LADDER = 4
MIN_REPLICATES = 3

# Failures of a single trial, reported with its size and seed
TRIAL_ERRORS = (GeometryError, ModelError, PredictorError, SessionError, StatisticsError)


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepPlan:
    """
    What to simulate, at which sizes, and what to fit.
    """
    n_ladder: Tuple[int, ...]
    gamma: float
    beta: float
    pattern: str = 'broadcast'
    phi: Optional[float] = None
    replicates: int = MIN_REPLICATES
    measurement: str = 'total-load'
    base_seed: int = 0
    fit_log_term: bool = False
    tolerance: Optional[float] = None
    confidence: float = 0.95

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise SweepError(f"Unknown dissemination pattern: {self.pattern!r}")
        if self.pattern == 'multicast' and self.phi is None:
            raise SweepError("Multicast sweep needs phi")
        if self.measurement not in MEASUREMENTS:
            raise SweepError(f"Unknown measurement: {self.measurement!r}")
        ladder = list(self.n_ladder)
        if len(ladder) < MIN_LADDER:
            raise SweepError(f"Ladder needs at least {MIN_LADDER} sizes, found: {ladder!r}")
        if ladder[0] < 2 or any(a >= b for a, b in zip(ladder, ladder[1:])):
            raise SweepError(f"Ladder must increase strictly from at least two: {ladder!r}")
        if self.replicates < MIN_REPLICATES:
            raise SweepError(
                f"Need at least {MIN_REPLICATES} replicates, found: {self.replicates!r}"
            )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'SweepPlan':
        values = dict(data)
        values['n_ladder'] = tuple(int(n) for n in values['n_ladder'])
        return cls(**values)

    def trials(self) -> List[Tuple[int, int, int]]:
        """
        `(n, replicate, seed)` for every trial, smallest networks first.
        """
        return [
            (n, replicate, trial_seed(self.base_seed, n, replicate))
            for n in self.n_ladder
            for replicate in range(self.replicates)
        ]


@dataclass(frozen=True)
class TrialRecord:
    n: int
    replicate: int
    seed: int
    measurement: str
    value: float
    seconds: float


def trial_seed(base_seed: int, n: int, replicate: int) -> int:
    """
    Seed of one trial, independent of every other trial's.

        >>> trial_seed(0, 100, 0) == trial_seed(0, 100, 0)
        True
        >>> trial_seed(0, 100, 0) == trial_seed(0, 100, 1)
        False
    """
    sequence = np.random.SeedSequence([int(base_seed), int(n), int(replicate)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Simulation:
    """
    One network, its sessions, and everything measured about them.

    Attributes:
        config:
            Parameters the network was built from.
        deployment, graph, sessions:
            What was built.
        complexity:
            Total load and its breakdown.
        values:
            Every measurement in `MEASUREMENTS`, by name.
        diagnostics:
            Quantities with no prediction of their own: the Steiner lower
            bound on the total load and the mean anchor offset.
        seconds:
            Wall time of the whole run.
    """
    config: ModelConfig
    pattern: str
    deployment: TorusDeployment
    graph: SocialGraph
    sessions: Tuple[DisseminationSession, ...]
    complexity: TransportComplexity
    values: Dict[str, float]
    diagnostics: Dict[str, float]
    seconds: float


def simulate(
    n: int,
    gamma: float,
    beta: float,
    pattern: str = 'broadcast',
    phi: Optional[float] = None,
    seed: int = 0,
    workers: int = 1,
) -> Simulation:
    """
    Build one network from a single seed and measure it.

    Raises:
        SweepError:
            If a multicast run is missing `phi`.
        ModelError, SessionError:
            From building the network.
    """
    if pattern not in PATTERNS:
        raise SweepError(f"Unknown dissemination pattern: {pattern!r}")
    if pattern == 'multicast' and phi is None:
        raise SweepError("Multicast trial needs phi")
    config = ModelConfig(n=n, gamma=gamma, beta=beta, phi=phi or 0.0, seed=seed)
    logger.info("Simulating n=%s seed=%s (%s)", n, seed, pattern)

    with benchmark(f"Trial n={n} seed={seed}") as timer:
        deployment = sample_deployment(n, node_rng(seed, STREAM_DEPLOYMENT))
        graph = form_social_graph(deployment, config, workers)
        if pattern == 'multicast':
            sessions = gen_multicast_sessions(graph, phi, seed)
        else:
            sessions = gen_broadcast_sessions(graph)
        complexity = total_transport_complexity(sessions, deployment, workers)
        values = {
            'total-load': complexity.total,
            'anchor-emst-sum': complexity.anchor_total,
            'degree-sum': float(graph.degrees.sum()),
            'destination-sum': float(sum(len(s.anchor_subset) for s in sessions)),
            'mean-anchor-distance': float(graph.anchor_distances(deployment).mean()),
            'anchor-offset-sum': anchor_offset_sum(sessions, deployment),
        }
        diagnostics = {
            'steiner-lower-bound': SteinerRatioBound().steiner_lower_bound(complexity.total),
            'mean-anchor-offset': float(graph.anchor_offsets(deployment).mean()),
        }

    return Simulation(
        config=config,
        pattern=pattern,
        deployment=deployment,
        graph=graph,
        sessions=tuple(sessions),
        complexity=complexity,
        values=values,
        diagnostics=diagnostics,
        seconds=timer.seconds,
    )


def run_trial(
    n: int,
    gamma: float,
    beta: float,
    pattern: str = 'broadcast',
    phi: Optional[float] = None,
    seed: int = 0,
    workers: int = 1,
    replicate: int = 0,
) -> List[TrialRecord]:
    """
    Build one network and measure everything about it.

    Returns:
        One record per measurement, all sharing the trial's wall time.
    """
    result = simulate(n, gamma, beta, pattern, phi, seed, workers)
    return [
        TrialRecord(n, replicate, seed, measurement, result.values[measurement], result.seconds)
        for measurement in MEASUREMENTS
    ]


def judge(ci_low: float, ci_high: float, predicted: float, tolerance: float) -> bool:
    """
    Does the predicted exponent lie in the widened confidence interval?

        >>> judge(0.95, 1.05, 1.0, 0.0)
        True
        >>> judge(1.20, 1.30, 1.0, 0.15)
        False
    """
    return ci_low - tolerance <= predicted <= ci_high + tolerance


@dataclass(frozen=True)
class ScalingFitReport:
    """
    Result of fitting a power law to measurements against `n`.

    Attributes:
        exponent:
            Fitted polynomial exponent `a`.
        intercept:
            Fitted `b`, on natural-log scale.
        log_exponent:
            Fitted `c` of the `log(log(n))` term, or None if not fitted.
        stderr:
            Standard error of `a`.
        ci_low, ci_high:
            Confidence interval of `a`.
        confidence:
            Level of that interval.
        points:
            Number of measurements fitted.
        predicted:
            Predicted order, if any.
        source:
            Where the prediction came from.
        tolerance:
            Slack allowed either side of the interval.
        verdict:
            Whether the prediction lies inside, or None without one.
    """
    exponent: float
    intercept: float
    log_exponent: Optional[float]
    stderr: float
    ci_low: float
    ci_high: float
    confidence: float
    points: int
    predicted: Optional[AsymptoticOrder] = None
    source: Optional[str] = None
    tolerance: float = 0.0
    verdict: Optional[bool] = field(default=None)

    def judge(self) -> Optional[bool]:
        if self.predicted is None:
            return None
        return judge(self.ci_low, self.ci_high, float(self.predicted.poly), self.tolerance)

    def fitted(self, n: float) -> float:
        """
        Value of the fitted curve at `n`.
        """
        value = self.intercept + self.exponent * math.log(n)
        if self.log_exponent is not None:
            value += self.log_exponent * math.log(math.log(n))
        return math.exp(value)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['predicted'] = None if self.predicted is None else {
            **self.predicted.as_dict(),
            'source': self.source,
        }
        data.pop('source')
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ScalingFitReport':
        """
        Rebuild a stored report. Its verdict is recomputed, not trusted.
        """
        values = dict(data)
        predicted = values.pop('predicted', None)
        values.pop('verdict', None)
        source = None
        if predicted is not None:
            source = predicted.get('source')
            predicted = AsymptoticOrder.of(predicted['poly'], predicted.get('logpow', 0))
        report = cls(**values, predicted=predicted, source=source)
        return replace(report, verdict=report.judge())


def fit_scaling_exponent(
    points: Sequence[Tuple[float, float]],
    fit_log_term: bool = False,
    predicted: Optional[AsymptoticOrder] = None,
    tolerance: Optional[float] = None,
    confidence: float = 0.95,
    source: Optional[str] = None,
) -> ScalingFitReport:
    """
    Least-squares fit of `log(value)` against `log(n)`.

        >>> report = fit_scaling_exponent([(n, n * n) for n in (10, 100, 1000, 10_000)])
        >>> round(report.exponent, 9)
        2.0

    Args:
        points:
            At least four `(n, value)` pairs, values positive.
        fit_log_term:
            Also fit a `log(log(n))` term.
        predicted:
            Optional order to judge the fit against.
        tolerance:
            Slack either side of the interval. Defaults to the setting
            `OSN_FIT_TOLERANCE`.
        confidence:
            Level of the Student-t interval on the exponent.
        source:
            Name of the table the prediction came from, for the report.

    Raises:
        StatisticsError:
            If values are not positive, or there are too few points or
            distinct sizes to estimate every term and its error.
    """
    if tolerance is None:
        tolerance = get_setting('OSN_FIT_TOLERANCE')
    array = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    sizes, values = array[:, 0], array[:, 1]
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise StatisticsError("Can only fit positive, finite measurements")
    if len(values) < MIN_LADDER:
        raise StatisticsError(f"Need at least {MIN_LADDER} points to fit, found {len(values)}")
    if len(np.unique(sizes)) < 2 or np.any(sizes < 2):
        raise StatisticsError("Need at least two distinct sizes, each at least two")

    log_n = np.log(sizes)
    columns = [log_n, np.ones_like(log_n)]
    if fit_log_term:
        if len(np.unique(sizes)) < 3:
            raise StatisticsError("Fitting a log term needs at least three distinct sizes")
        columns.append(np.log(log_n))
    design = np.column_stack(columns)
    target = np.log(values)

    coefficients, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    dof = len(target) - design.shape[1]
    if rank < design.shape[1]:
        raise StatisticsError("Sizes do not determine every fitted term")

    residuals = target - design @ coefficients
    variance = float(residuals @ residuals) / dof
    covariance = variance * np.linalg.inv(design.T @ design)
    stderr = math.sqrt(max(float(covariance[0, 0]), 0.0))
    ci_low, ci_high = confidence_interval(float(coefficients[0]), stderr, dof, confidence)

    report = ScalingFitReport(
        exponent=float(coefficients[0]),
        intercept=float(coefficients[1]),
        log_exponent=float(coefficients[2]) if fit_log_term else None,
        stderr=stderr,
        ci_low=ci_low,
        ci_high=ci_high,
        confidence=confidence,
        points=len(target),
        predicted=predicted,
        source=source,
        tolerance=float(tolerance),
    )
    report = replace(report, verdict=report.judge())
    logger.info(
        "Fitted exponent %.4f [%.4f, %.4f], predicted %s: %s",
        report.exponent, report.ci_low, report.ci_high, predicted, report.verdict,
    )
    return report


@dataclass(frozen=True)
class SweepResult:
    plan: SweepPlan
    records: Tuple[TrialRecord, ...]
    means: Tuple[Tuple[int, float, float], ...]
    report: ScalingFitReport

    def summary(self) -> List[Dict[str, float]]:
        """
        Plot-ready rows: mean, standard error and fitted value per size.
        """
        return [
            {'n': n, 'mean': mean, 'stderr': stderr, 'fitted': self.report.fitted(n)}
            for n, mean, stderr in self.means
        ]


def _trial_job(trial: Tuple[int, int, int], plan: SweepPlan, workers: int) -> List[TrialRecord]:
    n, replicate, seed = trial
    try:
        return run_trial(
            n, plan.gamma, plan.beta, plan.pattern, plan.phi,
            seed=seed, workers=workers, replicate=replicate,
        )
    except TRIAL_ERRORS as e:
        raise SweepError(f"Trial n={n} replicate={replicate} seed={seed} failed: {e}") from e


def run_sweep(
    plan: SweepPlan,
    threads: Optional[int] = None,
    output_folder: Optional[Path] = None,
) -> SweepResult:
    """
    Run every trial of a plan, then fit and judge the scaling exponent.

    Trials run in a process pool. A single trial instead gets the whole
    pool to itself. The fit is through the replicate mean at each size.

    Args:
        plan:
            Sweep to run.
        threads:
            Worker count, see `conf.worker_count()`.
        output_folder:
            If given, write `trials.csv`, `summary.csv` and `report.json`.

    Raises:
        SweepError:
            If a trial fails, or the means cannot be fitted.

    Returns:
        Every trial record, the means, and the fit report.
    """
    workers = worker_count(threads)
    trials = plan.trials()
    logger.info("Sweep of %s trials on %s workers", len(trials), workers)

    if workers > 1 and len(trials) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(_trial_job, trials, repeat(plan), repeat(1)))
    else:
        parts = [_trial_job(trial, plan, workers) for trial in trials]
    records = tuple(record for part in parts for record in part)

    means = []
    for n in plan.n_ladder:
        values = [r.value for r in records if r.n == n and r.measurement == plan.measurement]
        summary = mean_stderr(values)
        means.append((n, summary.mean, summary.stderr))

    predicted, source = predicted_order(plan.measurement, plan.pattern, plan.gamma, plan.beta, plan.phi)
    try:
        report = fit_scaling_exponent(
            [(n, mean) for n, mean, _ in means],
            fit_log_term=plan.fit_log_term,
            predicted=predicted,
            tolerance=plan.tolerance,
            confidence=plan.confidence,
            source=source,
        )
    except StatisticsError as e:
        raise SweepError(f"Could not fit {plan.measurement}: {e}") from e

    result = SweepResult(plan=plan, records=records, means=tuple(means), report=report)
    if output_folder is not None:
        write_sweep(result, output_folder)
    return result


def write_sweep(result: SweepResult, folder: Path) -> None:
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    write_csv(folder / 'trials.csv', TRIAL_FIELDS, (asdict(r) for r in result.records))
    write_csv(folder / 'summary.csv', SUMMARY_FIELDS, result.summary())
    dump_json(
        {'plan': asdict(result.plan), 'fit': result.report.as_dict(), 'means': result.summary()},
        folder / 'report.json',
    )
