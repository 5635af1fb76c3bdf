"""
Check-in datasets: parsing, user locations, and the two exponent fits.

Reads the plain-text formats of the SNAP location-based social network
dumps. The friendship file has one directed edge per line, two
whitespace-separated user ids; each undirected friendship appears in
both directions. The check-in file has tab-separated records of user,
timestamp, latitude, longitude and location id.

Distances here are great-circle kilometres on the Earth, never torus
distances.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .conf import get_setting
from .geometry import haversine_array, km_to_chord, unit_vectors
from .model import (
    form_social_graph,
    ModelConfig,
    node_rng,
    SocialGraph,
    STREAM_DEPLOYMENT,
    TorusDeployment,
)
from .utils.math import log_bin_edges


__all__ = (
    'BinnedPoint',
    'BoundingBox',
    'Checkin',
    'CheckinLog',
    'DatasetError',
    'estimate_user_location',
    'fit_degree_exponent',
    'fit_formation_exponent',
    'FitResult',
    'GeoUser',
    'locate_users',
    'MIN_BIN_DENOMINATOR',
    'MIN_FIT_POINTS',
    'parse_checkins',
    'parse_edges',
    'population_distance_experiment',
    'PopulationIndex',
    'synthesize_dataset',
    'synthetic_network',
    'write_checkins',
    'write_edges',
)


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Edge = Tuple[int, int]

MIN_FIT_POINTS = 10
MIN_BIN_DENOMINATOR = 30
NO_FRIENDS = np.zeros(0, dtype=np.int64)


class DatasetError(ValueError):
    pass


class BoundingBox(NamedTuple):
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    @classmethod
    def default(cls) -> 'BoundingBox':
        """
        Box from the `OSN_BOUNDING_BOX` setting.

            >>> BoundingBox.default()
            BoundingBox(lat_min=7.0, lat_max=72.0, lon_min=-170.0, lon_max=-50.0)
        """
        box = cls(*(float(v) for v in get_setting('OSN_BOUNDING_BOX')))
        box.check()
        return box

    @classmethod
    def synthetic(cls) -> 'BoundingBox':
        """
        Near-square box at low latitude, for synthetic users.

            >>> BoundingBox.synthetic()
            BoundingBox(lat_min=10.0, lat_max=20.0, lon_min=-100.0, lon_max=-90.0)
        """
        return cls(10.0, 20.0, -100.0, -90.0)

    def check(self) -> None:
        if not (-90 <= self.lat_min < self.lat_max <= 90):
            raise DatasetError(f"Invalid latitude range: {self.lat_min!r} to {self.lat_max!r}")
        if not (-180 <= self.lon_min < self.lon_max <= 180):
            raise DatasetError(f"Invalid longitude range: {self.lon_min!r} to {self.lon_max!r}")

    def contains(self, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
        """
        Boolean mask of points inside the box, edges included.

            >>> box = BoundingBox(7, 72, -170, -50)
            >>> box.contains(np.array([45.0, 80.0]), np.array([-100.0, -100.0])).tolist()
            [True, False]
        """
        lat, lon = np.asarray(lat), np.asarray(lon)
        return (
            (lat >= self.lat_min) & (lat <= self.lat_max)
            & (lon >= self.lon_min) & (lon <= self.lon_max)
        )

    def sample(self, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """
        Positions uniform in latitude and longitude.
        """
        lat = rng.uniform(self.lat_min, self.lat_max, size)
        lon = rng.uniform(self.lon_min, self.lon_max, size)
        return lat, lon


class Checkin(NamedTuple):
    user: int
    timestamp: str
    lat: float
    lon: float
    location: str


@dataclass
class CheckinLog:
    """
    Check-ins grouped by user, in file order.

    Attributes:
        checkins:
            Valid check-ins of each user.
        records:
            Number of records read, including skipped ones.
        skipped:
            Records dropped for an out-of-range latitude or longitude.
    """
    checkins: Dict[int, List[Checkin]]
    records: int = 0
    skipped: int = 0


@dataclass(frozen=True)
class GeoUser:
    user_id: int
    lat: float
    lon: float
    degree: int


@dataclass(frozen=True)
class FitResult:
    """
    Least-squares line through log-log points.

    Attributes:
        slope:
            Gradient. The exponent estimate is its negation.
        intercept:
            Value at X = 0.
        r_squared:
            Coefficient of determination.
        points:
            Number of points fitted.
        binning:
            How points were formed, eg. 'raw' or 'log-10/decade'.
    """
    slope: float
    intercept: float
    r_squared: float
    points: int
    binning: str

    @property
    def exponent(self) -> float:
        return -self.slope


@dataclass(frozen=True)
class BinnedPoint:
    """
    One logarithmic bin of the formation experiment.

    `x` is the mean of lg N over the bin's samples, `y` is lg of the
    friend ratio, or None where no sample was a friend.
    """
    x: float
    y: Optional[float]
    numerator: int
    denominator: int
    low: float
    high: float


########################################
# Parsing
########################################

def parse_edges(path: PathLike) -> List[Edge]:
    """
    Read friendship edges, dropping exact duplicates.

    Raises:
        DatasetError:
            If a line is not two integers, giving its line number.

    Returns:
        Edges in order of first appearance.
    """
    edges: List[Edge] = []
    seen = set()
    with open(path, 'rt', encoding='utf-8') as fp:
        for number, line in enumerate(fp, start=1):
            fields = line.split()
            if not fields:
                continue
            try:
                if len(fields) != 2:
                    raise ValueError(f"expected two ids, found {len(fields)} fields")
                edge = (int(fields[0]), int(fields[1]))
            except ValueError as e:
                raise DatasetError(f"{path}, line {number}: {e}") from None
            if edge not in seen:
                seen.add(edge)
                edges.append(edge)
    logger.info("Read %s edges from %s", len(edges), path)
    return edges


def write_edges(edges: Iterable[Edge], path: PathLike) -> Path:
    path = Path(path)
    with open(path, 'wt', encoding='utf-8') as fp:
        for u, v in edges:
            fp.write(f"{u}\t{v}\n")
    return path


def parse_checkins(path: PathLike) -> CheckinLog:
    """
    Read check-in records, skipping those with impossible coordinates.

    Raises:
        DatasetError:
            If a record is malformed, giving its line number.
    """
    log = CheckinLog(checkins={})
    with open(path, 'rt', encoding='utf-8') as fp:
        for number, line in enumerate(fp, start=1):
            line = line.rstrip('\r\n')
            if not line.strip():
                continue
            fields = line.split('\t')
            try:
                if len(fields) != 5:
                    raise ValueError(f"expected five fields, found {len(fields)}")
                user, timestamp, lat, lon, location = fields
                checkin = Checkin(int(user), timestamp, float(lat), float(lon), location)
            except ValueError as e:
                raise DatasetError(f"{path}, line {number}: {e}") from None

            log.records += 1
            if not (-90 <= checkin.lat <= 90 and -180 <= checkin.lon <= 180):
                log.skipped += 1
                continue
            log.checkins.setdefault(checkin.user, []).append(checkin)

    if log.skipped:
        logger.warning("Skipped %s of %s check-ins with invalid coordinates", log.skipped, log.records)
    logger.info("Read %s check-ins of %s users from %s", log.records, len(log.checkins), path)
    return log


def write_checkins(log: CheckinLog, path: PathLike) -> Path:
    path = Path(path)
    with open(path, 'wt', encoding='utf-8') as fp:
        for checkins in log.checkins.values():
            for c in checkins:
                fp.write(f"{c.user}\t{c.timestamp}\t{c.lat!r}\t{c.lon!r}\t{c.location}\n")
    return path


########################################
# Users
########################################

def estimate_user_location(checkins: Sequence[Checkin]) -> Tuple[float, float]:
    """
    Coordinate-wise median of a user's check-ins.

        >>> estimate_user_location([Checkin(1, '', 10.0, 20.0, 'a'), Checkin(1, '', 20.0, 40.0, 'b')])
        (15.0, 30.0)

    Raises:
        DatasetError:
            If there are no check-ins.
    """
    if not checkins:
        raise DatasetError("Cannot locate a user without check-ins")
    lat = np.median([c.lat for c in checkins])
    lon = np.median([c.lon for c in checkins])
    return float(lat), float(lon)


def _adjacency(edges: Iterable[Edge]) -> Dict[int, set]:
    adjacency: Dict[int, set] = {}
    for u, v in edges:
        if u != v:
            adjacency.setdefault(u, set()).add(v)
    return adjacency


def locate_users(
    log: CheckinLog,
    edges: Iterable[Edge],
    box: Optional[BoundingBox] = None,
) -> List[GeoUser]:
    """
    Every user with a check-in inside the box, with their friend count.

    Args:
        log:
            Parsed check-ins.
        edges:
            Parsed friendship edges.
        box:
            Users located outside are dropped. Defaults to `BoundingBox.default()`.

    Returns:
        Users in increasing id order. Degree counts all friends, located or not.
    """
    if box is None:
        box = BoundingBox.default()
    adjacency = _adjacency(edges)
    users = []
    for user_id in sorted(log.checkins):
        lat, lon = estimate_user_location(log.checkins[user_id])
        users.append(GeoUser(user_id, lat, lon, len(adjacency.get(user_id, ()))))

    lat = np.array([u.lat for u in users])
    lon = np.array([u.lon for u in users])
    inside = box.contains(lat, lon) if users else np.zeros(0, dtype=bool)
    located = [user for user, keep in zip(users, inside) if keep]
    logger.info("Located %s of %s users inside %s", len(located), len(users), box)
    return located


########################################
# Degree exponent
########################################

def _fit_line(x: np.ndarray, y: np.ndarray, binning: str) -> FitResult:
    if len(x) < MIN_FIT_POINTS:
        raise DatasetError(f"Need at least {MIN_FIT_POINTS} points to fit, found {len(x)}")
    result = stats.linregress(x, y)
    return FitResult(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue ** 2),
        points=len(x),
        binning=binning,
    )


def fit_degree_exponent(users: Sequence[GeoUser]) -> FitResult:
    """
    Fit `lg N(K)` against `lg K`, where `N(K)` counts users with `K` friends.

    This is not a fit over every `K` with `N(K) >= 1`. Only the contiguous
    run of degrees from one up to the first degree nobody has is fitted,
    when that run holds at least ten degrees, and the fit is labelled
    `raw-head`. Degrees past the first gap are single users scattered
    along the tail, all lying on the line `N = 1`, and would flatten the
    slope. When the run is shorter, every occupied degree is fitted
    instead, labelled `raw`, and a warning is logged.

    Raises:
        DatasetError:
            If fewer than ten distinct degrees are present.
    """
    degrees = np.array([u.degree for u in users], dtype=np.int64)
    degrees = degrees[degrees >= 1]
    if degrees.size == 0:
        raise DatasetError("No users with friends")
    counts = np.bincount(degrees)
    empty = np.flatnonzero(counts[1:] == 0)
    stop = int(empty[0]) + 1 if empty.size else len(counts)
    if stop - 1 >= MIN_FIT_POINTS:
        k, binning = np.arange(1, stop), 'raw-head'
    else:
        k, binning = np.flatnonzero(counts), 'raw'
        logger.warning("Degree counts have a gap at %s, fitting all %s degrees", stop, len(k))
    fit = _fit_line(np.log10(k), np.log10(counts[k]), binning)
    logger.info("Degree exponent %.4f from %s degrees (r² %.3f)", fit.exponent, fit.points, fit.r_squared)
    return fit


########################################
# Formation exponent
########################################

class PopulationIndex:
    """
    Counting index over user locations on the sphere.

    Great-circle distance is monotonic in chord length, so a ball of
    `d` kilometres is a chord ball on the unit sphere.
    """
    def __init__(self, lat: np.ndarray, lon: np.ndarray):
        self.lat = np.asarray(lat, dtype=np.float64)
        self.lon = np.asarray(lon, dtype=np.float64)
        self.vectors = unit_vectors(self.lat, self.lon)
        self.tree = cKDTree(self.vectors)

    def __len__(self) -> int:
        return len(self.lat)

    def count_within(self, user: int, radius_km: np.ndarray) -> np.ndarray:
        """
        Users other than `user` within each radius of it, boundary included.
        """
        radius = np.atleast_1d(np.asarray(radius_km, dtype=np.float64))
        centres = np.broadcast_to(self.vectors[user], (len(radius), 3))
        counts = self.tree.query_ball_point(centres, km_to_chord(radius), return_length=True)
        return np.asarray(counts, dtype=np.int64) - 1

    def nearest(self, lat: np.ndarray, lon: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nearest user to each position, and the distance to it in kilometres.
        """
        _, index = self.tree.query(unit_vectors(lat, lon))
        index = np.asarray(index, dtype=np.int64)
        distance = haversine_array(lat, lon, self.lat[index], self.lon[index])
        return index, distance


def _accumulate(
    users: np.ndarray,
    index: PopulationIndex,
    friends: Dict[int, np.ndarray],
    lat: np.ndarray,
    lon: np.ndarray,
    nearest: np.ndarray,
    edges: np.ndarray,
) -> np.ndarray:
    """
    Per-bin sums of (friend indicator, samples, lg N) over given users.
    """
    bins = len(edges) - 1
    totals = np.zeros((3, bins), dtype=np.float64)
    for user in users:
        user = int(user)
        distance = haversine_array(index.lat[user], index.lon[user], lat, lon)
        population = index.count_within(user, distance)
        keep = population >= 1
        if not keep.any():
            continue
        population = population[keep]
        bin_of = np.clip(np.searchsorted(edges, population, side='right') - 1, 0, bins - 1)
        mask = np.zeros(len(index), dtype=bool)
        mask[friends.get(user, NO_FRIENDS)] = True
        hits = mask[nearest[keep]]
        totals[0] += np.bincount(bin_of, weights=hits, minlength=bins)
        totals[1] += np.bincount(bin_of, minlength=bins)
        totals[2] += np.bincount(bin_of, weights=np.log10(population), minlength=bins)
    return totals


def population_distance_experiment(
    users: Sequence[GeoUser],
    edges: Iterable[Edge],
    sample_count: int,
    d_f_km: float,
    box: Optional[BoundingBox] = None,
    subsample: Optional[int] = None,
    seed: int = 0,
    workers: int = 1,
    per_decade: int = 10,
) -> List[BinnedPoint]:
    """
    Probability that the user nearest a random position is a friend,
    against the number of users closer than that position.

    For each retained position `p` and sampled user `u`, `N(u, p)` counts
    the other users within `d(u, p)` of `u`. Samples with `N = 0` carry no
    information and are skipped.

    Args:
        users:
            Located users.
        edges:
            Friendship edges; those to unlocated users are ignored.
        sample_count:
            Positions drawn uniformly over the box.
        d_f_km:
            Positions farther than this from every user are discarded.
        box:
            Where positions are drawn. Defaults to `BoundingBox.default()`.
        subsample:
            Number of users `u` to use, or None for all.
        seed:
            Seed for positions and the user subsample.
        workers:
            Size of process pool. Output does not depend on it.
        per_decade:
            Logarithmic bins per decade of `N`.

    Raises:
        DatasetError:
            If there are too few users, or no positions were retained.

    Returns:
        Every bin with at least one sample, by increasing `N`.
    """
    if box is None:
        box = BoundingBox.default()
    if len(users) < 2:
        raise DatasetError(f"Need at least two located users, found {len(users)}")
    rng = np.random.default_rng(seed)

    ids = {user.user_id: i for i, user in enumerate(users)}
    index = PopulationIndex(
        np.array([u.lat for u in users]), np.array([u.lon for u in users]),
    )
    adjacency: Dict[int, List[int]] = {}
    for a, b in edges:
        if a in ids and b in ids and a != b:
            adjacency.setdefault(ids[a], []).append(ids[b])
    friends = {user: np.unique(others) for user, others in adjacency.items()}

    lat, lon = box.sample(int(sample_count), rng)
    nearest, distance = index.nearest(lat, lon)
    retained = distance <= d_f_km
    lat, lon, nearest = lat[retained], lon[retained], nearest[retained]
    if not retained.any():
        raise DatasetError(f"No sampled position lies within {d_f_km} km of a user")

    chosen = np.arange(len(users))
    if subsample is not None and subsample < len(users):
        chosen = np.sort(rng.choice(len(users), size=int(subsample), replace=False))
    logger.info(
        "Formation experiment: %s of %s positions retained, %s users sampled",
        len(lat), sample_count, len(chosen),
    )

    edges_n = log_bin_edges(1.0, float(len(users)), per_decade)
    parts = [part for part in np.array_split(chosen, max(1, int(workers) * 4)) if len(part)]
    if workers > 1 and len(parts) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as executor:
            results = list(executor.map(
                _accumulate, parts, repeat(index), repeat(friends),
                repeat(lat), repeat(lon), repeat(nearest), repeat(edges_n),
            ))
    else:
        results = [_accumulate(part, index, friends, lat, lon, nearest, edges_n) for part in parts]
    numerator, denominator, log_sum = np.sum(results, axis=0)

    points = []
    for i in np.flatnonzero(denominator > 0):
        ratio = numerator[i] / denominator[i]
        points.append(BinnedPoint(
            x=float(log_sum[i] / denominator[i]),
            y=float(math.log10(ratio)) if ratio > 0 else None,
            numerator=int(round(numerator[i])),
            denominator=int(denominator[i]),
            low=float(edges_n[i]),
            high=float(edges_n[i + 1]),
        ))
    return points


def fit_formation_exponent(
    points: Sequence[Union[BinnedPoint, Tuple[float, float]]],
    min_denominator: int = MIN_BIN_DENOMINATOR,
) -> FitResult:
    """
    Fit a line through the binned formation points.

    Bins with fewer than `min_denominator` samples, or no friends at all,
    are left out. Plain `(x, y)` pairs are always kept.

    Raises:
        DatasetError:
            If fewer than ten bins remain.
    """
    x, y = [], []
    for point in points:
        if isinstance(point, BinnedPoint):
            if point.y is None or point.denominator < min_denominator:
                continue
            x.append(point.x)
            y.append(point.y)
        else:
            x.append(float(point[0]))
            y.append(float(point[1]))
    fit = _fit_line(np.array(x), np.array(y), f"log/min-{min_denominator}")
    logger.info("Formation exponent %.4f from %s bins (r² %.3f)", fit.exponent, fit.points, fit.r_squared)
    return fit


########################################
# Synthetic data
########################################

def synthetic_network(
    n: int,
    gamma: float,
    beta: float,
    seed: int = 0,
) -> Tuple[TorusDeployment, SocialGraph]:
    """
    Social graph of a torus holding `4n` nodes, `n` of them in a central window.

    Nodes `0` to `n - 1` lie uniformly in the window of half the torus
    side, the rest uniformly outside it, so density is one throughout.
    Friendships come from `form_social_graph()`. A friendship between two
    window nodes never wraps around the torus, so their plain coordinate
    difference is the model's distance.

    Raises:
        DatasetError:
            If `n` is less than two.
    """
    if int(n) != n or n < 2:
        raise DatasetError(f"Need at least two users, found n={n!r}")
    n = int(n)
    side = 2.0 * math.sqrt(n)
    rng = node_rng(seed, STREAM_DEPLOYMENT)
    inside = side / 4.0 + rng.uniform(0.0, side / 2.0, size=(n, 2))
    outside = np.zeros((0, 2))
    while len(outside) < 3 * n:
        points = rng.uniform(0.0, side, size=(4 * n, 2))
        away = np.any((points < side / 4.0) | (points >= 3.0 * side / 4.0), axis=1)
        outside = np.concatenate([outside, points[away]])
    deployment = TorusDeployment.from_positions(np.concatenate([inside, outside[:3 * n]]), side)
    config = ModelConfig(n=4 * n, gamma=float(gamma), beta=float(beta), seed=seed)
    return deployment, form_social_graph(deployment, config)


def synthesize_dataset(
    folder: PathLike,
    n: int,
    gamma: float,
    beta: float,
    box: Optional[BoundingBox] = None,
    seed: int = 0,
    symmetric: bool = False,
) -> Tuple[Path, Path]:
    """
    Write a dataset in the check-in formats with known exponents.

    The window users of `synthetic_network()` are scaled linearly onto the
    box, which defaults to `BoundingBox.synthetic()`. Edges are written
    from each window user to all of its friends. Friends outside the
    window have no check-ins, so are never located, but still count
    towards degree. Only the chosen direction is written, so out-degree
    follows the friend-count law, unless `symmetric` is set. Every user
    has one check-in, exactly at their location.

    Run the formation experiment over the same box: positions outside it
    would map onto users whose friends there went unwritten.

    Returns:
        Paths of the edges and check-ins files.
    """
    if box is None:
        box = BoundingBox.synthetic()
    box.check()
    deployment, graph = synthetic_network(n, gamma, beta, seed)
    side = deployment.side
    window = (deployment.positions[:n] - side / 4.0) / (side / 2.0)
    lat = box.lat_min + window[:, 1] * (box.lat_max - box.lat_min)
    lon = box.lon_min + window[:, 0] * (box.lon_max - box.lon_min)

    pairs = set()
    for user in range(n):
        for friend in graph.friends[user].tolist():
            pairs.add((user, friend))
            if symmetric:
                pairs.add((friend, user))

    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    edges_path = write_edges(sorted(pairs), folder / 'edges.txt')
    log = CheckinLog(checkins={
        user: [Checkin(user, '2010-01-01T00:00:00Z', float(lat[user]), float(lon[user]), str(user))]
        for user in range(n)
    })
    checkins_path = write_checkins(log, folder / 'checkins.txt')
    logger.info("Synthesized %s users and %s edges in %s", n, len(pairs), folder)
    return edges_path, checkins_path
