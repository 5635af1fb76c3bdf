"""
Node deployment, friendship degrees, anchor points and social-graph formation.

Every node draws from its own random stream, rooted at the run's single
seed, so a graph is the same whether it is built by one worker or many.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import repeat
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .geometry import (
    as_points, ball_areas, ball_radii, TorusIndex, TorusPoint,
    torus_distances, wrap,
)


__all__ = (
    'anchor_radial_cdf',
    'form_social_graph',
    'ModelConfig',
    'ModelError',
    'node_rng',
    'normalizer_phi',
    'sample_anchor',
    'sample_anchors',
    'sample_degree',
    'sample_deployment',
    'SocialGraph',
    'TorusDeployment',
    'zipf_pmf',
    'zipf_sampler',
    'ZipfSampler',
)


logger = logging.getLogger(__name__)

# Random substreams
STREAM_DEPLOYMENT = 0
STREAM_FORMATION = 1
STREAM_MULTICAST = 2

MAX_RESAMPLE_ROUNDS = 10_000
SEED_LIMIT = 2 ** 64


class ModelError(ValueError):
    pass


def _check_exponent(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value >= 0):
        raise ModelError(f"Exponent {name} must be finite and non-negative, found: {value!r}")
    return value


@dataclass(frozen=True)
class ModelConfig:
    """
    Parameters of one network instance.

    Attributes:
        n:
            Number of users, at least two.
        gamma:
            Exponent of the friendship-degree law.
        beta:
            Exponent of the friendship-formation (population-distance) law.
        phi:
            Exponent of the dissemination pattern, ie. multicast destination
            counts. Unused for broadcast.
        seed:
            Root of every random stream, from 0 to 2⁶⁴ - 1.
    """
    n: int
    gamma: float
    beta: float
    phi: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ModelError(f"Need at least two users, found n={self.n!r}")
        for name in ('gamma', 'beta', 'phi'):
            _check_exponent(name, getattr(self, name))
        if int(self.seed) != self.seed or not 0 <= self.seed < SEED_LIMIT:
            raise ModelError(f"Seed must be a 64-bit unsigned integer, found: {self.seed!r}")

    @property
    def side(self) -> float:
        return math.sqrt(self.n)


def node_rng(seed: int, stream: int, node: Optional[int] = None) -> np.random.Generator:
    """
    Independent generator for one stream, and optionally one node.

        >>> a = node_rng(42, STREAM_FORMATION, 7).random()
        >>> b = node_rng(42, STREAM_FORMATION, 7).random()
        >>> a == b
        True

    """
    entropy = [int(seed), int(stream)]
    if node is not None:
        entropy.append(int(node))
    return np.random.default_rng(entropy)


@dataclass(frozen=True, eq=False)
class TorusDeployment:
    """
    Node positions on a √n × √n torus, with a spatial index.
    """
    side: float
    positions: np.ndarray
    index: TorusIndex

    @property
    def n(self) -> int:
        return len(self.positions)

    @classmethod
    def from_positions(cls, positions: ArrayLike, side: Optional[float] = None) -> 'TorusDeployment':
        array = np.asarray(positions, dtype=np.float64)
        if side is None:
            side = math.sqrt(len(array))
        array = as_points(array, side)
        if len(array) < 2:
            raise ModelError(f"Need at least two users, found {len(array)}")
        return cls(side=side, positions=array, index=TorusIndex(array, side))


def sample_deployment(n: int, rng: np.random.Generator) -> TorusDeployment:
    """
    Place `n` nodes independently and uniformly at random on the torus.

    Raises:
        ModelError:
            If `n` is less than two.
    """
    if int(n) != n or n < 2:
        raise ModelError(f"Need at least two users, found n={n!r}")
    side = math.sqrt(n)
    positions = wrap(rng.uniform(0.0, side, size=(int(n), 2)), side)
    return TorusDeployment.from_positions(positions, side)


class ZipfSampler:
    """
    Zipf law on {1, ..., support}, sampled by binary search of its CDF.

    Also draws from the same law conditioned on {1, ..., limit}, which is
    how multicast destination counts are drawn for a node with `limit`
    friends.
    """
    def __init__(self, support: int, exponent: float):
        if int(support) != support or support < 1:
            raise ModelError(f"Zipf support must be a positive integer, found: {support!r}")
        self.support = int(support)
        self.exponent = _check_exponent('exponent', exponent)
        values = np.arange(1, self.support + 1, dtype=np.float64)
        self.weights = values ** -self.exponent
        self.cumulative = np.cumsum(self.weights)
        self.cdf = self.cumulative / self.cumulative[-1]

    def pmf(self) -> np.ndarray:
        return self.weights / math.fsum(self.weights.tolist())

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> Union[int, np.ndarray]:
        values = np.searchsorted(self.cdf, rng.random(size), side='right') + 1
        values = np.minimum(values, self.support)
        return int(values) if size is None else values

    def sample_below(self, limit: int, rng: np.random.Generator) -> int:
        """
        Draw from the law restricted to {1, ..., limit}.
        """
        if int(limit) != limit or not 1 <= limit <= self.support:
            raise ModelError(f"Limit out of range [1, {self.support}]: {limit!r}")
        if limit == 1:
            return 1
        target = rng.random() * self.cumulative[limit - 1]
        value = int(np.searchsorted(self.cumulative[:limit], target, side='right')) + 1
        return min(value, int(limit))


@lru_cache(maxsize=32)
def zipf_sampler(support: int, exponent: float) -> ZipfSampler:
    return ZipfSampler(support, exponent)


@lru_cache(maxsize=256)
def _zipf_normaliser(support: int, gamma: float) -> float:
    values = np.arange(1, support + 1, dtype=np.float64)
    return math.fsum((values ** -gamma).tolist())


def zipf_pmf(l: int, n: int, gamma: float) -> float:
    """
    Probability that a node has exactly `l` friends.

        >>> zipf_pmf(1, 3, 0.0)
        0.5
        >>> round(zipf_pmf(2, 1000, 1.776) / zipf_pmf(1, 1000, 1.776), 3)
        0.292

    Args:
        l:
            Friend count, from 1 to n - 1.
        n:
            Number of users.
        gamma:
            Friendship-degree exponent.

    Raises:
        ModelError:
            If `l` is outside the support.

    Returns:
        Probability.
    """
    gamma = _check_exponent('gamma', gamma)
    if n < 2:
        raise ModelError(f"Need at least two users, found n={n!r}")
    if int(l) != l or not 1 <= l <= n - 1:
        raise ModelError(f"Friend count out of range [1, {n - 1}]: {l!r}")
    return float(l) ** -gamma / _zipf_normaliser(int(n) - 1, gamma)


def sample_degree(n: int, gamma: float, rng: np.random.Generator) -> int:
    """
    Draw a friend count from the Zipf law on {1, ..., n - 1}.
    """
    if n < 2:
        raise ModelError(f"Need at least two users, found n={n!r}")
    return int(zipf_sampler(int(n) - 1, float(gamma)).sample(rng))


def _check_radius(r: np.ndarray, L: float) -> None:
    if (r < 0).any() or (r > L / math.sqrt(2.0) * (1 + 1e-15)).any():
        raise ModelError("Radius out of range [0, L/√2]")


def anchor_radial_cdf(r: ArrayLike, beta: float, L: float) -> Union[float, np.ndarray]:
    """
    Probability that an anchor lies within torus distance `r` of its source.

    With `u` the torus-ball area of radius `r` and `A = L²`, this is
    `((u+1)^(1-β) - 1) / ((A+1)^(1-β) - 1)`, or `ln(u+1) / ln(A+1)` when
    β = 1. Accepts arrays, for use as a `scipy.stats.kstest()` CDF.

        >>> anchor_radial_cdf(0.0, 1.5, 100.0)
        0.0
        >>> round(anchor_radial_cdf(100 / math.sqrt(2), 1.5, 100.0), 12)
        1.0

    Raises:
        ModelError:
            If a radius is outside [0, L/√2], or beta is invalid.
    """
    beta = _check_exponent('beta', beta)
    scalar = np.ndim(r) == 0
    radius = np.atleast_1d(np.asarray(r, dtype=np.float64))
    _check_radius(radius, L)
    radius = np.minimum(radius, L / math.sqrt(2.0))
    u = ball_areas(radius, L)
    area = L * L
    if beta == 1.0:
        cdf = np.log1p(u) / math.log1p(area)
    else:
        cdf = np.expm1((1.0 - beta) * np.log1p(u)) / math.expm1((1.0 - beta) * math.log1p(area))
    cdf = np.clip(cdf, 0.0, 1.0)
    return float(cdf[0]) if scalar else cdf


def normalizer_phi(beta: float, L: float) -> float:
    """
    Constant making the anchor density integrate to one over the torus.

        >>> round(normalizer_phi(0.0, 10.0), 12)
        0.01

    """
    beta = _check_exponent('beta', beta)
    if not L > 0:
        raise ModelError(f"Torus side must be positive, found: {L!r}")
    area = float(L) * float(L)
    if beta == 1.0:
        return 1.0 / math.log1p(area)
    return (1.0 - beta) / math.expm1((1.0 - beta) * math.log1p(area))


def _radial_quantiles(uniform: np.ndarray, beta: float, L: float) -> np.ndarray:
    """
    Invert the radial CDF, giving the torus-ball area for each quantile.
    """
    area = L * L
    if beta == 1.0:
        u = np.expm1(uniform * math.log1p(area))
    else:
        scale = math.expm1((1.0 - beta) * math.log1p(area))
        u = np.expm1(np.log1p(uniform * scale) / (1.0 - beta))
    return np.clip(u, 0.0, area)


def _square_angles(radius: np.ndarray, half: float, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform angles among those keeping each offset inside the source-centred square.

    Past `r = L/2` the allowed angles are four arcs, one per quadrant, each
    trimmed by `arccos(L/2r)` at both ends. Drawing within them is the same
    law as redrawing uniform angles until the offset lands in the square, so
    the torus distance of every anchor is exactly its radius.
    """
    margin = np.arccos(half / np.maximum(radius, half))
    arc = np.maximum(math.pi / 2.0 - 2.0 * margin, 0.0)
    quadrant = rng.integers(4, size=len(radius))
    return quadrant * (math.pi / 2.0) + margin + arc * rng.random(len(radius))


def _sample_anchors(
    source: np.ndarray,
    beta: float,
    L: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    radius = ball_radii(_radial_quantiles(rng.random(size), beta, L), L)
    theta = _square_angles(radius, L / 2.0, rng)
    offsets = np.column_stack((radius * np.cos(theta), radius * np.sin(theta)))
    return wrap(source + offsets, L)


def sample_anchors(
    source: Sequence[float],
    beta: float,
    L: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Exact independent samples from the population-distance density.

    Args:
        source:
            Position of the node choosing friends.
        beta:
            Friendship-formation exponent.
        L:
            Side of torus.
        size:
            Number of anchors.
        rng:
            Random stream.

    Returns:
        An (size, 2) array of anchor positions.
    """
    beta = _check_exponent('beta', beta)
    origin = as_points([source], L)[0]
    return _sample_anchors(origin, beta, float(L), int(size), rng)


def sample_anchor(
    source: Sequence[float],
    beta: float,
    L: float,
    rng: np.random.Generator,
) -> TorusPoint:
    """
    One anchor point, see `sample_anchors()`.
    """
    x, y = sample_anchors(source, beta, L, 1, rng)[0]
    return TorusPoint(float(x), float(y))


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """
    Friendship sets of every node.

    Attributes:
        friends:
            Per node, distinct friend ids in order of first selection.
        anchor_points:
            Per node, all `q_k` anchors as a (q_k, 2) array.
        anchor_nodes:
            Per node, the node nearest each anchor. May repeat.
        degrees:
            Per node, `q_k`, the number of anchors drawn.
    """
    friends: Tuple[np.ndarray, ...]
    anchor_points: Tuple[np.ndarray, ...]
    anchor_nodes: Tuple[np.ndarray, ...]
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return len(self.friends)

    def anchor_distances(self, deployment: TorusDeployment) -> np.ndarray:
        """
        Torus distance from every anchor to its own source node.
        """
        parts = [
            torus_distances(deployment.positions[node], anchors, deployment.side)
            for node, anchors in enumerate(self.anchor_points)
        ]
        return np.concatenate(parts)

    def anchor_offsets(self, deployment: TorusDeployment) -> np.ndarray:
        """
        Distance from every anchor to the node it was mapped to.
        """
        anchors = np.concatenate(self.anchor_points)
        nodes = np.concatenate(self.anchor_nodes)
        return torus_distances(anchors, deployment.positions[nodes], deployment.side)


def _form_node(
    node: int,
    deployment: TorusDeployment,
    config: ModelConfig,
    sampler: ZipfSampler,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = node_rng(config.seed, STREAM_FORMATION, node)
    degree = int(sampler.sample(rng))
    source = deployment.positions[node]
    anchors = _sample_anchors(source, config.beta, deployment.side, degree, rng)
    owners = deployment.index.nearest(anchors, rng)

    # A node is never its own friend
    own = owners == node
    rounds = 0
    while own.any():
        rounds += 1
        if rounds > MAX_RESAMPLE_ROUNDS:
            raise ModelError(f"Node {node}: every anchor maps back to the source")
        count = int(own.sum())
        anchors[own] = _sample_anchors(source, config.beta, deployment.side, count, rng)
        owners[own] = deployment.index.nearest(anchors[own], rng)
        own = owners == node

    _, first = np.unique(owners, return_index=True)
    friends = owners[np.sort(first)]
    return friends, anchors, owners


def _form_span(
    span: Tuple[int, int],
    deployment: TorusDeployment,
    config: ModelConfig,
) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    sampler = zipf_sampler(deployment.n - 1, config.gamma)
    start, stop = span
    return [_form_node(node, deployment, config, sampler) for node in range(start, stop)]


def form_social_graph(
    deployment: TorusDeployment,
    config: ModelConfig,
    workers: int = 1,
) -> SocialGraph:
    """
    Choose friends for every node by the nearest principle.

    Each node draws its friend count from the Zipf law, draws that many
    anchors from the population-distance density around itself, then
    befriends the node nearest each anchor. An anchor that maps back to the
    source is redrawn.

    Args:
        deployment:
            Node positions.
        config:
            Model exponents and seed. `config.n` must match the deployment.
        workers:
            Size of process pool. Output does not depend on it.

    Returns:
        Frozen `SocialGraph`.
    """
    if config.n != deployment.n:
        raise ModelError(f"Config is for n={config.n}, deployment has {deployment.n} nodes")

    n = deployment.n
    chunks = max(1, min(int(workers) * 4, n // 256))
    spans = [
        (int(chunk[0]), int(chunk[-1]) + 1)
        for chunk in np.array_split(np.arange(n), chunks) if len(chunk)
    ]
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as executor:
            parts = list(executor.map(_form_span, spans, repeat(deployment), repeat(config)))
    else:
        parts = [_form_span(span, deployment, config) for span in spans]

    results = [result for part in parts for result in part]
    friends, anchors, owners = zip(*results)
    degrees = np.array([len(points) for points in anchors], dtype=np.int64)
    logger.info(
        "Formed social graph: n=%s, Σq=%s, max q=%s",
        n, int(degrees.sum()), int(degrees.max()),
    )
    return SocialGraph(
        friends=tuple(friends),
        anchor_points=tuple(anchors),
        anchor_nodes=tuple(owners),
        degrees=degrees,
    )
