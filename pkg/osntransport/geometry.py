"""
Distances, areas, spatial indexes and minimum spanning trees.

Two geometries live here and never mix: the flat torus of side `L` used by
the synthetic model, and the sphere used for real check-in data.
"""

from dataclasses import dataclass
import logging
import math
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .conf import get_setting


__all__ = (
    'as_points',
    'ball_areas',
    'ball_radii',
    'chord_to_km',
    'EARTH_RADIUS_KM',
    'Emst',
    'emst_boruvka',
    'emst_length',
    'emst_prim',
    'GeometryError',
    'haversine_array',
    'haversine_km',
    'km_to_chord',
    'nearest_node',
    'torus_ball_area',
    'torus_ball_area_inverse',
    'torus_distance',
    'torus_distances',
    'TorusIndex',
    'TorusPoint',
    'translate',
    'unit_vectors',
    'wrap',
)


logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
BISECTION_STEPS = 200

Points = Union[np.ndarray, Sequence[Sequence[float]]]


class GeometryError(ValueError):
    pass


class TorusPoint(NamedTuple):
    x: float
    y: float


def _check_side(L: float) -> float:
    L = float(L)
    if not L > 0:
        raise GeometryError(f"Torus side must be positive, found: {L!r}")
    return L


def as_points(points: Points, L: float) -> np.ndarray:
    """
    Convert input to an (m, 2) float array, checking every coordinate.
    """
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1 and array.size == 2:
        array = array.reshape(1, 2)
    if array.ndim != 2 or array.shape[1] != 2:
        raise GeometryError(f"Expected an array of 2-D points, found shape {array.shape!r}")
    if array.size and ((array < 0).any() or (array >= L).any()):
        raise GeometryError(f"Points must lie in [0, {L!r}) on both axes")
    return array


def wrap(coords: ArrayLike, L: float) -> np.ndarray:
    """
    Wrap coordinates into the half-open interval [0, L).

        >>> wrap([-1.0, 10.0, 12.5], 10.0).tolist()
        [9.0, 0.0, 2.5]

    """
    wrapped = np.mod(np.asarray(coords, dtype=np.float64), L)
    # np.mod() of a tiny negative number rounds to L itself.
    wrapped[wrapped >= L] = 0.0
    return wrapped


def translate(points: Points, offset: Tuple[float, float], L: float) -> np.ndarray:
    """
    Shift every point by the same offset, wrapping around the torus.
    """
    L = _check_side(L)
    array = as_points(points, L)
    return wrap(array + np.asarray(offset, dtype=np.float64), L)


def torus_distances(a: ArrayLike, b: ArrayLike, L: float) -> np.ndarray:
    """
    Vectorised torus distance, broadcasting over leading dimensions.

    No validation is done here; see `torus_distance()` for the checked
    single-pair version. The result for (a, b) is bit-identical to that
    for (b, a).

        >>> torus_distances([[0, 0], [0, 0]], [[9, 0], [3, 4]], 10.0).tolist()
        [1.0, 5.0]

    """
    delta = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    delta = np.minimum(delta, L - delta)
    return np.sqrt(delta[..., 0] * delta[..., 0] + delta[..., 1] * delta[..., 1])


def torus_distance(a: Sequence[float], b: Sequence[float], L: float) -> float:
    """
    Distance between two points on a square torus of side `L`.

        >>> torus_distance((0, 0), (9, 0), 10)
        1.0
        >>> torus_distance((0, 0), (3, 4), 10)
        5.0

    Args:
        a:
            First point, as (x, y).
        b:
            Second point.
        L:
            Side length of torus.

    Raises:
        GeometryError:
            If side is not positive, or if either point lies off the torus.

    Returns:
        Length of shortest wrapped path between the two points.
    """
    L = _check_side(L)
    pair = as_points([a, b], L)
    return float(torus_distances(pair[0], pair[1], L))


def ball_areas(r: np.ndarray, L: float) -> np.ndarray:
    """
    Vectorised torus-ball area, for radii already known to be in range.
    """
    half = L / 2.0
    area = np.pi * r * r
    outside = r > half
    if outside.any():
        ro = r[outside]
        h = half
        segment = ro * ro * np.arccos(h / ro) - h * np.sqrt(np.maximum(ro * ro - h * h, 0.0))
        area[outside] -= 4.0 * segment
    return np.minimum(area, L * L)


def ball_radii(u: np.ndarray, L: float) -> np.ndarray:
    """
    Vectorised inverse of `ball_areas()`.

    Closed form while the disk fits inside the square, bisection otherwise.
    """
    half = L / 2.0
    r = np.sqrt(u / np.pi)
    segment = u > np.pi * half * half
    if segment.any():
        target = u[segment]
        low = np.full(target.shape, half)
        high = np.full(target.shape, L / math.sqrt(2.0))
        tolerance = 1e-12 * L
        for _ in range(BISECTION_STEPS):
            middle = 0.5 * (low + high)
            below = ball_areas(middle, L) < target
            low = np.where(below, middle, low)
            high = np.where(below, high, middle)
            if (high - low).max() <= tolerance:
                break
        r[segment] = 0.5 * (low + high)
    return r


def torus_ball_area(r: float, L: float) -> float:
    """
    Area of the set of torus points within distance `r` of a fixed point.

    Under unit node density this is also the expected number of nodes in
    the ball.

        >>> round(torus_ball_area(5, 10), 4)
        78.5398
        >>> torus_ball_area(10 / math.sqrt(2), 10)
        100.0

    Args:
        r:
            Radius, from zero to the largest torus distance `L/√2`.
        L:
            Side of torus.

    Raises:
        GeometryError:
            If radius is out of range.

    Returns:
        Area, from 0 to `L²`.
    """
    L = _check_side(L)
    r = float(r)
    if not 0.0 <= r <= L / math.sqrt(2.0) * (1 + 1e-15):
        raise GeometryError(f"Radius out of range [0, L/√2]: {r!r}")
    if r >= L / math.sqrt(2.0):
        return L * L
    return float(ball_areas(np.array([r]), L)[0])


def torus_ball_area_inverse(u: float, L: float) -> float:
    """
    Radius of the torus ball with the given area.

        >>> round(torus_ball_area_inverse(25 * math.pi, 10), 9)
        5.0

    Raises:
        GeometryError:
            If area is outside [0, L²].
    """
    L = _check_side(L)
    u = float(u)
    if not 0.0 <= u <= L * L:
        raise GeometryError(f"Area out of range [0, L²]: {u!r}")
    return float(ball_radii(np.array([u]), L)[0])


class TorusIndex:
    """
    Periodic k-d tree over node positions.

    The spatial index of a deployment: nearest-node lookups and
    neighbour-pair queries all go through it.
    """
    def __init__(self, positions: Points, L: float):
        self.L = _check_side(L)
        self.positions = as_points(positions, self.L)
        if len(self.positions) == 0:
            raise GeometryError("Cannot index an empty deployment")
        self.tree = cKDTree(self.positions, boxsize=self.L)

    def __len__(self) -> int:
        return len(self.positions)

    def nearest(
        self,
        points: Points,
        rng: Optional[np.random.Generator] = None,
        tolerance: Optional[float] = None,
    ) -> np.ndarray:
        """
        Id of the nearest node to each of the given points.

        Nodes within relative distance `tolerance` of the closest count as
        tied. Ties are broken with `rng`, or by lowest id if no generator
        is given.

        Returns:
            Integer array with one node id per query point.
        """
        if tolerance is None:
            tolerance = get_setting('OSN_TIE_TOLERANCE')
        queries = as_points(points, self.L)
        if len(queries) == 0:
            return np.empty(0, dtype=np.intp)
        if len(self) == 1:
            return np.zeros(len(queries), dtype=np.intp)

        distances, ids = self.tree.query(queries, k=2)
        nearest = ids[:, 0].astype(np.intp)
        tied = distances[:, 1] <= distances[:, 0] * (1.0 + tolerance)
        for row in np.flatnonzero(tied):
            radius = distances[row, 0] * (1.0 + tolerance)
            candidates = sorted(self.tree.query_ball_point(queries[row], radius))
            if len(candidates) < 2:
                continue
            if rng is None:
                nearest[row] = candidates[0]
            else:
                nearest[row] = candidates[int(rng.integers(len(candidates)))]
        return nearest


def nearest_node(
    point: Sequence[float],
    index: TorusIndex,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """
    Node closest to the given point, under the torus metric.

    Args:
        point:
            Query position.
        index:
            Spatial index of the deployment's nodes.
        rng:
            Breaks ties between nodes within the configured relative
            tolerance `OSN_TIE_TOLERANCE` of the minimum distance.

    Returns:
        Node id.
    """
    return int(index.nearest([point], rng)[0])


@dataclass(frozen=True)
class Emst:
    """
    Euclidean minimum spanning tree, under the torus metric.

    Edges refer to positions in the input point list.
    """
    edges: Tuple[Tuple[int, int, float], ...]
    total_length: float

    @property
    def longest(self) -> float:
        return max((edge[2] for edge in self.edges), default=0.0)


def _build_tree(points: np.ndarray, pairs: np.ndarray, L: float) -> Emst:
    """
    Emst from (m - 1, 2) endpoint pairs.

    Lengths are recomputed here, and summed with `math.fsum()`, so that any
    two algorithms returning the same multiset of edge lengths report the
    same total exactly.
    """
    if len(pairs) == 0:
        return Emst(edges=(), total_length=0.0)
    lengths = torus_distances(points[pairs[:, 0]], points[pairs[:, 1]], L)
    edges = tuple(
        (int(a), int(b), float(length))
        for (a, b), length in zip(pairs, lengths)
    )
    return Emst(edges=edges, total_length=math.fsum(lengths.tolist()))


def emst_prim(points: Points, L: float) -> Emst:
    """
    Dense Prim's algorithm, O(m²) time and O(m) memory.
    """
    L = _check_side(L)
    array = as_points(points, L)
    count = len(array)
    if count == 0:
        raise GeometryError("Cannot span an empty point set")
    if count == 1:
        return Emst(edges=(), total_length=0.0)

    best = torus_distances(array[0], array, L)
    parent = np.zeros(count, dtype=np.intp)
    in_tree = np.zeros(count, dtype=bool)
    in_tree[0] = True
    best[0] = np.inf
    pairs = np.empty((count - 1, 2), dtype=np.intp)

    for step in range(count - 1):
        vertex = int(np.argmin(best))
        pairs[step] = (parent[vertex], vertex)
        in_tree[vertex] = True
        best[vertex] = np.inf
        distance = torus_distances(array[vertex], array, L)
        closer = (distance < best) & ~in_tree
        best[closer] = distance[closer]
        parent[closer] = vertex

    return _build_tree(array, pairs, L)


def _boruvka_pairs(array: np.ndarray, candidates: np.ndarray, L: float) -> Optional[np.ndarray]:
    """
    Borůvka's algorithm restricted to the given candidate edges.

    Candidates are ranked by (length, lower id, higher id), a strict total
    order, so simultaneous merges never close a cycle.

    Returns:
        Endpoint pairs of a minimum spanning tree of the candidate graph,
        or None if the candidate graph is disconnected.
    """
    count = len(array)
    if len(candidates) == 0:
        return None
    first = candidates[:, 0].astype(np.intp)
    second = candidates[:, 1].astype(np.intp)
    lengths = torus_distances(array[first], array[second], L)
    low, high = np.minimum(first, second), np.maximum(first, second)
    order = np.lexsort((high, low, lengths))
    low, high = low[order], high[order]

    labels = np.arange(count)
    components = count
    chosen = np.empty(0, dtype=np.intp)
    missing = len(low)
    while components > 1:
        label_low, label_high = labels[low], labels[high]
        crossing = np.flatnonzero(label_low != label_high)
        if crossing.size == 0:
            return None
        cheapest = np.full(count, missing, dtype=np.intp)
        np.minimum.at(cheapest, label_low[crossing], crossing)
        np.minimum.at(cheapest, label_high[crossing], crossing)
        chosen = np.union1d(chosen, cheapest[cheapest < missing])
        graph = coo_matrix(
            (np.ones(len(chosen)), (low[chosen], high[chosen])),
            shape=(count, count),
        )
        components, labels = connected_components(graph, directed=False)

    return np.column_stack((low[chosen], high[chosen]))


def emst_boruvka(points: Points, L: float, radius: Optional[float] = None) -> Emst:
    """
    Borůvka's algorithm over neighbour pairs from a periodic k-d tree.

    Candidate edges are all pairs closer than `radius`. If the candidate
    graph is disconnected, or its spanning tree has an edge too close to
    the radius to be sure no shorter pair was missed, the radius doubles.
    Once every tree edge is shorter than the radius, no pair left out can
    improve the tree, so the result is exact.

    Args:
        points:
            Points on the torus.
        L:
            Side of torus.
        radius:
            Optional starting radius. Defaults to twice the mean spacing of
            a uniform point set of the same size.
    """
    L = _check_side(L)
    array = as_points(points, L)
    count = len(array)
    if count == 0:
        raise GeometryError("Cannot span an empty point set")
    if count <= 2:
        return emst_prim(array, L)

    if radius is None:
        radius = 2.0 * L / math.sqrt(count)
    largest = L / math.sqrt(2.0)
    tree = cKDTree(array, boxsize=L)
    while True:
        complete = radius >= largest
        search = L if complete else radius
        candidates = tree.query_pairs(search, output_type='ndarray')
        pairs = _boruvka_pairs(array, candidates, L)
        if pairs is not None:
            emst = _build_tree(array, pairs, L)
            if complete or emst.longest < radius * (1.0 - 1e-9):
                return emst
        logger.debug("Borůvka radius %.4g too small for %s points, doubling", radius, count)
        radius = min(2.0 * radius, largest)


def emst_length(points: Points, L: float, cutoff: Optional[int] = None) -> Emst:
    """
    Exact Euclidean minimum spanning tree under the torus metric.

        >>> emst_length([(1, 1), (1, 2), (2, 1), (2, 2)], 100).total_length
        3.0

    Args:
        points:
            One or more points on the torus.
        L:
            Side of torus.
        cutoff:
            Use dense Prim up to this many points, Borůvka above it.
            Defaults to the setting `OSN_PRIM_CUTOFF`.

    Raises:
        GeometryError:
            If there are no points, or points lie off the torus.

    Returns:
        Tree with `count - 1` edges and its total length.
    """
    if cutoff is None:
        cutoff = get_setting('OSN_PRIM_CUTOFF')
    count = len(points)
    if count <= cutoff:
        return emst_prim(points, L)
    return emst_boruvka(points, L)


def _check_coordinates(lat: np.ndarray, lon: np.ndarray) -> None:
    if (np.abs(lat) > 90).any() or np.isnan(lat).any():
        raise GeometryError("Latitude out of range [-90, 90]")
    if (np.abs(lon) > 180).any() or np.isnan(lon).any():
        raise GeometryError("Longitude out of range [-180, 180]")


def haversine_array(
    lat1: ArrayLike,
    lon1: ArrayLike,
    lat2: ArrayLike,
    lon2: ArrayLike,
) -> np.ndarray:
    """
    Vectorised great-circle distance in kilometres. Unchecked.
    """
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlambda = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlambda / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """
    Great-circle distance between two points, in kilometres.

        >>> haversine_km(-41.29, 174.78, -41.29, 174.78)
        0.0
        >>> round(haversine_km(0, 0, 0, 180), 1)
        20015.1

    Raises:
        GeometryError:
            If a latitude or longitude is out of range.
    """
    lat = np.array([lat1, lat2], dtype=np.float64)
    lon = np.array([lon1, lon2], dtype=np.float64)
    _check_coordinates(lat, lon)
    return float(haversine_array(lat[0], lon[0], lat[1], lon[1]))


def unit_vectors(lat: ArrayLike, lon: ArrayLike) -> np.ndarray:
    """
    Positions on the unit sphere, as an (m, 3) array.
    """
    phi = np.radians(np.asarray(lat, dtype=np.float64))
    lam = np.radians(np.asarray(lon, dtype=np.float64))
    cos_phi = np.cos(phi)
    return np.column_stack((cos_phi * np.cos(lam), cos_phi * np.sin(lam), np.sin(phi)))


def km_to_chord(distance_km: ArrayLike) -> np.ndarray:
    """
    Straight-line distance through the unit sphere for a great-circle distance.
    """
    angle = np.asarray(distance_km, dtype=np.float64) / EARTH_RADIUS_KM
    return 2.0 * np.sin(np.minimum(angle, np.pi) / 2.0)


def chord_to_km(chord: ArrayLike) -> np.ndarray:
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))
