"""
Transport load of dissemination sessions, and its asymptotic predictions.

A session's load is the length of the Euclidean minimum spanning tree over
its source and destinations, times its data rate. The total over all
sessions is the network's transport complexity.

The predictor functions encode the closed-form growth order of each
measured quantity as a function of `n`, one `AsymptoticOrder` per regime
of the exponents (γ, β, φ). Boundaries between regimes are exact: the
exponents are converted to fractions from their decimal representation, so
`1.5` lands on the `3/2` boundary, `1.4999` does not.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product, repeat
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import emst_length, torus_distances
from .model import TorusDeployment
from .sessions import DisseminationSession, PATTERNS


__all__ = (
    'anchor_offset_sum',
    'anchor_session_load',
    'AsymptoticOrder',
    'cross_table_mismatches',
    'DecileShare',
    'ERRATA',
    'exact',
    'MEASUREMENTS',
    'monotonicity_violations',
    'predicted_emst_sum_lower',
    'predicted_G',
    'predicted_H',
    'predicted_LP',
    'predicted_mean_anchor_distance',
    'predicted_order',
    'predicted_Q',
    'predicted_W',
    'PredictorError',
    'session_load',
    'SessionLoad',
    'SOURCE_TABLES',
    'SteinerRatioBound',
    'total_transport_complexity',
    'TransportComplexity',
)


logger = logging.getLogger(__name__)

Exponent = Union[int, float, str, Fraction]

MEASUREMENTS = (
    'total-load',
    'anchor-emst-sum',
    'degree-sum',
    'destination-sum',
    'mean-anchor-distance',
    'anchor-offset-sum',
)

# Corrections applied to the published growth-order tables
ERRATA = (
    "Multicast load, φ<1, 1<β<2, γ≥2: printed as the β=2 order; encoded as n^(2-β/2), "
    "matching the broadcast load it must reduce to.",
    "Multicast load, φ=2: the single-entry cells apply to every γ.",
    "Multicast load, 3/2<φ<2, 1<β<2, γ=1: kept as printed, n^(2-β/2).",
    "Multicast destination sum: the column printed as M(γ,φ) is W(γ,φ).",
    "Multicast EMST lower bound, φ=2, β=2, γ<1: Θ(n log n), from the φ>3/2 row. "
    "The order n (log n)^2 belongs to φ=3/2, γ≤1.",
)


# Published table or equation each predictor encodes
SOURCE_TABLES = {
    'broadcast-load': 'Table II',
    'broadcast-emst-lower-bound': 'Table III',
    'multicast-load': 'Table IV',
    'destination-count': 'Table V',
    'multicast-emst-lower-bound': 'Table VI',
    'anchor-distance': 'Eq. 5',
    'anchor-count': 'Eq. 11',
}


class PredictorError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AsymptoticOrder:
    """
    Growth order `n^poly * (log n)^logpow`.

    Orders compare lexicographically: polynomial exponent first.

        >>> AsymptoticOrder.of('3/2', '-1/2')
        AsymptoticOrder(poly=Fraction(3, 2), logpow=Fraction(-1, 2))
        >>> str(AsymptoticOrder.of(1, 1))
        'Θ(n log n)'
        >>> AsymptoticOrder.of(2) > AsymptoticOrder.of('3/2', 5)
        True
    """
    poly: Fraction
    logpow: Fraction = Fraction(0)

    @classmethod
    def of(cls, poly: Exponent, logpow: Exponent = 0) -> 'AsymptoticOrder':
        return cls(exact(poly), exact(logpow))

    def as_dict(self) -> dict:
        return {'poly': float(self.poly), 'logpow': float(self.logpow)}

    def __str__(self) -> str:
        parts = []
        if self.poly == 1:
            parts.append('n')
        elif self.poly != 0:
            parts.append(f"n^{self.poly}")
        if self.logpow == 1:
            parts.append('log n')
        elif self.logpow != 0:
            parts.append(f"(log n)^{self.logpow}")
        return f"Θ({' '.join(parts) or '1'})"


def exact(value: Exponent) -> Fraction:
    """
    Exponent as an exact fraction.

        >>> exact(1.5)
        Fraction(3, 2)
        >>> exact('7/4')
        Fraction(7, 4)

    Raises:
        PredictorError:
            If value is not a finite number.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise PredictorError(f"Exponent must be a number, found: {value!r}")
    if isinstance(value, float):
        if not math.isfinite(value):
            raise PredictorError(f"Exponent must be finite, found: {value!r}")
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise PredictorError(f"Exponent must be a number, found: {value!r}") from None


def _exponent(name: str, value: Exponent) -> Fraction:
    fraction = exact(value)
    if fraction < 0:
        raise PredictorError(f"{name} must be non-negative, found: {value!r}")
    return fraction


def _order(poly: Exponent, logpow: Exponent = 0) -> AsymptoticOrder:
    return AsymptoticOrder(exact(poly), exact(logpow))


HALF = Fraction(1, 2)
THREE_HALVES = Fraction(3, 2)
FIVE_HALVES = Fraction(5, 2)
SEVEN_HALVES = Fraction(7, 2)
NINE_HALVES = Fraction(9, 2)


def _by_beta(beta, above_two, at_two, between, at_one, below_one):
    if beta > 2:
        return above_two
    if beta == 2:
        return at_two
    if beta > 1:
        return between
    if beta == 1:
        return at_one
    return below_one


def _by_gamma(gamma, threshold, above, at, between, at_one, below_one):
    """
    Split on γ against `threshold > 1`, then against one.
    """
    if gamma > threshold:
        return above
    if gamma == threshold:
        return at
    if gamma > 1:
        return between
    if gamma == 1:
        return at_one
    return below_one


def predicted_mean_anchor_distance(beta: Exponent) -> AsymptoticOrder:
    """
    Growth of the mean source-to-anchor distance.

        >>> str(predicted_mean_anchor_distance(0.5))
        'Θ(n^1/2)'
    """
    b = _exponent('beta', beta)
    if b > THREE_HALVES:
        return _order(0)
    if b == THREE_HALVES:
        return _order(0, 1)
    if b > 1:
        return _order(THREE_HALVES - b)
    if b == 1:
        return _order(HALF, -1)
    return _order(HALF)


def predicted_LP(beta: Exponent) -> AsymptoticOrder:
    """
    Growth factor of the inter-anchor tree length per anchor.
    """
    b = _exponent('beta', beta)
    return _by_beta(
        b, _order(0), _order(0, 1), _order(1 - b / 2), _order(HALF, -HALF), _order(HALF),
    )


def predicted_Q(gamma: Exponent) -> AsymptoticOrder:
    """
    Growth of the total anchor count, the sum of `q_k`.

        >>> str(predicted_Q(2))
        'Θ(n log n)'
        >>> str(predicted_Q(0.5))
        'Θ(n^2)'
    """
    g = _exponent('gamma', gamma)
    if g > 2:
        return _order(1)
    if g == 2:
        return _order(1, 1)
    if g > 1:
        return _order(3 - g)
    if g == 1:
        return _order(2, -1)
    return _order(2)


def predicted_W(gamma: Exponent, phi: Exponent) -> AsymptoticOrder:
    """
    Growth of the total multicast destination-anchor count, the sum of `d_k`.
    """
    g, f = _exponent('gamma', gamma), _exponent('phi', phi)
    if f > 2:
        return _order(1)
    if f == 2:
        return _order(1) if g > 1 else _order(1, 1)
    if f > 1:
        return _by_gamma(
            g, 3 - f, _order(1), _order(1, 1), _order(4 - g - f), _order(3 - f, -1), _order(3 - f),
        )
    if f == 1:
        return _by_gamma(g, 2, _order(1), _order(1), _order(3 - g, -1), _order(2, -2), _order(2, -1))
    return predicted_Q(g)


def predicted_H(gamma: Exponent, beta: Exponent) -> AsymptoticOrder:
    """
    Growth of broadcast transport complexity.

        >>> str(predicted_H(3, 3))
        'Θ(n)'
        >>> str(predicted_H(2.5, 1.5))
        'Θ(n^5/4)'
    """
    g, b = _exponent('gamma', gamma), _exponent('beta', beta)
    if g > 2:
        return _by_beta(b, _order(1), _order(1, 1), _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))
    if g == 2:
        return _by_beta(b, _order(1, 1), _order(1, 1), _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))
    if g > THREE_HALVES:
        if b >= 2 * g - 2:
            return _order(3 - g)
        return _by_beta(b, None, None, _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))
    if g == THREE_HALVES:
        if b > 1:
            return _order(1.5)
        return _order(1.5, HALF) if b == 1 else _order(1.5, 1)
    if g > 1:
        return _order(3 - g)
    if g == 1:
        return _order(2, -1)
    return _order(2)


def predicted_G(beta: Exponent, gamma: Exponent, phi: Exponent) -> AsymptoticOrder:
    """
    Growth of multicast transport complexity.

        >>> str(predicted_G(3, 2, 1.25))
        'Θ(n)'
        >>> str(predicted_G(0.5, 0.5, 0.5))
        'Θ(n^2)'
    """
    b = _exponent('beta', beta)
    g = _exponent('gamma', gamma)
    f = _exponent('phi', phi)

    if f > 2:
        return _by_beta(b, _order(1), _order(1, 1), _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))

    if f == 2:
        return _by_beta(
            b,
            _order(1) if g > 1 else _order(1, 1),
            _order(1, 1),
            _order(2 - b / 2),
            _order(1.5, HALF),
            _order(1.5),
        )

    if f > THREE_HALVES:
        t = 3 - f
        between = _order(4 - g - f)
        at_one = _order(3 - f, -1)
        below_one = _order(3 - f)
        return _by_beta(
            b,
            _by_gamma(g, t, _order(1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, t, _order(1, 1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, t, _order(2 - b / 2), _order(2 - b / 2), between, _order(2 - b / 2), below_one),
            _order(1.5, -HALF),
            _order(1.5),
        )

    if f == THREE_HALVES:
        between = _order(FIVE_HALVES - g)
        at_one = _order(1.5, -1)
        below_one = _order(1.5)
        return _by_beta(
            b,
            _by_gamma(g, THREE_HALVES, _order(1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, THREE_HALVES, _order(1, 1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, THREE_HALVES, _order(2 - b / 2), _order(2 - b / 2), between, at_one, below_one),
            _order(1.5, -HALF) if g > 1 else _order(1.5, HALF),
            _order(1.5) if g > 1 else _order(1.5, 1),
        )

    if f > 1:
        t, s = 3 - f, FIVE_HALVES - f
        between = _order(4 - g - f)
        at_one = _order(3 - f, -1)
        below_one = _order(3 - f)
        return _by_beta(
            b,
            _by_gamma(g, t, _order(1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, t, _order(1, 1), _order(1, 1), between, at_one, below_one),
            _by_gamma(g, t, _order(2 - b / 2), _order(2 - b / 2), between, at_one, below_one),
            _by_gamma(g, s, _order(1.5, -HALF), _order(1.5, HALF), between, at_one, below_one),
            _by_gamma(g, s, _order(1.5), _order(1.5, 1), between, at_one, below_one),
        )

    if f == 1:
        if g >= 2:
            return _by_beta(b, _order(1), _order(1, 1), _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))
        if g > 1:
            return _order(3 - g, -1)
        return _order(2, -2) if g == 1 else _order(2, -1)

    # φ < 1: every node multicasts to a constant fraction of its friends
    between = _order(3 - g)
    at_one = _order(2, -1)
    below_one = _order(2)
    return _by_beta(
        b,
        _by_gamma(g, 2, _order(1), _order(1, 1), between, at_one, below_one),
        _by_gamma(g, 2, _order(1, 1), _order(1, 1), between, at_one, below_one),
        _by_gamma(g, 2, _order(2 - b / 2), _order(2 - b / 2), between, at_one, below_one),
        _by_gamma(g, THREE_HALVES, _order(1.5, -HALF), _order(1.5, HALF), between, at_one, below_one),
        _by_gamma(g, THREE_HALVES, _order(1.5), _order(1.5, 1), between, at_one, below_one),
    )


def _broadcast_emst_lower(g: Fraction, b: Fraction) -> AsymptoticOrder:
    return _by_beta(
        b,
        _by_gamma(g, THREE_HALVES, _order(1), _order(1, 1), _order(FIVE_HALVES - g), _order(1.5, -1), _order(1.5)),
        _by_gamma(g, THREE_HALVES, _order(1, 1), _order(1, 2), _order(FIVE_HALVES - g, 1), _order(1.5), _order(1.5, 1)),
        _by_gamma(
            g, THREE_HALVES,
            _order(2 - b / 2), _order(2 - b / 2, 1), _order(SEVEN_HALVES - g - b / 2),
            _order((5 - b) / 2, -1), _order((5 - b) / 2),
        ),
        _by_gamma(g, THREE_HALVES, _order(1.5, -HALF), _order(1.5, HALF), _order(3 - g, -HALF), _order(2, -1.5), _order(2, -HALF)),
        _by_gamma(g, THREE_HALVES, _order(1.5), _order(1.5, 1), _order(3 - g), _order(2, -1), _order(2)),
    )


def _multicast_emst_lower(g: Fraction, b: Fraction, f: Fraction) -> AsymptoticOrder:
    if f > THREE_HALVES:
        return _by_beta(b, _order(1), _order(1, 1), _order(2 - b / 2), _order(1.5, -HALF), _order(1.5))

    if f == THREE_HALVES:
        above = g > 1
        return _by_beta(
            b,
            _order(1) if above else _order(1, 1),
            _order(1, 1) if above else _order(1, 2),
            _order(2 - b / 2) if above else _order(2 - b / 2, 1),
            _order(1.5, -HALF) if above else _order(1.5, HALF),
            _order(1.5) if above else _order(1.5, 1),
        )

    if f > 1:
        s = FIVE_HALVES - f
        return _by_beta(
            b,
            _by_gamma(g, s, _order(1), _order(1, 1), _order(SEVEN_HALVES - g - f), _order(FIVE_HALVES - f, -1), _order(FIVE_HALVES - f)),
            _by_gamma(g, s, _order(1, 1), _order(1, 2), _order(SEVEN_HALVES - g - f, 1), _order(FIVE_HALVES - f), _order(FIVE_HALVES - f, 1)),
            _by_gamma(
                g, s,
                _order(2 - b / 2), _order(2 - b / 2, 1), _order(NINE_HALVES - g - f - b / 2),
                _order(SEVEN_HALVES - f - b / 2, -1), _order(SEVEN_HALVES - f - b / 2),
            ),
            _by_gamma(g, s, _order(1.5, -HALF), _order(1.5, HALF), _order(4 - g - f, -HALF), _order(3 - f, -1.5), _order(3 - f, -HALF)),
            _by_gamma(g, s, _order(1.5), _order(1.5, 1), _order(4 - g - f), _order(3 - f, -1), _order(3 - f)),
        )

    if f == 1:
        return _by_beta(
            b,
            _by_gamma(g, THREE_HALVES, _order(1), _order(1), _order(FIVE_HALVES - g, -1), _order(1.5, -2), _order(1.5, -1)),
            _by_gamma(g, THREE_HALVES, _order(1, 1), _order(1, 1), _order(FIVE_HALVES - g), _order(1.5, -1), _order(1.5)),
            _by_gamma(
                g, THREE_HALVES,
                _order(2 - b / 2), _order(2 - b / 2), _order(SEVEN_HALVES - g - b / 2, -1),
                _order(FIVE_HALVES - b / 2, -2), _order(FIVE_HALVES - b / 2, -1),
            ),
            _by_gamma(g, THREE_HALVES, _order(1.5, -HALF), _order(1.5, -HALF), _order(3 - g, -1.5), _order(2, -2.5), _order(2, -1.5)),
            _by_gamma(g, THREE_HALVES, _order(1.5), _order(1.5), _order(3 - g, -1), _order(2, -2), _order(2, -1)),
        )

    return _broadcast_emst_lower(g, b)


def predicted_emst_sum_lower(
    gamma: Exponent,
    beta: Exponent,
    pattern: str = 'broadcast',
    phi: Optional[Exponent] = None,
) -> AsymptoticOrder:
    """
    Growth of the summed anchor-set tree lengths, a lower bound on load.

        >>> str(predicted_emst_sum_lower(2, 3))
        'Θ(n)'
        >>> str(predicted_emst_sum_lower(0.5, 2, 'multicast', 1.5))
        'Θ(n (log n)^2)'

    Raises:
        PredictorError:
            If pattern is unknown, or multicast is asked for without `phi`.
    """
    g, b = _exponent('gamma', gamma), _exponent('beta', beta)
    if pattern == 'broadcast':
        return _broadcast_emst_lower(g, b)
    if pattern == 'multicast':
        if phi is None:
            raise PredictorError("Multicast prediction needs phi")
        return _multicast_emst_lower(g, b, _exponent('phi', phi))
    raise PredictorError(f"Unknown dissemination pattern: {pattern!r}")


def predicted_order(
    measurement: str,
    pattern: str,
    gamma: Exponent,
    beta: Exponent,
    phi: Optional[Exponent] = None,
) -> Tuple[AsymptoticOrder, str]:
    """
    Predicted growth order of a measured quantity, and where it comes from.

        >>> order, source = predicted_order('total-load', 'broadcast', 3, 3)
        >>> str(order), source, SOURCE_TABLES[source]
        ('Θ(n)', 'broadcast-load', 'Table II')

    Returns:
        Order and the name of its predictor, a key of `SOURCE_TABLES`.
    """
    if pattern not in PATTERNS:
        raise PredictorError(f"Unknown dissemination pattern: {pattern!r}")
    multicast = pattern == 'multicast'
    if multicast and phi is None:
        raise PredictorError("Multicast prediction needs phi")

    if measurement == 'total-load':
        if multicast:
            return predicted_G(beta, gamma, phi), 'multicast-load'
        return predicted_H(gamma, beta), 'broadcast-load'
    if measurement == 'anchor-emst-sum':
        return predicted_emst_sum_lower(gamma, beta, pattern, phi), f"{pattern}-emst-lower-bound"
    if measurement == 'degree-sum':
        return predicted_Q(gamma), 'anchor-count'
    if measurement in ('destination-sum', 'anchor-offset-sum'):
        if multicast:
            return predicted_W(gamma, phi), 'destination-count'
        return predicted_Q(gamma), 'anchor-count'
    if measurement == 'mean-anchor-distance':
        return predicted_mean_anchor_distance(beta), 'anchor-distance'
    raise PredictorError(f"Unknown measurement: {measurement!r}")


########################################
# Table diagnostics
########################################

GAMMA_GRID = ('0', '0.5', '1', '1.1', '1.2', '1.25', '1.4', '1.5', '1.6', '1.75', '1.8', '1.9', '2', '2.5', '3')
BETA_GRID = ('0', '0.5', '1', '1.1', '1.2', '1.5', '1.75', '1.8', '2', '2.5', '3')
PHI_GRID = ('0', '0.5', '1', '1.1', '1.25', '1.4', '1.5', '1.6', '1.75', '1.9', '2', '2.5', '3')


@dataclass(frozen=True)
class Mismatch:
    table: str
    fixed: Tuple[Tuple[str, Fraction], ...]
    varied: str
    before: Tuple[Fraction, AsymptoticOrder]
    after: Tuple[Fraction, AsymptoticOrder]


def _increases(table, function, varied, grid, fixed_names, fixed_grids) -> List[Mismatch]:
    found = []
    for fixed_values in product(*fixed_grids):
        fixed = tuple(zip(fixed_names, (exact(v) for v in fixed_values)))
        previous = None
        for value in grid:
            arguments = dict(fixed)
            arguments[varied] = exact(value)
            order = function(**arguments)
            if previous is not None and order.poly > previous[1].poly:
                found.append(Mismatch(table, fixed, varied, previous, (exact(value), order)))
            previous = (exact(value), order)
    return found


def monotonicity_violations() -> List[Mismatch]:
    """
    Places where a polynomial exponent grows with an exponent it should not.

    More heavy-tailed degree, distance or destination laws never lower the
    load, so each exponent in (γ, β, φ) should be nonincreasing in poly.
    """
    found = []
    found += _increases('broadcast-load', predicted_H, 'gamma', GAMMA_GRID, ('beta',), (BETA_GRID,))
    found += _increases('broadcast-load', predicted_H, 'beta', BETA_GRID, ('gamma',), (GAMMA_GRID,))
    for varied, grid, others in (
        ('gamma', GAMMA_GRID, (('beta', BETA_GRID), ('phi', PHI_GRID))),
        ('beta', BETA_GRID, (('gamma', GAMMA_GRID), ('phi', PHI_GRID))),
        ('phi', PHI_GRID, (('gamma', GAMMA_GRID), ('beta', BETA_GRID))),
    ):
        names, grids = zip(*others)
        found += _increases('multicast-load', predicted_G, varied, grid, names, grids)
    for mismatch in found:
        logger.debug("Monotonicity: %s", mismatch)
    return found


def cross_table_mismatches(phi: Exponent = '0.5') -> List[Tuple[Fraction, Fraction, AsymptoticOrder, AsymptoticOrder]]:
    """
    Regimes where multicast load with `φ < 1` differs from broadcast load.

    With `φ < 1` a node reaches a constant fraction of its friends, so both
    tables should agree. Returns `(γ, β, multicast, broadcast)` tuples.
    """
    if exact(phi) >= 1:
        raise PredictorError(f"Comparison needs phi below one, found: {phi!r}")
    found = []
    for gamma, beta in product(GAMMA_GRID, BETA_GRID):
        multicast = predicted_G(beta, gamma, phi)
        broadcast = predicted_H(gamma, beta)
        if multicast != broadcast:
            found.append((exact(gamma), exact(beta), multicast, broadcast))
    return found


########################################
# Measured loads
########################################

@dataclass(frozen=True)
class SteinerRatioBound:
    """
    Euclidean Steiner ratio, as a bound between trees.

    No Steiner tree is shorter than `ratio⁻¹` times the spanning tree of
    the same points.

        >>> round(SteinerRatioBound().steiner_lower_bound(2.0), 6)
        1.732051
    """
    ratio: float = 2.0 / math.sqrt(3.0)

    def steiner_lower_bound(self, spanning_length: float) -> float:
        return spanning_length / self.ratio


@dataclass(frozen=True)
class SessionLoad:
    session_id: int
    emst_length: float
    load: float


def _check_ids(session: DisseminationSession, n: int) -> np.ndarray:
    ids = np.concatenate(([session.source], np.asarray(session.destinations, dtype=np.int64)))
    if ids.min() < 0 or ids.max() >= n:
        raise PredictorError(
            f"Session from node {session.source} refers to nodes outside 0..{n - 1}"
        )
    return ids


def session_load(session: DisseminationSession, deployment: TorusDeployment) -> SessionLoad:
    """
    Spanning-tree length over the source and its destination nodes.
    """
    ids = _check_ids(session, deployment.n)
    tree = emst_length(deployment.positions[ids], deployment.side)
    return SessionLoad(session.source, tree.total_length, session.rate * tree.total_length)


def anchor_session_load(session: DisseminationSession, deployment: TorusDeployment) -> SessionLoad:
    """
    Spanning-tree length over the source and its anchors instead of nodes.
    """
    _check_ids(session, deployment.n)
    points = np.vstack((deployment.positions[session.source], session.anchor_subset))
    tree = emst_length(points, deployment.side)
    return SessionLoad(session.source, tree.total_length, session.rate * tree.total_length)


def anchor_offset_sum(sessions: Iterable[DisseminationSession], deployment: TorusDeployment) -> float:
    """
    Total distance between each session anchor and the node it maps to.
    """
    parts = [
        torus_distances(
            session.anchor_subset, deployment.positions[session.anchor_nodes], deployment.side,
        ).tolist()
        for session in sessions
    ]
    return math.fsum(value for part in parts for value in part)


@dataclass(frozen=True)
class DecileShare:
    """
    Load carried by one tenth of the sessions, ranked by destination count.
    """
    decile: int
    fewest: int
    most: int
    sessions: int
    load: float


@dataclass(frozen=True)
class TransportComplexity:
    """
    Sum of session loads.

    Attributes:
        total:
            Sum over sessions of rate times node-tree length.
        anchor_total:
            Same over anchor trees, if it was measured.
        sessions:
            Number of sessions.
        deciles:
            Load broken down by destination-count decile.
    """
    total: float
    anchor_total: Optional[float]
    sessions: int
    deciles: Tuple[DecileShare, ...]


def _measure_span(
    sessions: Sequence[DisseminationSession],
    deployment: TorusDeployment,
    anchors: bool,
) -> List[Tuple[float, float]]:
    results = []
    for session in sessions:
        load = session_load(session, deployment).load
        anchor = anchor_session_load(session, deployment).load if anchors else 0.0
        results.append((load, anchor))
    return results


def _deciles(counts: np.ndarray, loads: np.ndarray) -> Tuple[DecileShare, ...]:
    order = np.argsort(counts, kind='stable')
    shares = []
    for decile, chunk in enumerate(np.array_split(order, 10), start=1):
        if len(chunk) == 0:
            continue
        shares.append(DecileShare(
            decile=decile,
            fewest=int(counts[chunk].min()),
            most=int(counts[chunk].max()),
            sessions=len(chunk),
            load=math.fsum(loads[chunk].tolist()),
        ))
    return tuple(shares)


def total_transport_complexity(
    sessions: Sequence[DisseminationSession],
    deployment: TorusDeployment,
    workers: int = 1,
    anchors: bool = True,
) -> TransportComplexity:
    """
    Total transport load of a set of sessions, in bit-meters per second.

    Args:
        sessions:
            At least one session, each with at least one destination.
        deployment:
            Positions of nodes referred to by sessions.
        workers:
            Size of process pool. Totals do not depend on it.
        anchors:
            Also measure the anchor-tree total.

    Raises:
        PredictorError:
            If there are no sessions, or a session refers to a node not in
            the deployment.

    Returns:
        Totals and their breakdown by destination count.
    """
    sessions = list(sessions)
    if not sessions:
        raise PredictorError("No sessions to measure")

    chunks = max(1, min(int(workers) * 4, len(sessions) // 64))
    spans = [list(chunk) for chunk in np.array_split(np.arange(len(sessions)), chunks) if len(chunk)]
    batches = [[sessions[i] for i in span] for span in spans]
    if workers > 1 and len(batches) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as executor:
            parts = list(executor.map(_measure_span, batches, repeat(deployment), repeat(anchors)))
    else:
        parts = [_measure_span(batch, deployment, anchors) for batch in batches]

    results = np.array([result for part in parts for result in part], dtype=float)
    loads, anchor_loads = results[:, 0], results[:, 1]
    counts = np.array([len(session.destinations) for session in sessions])
    complexity = TransportComplexity(
        total=math.fsum(loads.tolist()),
        anchor_total=math.fsum(anchor_loads.tolist()) if anchors else None,
        sessions=len(sessions),
        deciles=_deciles(counts, loads),
    )
    logger.info(
        "Transport complexity of %s sessions: %.6g (anchor trees %s)",
        complexity.sessions, complexity.total, complexity.anchor_total,
    )
    return complexity
