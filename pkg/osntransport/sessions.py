"""
Dissemination sessions: who sends to whom.

Every node is a source. A broadcast session goes to all of a node's
friends; a multicast session goes to a random subset of its anchors' nodes,
sized by a Zipf law conditioned on the node's friend count.
"""

from dataclasses import dataclass
import logging
import math
from typing import List

import numpy as np

from .model import (
    ModelError, node_rng, SocialGraph, STREAM_MULTICAST, zipf_sampler,
)


__all__ = (
    'DisseminationSession',
    'gen_broadcast_sessions',
    'gen_multicast_sessions',
    'PATTERNS',
    'sample_destination_count',
    'SessionError',
)


logger = logging.getLogger(__name__)

PATTERNS = ('broadcast', 'multicast')


class SessionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DisseminationSession:
    """
    One source and its destination nodes.

    Attributes:
        source:
            Id of sending node.
        destinations:
            Distinct destination node ids, all friends of the source.
        anchor_subset:
            The anchors the destinations were chosen through, (d, 2) array.
        anchor_nodes:
            Node nearest each anchor in `anchor_subset`, so may repeat.
        rate:
            Data rate, fixed at one.
    """
    source: int
    destinations: np.ndarray
    anchor_subset: np.ndarray
    anchor_nodes: np.ndarray
    rate: float = 1.0

    def __post_init__(self) -> None:
        if len(self.destinations) == 0:
            raise SessionError(f"Session from node {self.source} has no destinations")


def gen_broadcast_sessions(graph: SocialGraph) -> List[DisseminationSession]:
    """
    One session per node, addressed to all of its friends.
    """
    return [
        DisseminationSession(
            source=node,
            destinations=graph.friends[node],
            anchor_subset=graph.anchor_points[node],
            anchor_nodes=graph.anchor_nodes[node],
        )
        for node in range(graph.n)
    ]


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not (math.isfinite(phi) and phi >= 0):
        raise SessionError(f"Exponent phi must be finite and non-negative, found: {phi!r}")
    return phi


def sample_destination_count(l: int, phi: float, rng: np.random.Generator) -> int:
    """
    Number of destinations for a node with `l` friends.

    Draws from {1, ..., l} with probability proportional to `d^(-φ)`.

        >>> sample_destination_count(1, 2.0, np.random.default_rng(0))
        1

    Raises:
        SessionError:
            If `l` is less than one, or `phi` is negative.
    """
    phi = _check_phi(phi)
    if int(l) != l or l < 1:
        raise SessionError(f"Friend count must be at least one, found: {l!r}")
    try:
        return zipf_sampler(int(l), phi).sample_below(int(l), rng)
    except ModelError as e:
        raise SessionError(str(e)) from None


def gen_multicast_sessions(graph: SocialGraph, phi: float, seed: int) -> List[DisseminationSession]:
    """
    One session per node, addressed to a random subset of its friends.

    A node with `q` anchors draws `d` from the conditional Zipf law, then
    picks `d` of its anchors uniformly without replacement. The chosen
    anchors' nodes are the destinations.

    Args:
        graph:
            Social graph.
        phi:
            Dissemination-pattern exponent, common to every node.
        seed:
            Root seed; each node uses its own substream.

    Returns:
        List of sessions, indexed by source node.
    """
    sampler = zipf_sampler(int(graph.degrees.max()), _check_phi(phi))

    sessions = []
    for node in range(graph.n):
        rng = node_rng(seed, STREAM_MULTICAST, node)
        degree = int(graph.degrees[node])
        count = sampler.sample_below(degree, rng)
        chosen = np.sort(rng.choice(degree, size=count, replace=False))
        owners = graph.anchor_nodes[node][chosen]
        _, first = np.unique(owners, return_index=True)
        sessions.append(DisseminationSession(
            source=node,
            destinations=owners[np.sort(first)],
            anchor_subset=graph.anchor_points[node][chosen],
            anchor_nodes=owners,
        ))

    logger.info(
        "Generated %s multicast sessions with %s destination anchors",
        len(sessions), sum(len(s.anchor_subset) for s in sessions),
    )
    return sessions
