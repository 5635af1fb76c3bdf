from collections import Counter, defaultdict
import os
from unittest import skipUnless, TestCase

import numpy as np

from .. import sessions
from ..model import form_social_graph, ModelConfig, node_rng, sample_deployment, STREAM_DEPLOYMENT
from ..sessions import (
    DisseminationSession,
    gen_broadcast_sessions,
    gen_multicast_sessions,
    sample_destination_count,
    SessionError,
)
from ..utils.testing import DocTestLoader, GoodnessOfFitMixin


SLOW_TESTS = bool(os.environ.get('OSN_SLOW_TESTS'))


class DocTests(TestCase, metaclass=DocTestLoader, test_module=sessions):
    pass


def build_graph(n: int, gamma: float, beta: float, seed: int = 0):
    config = ModelConfig(n=n, gamma=gamma, beta=beta, seed=seed)
    deployment = sample_deployment(n, node_rng(seed, STREAM_DEPLOYMENT))
    return deployment, form_social_graph(deployment, config)


class SessionTest(TestCase):
    def test_no_destinations(self) -> None:
        message = r"^Session from node 3 has no destinations$"
        with self.assertRaisesRegex(SessionError, message):
            DisseminationSession(
                source=3,
                destinations=np.zeros(0, dtype=np.int64),
                anchor_subset=np.zeros((0, 2)),
                anchor_nodes=np.zeros(0, dtype=np.int64),
            )

    def test_rate(self) -> None:
        session = DisseminationSession(0, np.array([1]), np.array([[0.5, 0.5]]), np.array([1]))
        self.assertEqual(session.rate, 1.0)


class BroadcastTest(TestCase):
    def test_one_session_per_node(self) -> None:
        _, graph = build_graph(300, 1.5, 1.5, seed=1)
        generated = gen_broadcast_sessions(graph)
        self.assertEqual(len(generated), 300)
        for node, session in enumerate(generated):
            self.assertEqual(session.source, node)
            self.assertEqual(session.destinations.tolist(), graph.friends[node].tolist())
            self.assertEqual(len(session.anchor_subset), graph.degrees[node])

    def test_single_friend(self) -> None:
        _, graph = build_graph(200, 50.0, 1.0, seed=2)
        generated = gen_broadcast_sessions(graph)
        single = [s for s in generated if graph.degrees[s.source] == 1]
        self.assertTrue(single)
        for session in single:
            self.assertEqual(len(session.destinations), 1)


class DestinationCountTest(TestCase):
    def test_uniform_when_phi_zero(self) -> None:
        rng = np.random.default_rng(40)
        counts = Counter(sample_destination_count(4, 0.0, rng) for _ in range(100_000))
        self.assertEqual(set(counts), {1, 2, 3, 4})
        for value in (1, 2, 3, 4):
            self.assertAlmostEqual(counts[value] / 100_000, 0.25, delta=0.01)

    def test_single_friend(self) -> None:
        rng = np.random.default_rng(41)
        self.assertEqual({sample_destination_count(1, 1.5, rng) for _ in range(100)}, {1})

    def test_unicast_limit(self) -> None:
        rng = np.random.default_rng(42)
        draws = [sample_destination_count(100, 50.0, rng) for _ in range(100_000)]
        self.assertGreater(draws.count(1) / len(draws), 0.999)

    def test_bad_friend_count(self) -> None:
        with self.assertRaisesRegex(SessionError, r"^Friend count must be at least one, found: 0$"):
            sample_destination_count(0, 1.0, np.random.default_rng(0))

    def test_bad_phi(self) -> None:
        message = r"^Exponent phi must be finite and non-negative, found: -1\.0$"
        with self.assertRaisesRegex(SessionError, message):
            sample_destination_count(3, -1.0, np.random.default_rng(0))


class MulticastTest(TestCase):
    def test_destinations_are_friends(self) -> None:
        _, graph = build_graph(400, 1.0, 1.0, seed=3)
        generated = gen_multicast_sessions(graph, 1.5, seed=3)
        self.assertEqual(len(generated), 400)
        for node, session in enumerate(generated):
            friends = set(graph.friends[node].tolist())
            destinations = session.destinations.tolist()
            self.assertTrue(set(destinations) <= friends)
            self.assertEqual(len(set(destinations)), len(destinations))
            self.assertGreaterEqual(len(session.anchor_subset), 1)
            self.assertLessEqual(len(session.anchor_subset), graph.degrees[node])
            self.assertEqual(set(session.anchor_nodes.tolist()), set(destinations))

    def test_deterministic(self) -> None:
        _, graph = build_graph(200, 1.0, 1.0, seed=4)
        a = gen_multicast_sessions(graph, 1.0, seed=4)
        b = gen_multicast_sessions(graph, 1.0, seed=4)
        for x, y in zip(a, b):
            self.assertEqual(x.anchor_subset.tobytes(), y.anchor_subset.tobytes())

    def test_uniform_share(self) -> None:
        """
        With φ = 0 the number of chosen anchors is uniform on {1, ..., q}.
        """
        shares = defaultdict(list)
        for seed in range(10):
            _, graph = build_graph(300, 0.5, 1.0, seed=seed)
            for session in gen_multicast_sessions(graph, 0.0, seed=seed):
                degree = int(graph.degrees[session.source])
                shares[degree].append(len(session.anchor_subset) / degree)
        pooled = [
            (np.mean(values), (degree + 1) / (2 * degree), len(values))
            for degree, values in shares.items()
        ]
        observed = sum(mean * count for mean, _, count in pooled) / sum(c for _, _, c in pooled)
        expected = sum(target * count for _, target, count in pooled) / sum(c for _, _, c in pooled)
        self.assertAlmostEqual(observed, expected, delta=0.025)


class DestinationLawTest(GoodnessOfFitMixin, TestCase):
    def test_conditional_zipf_counts(self) -> None:
        """
        Destination counts follow d^(-φ) on {1, ..., q}, pooled by friend count.
        """
        phi = 1.5
        observed = defaultdict(Counter)
        for seed in range(20):
            _, graph = build_graph(300, 1.0, 1.0, seed=seed)
            for session in gen_multicast_sessions(graph, phi, seed=seed):
                degree = int(graph.degrees[session.source])
                observed[degree][len(session.anchor_subset)] += 1

        cells_observed, cells_expected = [], []
        for degree, counts in sorted(observed.items()):
            total = sum(counts.values())
            if degree < 2 or total < 20:
                continue
            weights = np.arange(1, degree + 1, dtype=np.float64) ** -phi
            expected = total * weights / weights.sum()
            # Merge neighbouring counts until each cell expects at least five
            merged_observed, merged_expected = [], []
            pending_observed, pending_expected = 0, 0.0
            for count in range(1, degree + 1):
                pending_observed += counts[count]
                pending_expected += expected[count - 1]
                if pending_expected >= 5.0:
                    merged_observed.append(pending_observed)
                    merged_expected.append(pending_expected)
                    pending_observed, pending_expected = 0, 0.0
            if not merged_observed:
                continue
            merged_observed[-1] += pending_observed
            merged_expected[-1] += pending_expected
            cells_observed.extend(merged_observed)
            cells_expected.extend(merged_expected)

        self.assertGreater(len(cells_observed), 10)
        self.assertChiSquare(cells_observed, cells_expected, alpha=0.01)


class AnchorOffsetTest(TestCase):
    """
    Mean distance from an anchor to the node it maps to does not grow with n.
    """
    def assertFlat(self, ladder) -> None:
        means = []
        for n in ladder:
            deployment, graph = build_graph(n, 2.5, 1.5, seed=n)
            means.append(float(graph.anchor_offsets(deployment).mean()))
        for n, mean in zip(ladder, means):
            with self.subTest(n=n):
                self.assertGreater(mean, 0.25)
                self.assertLess(mean, 1.0)
        self.assertLess(max(means) / min(means), 1.2)

    def test_flat_across_sizes(self) -> None:
        self.assertFlat([2 ** 10, 2 ** 11, 2 ** 12, 2 ** 13])

    @skipUnless(SLOW_TESTS, "Set OSN_SLOW_TESTS to run")
    def test_flat_up_to_65536(self) -> None:
        self.assertFlat([2 ** k for k in range(10, 17)])
