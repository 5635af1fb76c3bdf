from dataclasses import dataclass
from fractions import Fraction
import json
from unittest import TestCase

import numpy as np

from .. import serialisers
from ..model import form_social_graph, ModelConfig, node_rng, sample_deployment, STREAM_DEPLOYMENT
from ..serialisers import (
    dump_json,
    dumps,
    graph_from_dict,
    graph_to_dict,
    load_json,
    read_csv,
    ReportEncoder,
    sessions_from_dict,
    sessions_to_dict,
    write_csv,
)
from ..sessions import gen_multicast_sessions, SessionError
from ..utils.testing import DocTestLoader, TempFolderMixin


class DocTests(TestCase, metaclass=DocTestLoader, test_module=serialisers):
    pass


@dataclass(frozen=True)
class Share:
    decile: int
    load: float


class ReportEncoderTest(TestCase):
    def encode(self, value: object) -> str:
        return json.dumps(value, cls=ReportEncoder)

    def test_numpy(self) -> None:
        self.assertEqual(self.encode(np.float64(0.5)), '0.5')
        self.assertEqual(self.encode(np.arange(3)), '[0, 1, 2]')

    def test_fraction(self) -> None:
        self.assertEqual(self.encode(Fraction(5, 4)), '1.25')

    def test_dataclass(self) -> None:
        self.assertEqual(self.encode(Share(1, 2.5)), '{"decile": 1, "load": 2.5}')


class DumpsTest(TestCase):
    def test_non_finite(self) -> None:
        data = {'values': [1.0, float('nan'), float('-inf')], 'nested': {'x': np.float64('inf')}}
        self.assertEqual(
            json.loads(dumps(data)),
            {'values': [1.0, None, None], 'nested': {'x': None}},
        )

    def test_unicode(self) -> None:
        self.assertIn('Θ(n)', dumps({'order': 'Θ(n)'}))


class FilesTest(TempFolderMixin, TestCase):
    def test_json(self) -> None:
        path = dump_json({'exponent': 1.25, 'points': np.int64(5)}, self.temp_folder / 'fit.json')
        self.assertTrue(path.read_text().endswith('}\n'))
        self.assertEqual(load_json(path), {'exponent': 1.25, 'points': 5})

    def test_csv(self) -> None:
        rows = [
            {'n': 64, 'mean': np.float64(0.1), 'stderr': None},
            {'n': 128, 'mean': 1e-20, 'stderr': 0.5, 'ignored': 'x'},
        ]
        path = write_csv(self.temp_folder / 'summary.csv', ('n', 'mean', 'stderr'), rows)
        self.assertEqual(read_csv(path), [
            {'n': '64', 'mean': '0.1', 'stderr': ''},
            {'n': '128', 'mean': '1e-20', 'stderr': '0.5'},
        ])

    def test_empty_csv(self) -> None:
        path = write_csv(self.temp_folder / 'empty.csv', ('n',), [])
        self.assertEqual(path.read_bytes(), b'n\r\n')
        self.assertEqual(read_csv(path), [])


class GraphDictTest(TestCase):
    def test_rebuilt_graph_matches(self) -> None:
        config = ModelConfig(n=100, gamma=1.5, beta=1.5, seed=4)
        deployment = sample_deployment(config.n, node_rng(config.seed, STREAM_DEPLOYMENT))
        graph = form_social_graph(deployment, config)
        data = json.loads(dumps(graph_to_dict(graph)))
        again = graph_from_dict(data)
        self.assertEqual(again.n, graph.n)
        self.assertEqual(again.degrees.tolist(), graph.degrees.tolist())
        for node in range(graph.n):
            self.assertEqual(again.friends[node].tolist(), graph.friends[node].tolist())
            self.assertEqual(again.anchor_nodes[node].tolist(), graph.anchor_nodes[node].tolist())
            self.assertTrue(np.array_equal(again.anchor_points[node], graph.anchor_points[node]))
        self.assertTrue(np.array_equal(
            again.anchor_distances(deployment), graph.anchor_distances(deployment),
        ))


class SessionsDictTest(TestCase):
    def test_rebuilt_sessions_match(self) -> None:
        config = ModelConfig(n=100, gamma=1.5, beta=1.5, seed=5)
        deployment = sample_deployment(config.n, node_rng(config.seed, STREAM_DEPLOYMENT))
        graph = form_social_graph(deployment, config)
        sessions = gen_multicast_sessions(graph, 1.5, config.seed)
        data = json.loads(dumps(sessions_to_dict(sessions)))
        self.assertEqual(
            list(data[0]), ['source', 'destinations', 'anchor_subset', 'anchor_nodes', 'rate'],
        )
        again = sessions_from_dict(data)
        self.assertEqual(len(again), len(sessions))
        for before, after in zip(sessions, again):
            self.assertEqual(after.source, before.source)
            self.assertEqual(after.destinations.tolist(), before.destinations.tolist())
            self.assertEqual(after.anchor_nodes.tolist(), before.anchor_nodes.tolist())
            self.assertTrue(np.array_equal(after.anchor_subset, before.anchor_subset))
            self.assertEqual(after.rate, 1.0)

    def test_no_destinations(self) -> None:
        data = [{'source': 3, 'destinations': [], 'anchor_subset': [], 'anchor_nodes': []}]
        with self.assertRaisesRegex(SessionError, r"^Session from node 3 has no destinations$"):
            sessions_from_dict(data)
