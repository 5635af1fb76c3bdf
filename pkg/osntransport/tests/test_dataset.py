import math
import os
from pathlib import Path
from unittest import skipUnless, TestCase

import numpy as np

from .. import dataset
from ..conf import get_setting
from ..dataset import (
    BinnedPoint,
    BoundingBox,
    Checkin,
    CheckinLog,
    DatasetError,
    estimate_user_location,
    fit_degree_exponent,
    fit_formation_exponent,
    GeoUser,
    locate_users,
    parse_checkins,
    parse_edges,
    population_distance_experiment,
    PopulationIndex,
    synthesize_dataset,
    synthetic_network,
    write_checkins,
    write_edges,
)
from ..geometry import haversine_array, torus_distances
from ..model import zipf_sampler
from ..utils.testing import DocTestLoader, TempFolderMixin
from . import DATA_FOLDER


SLOW_TESTS = bool(os.environ.get('OSN_SLOW_TESTS'))
GOWALLA_FOLDER = get_setting('OSN_GOWALLA_FOLDER')


class DocTests(TestCase, metaclass=DocTestLoader, test_module=dataset):
    pass


class ParseEdgesTest(TempFolderMixin, TestCase):
    def test_parse(self) -> None:
        edges = parse_edges(DATA_FOLDER / 'edges.txt')
        self.assertEqual(edges, [(0, 1), (0, 2), (1, 0), (2, 0), (2, 3), (3, 2)])

    def test_single_line(self) -> None:
        path = self.temp_folder / 'single.txt'
        path.write_text("0\t1\n")
        self.assertEqual(parse_edges(path), [(0, 1)])

    def test_empty(self) -> None:
        path = self.temp_folder / 'empty.txt'
        path.write_text("")
        self.assertEqual(parse_edges(path), [])

    def test_round_trip(self) -> None:
        edges = parse_edges(DATA_FOLDER / 'edges.txt')
        path = write_edges(edges, self.temp_folder / 'edges.txt')
        self.assertEqual(parse_edges(path), edges)

    def test_not_integer(self) -> None:
        path = self.temp_folder / 'letters.txt'
        path.write_text("0\t1\n\nfoo\tbar\n")
        with self.assertRaisesRegex(DatasetError, r"letters\.txt, line 3: invalid literal"):
            parse_edges(path)

    def test_too_many_fields(self) -> None:
        path = self.temp_folder / 'three.txt'
        path.write_text("0 1 2\n")
        message = r"three\.txt, line 1: expected two ids, found 3 fields$"
        with self.assertRaisesRegex(DatasetError, message):
            parse_edges(path)


class ParseCheckinsTest(TempFolderMixin, TestCase):
    def test_parse(self) -> None:
        log = parse_checkins(DATA_FOLDER / 'checkins.txt')
        self.assertEqual(log.records, 7)
        self.assertEqual(log.skipped, 1)
        self.assertEqual(sorted(log.checkins), [0, 1, 2, 3])
        self.assertEqual(len(log.checkins[0]), 3)
        self.assertEqual(len(log.checkins[3]), 1)
        self.assertEqual(
            log.checkins[1][0],
            Checkin(1, '2010-10-12T00:21:28Z', 40.6438845363, -73.7828063965, '23261'),
        )

    def test_round_trip(self) -> None:
        log = parse_checkins(DATA_FOLDER / 'checkins.txt')
        path = write_checkins(log, self.temp_folder / 'checkins.txt')
        again = parse_checkins(path)
        self.assertEqual(again.checkins, log.checkins)
        self.assertEqual(again.records, 6)
        self.assertEqual(again.skipped, 0)

    def test_missing_field(self) -> None:
        path = self.temp_folder / 'short.txt'
        path.write_text("0\t2010-10-19T23:55:27Z\t30.2\t-97.7\t1\n0\t2010-10-19T23:55:27Z\t30.2\t-97.7\n")
        message = r"short\.txt, line 2: expected five fields, found 4$"
        with self.assertRaisesRegex(DatasetError, message):
            parse_checkins(path)

    def test_bad_latitude(self) -> None:
        path = self.temp_folder / 'latitude.txt'
        path.write_text("0\t2010-10-19T23:55:27Z\tnorth\t-97.7\t1\n")
        with self.assertRaisesRegex(DatasetError, r"latitude\.txt, line 1: could not convert"):
            parse_checkins(path)


class UserLocationTest(TestCase):
    def checkin(self, lat: float, lon: float) -> Checkin:
        return Checkin(7, '2010-10-19T23:55:27Z', lat, lon, 'x')

    def test_single(self) -> None:
        self.assertEqual(estimate_user_location([self.checkin(45.5, -122.6)]), (45.5, -122.6))

    def test_midpoint(self) -> None:
        location = estimate_user_location([self.checkin(10.0, 20.0), self.checkin(20.0, 30.0)])
        self.assertEqual(location, (15.0, 25.0))

    def test_robust_to_travel(self) -> None:
        checkins = [self.checkin(10.0, 20.0)] * 99 + [self.checkin(-10.0, -160.0)]
        self.assertEqual(estimate_user_location(checkins), (10.0, 20.0))

    def test_no_checkins(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^Cannot locate a user without check-ins$"):
            estimate_user_location([])

    def test_locate_users(self) -> None:
        log = parse_checkins(DATA_FOLDER / 'checkins.txt')
        edges = parse_edges(DATA_FOLDER / 'edges.txt')
        users = locate_users(log, edges)
        self.assertEqual([(u.user_id, u.degree) for u in users], [(0, 2), (1, 1), (3, 1)])
        self.assertEqual((users[0].lat, users[0].lon), (30.2557309927, -97.7633857727))
        self.assertEqual((users[2].lat, users[2].lon), (40.75, -73.99))

    def test_locate_users_in_box(self) -> None:
        log = parse_checkins(DATA_FOLDER / 'checkins.txt')
        edges = parse_edges(DATA_FOLDER / 'edges.txt')
        europe = BoundingBox(35.0, 70.0, -10.0, 40.0)
        users = locate_users(log, edges, europe)
        self.assertEqual([(u.user_id, u.degree) for u in users], [(2, 2)])

    def test_locate_nobody(self) -> None:
        self.assertEqual(locate_users(CheckinLog(checkins={}), []), [])


class BoundingBoxTest(TestCase):
    def test_contains_exhaustive(self) -> None:
        box = BoundingBox(7.0, 72.0, -170.0, -50.0)
        lat, lon = np.meshgrid(np.arange(-90, 91, 0.5), np.arange(-180, 181, 0.5))
        lat, lon = lat.ravel(), lon.ravel()
        expected = (7 <= lat) & (lat <= 72) & (-170 <= lon) & (lon <= -50)
        self.assertEqual(box.contains(lat, lon).tolist(), expected.tolist())

    def test_sample_inside(self) -> None:
        box = BoundingBox(-0.5, 0.5, -0.5, 2.5)
        lat, lon = box.sample(10_000, np.random.default_rng(1))
        self.assertTrue(box.contains(lat, lon).all())

    def test_check(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^Invalid latitude range: 10\.0 to 5\.0$"):
            BoundingBox(10.0, 5.0, 0.0, 1.0).check()
        with self.assertRaisesRegex(DatasetError, r"^Invalid longitude range: 0\.0 to 200\.0$"):
            BoundingBox(0.0, 1.0, 0.0, 200.0).check()


class PopulationIndexTest(TestCase):
    def test_count_matches_linear_scan(self) -> None:
        rng = np.random.default_rng(11)
        box = BoundingBox.default()
        lat, lon = box.sample(500, rng)
        index = PopulationIndex(lat, lon)
        p_lat, p_lon = box.sample(1000, rng)
        for user, plat, plon in zip(rng.integers(0, 500, 1000), p_lat, p_lon):
            radius = haversine_array(lat[user], lon[user], plat, plon)
            scan = int((haversine_array(lat[user], lon[user], lat, lon) <= radius).sum()) - 1
            self.assertEqual(index.count_within(int(user), radius).tolist(), [scan])

    def test_counts_exclude_self(self) -> None:
        index = PopulationIndex(np.zeros(3), np.array([0.0, 1.0, 2.0]))
        self.assertEqual(index.count_within(0, [0.0, 120.0, 250.0]).tolist(), [0, 1, 2])

    def test_nearest(self) -> None:
        index = PopulationIndex(np.zeros(3), np.array([0.0, 1.0, 2.0]))
        nearest, distance = index.nearest(np.array([0.0, 0.1]), np.array([0.9, 2.0]))
        self.assertEqual(nearest.tolist(), [1, 2])
        self.assertAlmostEqual(distance[1], 11.119, places=2)


class DegreeFitTest(TestCase):
    @staticmethod
    def users(degrees: np.ndarray) -> list:
        return [GeoUser(i, 0.0, 0.0, int(d)) for i, d in enumerate(degrees)]

    def test_recovers_zipf_exponent(self) -> None:
        n = 50_000
        degrees = zipf_sampler(n - 1, 1.776).sample(np.random.default_rng(5), size=n)
        fit = fit_degree_exponent(self.users(degrees))
        self.assertGreaterEqual(fit.exponent, 1.65)
        self.assertLessEqual(fit.exponent, 1.90)
        self.assertEqual(fit.binning, 'raw-head')
        self.assertGreaterEqual(fit.points, 10)

    def test_exact_power_law(self) -> None:
        degrees = np.repeat(np.arange(1, 13), [round(1e6 * k ** -2.0) for k in range(1, 13)])
        fit = fit_degree_exponent(self.users(degrees))
        self.assertAlmostEqual(fit.exponent, 2.0, delta=1e-4)
        self.assertGreater(fit.r_squared, 0.9999)
        self.assertEqual(fit.points, 12)

    def test_tail_past_gap_ignored(self) -> None:
        head = np.repeat(np.arange(1, 13), [round(1e6 * k ** -2.0) for k in range(1, 13)])
        degrees = np.concatenate([head, [40, 70, 100, 250]])
        fit = fit_degree_exponent(self.users(degrees))
        self.assertEqual(fit.binning, 'raw-head')
        self.assertEqual(fit.points, 12)
        self.assertAlmostEqual(fit.exponent, 2.0, delta=1e-4)

    def test_gap_fits_every_degree(self) -> None:
        present = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]
        degrees = np.repeat(present, [1000 // k for k in present])
        with self.assertLogs('osntransport.dataset', 'WARNING'):
            fit = fit_degree_exponent(self.users(degrees))
        self.assertEqual(fit.binning, 'raw')
        self.assertEqual(fit.points, 11)

    def test_all_degrees_equal(self) -> None:
        message = r"^Need at least 10 points to fit, found 1$"
        with self.assertRaisesRegex(DatasetError, message):
            fit_degree_exponent(self.users(np.full(100, 5)))

    def test_no_friends(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^No users with friends$"):
            fit_degree_exponent(self.users(np.zeros(10)))


class FormationExperimentTest(TempFolderMixin, TestCase):
    def test_only_friend_nearest(self) -> None:
        users = [GeoUser(i, 0.0, float(i), 2) for i in range(3)]
        edges = [(a, b) for a in range(3) for b in range(3) if a != b]
        box = BoundingBox(-0.5, 0.5, -0.5, 2.5)
        points = population_distance_experiment(users, edges, 3000, 40.0, box, seed=1)
        self.assertTrue(points)
        for point in points:
            self.assertEqual(point.y, 0.0)
            self.assertEqual(point.numerator, point.denominator)
            self.assertLess(min(abs(point.x), abs(point.x - math.log10(2))), 1e-9)

    def test_no_positions_retained(self) -> None:
        users = [GeoUser(0, 0.0, 0.0, 1), GeoUser(1, 0.0, 0.1, 1)]
        box = BoundingBox(40.0, 41.0, 40.0, 41.0)
        with self.assertRaisesRegex(DatasetError, r"^No sampled position lies within 10\.0 km"):
            population_distance_experiment(users, [(0, 1)], 100, 10.0, box)

    def test_too_few_users(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^Need at least two located users, found 1$"):
            population_distance_experiment([GeoUser(0, 0.0, 0.0, 1)], [], 100, 10.0)

    def test_synthetic(self) -> None:
        folder = self.temp_folder / 'synthetic'
        edges_path, checkins_path = synthesize_dataset(folder, 200, 1.0, 0.75, seed=3)
        edges = parse_edges(edges_path)
        users = locate_users(parse_checkins(checkins_path), edges)
        self.assertEqual(len(users), 200)
        self.assertTrue(all(u.degree >= 1 for u in users))

        box = BoundingBox.synthetic()
        single = population_distance_experiment(users, edges, 2000, 200.0, box, seed=4, workers=1)
        pooled = population_distance_experiment(users, edges, 2000, 200.0, box, seed=4, workers=2)
        self.assertEqual(
            [(p.numerator, p.denominator) for p in single],
            [(p.numerator, p.denominator) for p in pooled],
        )
        for a, b in zip(single, pooled):
            self.assertAlmostEqual(a.x, b.x, places=9)
        self.assertTrue(all(p.y is None or p.y <= 0.0 for p in single))
        self.assertEqual([p.low for p in single], sorted(p.low for p in single))


class SyntheticNetworkTest(TempFolderMixin, TestCase):
    def test_window(self) -> None:
        deployment, graph = synthetic_network(50, 1.5, 1.0, seed=2)
        self.assertEqual(deployment.n, 200)
        self.assertEqual(deployment.side, 2.0 * math.sqrt(50))
        quarter = deployment.side / 4.0
        inside = np.all(
            (deployment.positions >= quarter) & (deployment.positions < 3.0 * quarter), axis=1,
        )
        self.assertTrue(inside[:50].all())
        self.assertFalse(inside[50:].any())

    def test_window_friends_do_not_wrap(self) -> None:
        deployment, graph = synthetic_network(100, 1.0, 0.5, seed=5)
        positions = deployment.positions
        for user in range(100):
            friends = graph.friends[user][graph.friends[user] < 100]
            plain = np.hypot(*(positions[friends] - positions[user]).T)
            torus = torus_distances(positions[friends], positions[user], deployment.side)
            self.assertTrue(np.allclose(plain, torus))

    def test_edges_from_model(self) -> None:
        edges_path, checkins_path = synthesize_dataset(self.temp_folder, 50, 1.5, 1.0, seed=2)
        _, graph = synthetic_network(50, 1.5, 1.0, seed=2)
        expected = sorted((user, int(friend)) for user in range(50) for friend in graph.friends[user])
        self.assertEqual(parse_edges(edges_path), expected)
        log = parse_checkins(checkins_path)
        self.assertEqual(sorted(log.checkins), list(range(50)))
        box = BoundingBox.synthetic()
        lat = np.array([log.checkins[user][0].lat for user in range(50)])
        lon = np.array([log.checkins[user][0].lon for user in range(50)])
        self.assertTrue(box.contains(lat, lon).all())

    def test_symmetric(self) -> None:
        edges_path, _ = synthesize_dataset(self.temp_folder, 30, 1.5, 1.0, seed=4, symmetric=True)
        edges = set(parse_edges(edges_path))
        self.assertEqual(edges, {(b, a) for a, b in edges})

    def test_too_few_users(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^Need at least two users, found n=1$"):
            synthesize_dataset(self.temp_folder, 1, 1.0, 1.0)


class FormationFitTest(TestCase):
    def test_exact_line(self) -> None:
        fit = fit_formation_exponent([(x / 4, -0.7 * x / 4) for x in range(12)])
        self.assertAlmostEqual(fit.slope, -0.7, delta=1e-9)
        self.assertAlmostEqual(fit.exponent, 0.7, delta=1e-9)
        self.assertAlmostEqual(fit.intercept, 0.0, delta=1e-9)

    def test_sparse_bins_dropped(self) -> None:
        points = [
            BinnedPoint(x=i / 4, y=-0.5 * i / 4, numerator=50, denominator=200, low=1, high=2)
            for i in range(10)
        ]
        points.append(BinnedPoint(x=3.0, y=0.0, numerator=1, denominator=1, low=1, high=2))
        points.append(BinnedPoint(x=3.5, y=None, numerator=0, denominator=500, low=1, high=2))
        fit = fit_formation_exponent(points)
        self.assertEqual(fit.points, 10)
        self.assertAlmostEqual(fit.exponent, 0.5, delta=1e-9)

    def test_too_few_bins(self) -> None:
        with self.assertRaisesRegex(DatasetError, r"^Need at least 10 points to fit, found 9$"):
            fit_formation_exponent([(x, -x) for x in range(9)])


@skipUnless(SLOW_TESTS, "Set OSN_SLOW_TESTS to run")
class SyntheticRecoveryTest(TempFolderMixin, TestCase):
    def recover(self, beta: float) -> float:
        folder = self.temp_folder / f"beta-{beta}"
        edges_path, checkins_path = synthesize_dataset(folder, 3000, 1.0, beta, seed=7)
        edges = parse_edges(edges_path)
        users = locate_users(parse_checkins(checkins_path), edges)
        points = population_distance_experiment(
            users, edges, 20_000, 200.0, BoundingBox.synthetic(),
            subsample=1000, seed=8, workers=os.cpu_count() or 1,
        )
        return fit_formation_exponent(points).exponent

    def test_beta_0752(self) -> None:
        self.assertAlmostEqual(self.recover(0.752), 0.752, delta=0.15)

    def test_beta_1(self) -> None:
        self.assertAlmostEqual(self.recover(1.0), 1.0, delta=0.15)


@skipUnless(GOWALLA_FOLDER, "Set OSN_GOWALLA_FOLDER to the SNAP loc-gowalla files to run")
class GowallaTest(TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        super().setUpClass()
        folder = Path(GOWALLA_FOLDER)
        cls.edges = parse_edges(folder / 'loc-gowalla_edges.txt')
        cls.users = locate_users(parse_checkins(folder / 'loc-gowalla_totalCheckins.txt'), cls.edges)

    def test_edge_count(self) -> None:
        self.assertEqual(len(self.edges), 950_327 * 2)

    def test_degree_exponent(self) -> None:
        self.assertAlmostEqual(fit_degree_exponent(self.users).exponent, 1.776, delta=0.15)

    def test_formation_exponent(self) -> None:
        points = population_distance_experiment(
            self.users, self.edges, 20_000, 200.0, subsample=3000, workers=os.cpu_count() or 1,
        )
        self.assertAlmostEqual(fit_formation_exponent(points).exponent, 0.752, delta=0.15)
