from contextlib import redirect_stdout
from io import StringIO
import json
from unittest import mock

from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .. import __main__ as entry_point
from ..dataset import synthesize_dataset
from ..serialisers import graph_from_dict, load_json, read_csv, sessions_from_dict
from ..utils.testing import run_management_command, TempFolderMixin
from . import DATA_FOLDER


class SimulateTest(TempFolderMixin, SimpleTestCase):
    arguments = ('--n=64', '--gamma=2', '--beta=2', '--seed=3', '--threads=1', '--verbosity=0')

    def test_report(self) -> None:
        output = run_management_command('simulate', *self.arguments)
        report = json.loads(output)
        self.assertEqual(
            list(report),
            ['parameters', 'measurements', 'diagnostics', 'sessions', 'deciles'],
        )
        self.assertEqual(report['parameters']['n'], 64)
        self.assertEqual(report['parameters']['pattern'], 'broadcast')
        self.assertEqual(report['sessions'], 64)
        self.assertGreater(report['measurements']['total-load'], 0.0)
        self.assertEqual(len(report['deciles']), 10)

    def test_deterministic(self) -> None:
        first = self.temp_folder / 'first.json'
        second = self.temp_folder / 'second.json'
        run_management_command('simulate', *self.arguments, f'--output={first}')
        run_management_command('simulate', *self.arguments, f'--output={second}')
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_timings(self) -> None:
        output = run_management_command('simulate', *self.arguments, '--timings')
        self.assertGreater(json.loads(output)['seconds'], 0.0)

    def test_multicast(self) -> None:
        output = run_management_command(
            'simulate', *self.arguments, '--pattern=multicast', '--phi=1.5',
        )
        report = json.loads(output)
        self.assertEqual(report['parameters']['phi'], 1.5)
        self.assertLessEqual(
            report['measurements']['destination-sum'], report['measurements']['degree-sum'],
        )

    def test_dump_graph(self) -> None:
        path = self.temp_folder / 'graph.json'
        output = run_management_command('simulate', *self.arguments, f'--dump-graph={path}')
        data = load_json(path)
        self.assertEqual(data['side'], 8.0)
        self.assertEqual(len(data['positions']), 64)
        graph = graph_from_dict(data)
        self.assertEqual(float(graph.degrees.sum()), json.loads(output)['measurements']['degree-sum'])
        sessions = sessions_from_dict(data['sessions'])
        self.assertEqual([session.source for session in sessions], list(range(64)))
        for session in sessions:
            self.assertEqual(session.destinations.tolist(), graph.friends[session.source].tolist())

    def test_written_to_file(self) -> None:
        path = self.temp_folder / 'report.json'
        output = run_management_command(
            'simulate', '--n=32', '--gamma=3', '--beta=3', '--threads=1', f'--output={path}',
        )
        self.assertIn(f"Measurements written to {path}", output)
        self.assertIn('measurements', load_json(path))

    def test_invalid_gamma(self) -> None:
        message = r"^Invalid parameters:\n  --gamma: Too small\. Enter a number of at least 0$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('simulate', '--n=64', '--gamma=-1', '--beta=2')

    def test_too_small(self) -> None:
        message = r"--n: Ensure this value is greater than or equal to 2"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('simulate', '--n=1', '--gamma=1', '--beta=2')

    def test_multicast_needs_phi(self) -> None:
        message = r"--phi: Required for multicast$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('simulate', '--n=64', '--gamma=1', '--beta=2', '--pattern=multicast')

    def test_required(self) -> None:
        message = r"^Error: the following arguments are required: --beta$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('simulate', '--n=64', '--gamma=1')

    def test_bad_threads(self) -> None:
        message = r"^Thread count must be positive: 0$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('simulate', '--n=64', '--gamma=1', '--beta=1', '--threads=0')


class PredictTest(SimpleTestCase):
    def predict(self, *args: str) -> dict:
        return json.loads(run_management_command('predict', *args))

    def test_linear(self) -> None:
        self.assertEqual(self.predict('--gamma=3', '--beta=3'), {
            'poly': 1.0,
            'logpow': 0.0,
            'exact': {'poly': '1', 'logpow': '0'},
            'source': 'Table II',
            'predictor': 'broadcast-load',
            'order': 'Θ(n)',
        })

    def test_quadratic_multicast(self) -> None:
        prediction = self.predict('--gamma=0.5', '--beta=0.5', '--phi=0.5', '--pattern=multicast')
        self.assertEqual(prediction['poly'], 2.0)
        self.assertEqual(prediction['logpow'], 0.0)
        self.assertEqual(prediction['source'], 'Table IV')

    def test_fractional(self) -> None:
        prediction = self.predict('--gamma=3', '--beta=1.5')
        self.assertEqual(prediction['poly'], 1.25)
        self.assertEqual(prediction['exact'], {'poly': '5/4', 'logpow': '0'})

    def test_degree_dominated(self) -> None:
        self.assertEqual(self.predict('--gamma=1.25', '--beta=3')['poly'], 1.75)

    def test_multicast(self) -> None:
        prediction = self.predict('--gamma=0.5', '--beta=3', '--pattern=multicast', '--phi=3')
        self.assertEqual(prediction['poly'], 1.0)
        self.assertEqual(prediction['predictor'], 'multicast-load')

    def test_measurement(self) -> None:
        prediction = self.predict('--gamma=1.5', '--beta=3', '--measurement=degree-sum')
        self.assertEqual(prediction['poly'], 1.5)
        self.assertEqual(prediction['source'], 'Eq. 11')
        self.assertEqual(prediction['predictor'], 'anchor-count')

    def test_missing_phi(self) -> None:
        message = r"^Invalid parameters:\n  --phi: Required for multicast$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('predict', '--gamma=1', '--beta=1', '--pattern=multicast')

    def test_unknown_measurement(self) -> None:
        with self.assertRaisesRegex(CommandError, r"^Error: argument --measurement: invalid choice"):
            run_management_command('predict', '--gamma=1', '--beta=1', '--measurement=speed')


class SweepTest(TempFolderMixin, SimpleTestCase):
    def write_plan(self, name: str, text: str) -> str:
        path = self.temp_folder / name
        path.write_text(text)
        return str(path)

    def test_sweep(self) -> None:
        plan = self.write_plan('plan.json', json.dumps({
            'n_ladder': [16, 32, 64, 128],
            'gamma': 3,
            'beta': 3,
            'base_seed': 2,
        }))
        folder = self.temp_folder / 'results'
        output = run_management_command('sweep', plan, f'--output={folder}', '--threads=1')
        self.assertIn("total-load: exponent ", output)
        self.assertIn(f"Results written to {folder}", output)
        self.assertEqual(len(read_csv(folder / 'summary.csv')), 4)
        report = load_json(folder / 'report.json')
        self.assertEqual(report['fit']['predicted']['source'], 'broadcast-load')

    def test_not_json(self) -> None:
        plan = self.write_plan('broken.json', "{not json")
        with self.assertRaisesRegex(CommandError, r"broken\.json: not valid JSON: "):
            run_management_command('sweep', plan, f'--output={self.temp_folder}')

    def test_invalid_plan(self) -> None:
        plan = self.write_plan('invalid.json', json.dumps({
            'n_ladder': [64, 128, 128, 512],
            'gamma': 3,
            'beta': 3,
            'colour': 'blue',
        }))
        message = (
            r"^Invalid parameters:\n"
            r"  \$\.colour: unknown key\n"
            r"  \$\.n_ladder\[2\]: must be greater than 128, found 128$"
        )
        with self.assertRaisesRegex(CommandError, message):
            run_management_command('sweep', plan, f'--output={self.temp_folder}')

    def test_plan_not_object(self) -> None:
        plan = self.write_plan('list.json', "[16, 32, 64, 128]")
        with self.assertRaisesRegex(CommandError, r"Plan must be a JSON object, found: 'list'"):
            run_management_command('sweep', plan, f'--output={self.temp_folder}')

    def test_missing_plan(self) -> None:
        with self.assertRaisesRegex(CommandError, r"^Error: argument PLAN: File does not exist: "):
            run_management_command('sweep', '/no/such/plan.json', f'--output={self.temp_folder}')


class ValidateDatasetTest(TempFolderMixin, SimpleTestCase):
    def test_synthetic(self) -> None:
        edges, checkins = synthesize_dataset(self.temp_folder / 'data', 200, 1.0, 0.75, seed=6)
        folder = self.temp_folder / 'fits'
        output = run_management_command(
            'validate_dataset', str(edges), str(checkins),
            f'--output={folder}', '--positions=2000', '--subsample-users=200', '--threads=1',
            '--lat-min=10', '--lat-max=20', '--lon-min=-100', '--lon-max=-90',
        )
        self.assertIn("Located 200 users", output)
        self.assertIn("Friend-count exponent γ = ", output)
        self.assertIn("Formation exponent β = ", output)
        for name in ('degree_counts.csv', 'degree_fit.json', 'formation_bins.csv', 'formation_fit.json'):
            self.assertTrue((folder / name).is_file(), name)
        fit = load_json(folder / 'degree_fit.json')
        self.assertEqual(fit['exponent'], -fit['slope'])
        rows = read_csv(folder / 'degree_counts.csv')
        self.assertEqual(sum(int(row['users']) for row in rows), 200)

    def test_too_few_degrees(self) -> None:
        message = r"^Need at least 10 points to fit, found 2$"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command(
                'validate_dataset', str(DATA_FOLDER / 'edges.txt'), str(DATA_FOLDER / 'checkins.txt'),
                f'--output={self.temp_folder}',
            )

    def test_missing_file(self) -> None:
        message = r"^Error: argument EDGES: File does not exist: "
        with self.assertRaisesRegex(CommandError, message):
            run_management_command(
                'validate_dataset', '/no/such/edges.txt', str(DATA_FOLDER / 'checkins.txt'),
                f'--output={self.temp_folder}',
            )

    def test_zero_subsample(self) -> None:
        message = r"--subsample-users: Ensure this value is greater than or equal to 1"
        with self.assertRaisesRegex(CommandError, message):
            run_management_command(
                'validate_dataset', str(DATA_FOLDER / 'edges.txt'), str(DATA_FOLDER / 'checkins.txt'),
                f'--output={self.temp_folder}', '--subsample-users=0',
            )

    def test_empty_box(self) -> None:
        with self.assertRaisesRegex(CommandError, r"Empty bounding box: \(50\.0, 40\.0, "):
            run_management_command(
                'validate_dataset', str(DATA_FOLDER / 'edges.txt'), str(DATA_FOLDER / 'checkins.txt'),
                f'--output={self.temp_folder}', '--lat-min=50', '--lat-max=40',
            )


class EntryPointTest(SimpleTestCase):
    def test_alias(self) -> None:
        with mock.patch.object(entry_point, 'execute_from_command_line') as execute:
            entry_point.main(['anything', 'validate-dataset', '--help'])
        execute.assert_called_once_with(['osntransport', 'validate_dataset', '--help'])

    def test_runs_command(self) -> None:
        out = StringIO()
        with redirect_stdout(out):
            entry_point.main(['osntransport', 'predict', '--gamma=3', '--beta=3'])
        self.assertEqual(json.loads(out.getvalue())['order'], 'Θ(n)')
