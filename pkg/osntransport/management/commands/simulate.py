from pathlib import Path
from typing import Any, Dict

from django.core.management.base import CommandError, CommandParser

from ...experiments import simulate, SweepError
from ...forms import SimulateForm
from ...model import ModelError
from ...serialisers import dump_json, dumps, graph_to_dict, sessions_to_dict
from ...sessions import PATTERNS, SessionError
from ..base import CommandBase


class Command(CommandBase):
    help = "Build one synthetic social network and measure its transport load"

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            '--n', type=int, required=True,
            help="number of users, and area of the torus in unit squares",
        )
        parser.add_argument(
            '--gamma', type=float, required=True,
            help="exponent of the friend-count law, dimensionless",
        )
        parser.add_argument(
            '--beta', type=float, required=True,
            help="exponent of the population-distance law, dimensionless",
        )
        parser.add_argument(
            '--phi', type=float,
            help="exponent of the destination-count law, dimensionless. Multicast only",
        )
        parser.add_argument(
            '--pattern', choices=PATTERNS, default='broadcast',
            help="dissemination pattern (default: %(default)s)",
        )
        parser.add_argument(
            '--seed', type=int, default=0,
            help="root of every random stream, 0 to 2**64 - 1 (default: %(default)s)",
        )
        parser.add_argument(
            '--output', type=Path, metavar='FILE',
            help="write measurements to this JSON file instead of standard output",
        )
        parser.add_argument(
            '--dump-graph', type=Path, metavar='FILE',
            help="also write the social graph and its sessions as JSON, positions in torus units",
        )
        parser.add_argument(
            '--timings', action='store_true',
            help="include wall time in seconds, making output differ run to run",
        )
        super().add_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        data = self.validate(SimulateForm, {
            key: options[key] for key in ('n', 'gamma', 'beta', 'phi', 'pattern', 'seed')
        })
        workers = self.threads(options)
        try:
            result = simulate(
                data['n'], data['gamma'], data['beta'], data['pattern'], data['phi'],
                seed=data['seed'], workers=workers,
            )
        except (ModelError, SessionError, SweepError) as e:
            raise CommandError(str(e)) from None

        report: Dict[str, Any] = {
            'parameters': data,
            'measurements': result.values,
            'diagnostics': result.diagnostics,
            'sessions': result.complexity.sessions,
            'deciles': result.complexity.deciles,
        }
        if options['timings']:
            report['seconds'] = result.seconds

        if options['dump_graph'] is not None:
            graph = graph_to_dict(result.graph)
            graph['side'] = result.deployment.side
            graph['positions'] = result.deployment.positions
            graph['sessions'] = sessions_to_dict(result.sessions)
            dump_json(graph, options['dump_graph'])

        if options['output'] is None:
            self.info(dumps(report))
        else:
            dump_json(report, options['output'])
            self.success(f"Measurements written to {options['output']}")
