from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict

import numpy as np
from django.core.management.base import CommandError, CommandParser

from ...dataset import (
    BoundingBox, DatasetError, fit_degree_exponent, fit_formation_exponent,
    FitResult, locate_users, parse_checkins, parse_edges,
    population_distance_experiment,
)
from ...forms import DatasetForm
from ...serialisers import dump_json, write_csv
from ..base import CommandBase, existing_file_type


FULL_POSITIONS = 120_000
BIN_FIELDS = ('x', 'y', 'numerator', 'denominator', 'low', 'high')


def fit_to_dict(fit: FitResult) -> Dict[str, Any]:
    return {**asdict(fit), 'exponent': fit.exponent}


class Command(CommandBase):
    help = (
        "Estimate the friend-count and friendship-formation exponents "
        "from a location-based social network dump"
    )

    def add_arguments(self, parser: CommandParser) -> None:
        default = BoundingBox.default()
        parser.add_argument(
            'edges', metavar='EDGES', type=existing_file_type,
            help="friendship file, two whitespace-separated user ids per line",
        )
        parser.add_argument(
            'checkins', metavar='CHECKINS', type=existing_file_type,
            help="check-in file: user, time, latitude, longitude, location; tab-separated",
        )
        parser.add_argument(
            '--output', type=Path, metavar='FOLDER', required=True,
            help="folder for fit JSON and binned CSV files, created if missing",
        )
        parser.add_argument(
            '--subsample-users', type=int, default=3000, metavar='COUNT',
            help="users sampled for the formation experiment (default: %(default)s)",
        )
        parser.add_argument(
            '--positions', type=int, default=20_000, metavar='COUNT',
            help="random positions drawn over the box (default: %(default)s)",
        )
        parser.add_argument(
            '--distance-km', type=float, default=200.0, metavar='KM',
            help=(
                "positions farther than this from every user, in kilometres, "
                "are discarded (default: %(default)s)"
            ),
        )
        parser.add_argument(
            '--per-decade', type=int, default=10, metavar='COUNT',
            help="logarithmic bins per decade of population (default: %(default)s)",
        )
        parser.add_argument(
            '--seed', type=int, default=0,
            help="seed for positions and subsample (default: %(default)s)",
        )
        parser.add_argument(
            '--full', action='store_true',
            help=f"use every user and {FULL_POSITIONS} positions",
        )
        parser.add_argument(
            '--lat-min', type=float, default=default.lat_min, metavar='DEGREES',
            help="southern edge of box, degrees (default: %(default)s)",
        )
        parser.add_argument(
            '--lat-max', type=float, default=default.lat_max, metavar='DEGREES',
            help="northern edge of box, degrees (default: %(default)s)",
        )
        parser.add_argument(
            '--lon-min', type=float, default=default.lon_min, metavar='DEGREES',
            help="western edge of box, degrees (default: %(default)s)",
        )
        parser.add_argument(
            '--lon-max', type=float, default=default.lon_max, metavar='DEGREES',
            help="eastern edge of box, degrees (default: %(default)s)",
        )
        super().add_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        keys = (
            'subsample_users', 'positions', 'distance_km', 'per_decade', 'seed',
            'lat_min', 'lat_max', 'lon_min', 'lon_max',
        )
        data = self.validate(DatasetForm, {key: options[key] for key in keys})
        if options['full']:
            data['subsample_users'] = None
            data['positions'] = FULL_POSITIONS
        workers = self.threads(options)
        folder = Path(options['output'])
        folder.mkdir(parents=True, exist_ok=True)

        try:
            edges = parse_edges(options['edges'])
            log = parse_checkins(options['checkins'])
            users = locate_users(log, edges, data['box'])
            self.info(f"Located {len(users):,} users inside {tuple(data['box'])}")

            degree_fit = fit_degree_exponent(users)
            degrees = np.bincount([u.degree for u in users])
            write_csv(
                folder / 'degree_counts.csv', ('degree', 'users'),
                ({'degree': k, 'users': count} for k, count in enumerate(degrees) if k and count),
            )
            dump_json(fit_to_dict(degree_fit), folder / 'degree_fit.json')

            points = population_distance_experiment(
                users, edges,
                sample_count=data['positions'],
                d_f_km=data['distance_km'],
                box=data['box'],
                subsample=data['subsample_users'],
                seed=data['seed'],
                workers=workers,
                per_decade=data['per_decade'],
            )
            write_csv(folder / 'formation_bins.csv', BIN_FIELDS, (asdict(p) for p in points))
            formation_fit = fit_formation_exponent(points)
            dump_json(fit_to_dict(formation_fit), folder / 'formation_fit.json')
        except DatasetError as e:
            raise CommandError(str(e)) from None

        self.success(f"Friend-count exponent γ = {degree_fit.exponent:.3f} (r² {degree_fit.r_squared:.3f})")
        self.success(f"Formation exponent β = {formation_fit.exponent:.3f} (r² {formation_fit.r_squared:.3f})")
        self.info(f"Results written to {folder}")
