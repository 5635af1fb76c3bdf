from typing import Any

from django.core.management.base import CommandError, CommandParser

from ...complexity import MEASUREMENTS, predicted_order, PredictorError, SOURCE_TABLES
from ...forms import PredictForm
from ...serialisers import dumps
from ...sessions import PATTERNS
from ..base import CommandBase


class Command(CommandBase):
    help = "Print the predicted growth order of a measurement, as JSON"

    def add_arguments(self, parser: CommandParser) -> None:
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
            '--measurement', choices=MEASUREMENTS, default='total-load',
            help="quantity to predict, summed over the network (default: %(default)s)",
        )

    def handle(self, *args: Any, **options: Any) -> None:
        data = self.validate(PredictForm, {
            key: options[key] for key in ('gamma', 'beta', 'phi', 'pattern', 'measurement')
        })
        try:
            order, source = predicted_order(
                data['measurement'], data['pattern'], data['gamma'], data['beta'], data['phi'],
            )
        except PredictorError as e:
            raise CommandError(str(e)) from None
        self.info(dumps({
            **order.as_dict(),
            'exact': {'poly': str(order.poly), 'logpow': str(order.logpow)},
            'source': SOURCE_TABLES[source],
            'predictor': source,
            'order': str(order),
        }))
