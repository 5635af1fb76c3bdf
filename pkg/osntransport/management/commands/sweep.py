import json
from pathlib import Path
from typing import Any

from django.core.management.base import CommandError, CommandParser

from ...experiments import run_sweep, SweepError
from ...forms import SweepPlanForm
from ..base import CommandBase, existing_file_type


class Command(CommandBase):
    help = "Run a sweep plan over network sizes, then fit and judge the scaling exponent"

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            'plan', metavar='PLAN', type=existing_file_type,
            help="sweep plan, a JSON object. See docs/schemas.md",
        )
        parser.add_argument(
            '--output', type=Path, metavar='FOLDER', required=True,
            help="folder for trials.csv, summary.csv and report.json, created if missing",
        )
        super().add_arguments(parser)

    def handle(self, *args: Any, **options: Any) -> None:
        path = options['plan']
        try:
            with open(path, 'rt', encoding='utf-8') as fp:
                data = json.load(fp)
        except json.JSONDecodeError as e:
            raise CommandError(f"{path}: not valid JSON: {e}") from None

        self.validate(SweepPlanForm, data, template="$.{}")
        plan = self.form.plan()
        workers = self.threads(options)
        try:
            result = run_sweep(plan, threads=workers, output_folder=options['output'])
        except SweepError as e:
            raise CommandError(str(e)) from None

        report = result.report
        self.info(
            f"{plan.measurement}: exponent {report.exponent:.4f} "
            f"[{report.ci_low:.4f}, {report.ci_high:.4f}] at {report.confidence:.0%}"
        )
        if report.verdict is None:
            self.notice("No prediction to judge against")
        elif report.verdict:
            self.success(f"Consistent with {report.predicted} ({report.source})")
        else:
            self.error(f"Inconsistent with {report.predicted} ({report.source})")
        self.info(f"Results written to {options['output']}")
