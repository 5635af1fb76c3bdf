import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Type

from django import forms
from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import (
    BaseCommand as DjangoBaseCommand,
    CommandError,
    CommandParser,
)

from ..conf import worker_count
from ..forms import collapse_errors


logger = logging.getLogger(__name__)


def existing_file_type(string: str) -> Path:
    """
    An `argparse` type to convert string to a `Path` object.

    Raises `argparse.ArgumentTypeError` if path is not an existing file.
    """
    path = Path(string).expanduser().resolve()
    if not path.exists():
        raise argparse.ArgumentTypeError(f"File does not exist: {path}")
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"Path is not a file: {path}")
    return path


class CommandBase(DjangoBaseCommand):
    """
    Add a few niceties to Django's command base class.
    """
    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            '--threads', type=int, metavar='COUNT',
            help=(
                "size of worker pool. Defaults to $OSN_THREADS, then the "
                "OSN_THREADS setting, then the number of processors"
            ),
        )
        super().add_arguments(parser)

    def execute(self, *args: Any, **options: Any) -> Any:
        self.force_logging(options['verbosity'])
        return super().execute(*args, **options)

    def force_logging(self, verbosity: int) -> None:
        """
        Force a basic logging setup and level globally.

        verbosity:
            A value from zero to three, set from Django's parent class.
            Defaults to 1.
        """
        if verbosity == 0:
            level = logging.ERROR
        elif verbosity == 1:
            level = logging.WARNING
        elif verbosity == 2:
            level = logging.INFO
        else:
            level = logging.DEBUG

        logging.basicConfig(
            level=level,
            format="%(levelname)-7s %(message)s",
            force=True,
        )

    def threads(self, options: Dict[str, Any]) -> int:
        try:
            return worker_count(options.get('threads'))
        except ImproperlyConfigured as e:
            raise CommandError(str(e)) from None

    def validate(
        self,
        form_class: Type[forms.Form],
        data: Any,
        template: str = "--{}",
    ) -> Dict[str, Any]:
        """
        Bind data to form, returning cleaned data or raising `CommandError`.

        The error names every offending parameter, one per line.
        """
        form = form_class(data)
        if not form.is_valid():
            lines = collapse_errors(form.errors, template)
            raise CommandError("Invalid parameters:\n  " + "\n  ".join(lines))
        self.form = form
        return form.cleaned_data

    # Printing #############################################
    def info(self, string: str) -> None:
        self.stdout.write(string)

    def notice(self, string: str) -> None:
        self.stdout.write(self.style.NOTICE(string))

    def success(self, string: str) -> None:
        self.stdout.write(self.style.SUCCESS(string))

    def error(self, string: str) -> None:
        self.stdout.write(self.style.ERROR(string))
