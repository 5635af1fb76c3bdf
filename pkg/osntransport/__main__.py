"""
Console entry point, eg. `python -m osntransport simulate --n 1024 ...`
"""

import os
import sys
from typing import List, Optional

import django
from django.core.management import execute_from_command_line


ALIASES = {
    'validate-dataset': 'validate_dataset',
}


def main(argv: Optional[List[str]] = None) -> None:
    argv = list(sys.argv if argv is None else argv)
    argv[0] = 'osntransport'
    if len(argv) > 1:
        argv[1] = ALIASES.get(argv[1], argv[1])
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'osntransport.settings')
    django.setup()
    execute_from_command_line(argv)


if __name__ == '__main__':
    main()
