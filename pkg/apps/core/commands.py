"""
Base class for the management commands, with the shared flags and exit codes:
0 success, 1 failed verification, 2 invalid configuration, 3 numerical failure.
"""

import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from .exceptions import ConfigError, InvalidParameterError, NumericsError

logger = logging.getLogger(__name__)

EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


class TmulaCommand(BaseCommand):
    """Adds ``--seed`` and ``--jobs`` and maps library errors to exit codes."""

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config)")
        parser.add_argument(
            "--jobs", type=int, default=None, help="Worker processes; 0 means available parallelism"
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except (ConfigError, InvalidParameterError) as err:
            logger.error(f"{type(err).__name__}: {err}")
            raise CommandError(str(err), returncode=EXIT_CONFIG) from err
        except NumericsError as err:
            logger.error(f"{type(err).__name__}: {err}")
            raise CommandError(str(err), returncode=EXIT_NUMERICS) from err

    def read_json(self, path):
        try:
            with open(path, encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"Could not read {path}: {err}") from err

    def parse_json(self, text, label):
        """Inline JSON or a path to a JSON file."""
        if Path(text).is_file():
            return self.read_json(text)
        try:
            return json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{label} is neither a file nor valid JSON: {err}") from err
