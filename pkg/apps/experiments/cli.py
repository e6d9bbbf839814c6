"""
``tmula`` console entry point: the project's management commands under their hyphenated names,
e.g. ``tmula train-map --samples s.csv --out map.json``.
"""

import os
import sys

COMMAND_ALIASES = {
    "train-map": "train_map",
    "run-experiment": "run_experiment",
}


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings.development")
    from django.core.management import execute_from_command_line

    if len(argv) > 1:
        argv[1] = COMMAND_ALIASES.get(argv[1], argv[1])
    argv[0] = "tmula"
    execute_from_command_line(argv)


if __name__ == "__main__":
    main()
