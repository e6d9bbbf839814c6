from pathlib import Path

from apps.core.commands import TmulaCommand
from apps.core.exceptions import ConfigError
from apps.experiments.presets import PRESETS, preset_config
from apps.experiments.services import ExperimentService


class Command(TmulaCommand):
    help = "Run a named experiment preset or an experiment config into a reproducible output directory"

    def add_command_arguments(self, parser):
        parser.add_argument("name", nargs="?", help=f"Preset: {', '.join(sorted(PRESETS))}")
        parser.add_argument("--config", default=None, help="Experiment config JSON instead of a preset")
        parser.add_argument("--desk-scale", action="store_true", help="Shortened runs for a single machine")
        parser.add_argument("--out", default=None, help="Output directory (default TMULA_OUTPUT_ROOT/<name>)")
        parser.add_argument("--list", action="store_true", help="List the presets and exit")

    def run(self, **options):
        if options["list"]:
            for name in sorted(PRESETS):
                self.stdout.write(f"{name:<12} {PRESETS[name].__doc__}")
            return
        if bool(options["name"]) == bool(options["config"]):
            raise ConfigError("Give either a preset name or --config")
        base_dir = None
        if options["config"]:
            config_path = Path(options["config"]).resolve()
            config = self.read_json(config_path)
            base_dir = config_path.parent
            if options["desk_scale"]:
                config["desk_scale"] = True
        else:
            config = preset_config(options["name"], desk_scale=options["desk_scale"])
        if options["seed"] is not None:
            config["seed"] = options["seed"]

        result = ExperimentService(config, options["out"], options["jobs"], base_dir).run()
        if result.n_diverged:
            self.stdout.write(self.style.WARNING(f"{result.n_diverged} chains diverged; see report.json"))
        for sweep in result.report.bias_sweeps:
            self.stdout.write(f"lambda_hat {sweep['scheme']} ({sweep['phi']}): {sweep['lambda_hat']}")
        self.stdout.write(self.style.SUCCESS(f"Experiment written to {result.output_dir}"))
