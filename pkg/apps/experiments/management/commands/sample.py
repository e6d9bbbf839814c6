from pathlib import Path

from apps.core.commands import TmulaCommand
from apps.core.exceptions import ConfigError
from apps.experiments.services import ExperimentService
from apps.samplers.config import MAP_SCHEMES


class Command(TmulaCommand):
    help = "Run the sampler entries of an experiment config and write the chains as CSV"

    def add_command_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Experiment config JSON with a 'runs' list")
        parser.add_argument("--out", required=True, help="Output directory; chains go to <out>/chains")
        parser.add_argument("--map", default=None, help="Map file used by every scheme that needs a map")

    def run(self, **options):
        config_path = Path(options["config"]).resolve()
        config = self.read_json(config_path)
        if options["seed"] is not None:
            config["seed"] = options["seed"]
        if options["map"]:
            map_path = str(Path(options["map"]).resolve())
            for entry in config.get("runs", []):
                if entry.get("scheme") in MAP_SCHEMES:
                    entry["map"] = map_path
        config["write_chains"] = True

        service = ExperimentService(config, options["out"], options["jobs"], base_dir=config_path.parent)
        if not service.config["runs"]:
            raise ConfigError(f"{config_path} has no runs to sample")
        service.write_config()
        service.prepare_maps()
        chains = service.sample()
        n_diverged = sum(chain.diverged for chain in chains)
        if n_diverged:
            self.stdout.write(self.style.WARNING(f"{n_diverged} of {len(chains)} chains diverged"))
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(chains)} chains to {service.output_dir / 'chains'}"))
