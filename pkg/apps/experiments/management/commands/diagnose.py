from pathlib import Path

from apps.core.commands import TmulaCommand
from apps.core.exceptions import ConfigError
from apps.core.utils import resolve_jobs
from apps.diagnostics.services import DEFAULT_KSD_POINTS, DiagnosticsService, write_report_plots
from apps.experiments.services import CONFIG_FILE, resolve_config
from apps.samplers.runner import CHAIN_INDEX_FILE, read_chains
from apps.targets.registry import build_target


def chains_directory(path):
    """The directory holding chains.json: ``path`` itself or its ``chains`` subdirectory."""
    path = Path(path)
    if (path / CHAIN_INDEX_FILE).exists() or not (path / "chains").is_dir():
        return path
    return path / "chains"


class Command(TmulaCommand):
    help = "Compute ergodic estimates, batch-means AVar and KSD for recorded chains"

    def add_command_arguments(self, parser):
        parser.add_argument("--chains", required=True, help="Directory written by 'sample' or 'run_experiment'")
        parser.add_argument("--config", default=None, help="Experiment config naming the target")
        parser.add_argument("--target", default=None, help="Target spec as JSON or a JSON file")
        parser.add_argument("--phi", nargs="+", default=None, help="Test functions, e.g. sum sum_sq coord_1")
        parser.add_argument("--burn-in", type=int, default=None)
        parser.add_argument("--ksd-points", type=int, default=None)
        parser.add_argument("--no-ksd", action="store_true")
        parser.add_argument("--out", default=None, help="report.json destination (default <chains>/report.json)")
        parser.add_argument("--plots", default=None, help="Directory for SVG plots")

    def experiment_config(self, root, options):
        if options["config"]:
            return resolve_config(self.read_json(options["config"]))
        for candidate in (root / CONFIG_FILE, root.parent / CONFIG_FILE):
            if candidate.exists():
                return resolve_config(self.read_json(candidate))
        return None

    def run(self, **options):
        root = Path(options["chains"])
        config = self.experiment_config(root, options)
        if options["target"]:
            target_spec = self.parse_json(options["target"], "--target")
        elif config is not None:
            target_spec = config["target"]
        else:
            raise ConfigError(f"No target given and no {CONFIG_FILE} found next to {root}")
        target = build_target(target_spec)
        defaults = config["diagnostics"] if config else {"burn_in": 0, "ksd_points": DEFAULT_KSD_POINTS, "ksd": True}

        service = DiagnosticsService(
            target,
            options["phi"] or (config["test_functions"] if config else ["sum"]),
            burn_in=defaults["burn_in"] if options["burn_in"] is None else options["burn_in"],
            ksd_points=options["ksd_points"] or defaults["ksd_points"],
            ksd=defaults["ksd"] and not options["no_ksd"],
            jobs=resolve_jobs(options["jobs"]),
        )
        chains = read_chains(chains_directory(root))
        report = service.diagnose(chains, {"chains": str(root)})
        out = Path(options["out"]) if options["out"] else root / "report.json"
        report.write(out)
        if options["plots"]:
            write_report_plots(report, options["plots"])
        for estimate in report.estimates:
            self.stdout.write(
                f"{estimate['scheme']:>10} h={estimate['h']:g} {estimate['phi']}: "
                f"mean {estimate['mean']:.6g} (mcse {estimate['mcse']:.3g}), AVar {estimate['avar']:.4g}"
            )
        self.stdout.write(self.style.SUCCESS(f"Report written to {out}"))
