import json
from pathlib import Path

from apps.core.commands import TmulaCommand
from apps.core.exceptions import ConfigError
from apps.core.utils import resolve_jobs
from apps.map_learning.rectifiers import RECTIFIERS
from apps.map_learning.services import MapTrainingService, MapTrainingSpec, load_samples
from apps.transport.serialization import save_map


class Command(TmulaCommand):
    help = "Train a monotone triangular map from samples (CSV) and write it as a map file"

    def add_command_arguments(self, parser):
        parser.add_argument("--samples", required=True, help="CSV of samples, one row per point")
        parser.add_argument("--out", required=True, help="Destination map JSON")
        parser.add_argument("--order", type=int, default=2, help="Total order of the Hermite basis")
        parser.add_argument("--rectifier", choices=sorted(RECTIFIERS), default="softplus")
        parser.add_argument("--max-iters", type=int, default=None)
        parser.add_argument("--grad-tol", type=float, default=None)
        parser.add_argument("--no-standardize", action="store_true", help="Train on the raw coordinates")
        parser.add_argument("--report", default=None, help="Optional JSON file for the training report")

    def run(self, **options):
        document = {
            "total_order": options["order"],
            "rectifier": options["rectifier"],
            "standardize": not options["no_standardize"],
        }
        if options["max_iters"] is not None:
            document["max_iters"] = options["max_iters"]
        if options["grad_tol"] is not None:
            document["grad_tol"] = options["grad_tol"]
        spec = MapTrainingSpec.from_dict(document)
        try:
            samples = load_samples(options["samples"])
        except (OSError, ValueError) as err:
            raise ConfigError(f"Could not read samples from {options['samples']}: {err}") from err

        transport_map, report = MapTrainingService(spec, resolve_jobs(options["jobs"])).train_map(samples)
        path = save_map(transport_map, options["out"])
        if options["report"]:
            report_path = Path(options["report"])
            report_path.parent.mkdir(parents=True, exist_ok=True)
            report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        unconverged = [component["index"] for component in report.components if not component["converged"]]
        if unconverged:
            self.stdout.write(self.style.WARNING(f"Components {unconverged} stopped before convergence"))
        self.stdout.write(
            self.style.SUCCESS(
                f"Trained order-{spec.total_order} map on {report.n_samples} samples "
                f"(NLL {report.negative_log_likelihood:.6f}); written to {path}"
            )
        )
