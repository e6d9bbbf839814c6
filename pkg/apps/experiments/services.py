"""
Experiment orchestration: trains or loads maps, runs the configured chains, diagnoses them,
runs the bias and MSE studies, and writes a reproducible output directory.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.core.exceptions import ConfigError, InvalidParameterError, NumericsError
from apps.core.serializers import validate_document
from apps.core.utils import json_compatible, resolve_jobs, sha256_file, tmula_setting, write_float_csv
from apps.diagnostics.functionals import get_test_function
from apps.diagnostics.plots import scatter_plot
from apps.diagnostics.report import DiagnosticsReport
from apps.diagnostics.services import DiagnosticsService, thin, write_report_plots
from apps.diagnostics.studies import bias_sweep, mse_study
from apps.map_learning.services import MapTrainingService, MapTrainingSpec, load_samples
from apps.samplers.config import SamplerConfig
from apps.samplers.runner import run_ensemble, write_chains
from apps.samplers.services import initial_points, sampler_config_from_document
from apps.targets.registry import build_target
from apps.transport.pushforward import pushforward_log_density
from apps.transport.serialization import load_map, save_map

from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
REPORT_FILE = "report.json"
MANIFEST_FILE = "MANIFEST"
TRUTH_SAMPLES = 10**6
MSE_CHECKPOINTS = 8
RUN_FIELDS = ("n_steps", "n_chains")


def load_config(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"Could not read config {path}: {err}") from err


def resolve_config(document):
    """Validate an experiment document and return it with every default filled in."""
    return json_compatible(dict(validate_document(ExperimentConfigSerializer, document)))


def write_manifest(directory):
    """``sha256  relative/path`` for every file under ``directory`` except the manifest itself."""
    directory = Path(directory)
    lines = [
        f"{sha256_file(path)}  {path.relative_to(directory).as_posix()}"
        for path in sorted(directory.rglob("*"))
        if path.is_file() and path.name != MANIFEST_FILE
    ]
    manifest = directory / MANIFEST_FILE
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def pushforward_grid(target, transport_map, half_width, grid_points):
    """log eta on a regular grid of the reference square [-half_width, half_width]^2."""
    axis = np.linspace(-half_width, half_width, grid_points)
    xs, ys = np.meshgrid(axis, axis)
    points = np.column_stack([xs.ravel(), ys.ravel()])
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        values = pushforward_log_density(target, transport_map, points)
    return xs, ys, values.reshape(xs.shape)


def separatrix_minimum(target, transport_map, start, end, n_points):
    """Minimum of log eta along the reference segment from S(start) to S(end)."""
    ends = transport_map.forward(np.array([start, end], dtype=float))
    weights = np.linspace(0.0, 1.0, n_points)[:, None]
    segment = (1.0 - weights) * ends[0] + weights * ends[1]
    values = pushforward_log_density(target, transport_map, segment)
    return float(np.min(values)), segment, values


@dataclass
class ExperimentResult:
    output_dir: Path
    report: DiagnosticsReport
    manifest: Path
    n_diverged: int


class ExperimentService:
    """Runs one validated experiment config into its output directory."""

    def __init__(self, config, output_dir=None, jobs=None, base_dir=None):
        self.config = resolve_config(config)
        self.jobs = resolve_jobs(jobs)
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        output_dir = output_dir or self.config.get("output_dir")
        self.output_dir = Path(output_dir) if output_dir else Path(tmula_setting("OUTPUT_ROOT")) / self.config["name"]
        self.target = build_target(self.config["target"])
        self.seeds = [self.config["seed"] + offset for offset in range(self.config["n_seeds"])]
        self.maps = {}
        self.training = {}

    def write_config(self):
        path = self.output_dir / CONFIG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.config, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return path

    def _path(self, value):
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def training_samples(self, name, source):
        seed = source.get("seed", self.config["seed"])
        kind = source["source"]
        if kind == "exact":
            if not self.target.can_sample_exactly:
                raise ConfigError(f"Target '{self.target.name}' has no exact sampler for map '{name}'")
            return self.target.sample_exact(source["n"], seed)
        if kind == "file":
            samples = load_samples(self._path(source["path"]))
            return samples if "n" not in source else samples[: source["n"]]

        config = SamplerConfig("ula", source["h"])
        start = initial_points(self.target, source["n_chains"], seed)
        chains = run_ensemble(
            self.target, config, start, source["n_steps"], seed, range(source["n_chains"]), self.jobs
        )
        burn_in = int(source["burn_in_fraction"] * source["n_steps"])
        kept = [chain.states[burn_in + 1 :] for chain in chains if not chain.diverged]
        if not kept:
            raise NumericsError(f"Every ULA chain generating training samples for map '{name}' diverged")
        if len(kept) < len(chains):
            logger.warning(f"{len(chains) - len(kept)} ULA training chains for map '{name}' diverged")
        return thin(np.concatenate(kept), source["n"])

    def prepare_maps(self):
        for name in sorted(self.config["maps"]):
            source = self.config["maps"][name]
            if source["source"] == "exact":
                if self.target.exact_map is None:
                    raise ConfigError(f"Target '{self.target.name}' has no exact map for map '{name}'")
                self.maps[name] = self.target.exact_map
            elif source["source"] == "file":
                self.maps[name] = load_map(self._path(source["path"]))
            else:
                samples = self.training_samples(name, source["samples"])
                spec = MapTrainingSpec.from_dict(source.get("spec"))
                transport_map, report = MapTrainingService(spec, self.jobs).train_map(samples)
                self.maps[name] = transport_map
                summary = report.to_dict()
                summary.pop("elapsed_seconds")
                self.training[name] = summary
                save_map(transport_map, self.output_dir / "maps" / f"{name}.json")
                write_float_csv(
                    self.output_dir / "maps" / f"{name}_samples.csv",
                    [f"y_{i + 1}" for i in range(samples.shape[1])],
                    samples,
                )
            if self.maps[name].dim != self.target.dim:
                raise ConfigError(f"Map '{name}' has dimension {self.maps[name].dim}, target has {self.target.dim}")
        return self.maps

    def sampler_config(self, entry):
        document = {key: value for key, value in entry.items() if key not in RUN_FIELDS}
        return sampler_config_from_document(document, self.target, self.base_dir, self.maps)

    def sample(self):
        chains = []
        for entry in self.config["runs"]:
            config = self.sampler_config(entry)
            for seed in self.seeds:
                start = initial_points(self.target, entry["n_chains"], seed)
                chains.extend(
                    run_ensemble(
                        self.target, config, start, entry["n_steps"], seed, range(entry["n_chains"]), self.jobs
                    )
                )
        if chains and self.config["write_chains"]:
            write_chains(self.output_dir / "chains", chains)
        return chains

    def diagnose(self, chains):
        options = self.config["diagnostics"]
        metadata = {
            "experiment": self.config["name"],
            "desk_scale": self.config["desk_scale"],
            "scaling": self.config["scaling"],
            "seeds": self.seeds,
        }
        if not chains or not options["enabled"]:
            return DiagnosticsReport(
                metadata={"target": self.target.describe(), "n_chains": len(chains), **metadata}
            )
        service = DiagnosticsService(
            self.target,
            self.config["test_functions"],
            burn_in=options["burn_in"],
            ksd_points=options["ksd_points"],
            ksd=options["ksd"],
            jobs=self.jobs,
        )
        return service.diagnose(chains, metadata)

    def truth(self, phi, truth):
        if truth is not None:
            return truth
        if not self.target.can_sample_exactly:
            raise ConfigError(f"No true value of '{phi.name}' given and target '{self.target.name}' has no exact sampler")
        return float(np.mean(phi(self.target.sample_exact(TRUTH_SAMPLES, self.config["seed"]))))

    def run_bias_sweep(self, report, options):
        phi = get_test_function(options["phi"], self.target.dim)
        truth = options["truth"]
        if options["coupled"] is False or self.target.exact_map is None:
            truth = self.truth(phi, truth)
        for entry in options["schemes"]:
            config = self.sampler_config({**entry, "h": options["step_sizes"][0]})
            for seed in self.seeds:
                sweep = bias_sweep(
                    self.target,
                    config,
                    phi,
                    options["step_sizes"],
                    options["horizon"],
                    seed,
                    truth=truth,
                    n_chains=options["n_chains"],
                    burn_in_fraction=options["burn_in_fraction"],
                    coupled=options["coupled"],
                )
                report.add_bias_sweep(sweep)
                rows = [[row.h, row.n_steps, row.error, row.error_over_h, row.stderr] for row in sweep.rows]
                write_float_csv(
                    self.output_dir / "tables" / f"bias_{sweep.scheme}_{sweep.phi}_seed{seed}.csv",
                    ["h", "n_steps", "error", "error_over_h", "stderr"],
                    rows,
                )
                logger.info(f"lambda_hat for {sweep.scheme} (seed {seed}): {sweep.lambda_hat:.4g}")

    def run_mse_study(self, report, options):
        phi = get_test_function(options["phi"], self.target.dim)
        truth = self.truth(phi, options.get("truth"))
        for entry in self.config["runs"]:
            lengths = options.get("lengths") or sorted(
                {
                    int(length)
                    for length in np.geomspace(options["burn_in"] + 10, entry["n_steps"], MSE_CHECKPOINTS).round()
                }
            )
            tables = mse_study(
                self.target,
                [self.sampler_config(entry)],
                phi,
                truth,
                entry["n_chains"],
                entry["n_steps"],
                self.seeds,
                lengths=[length for length in lengths if length <= entry["n_steps"]],
                burn_in=options["burn_in"],
            )
            report.add_mse_tables(tables)
            for table in tables:
                write_float_csv(
                    self.output_dir / "tables" / f"mse_{table.scheme}_h{table.h:g}_{table.phi}.csv",
                    ["length", "bias", "variance", "mse"],
                    np.column_stack([table.lengths, table.bias, table.variance, table.mse]),
                )

    def min_coordinate(self, chains, options):
        """Per (scheme, h) the minimum of one coordinate over each seed's chains, and whether it crossed the threshold."""
        index = options["coordinate"] - 1
        if index >= self.target.dim:
            raise ConfigError(f"Coordinate {options['coordinate']} exceeds the target dimension {self.target.dim}")
        summary = {}
        for chain in chains:
            key = f"{chain.scheme} h={chain.h:g}"
            finite = chain.states[np.all(np.isfinite(chain.states), axis=1), index]
            value = float(np.min(finite)) if finite.size else float("nan")
            per_seed = summary.setdefault(key, {})
            per_seed[str(chain.seed)] = min(per_seed.get(str(chain.seed), float("inf")), value)
        result = {"coordinate": options["coordinate"], "threshold": options["threshold"], "minima": summary}
        if options["threshold"] is not None:
            result["reached"] = {
                key: {seed: bool(value < options["threshold"]) for seed, value in per_seed.items()}
                for key, per_seed in summary.items()
            }
        return result

    def pushforward(self, options):
        results = {}
        for name in options["maps"]:
            transport_map = self.maps[name]
            xs, ys, values = pushforward_grid(self.target, transport_map, options["half_width"], options["grid_points"])
            directory = self.output_dir / "pushforward"
            write_float_csv(
                directory / f"{name}_grid.csv",
                ["x_1", "x_2", "log_eta"],
                np.column_stack([xs.ravel(), ys.ravel(), values.ravel()]),
            )
            samples = load_samples(self.output_dir / "maps" / f"{name}_samples.csv")
            pushed = transport_map.forward(samples)
            write_float_csv(directory / f"{name}_samples.csv", ["x_1", "x_2"], pushed)
            start, end = options["segment"]
            minimum, segment, segment_values = separatrix_minimum(
                self.target, transport_map, start, end, options["segment_points"]
            )
            write_float_csv(
                directory / f"{name}_segment.csv", ["x_1", "x_2", "log_eta"], np.column_stack([segment, segment_values])
            )
            if self.config["diagnostics"]["plots"]:
                scatter_plot(
                    self.output_dir / "plots" / f"pushforward_{name}.svg",
                    pushed,
                    title=f"Pushforward of the training samples ({name})",
                    xlabel="x_1",
                    ylabel="x_2",
                    grid=(xs, ys, np.where(np.isfinite(values), values, np.nan)),
                )
            results[name] = {"n_samples": int(samples.shape[0]), "separatrix_min_log_density": minimum}
            logger.info(f"Pushforward of map '{name}': minimum log density {minimum:.4f} along the mode segment")
        return results

    def run(self):
        start_time = time.time()
        logger.info(f"Running experiment {self.config['name']} into {self.output_dir}")
        self.write_config()
        self.prepare_maps()
        chains = self.sample()
        report = self.diagnose(chains)
        studies = self.config["studies"]
        if "bias_sweep" in studies:
            self.run_bias_sweep(report, studies["bias_sweep"])
        if "mse" in studies:
            self.run_mse_study(report, studies["mse"])

        analyses = self.config["analyses"]
        if self.training:
            report.extra["training"] = self.training
        if "min_coordinate" in analyses:
            report.extra["min_coordinate"] = self.min_coordinate(chains, analyses["min_coordinate"])
        if "pushforward" in analyses:
            report.extra["pushforward"] = self.pushforward(analyses["pushforward"])

        report.write(self.output_dir / REPORT_FILE)
        for entry in report.ksd:
            if entry["series"]:
                write_float_csv(
                    self.output_dir / "tables" / f"ksd_{entry['scheme']}_h{entry['h']:g}.csv",
                    ["n_points", "ksd"],
                    entry["series"],
                )
        if self.config["diagnostics"]["plots"]:
            write_report_plots(report, self.output_dir / "plots")
        manifest = write_manifest(self.output_dir)
        n_diverged = sum(chain.diverged for chain in chains)
        logger.info(
            f"Experiment {self.config['name']} finished in {time.time() - start_time:.2f}s "
            f"({len(chains)} chains, {n_diverged} diverged)"
        )
        return ExperimentResult(self.output_dir, report, manifest, n_diverged)


def run_experiment(config, output_dir=None, jobs=None, base_dir=None):
    if not isinstance(config, dict):
        raise InvalidParameterError("Experiment config must be a JSON object")
    return ExperimentService(config, output_dir, jobs, base_dir).run()
