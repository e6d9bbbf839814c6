import json
from io import StringIO

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from hamcrest import assert_that, contains_string, equal_to, has_entries, has_length

from apps.core.commands import EXIT_CONFIG, EXIT_FAILED_CHECK, EXIT_NUMERICS
from apps.core.utils import write_float_csv
from apps.diagnostics.report import DiagnosticsReport
from apps.experiments import cli
from apps.samplers.runner import read_chains
from apps.targets.densities import banana
from apps.transport.maps import AffineMap
from apps.transport.serialization import load_map, save_map
from tests.factories import RunFactory


def run_command(name, *args, **options):
    stdout = StringIO()
    call_command(name, *args, stdout=stdout, **options)
    return stdout.getvalue()


def exit_code(name, *args, **options):
    with pytest.raises(CommandError) as raised:
        run_command(name, *args, **options)
    return raised.value.returncode


class TestSample:
    def test_writes_config_and_chains(self, write_config, tmp_path):
        out = tmp_path / "out"
        output = run_command("sample", config=str(write_config()), out=str(out), seed=8)

        chains = read_chains(out / "chains")
        assert_that(chains, has_length(2))
        assert_that({chain.seed for chain in chains}, equal_to({8}))
        assert_that(json.loads((out / "config.json").read_text()), has_entries(seed=8, write_chains=True))
        assert_that(output, contains_string("Wrote 2 chains"))

    def test_map_flag_applies_to_map_schemes(self, write_config, tmp_path):
        save_map(AffineMap.diagonal([1.0, 0.5]), tmp_path / "scaled.json")
        path = write_config(
            target={"name": "banana"},
            runs=[RunFactory(h=0.01), RunFactory(scheme="tmula", h=0.01, map="identity")],
        )
        run_command("sample", config=str(path), out=str(tmp_path / "out"), map=str(tmp_path / "scaled.json"))

        written = json.loads((tmp_path / "out" / "config.json").read_text())
        assert "map" not in written["runs"][0]
        assert_that(written["runs"][1]["map"], equal_to(str((tmp_path / "scaled.json").resolve())))

    def test_needs_runs(self, write_config, tmp_path):
        assert_that(exit_code("sample", config=str(write_config(runs=[])), out=str(tmp_path)), equal_to(EXIT_CONFIG))

    def test_unreadable_config(self, tmp_path):
        assert_that(exit_code("sample", config=str(tmp_path / "missing.json"), out=str(tmp_path)), equal_to(EXIT_CONFIG))


class TestTrainMap:
    @pytest.fixture
    def samples_csv(self, tmp_path):
        path = tmp_path / "samples.csv"
        write_float_csv(path, ["y_1", "y_2"], banana().sample_exact(400, 1))
        return path

    def test_trains_and_saves(self, samples_csv, tmp_path):
        output = run_command(
            "train_map",
            samples=str(samples_csv),
            out=str(tmp_path / "map.json"),
            order=2,
            report=str(tmp_path / "training.json"),
        )

        transport_map = load_map(tmp_path / "map.json")
        assert_that(transport_map.dim, equal_to(2))
        report = json.loads((tmp_path / "training.json").read_text())
        assert_that(report, has_entries(n_samples=400, dim=2))
        assert_that(report["spec"], has_entries(total_order=2, standardize=True))
        assert_that(output, contains_string("Trained order-2 map on 400 samples"))

    def test_too_few_samples(self, tmp_path):
        path = tmp_path / "few.csv"
        write_float_csv(path, ["y_1", "y_2"], np.random.default_rng(0).normal(size=(5, 2)))
        assert_that(exit_code("train_map", samples=str(path), out=str(tmp_path / "m.json")), equal_to(EXIT_CONFIG))

    def test_missing_samples(self, tmp_path):
        code = exit_code("train_map", samples=str(tmp_path / "none.csv"), out=str(tmp_path / "m.json"))
        assert_that(code, equal_to(EXIT_CONFIG))


class TestDiagnose:
    def test_finds_config_next_to_the_chains(self, write_config, tmp_path):
        out = tmp_path / "out"
        run_command("sample", config=str(write_config()), out=str(out))
        output = run_command("diagnose", chains=str(out), phi=["sum"], ksd_points=50)

        report = DiagnosticsReport.read(out / "report.json")
        assert_that(report.estimates, has_length(1))
        assert_that(report.estimates[0], has_entries(scheme="ula", h=0.1, phi="sum", n_chains=2))
        assert_that(report.ksd[0], has_entries(n_points=50))
        assert_that(output, contains_string("Report written to"))

    def test_explicit_target_and_no_ksd(self, write_config, tmp_path):
        run_command("sample", config=str(write_config()), out=str(tmp_path / "out"))
        chains = tmp_path / "out" / "chains"
        (tmp_path / "out" / "config.json").unlink()
        run_command(
            "diagnose",
            chains=str(chains),
            target='{"name": "standard_normal", "dim": 2}',
            no_ksd=True,
            burn_in=10,
            out=str(tmp_path / "report.json"),
        )

        report = DiagnosticsReport.read(tmp_path / "report.json")
        assert_that(report.ksd, equal_to([]))
        assert_that(report.metadata, has_entries(burn_in=10))

    def test_needs_a_target(self, write_config, tmp_path):
        run_command("sample", config=str(write_config()), out=str(tmp_path / "out"))
        (tmp_path / "out" / "config.json").unlink()
        assert_that(exit_code("diagnose", chains=str(tmp_path / "out")), equal_to(EXIT_CONFIG))


class TestVerify:
    def test_selected_suites_pass(self, tmp_path):
        output = run_command("verify", suite=["tmrmld", "rate"], n_points=4, out=str(tmp_path / "verify.json"))

        report = json.loads((tmp_path / "verify.json").read_text())
        assert_that(report, has_entries(passed=True, n_points=4, seed=0))
        assert_that(sorted(report["suites"]), equal_to(["rate", "tmrmld"]))
        assert_that(output, contains_string("tmrmld: passed"))

    def test_failed_suite_exits_with_one(self, mocker):
        mocker.patch(
            "apps.experiments.management.commands.verify.VerificationService.run",
            return_value={
                "passed": False,
                "suites": {"onestep": {"passed": False, "checks": [{"name": "ratio", "passed": False}]}},
            },
        )
        assert_that(exit_code("verify", suite=["onestep"]), equal_to(EXIT_FAILED_CHECK))


class TestRunExperiment:
    def test_config_file(self, write_config, tmp_path):
        output = run_command("run_experiment", config=str(write_config()), out=str(tmp_path / "out"))
        assert (tmp_path / "out" / "MANIFEST").is_file()
        assert_that(output, contains_string("Experiment written to"))

    def test_list(self):
        output = run_command("run_experiment", list=True)
        for name in ("banana-bias", "funnel", "rosenbrock", "mixture"):
            assert_that(output, contains_string(name))

    @pytest.mark.parametrize("args, options", [((), {}), (("funnel",), {"config": "config.json"}), (("nope",), {})])
    def test_needs_exactly_one_source(self, args, options):
        assert_that(exit_code("run_experiment", *args, **options), equal_to(EXIT_CONFIG))

    def test_invalid_config(self, write_config, tmp_path):
        path = write_config(runs=[RunFactory(scheme="nope")])
        assert_that(exit_code("run_experiment", config=str(path), out=str(tmp_path / "out")), equal_to(EXIT_CONFIG))

    def test_numerical_failure(self, write_config, tmp_path):
        ula = {"source": "ula", "h": 5.0, "n_chains": 2, "n_steps": 100, "n": 50}
        path = write_config(runs=[], maps={"m": {"source": "train", "samples": ula}})
        assert_that(exit_code("run_experiment", config=str(path), out=str(tmp_path / "out")), equal_to(EXIT_NUMERICS))

    def test_divergence_is_not_an_error(self, write_config, tmp_path):
        output = run_command("run_experiment", config=str(write_config(runs=[RunFactory(h=5.0)])), out=str(tmp_path))
        assert_that(output, contains_string("2 chains diverged"))


class TestConsoleEntryPoint:
    @pytest.mark.parametrize(
        "command, expected",
        [("train-map", "train_map"), ("run-experiment", "run_experiment"), ("verify", "verify")],
    )
    def test_hyphenated_names(self, mocker, command, expected):
        execute = mocker.patch("django.core.management.execute_from_command_line")
        cli.main(["whatever", command, "--help"])
        execute.assert_called_once_with(["tmula", expected, "--help"])
