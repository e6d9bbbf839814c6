import json

import pytest
from hamcrest import assert_that, contains_exactly, equal_to, has_entries, has_length

from apps.core.exceptions import InvalidParameterError
from apps.theory_checks.services import (
    SUITES,
    VerificationService,
    perturbed_triangular_map,
    write_verification_report,
)


@pytest.fixture
def service():
    return VerificationService(n_points=4, seed=0, n_mc=100_000)


class TestVerificationService:
    def test_tmrmld_suite(self, service):
        report = service.run(["tmrmld"])
        suite = report["suites"]["tmrmld"]
        assert suite["passed"], suite
        # three matched pairs, four log det identity maps
        assert_that(suite["checks"], has_length(7))

    def test_giirr_suite(self, service):
        suite = service.run(["giirr"])["suites"]["giirr"]
        assert suite["passed"], suite
        assert_that(suite["checks"], has_length(6))
        for check in suite["checks"]:
            assert check["max_skew_residual"] <= 1e-8

    def test_onestep_suite(self, service):
        suite = service.run(["onestep"])["suites"]["onestep"]
        assert suite["passed"], suite
        assert_that(suite["summary"], has_entries(n_mc=100_000, point=[1.0, 1.2]))

    def test_rate_suite(self, service):
        suite = service.run(["rate"])["suites"]["rate"]
        assert suite["passed"], suite
        assert_that(suite["checks"][0], has_entries(r=0.75, dr_dL=0.0))

    def test_report_shape(self, service):
        report = service.run(["rate"])
        assert_that(report, has_entries(version="1", seed=0, n_points=4, passed=True))
        assert_that(list(report["suites"]), contains_exactly("rate"))

    def test_unknown_suite(self, service):
        with pytest.raises(InvalidParameterError):
            service.run(["nope"])

    def test_invalid_point_count(self):
        with pytest.raises(InvalidParameterError):
            VerificationService(n_points=0)

    def test_suites_are_ordered(self):
        assert_that(SUITES, equal_to(("tmrmld", "giirr", "onestep", "rate")))


def test_perturbed_triangular_map_is_seeded():
    first = perturbed_triangular_map(seed=3)
    second = perturbed_triangular_map(seed=3)
    assert_that(first.to_dict(), equal_to(second.to_dict()))
    assert first.to_dict() != perturbed_triangular_map(seed=4).to_dict()


def test_write_report(service, tmp_path):
    report = service.run(["rate"])
    path = write_verification_report(report, tmp_path / "nested" / "verify.json")
    assert_that(json.loads(path.read_text()), equal_to(report))
