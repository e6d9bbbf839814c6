from django.core.management.base import CommandError

from apps.core.commands import EXIT_FAILED_CHECK, TmulaCommand
from apps.theory_checks.services import SUITES, VerificationService, write_verification_report


class Command(TmulaCommand):
    help = "Check the continuous-time equivalences, the one-step discrepancy law and the rate formula"

    def add_command_arguments(self, parser):
        parser.add_argument("--suite", action="append", choices=SUITES, help="Repeatable; default runs every suite")
        parser.add_argument("--out", default=None, help="Write the verification report as JSON")
        parser.add_argument("--n-points", type=int, default=50, help="Random points per equivalence check")
        parser.add_argument("--n-mc", type=int, default=10**6, help="Monte Carlo draws for the one-step check")

    def run(self, **options):
        service = VerificationService(
            n_points=options["n_points"],
            seed=0 if options["seed"] is None else options["seed"],
            n_mc=options["n_mc"],
        )
        report = service.run(options["suite"] or SUITES)
        if options["out"]:
            write_verification_report(report, options["out"])
        for name, suite in report["suites"].items():
            style = self.style.SUCCESS if suite["passed"] else self.style.ERROR
            failed = [check["name"] for check in suite["checks"] if not check["passed"]]
            self.stdout.write(style(f"{name}: {'passed' if suite['passed'] else 'FAILED ' + ', '.join(failed)}"))
        if not report["passed"]:
            raise CommandError("Verification failed", returncode=EXIT_FAILED_CHECK)
