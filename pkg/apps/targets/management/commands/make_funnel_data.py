from django.core.management.base import BaseCommand

from apps.targets.data import FUNNEL_DATA_FILE, FUNNEL_SEED, FUNNEL_SIZE, write_funnel_data


class Command(BaseCommand):
    help = "Write the funnel posterior observations (N(0, 1) draws from a fixed seed) to CSV"

    def add_arguments(self, parser):
        parser.add_argument("--out", default=str(FUNNEL_DATA_FILE), help="Destination CSV file")
        parser.add_argument("--seed", type=int, default=FUNNEL_SEED)
        parser.add_argument("--size", type=int, default=FUNNEL_SIZE)

    def handle(self, *args, **options):
        path = write_funnel_data(options["out"], options["seed"], options["size"])
        self.stdout.write(self.style.SUCCESS(f"Funnel data written to {path}"))
