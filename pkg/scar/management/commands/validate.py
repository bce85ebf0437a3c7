from django.core.management.base import BaseCommand

from scar.utils.scenario import read_config

from ._common import engine_errors, scenario_path


class Command(BaseCommand):
    help = "Schema-check scenario files; exits with 1 on the first invalid one."

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs="*", help="Scenario files (default: the shipped scenario).")

    def handle(self, *args, **options):
        paths = options["paths"] or [scenario_path({})]
        for path in paths:
            with engine_errors():
                config = read_config(path)
            rep = config.replenisher
            self.stdout.write(self.style.SUCCESS(
                f"{path}: OK ({config.n} users, replenisher {rep.capacity:g} L, "
                f"{len(config.network.nodes)} nodes, {config.sim_duration:g} s)"
            ))
