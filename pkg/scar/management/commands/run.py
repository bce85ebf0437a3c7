from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from scar.models import ExperimentPlan, ObjectiveKind
from scar.utils.exceptions import ExperimentInterrupted
from scar.utils.experiment import emit_results, run_experiment

from ._common import RUNTIME_ERROR, add_scenario_arguments, engine_errors, load_scenario, scenario_path


class Command(BaseCommand):
    help = "Run the objective x horizon x seed simulation study and write the results."

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument(
            "--objective", nargs="+", choices=ObjectiveKind.values, default=ObjectiveKind.values,
        )
        parser.add_argument(
            "--horizon", nargs="+", type=int, default=None,
            help="Schedule horizons (default depends on the number of users).",
        )
        parser.add_argument("--repeats", type=int, default=settings.SCAR["DEFAULT_REPEATS"])
        parser.add_argument("--seed", type=int, default=0, help="Seed of the first run.")
        parser.add_argument(
            "--duration-s", type=int, default=None,
            help="Simulated seconds per run (default: the scenario's sim_duration_s).",
        )
        parser.add_argument("--out", default="results", help="Output directory.")
        parser.add_argument("--format", nargs="+", choices=["csv", "json"], default=["csv", "json"])
        parser.add_argument("--workers", type=int, default=settings.SCAR["WORKERS"])

    def handle(self, *args, **options):
        with engine_errors():
            config = load_scenario(options)
            horizons = options["horizon"] or settings.SCAR["DEFAULT_HORIZONS"].get(config.n)
            if not horizons:
                raise CommandError(
                    f"No default horizons for {config.n} users; pass --horizon",
                    returncode=RUNTIME_ERROR,
                )
            plan = ExperimentPlan(
                scenario=scenario_path(options),
                kinds=tuple(ObjectiveKind(kind) for kind in options["objective"]),
                horizons=tuple(horizons),
                repeats=options["repeats"],
                base_seed=options["seed"],
                sim_duration=options["duration_s"] or config.sim_duration,
                users=options["users"],
                workers=options["workers"],
            )
            try:
                results = run_experiment(plan)
            except ExperimentInterrupted as exc:
                # flush what finished before failing
                if exc.results.rows:
                    for fmt in options["format"]:
                        emit_results(exc.results, fmt, options["out"])
                raise

            for fmt in options["format"]:
                path = emit_results(results, fmt, options["out"])
                self.stdout.write(f"wrote {path}")

        for result in results.aggregates:
            self.stdout.write(
                f"{result.objective} h={result.horizon}: median {result.median:.2f}% "
                f"[{result.q1:.2f}, {result.q3:.2f}], full uptime {result.full_uptime_percent:.1f}%"
            )
