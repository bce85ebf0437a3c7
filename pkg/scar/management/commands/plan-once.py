from pathlib import Path

from django.core.management.base import BaseCommand
from rest_framework.renderers import JSONRenderer

from scar.models import ObjectiveKind, schedule_label
from scar.utils.exceptions import ScenarioError
from scar.utils.scenario import load_state
from scar.utils.search import astar_schedule

from ._common import add_scenario_arguments, engine_errors, load_scenario


class Command(BaseCommand):
    help = "Print the A* schedule and its cost for one fleet state."

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument("--state", required=True, help="Fleet state JSON file.")
        parser.add_argument(
            "--objective", choices=ObjectiveKind.values, default=ObjectiveKind.SR.value,
        )
        parser.add_argument("--horizon", type=int, default=5)
        parser.add_argument("--json", action="store_true", help="Print the result as JSON.")

    def handle(self, *args, **options):
        with engine_errors():
            config = load_scenario(options)
            try:
                text = Path(options["state"]).read_bytes()
            except OSError as exc:
                raise ScenarioError(f"Cannot read state {options['state']}: {exc.strerror}")
            state = load_state(text, config)
            result = astar_schedule(config, state, options["horizon"], options["objective"])

        if options["json"]:
            document = {
                "schedule": [str(task) for task in result.schedule],
                "objective": result.cost.kind.value,
                "cost": result.cost.value,
                "nodes_expanded": result.nodes_expanded,
            }
            self.stdout.write(JSONRenderer().render(document).decode("utf-8"))
            return

        self.stdout.write(f"schedule: {schedule_label(result.schedule)}")
        self.stdout.write(f"cost ({result.cost.kind.value}): {result.cost.value:.6g}")
        self.stdout.write(f"nodes expanded: {result.nodes_expanded}")
