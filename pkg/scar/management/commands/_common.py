from contextlib import contextmanager

from django.conf import settings
from django.core.management.base import CommandError

from scar.utils.exceptions import ScarError, ScenarioError
from scar.utils.scenario import read_config, with_users

# exit codes
VALIDATION_ERROR = 1
RUNTIME_ERROR = 2


@contextmanager
def engine_errors():
    """Maps engine errors onto command exit codes."""
    try:
        yield
    except ScenarioError as exc:
        raise CommandError(str(exc), returncode=VALIDATION_ERROR)
    except ScarError as exc:
        raise CommandError(str(exc), returncode=RUNTIME_ERROR)


def add_scenario_arguments(parser):
    parser.add_argument(
        "--scenario", default=None,
        help="Scenario JSON file (default: the shipped six-agent scenario).",
    )
    parser.add_argument(
        "--users", type=int, default=None,
        help="Keep only the first N user agents of the scenario.",
    )


def scenario_path(options):
    return options.get("scenario") or settings.SCAR["DEFAULT_SCENARIO"]


def load_scenario(options):
    config = read_config(scenario_path(options))
    if options.get("users"):
        config = with_users(config, options["users"])
    return config
