import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from rest_framework.renderers import JSONRenderer

from scar.utils.experiment import run_experiment

from .factories import THREE_USERS, scenario_doc

EXAMPLE_STATE = Path(settings.BASE_DIR) / "scenarios" / "example_state.json"


def run(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


class ValidateCommandTests(SimpleTestCase):

    def test_shipped_scenario(self):
        output = run("validate")
        self.assertIn("OK (6 users", output)

    def test_invalid_file_exits_with_1(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text('{"users": []}')
            with self.assertRaises(CommandError) as ctx:
                run("validate", str(path))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_missing_file_exits_with_1(self):
        with self.assertRaises(CommandError) as ctx:
            run("validate", "/nonexistent/scenario.json")
        self.assertEqual(ctx.exception.returncode, 1)


class PlanOnceCommandTests(SimpleTestCase):

    def test_prints_schedule_and_cost(self):
        output = run("plan-once", "--state", str(EXAMPLE_STATE), "--objective", "st", "--horizon", "3")
        self.assertIn("schedule: (", output)
        self.assertIn("cost (st):", output)
        self.assertIn("nodes expanded:", output)

    def test_json_output(self):
        output = run("plan-once", "--state", str(EXAMPLE_STATE), "--horizon", "2", "--json")
        self.assertIn('"schedule":[', output)
        self.assertIn('"objective":"sr"', output)

    def test_state_for_the_wrong_fleet(self):
        with self.assertRaises(CommandError) as ctx:
            run("plan-once", "--state", str(EXAMPLE_STATE), "--users", "4")
        self.assertEqual(ctx.exception.returncode, 1)


class RunCommandTests(SimpleTestCase):

    def test_small_sweep_writes_results(self):
        with tempfile.TemporaryDirectory() as out:
            output = run(
                "run", "--users", "2", "--objective", "dt", "sr", "--horizon", "2",
                "--repeats", "2", "--duration-s", "600", "--out", out,
            )
            frame = pd.read_csv(Path(out) / "runs.csv")
            self.assertTrue((Path(out) / "aggregates.json").exists())
        self.assertEqual(len(frame), 4)
        self.assertEqual(set(frame["objective"]), {"dt", "sr"})
        self.assertIn("dt h=2: median", output)

    def test_no_default_horizons(self):
        with self.assertRaises(CommandError) as ctx:
            run("run", "--users", "2", "--repeats", "1")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_invalid_repeats_exit_with_2(self):
        with tempfile.TemporaryDirectory() as out:
            with self.assertRaises(CommandError) as ctx:
                run("run", "--users", "2", "--horizon", "2", "--repeats", "0", "--out", out)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_duration_defaults_to_the_scenario(self):
        with tempfile.TemporaryDirectory() as tmp:
            scenario = Path(tmp) / "short.json"
            scenario.write_bytes(JSONRenderer().render(scenario_doc(users=THREE_USERS, sim_duration=300)))
            durations = []
            for extra in ((), ("--duration-s", "200")):
                with mock.patch(
                    "scar.management.commands.run.run_experiment", wraps=run_experiment
                ) as wrapped:
                    run(
                        "run", "--scenario", str(scenario), "--objective", "dt", "--horizon", "2",
                        "--repeats", "1", "--out", tmp, "--format", "csv", *extra,
                    )
                (plan,), _ = wrapped.call_args
                durations.append(plan.sim_duration)
            frame = pd.read_csv(Path(tmp) / "runs.csv")
        self.assertEqual(durations, [300, 200])
        self.assertEqual(list(frame["users"]), [3])
