import itertools

from django.test import SimpleTestCase

from scar.models import DEPOT, ObjectiveKind, Task
from scar.utils.exceptions import SearchError
from scar.utils.objectives import cost_of, evaluate
from scar.utils.prediction import RolloutCursor
from scar.utils.scenario import default_config, with_users
from scar.utils.search import (
    astar_schedule, brute_force_schedule, build_max_time_table, child_node, heuristic,
    max_task_duration, root_node, successors,
)

from .factories import ONE_USER, THREE_USERS, make_config, make_state, random_states


class MaxTimeTableTests(SimpleTestCase):

    def setUp(self):
        self.config = default_config()

    def test_depot_to_user(self):
        # 1490 m at 15 m/s, 60 s set-up, 700 L at 9.7 L/s, 20 s pack-up
        expected = 1490 / 15 + 60 + 700 / 9.7 + 20
        self.assertAlmostEqual(max_task_duration(self.config, DEPOT, Task(2)), expected, places=9)

    def test_user_to_depot(self):
        expected = 1490 / 15 + 30 + 5000 / 20 + 10
        self.assertAlmostEqual(max_task_duration(self.config, Task(0), DEPOT), expected, places=9)

    def test_same_task_rejected(self):
        with self.assertRaises(SearchError):
            max_task_duration(self.config, Task(1), Task(1))

    def test_strictly_positive(self):
        config = make_config(users=((1000, 0.5, 0.0, 0),), setup=(0, 0), packup=(0, 0))
        self.assertGreater(max_task_duration(config, DEPOT, Task(0)), 0)

    def test_base_case_and_first_step(self):
        table = build_max_time_table(self.config, 3)
        for prev in self.config.tasks:
            self.assertEqual(table.max_remaining(self.config, prev, 0), 0.0)
            expected = max(
                max_task_duration(self.config, prev, task)
                for task in self.config.tasks if task != prev
            )
            self.assertAlmostEqual(table.max_remaining(self.config, prev, 1), expected, places=9)

    def test_monotone_in_remaining_tasks(self):
        table = build_max_time_table(self.config, 6)
        for prev in self.config.tasks:
            values = [table.max_remaining(self.config, prev, k) for k in range(7)]
            self.assertEqual(values, sorted(values))

    def test_bound_is_tight_over_enumeration(self):
        config = make_config(users=THREE_USERS)
        table = build_max_time_table(config, 4)
        for prev in config.tasks:
            worst = 0.0
            for suffix in itertools.product(config.tasks, repeat=4):
                chain = (prev,) + suffix
                if any(a == b for a, b in zip(chain, chain[1:])):
                    continue
                worst = max(worst, sum(max_task_duration(config, a, b) for a, b in zip(chain, chain[1:])))
            self.assertAlmostEqual(table.max_remaining(config, prev, 4), worst, places=9)

    def test_horizon_must_be_positive(self):
        with self.assertRaises(SearchError):
            build_max_time_table(self.config, 0)


class HeuristicTests(SimpleTestCase):

    def setUp(self):
        self.config = make_config(users=THREE_USERS)
        self.state = make_state(self.config, [0, 100, 50], stock=4000)
        self.table = build_max_time_table(self.config, 3)

    def test_root_is_zero(self):
        state = make_state(self.config, [500, 500, 500])
        for kind in ObjectiveKind:
            node = root_node(self.config, state, kind)
            self.assertEqual(heuristic(node, kind, self.table, 3), 0.0)

    def test_leaf_is_the_schedule_cost(self):
        for kind in ObjectiveKind:
            node = root_node(self.config, self.state, kind)
            for task in (Task(0), DEPOT, Task(2)):
                node = child_node(node, task, kind, self.table, 3)
            cost = evaluate(kind, self.config, self.state, (Task(0), DEPOT, Task(2)))
            self.assertAlmostEqual(node.f_value, cost.value, places=12)

    def test_forced_depot_successors(self):
        cursor = RolloutCursor.start(self.config, make_state(self.config, [0, 0, 0], stock=200))
        self.assertEqual(successors(self.config, cursor), [DEPOT])

    def test_no_repeat_successors(self):
        cursor = RolloutCursor.start(self.config, self.state).advance(Task(1))
        self.assertNotIn(Task(1), successors(self.config, cursor))
        self.assertEqual(len(successors(self.config, cursor)), 3)

    def test_forced_depot_outranks_the_no_repeat_rule(self):
        state = make_state(self.config, [0, 0, 0], stock=100)
        cursor = RolloutCursor.start(self.config, state, last_task=DEPOT)
        self.assertEqual(successors(self.config, cursor), [DEPOT])


class SearchOracleTests(SimpleTestCase):
    """Three users, horizon 4: A* against exhaustive enumeration on seeded states."""

    h = 4

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = make_config(users=THREE_USERS)
        cls.table = build_max_time_table(cls.config, cls.h)
        cls.states = random_states(cls.config, 20, seed=11)

    def test_astar_matches_brute_force(self):
        for kind in ObjectiveKind:
            for index, state in enumerate(self.states):
                with self.subTest(kind=kind.value, state=index):
                    found = astar_schedule(self.config, state, self.h, kind, self.table)
                    oracle = brute_force_schedule(self.config, state, self.h, kind)
                    self.assertEqual(len(found.schedule), self.h)
                    self.assertAlmostEqual(found.cost.value, oracle.cost.value, delta=1e-9)
                    self.assertAlmostEqual(
                        found.cost.value,
                        evaluate(kind, self.config, state, found.schedule).value,
                        delta=1e-9,
                    )
                    self.assertEqual(found.admissibility_violations, 0)
                    self.assertLessEqual(found.nodes_expanded, oracle.evaluated)
                    self.assertFalse(any(
                        a == b for a, b in zip(found.schedule, found.schedule[1:])
                    ))

    def _min_completion(self, node, kind, violations):
        """Cheapest completion below `node`; counts nodes whose f exceeds it."""
        if node.depth == self.h:
            best = cost_of(kind, node.cursor.prediction(), self.config).value
        else:
            best = min(
                self._min_completion(child_node(node, task, kind, self.table, self.h), kind, violations)
                for task in successors(self.config, node.cursor)
            )
        if node.f_value > best + 1e-12 * max(1.0, best):
            violations.append((node.partial_schedule, node.f_value, best))
        return best

    def test_heuristic_never_overestimates(self):
        for kind in ObjectiveKind:
            for index, state in enumerate(self.states[:5]):
                with self.subTest(kind=kind.value, state=index):
                    root = root_node(self.config, state, kind)
                    violations = []
                    self._min_completion(root, kind, violations)
                    self.assertEqual(violations, [])


class SearchRuleTests(SimpleTestCase):

    def test_low_replenisher_goes_to_depot_first(self):
        config = default_config()
        state = make_state(config, [600, 900, 400, 1100, 700, 500], stock=200)
        for kind in ObjectiveKind:
            with self.subTest(kind=kind.value):
                self.assertEqual(astar_schedule(config, state, 3, kind).schedule[0], DEPOT)

    def test_single_user_never_repeats(self):
        config = make_config(users=ONE_USER)
        state = make_state(config, [100])
        for kind in ObjectiveKind:
            schedule = astar_schedule(config, state, 2, kind).schedule
            self.assertEqual(schedule, (Task(0), DEPOT))

    def test_last_executed_task_is_not_repeated(self):
        config = make_config(users=THREE_USERS)
        state = make_state(config, [1000, 800, 600])
        result = astar_schedule(config, state, 2, ObjectiveKind.DT, last_task=Task(0))
        self.assertNotEqual(result.schedule[0], Task(0))

    def test_depot_is_revisited_when_still_forced(self):
        config = make_config(users=THREE_USERS)
        state = make_state(config, [300, 200, 100], stock=100)
        for kind in ObjectiveKind:
            with self.subTest(kind=kind.value):
                result = astar_schedule(config, state, 3, kind, last_task=DEPOT)
                self.assertEqual(result.schedule[0], DEPOT)
                self.assertNotEqual(result.schedule[1], DEPOT)
        brute = brute_force_schedule(config, state, 2, ObjectiveKind.DT, last_task=DEPOT)
        self.assertEqual(brute.schedule[0], DEPOT)

    def test_ties_break_in_task_order(self):
        # nobody can run dry within two tasks: every schedule costs zero
        config = make_config(users=THREE_USERS)
        state = make_state(config, [1000, 800, 600])
        result = astar_schedule(config, state, 2, ObjectiveKind.DT)
        self.assertEqual(result.cost.value, 0.0)
        self.assertEqual(result.schedule, (Task(0), Task(1)))

    def test_horizon_must_be_positive(self):
        config = make_config()
        with self.assertRaises(SearchError):
            astar_schedule(config, make_state(config, [10]), 0, ObjectiveKind.DT)

    def test_brute_force_small_case(self):
        config = make_config(users=THREE_USERS[:2])
        state = make_state(config, [10, 20])
        result = brute_force_schedule(config, state, 1, ObjectiveKind.DT)
        self.assertEqual(result.evaluated, 3)
        # a 40 s depot stop beats either 200 s replenishment over one task
        self.assertEqual(result.schedule, (DEPOT,))
        self.assertAlmostEqual(result.cost.value, 0.5 * 20)

    def test_brute_force_respects_forced_depot(self):
        config = make_config(users=THREE_USERS)
        state = make_state(config, [10, 20, 30], stock=100)
        result = brute_force_schedule(config, state, 3, ObjectiveKind.SR)
        self.assertEqual(result.schedule[0], DEPOT)
        self.assertEqual(result.evaluated, 9)

    def test_brute_force_guard(self):
        config = make_config(users=THREE_USERS)
        with self.assertRaises(SearchError):
            brute_force_schedule(config, make_state(config, [1, 2, 3]), 10, ObjectiveKind.DT)

    def test_four_user_search_is_repeatable(self):
        config = with_users(default_config(), 4)
        state = make_state(config, [200, 300, 100, 700], stock=2500, location="u1")
        first = astar_schedule(config, state, 5, ObjectiveKind.SR)
        second = astar_schedule(config, state, 5, ObjectiveKind.SR)
        self.assertEqual(first, second)
