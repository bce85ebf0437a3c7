import itertools

import numpy as np
from django.test import SimpleTestCase

from scar.models import DEPOT, Task, parse_schedule, schedule_label
from scar.utils.exceptions import NetworkError, ScenarioError, flatten_errors
from scar.utils.network import build_network, distance, travel_time
from scar.utils.scenario import (
    default_config, dump_config, load_config, load_state, parse_config, with_users,
)

from .factories import THREE_USERS, make_config, scenario_doc


class DefaultScenarioTests(SimpleTestCase):

    def setUp(self):
        self.config = default_config()

    def test_shipped_scenario_loads(self):
        self.assertEqual(self.config.n, 6)
        self.assertEqual(self.config.replenisher.capacity, 5000)
        self.assertEqual(self.config.replenisher.threshold, 250)
        self.assertEqual([u.capacity for u in self.config.users], [1000, 1200, 700, 1200, 1000, 800])
        self.assertEqual(self.config.sim_duration, 18000)

    def test_omitted_weights_are_equal(self):
        for weight in self.config.weights:
            self.assertAlmostEqual(weight, 1 / 6, places=12)

    def test_road_distances(self):
        network = self.config.network
        # every road meets at the junction
        self.assertEqual(distance(network, "u0", "u1"), 1495)
        self.assertEqual(distance(network, "depot", "u2"), 1490)
        self.assertEqual(distance(network, "u0", "u3"), 1490)
        self.assertEqual(distance(network, "u4", "u5"), 1495)
        self.assertAlmostEqual(travel_time(network, "depot", "u4", 15), 1490 / 15)

    def test_every_leg_is_within_the_layout_range(self):
        network = self.config.network
        sites = ["depot"] + [user.location for user in self.config.users]
        for a, b in itertools.combinations(sites, 2):
            with self.subTest(a=a, b=b):
                self.assertTrue(200 <= distance(network, a, b) <= 1500)

    def test_with_users_renormalizes(self):
        config = with_users(self.config, 4)
        self.assertEqual(config.n, 4)
        self.assertEqual(config.weights, (0.25, 0.25, 0.25, 0.25))
        with self.assertRaises(ScenarioError):
            with_users(self.config, 7)

    def test_dump_and_reload(self):
        again = load_config(dump_config(self.config))
        for user, original in zip(again.users, self.config.users):
            self.assertEqual(user.capacity, original.capacity)
            self.assertEqual(user.usage_rate, original.usage_rate)
            self.assertEqual(user.location, original.location)
            self.assertAlmostEqual(user.weight, original.weight, places=9)
        self.assertEqual(again.replenisher, self.config.replenisher)
        self.assertEqual(again.depot, self.config.depot)
        self.assertEqual(again.network.distances, self.config.network.distances)


class ScenarioValidationTests(SimpleTestCase):

    def assertFieldError(self, doc, path):
        with self.assertRaises(ScenarioError) as ctx:
            parse_config(doc)
        self.assertIn(path, ctx.exception.fields)

    def test_nonpositive_capacity(self):
        doc = scenario_doc(users=THREE_USERS)
        doc["users"][2]["capacity"] = 0
        self.assertFieldError(doc, "users[2].capacity")

    def test_negative_std_dev(self):
        doc = scenario_doc()
        doc["replenisher"]["speed"]["std_dev"] = -1
        self.assertFieldError(doc, "replenisher.speed.std_dev")

    def test_replenish_rate_must_outpace_usage(self):
        doc = scenario_doc(rate=(0.4, 0.0))
        self.assertFieldError(doc, "replenisher.replenish_rate")

    def test_partial_weights_rejected(self):
        doc = scenario_doc(users=THREE_USERS)
        doc["users"][0]["weight"] = 2
        self.assertFieldError(doc, "users")

    def test_weights_are_normalized(self):
        config = make_config(users=THREE_USERS, weights=[2, 1, 1])
        self.assertEqual(config.weights, (0.5, 0.25, 0.25))

    def test_threshold_fraction_range(self):
        self.assertFieldError(scenario_doc(threshold=1.5), "replenisher.depot_threshold_fraction")

    def test_unknown_location(self):
        doc = scenario_doc()
        doc["users"][0]["location"] = "nowhere"
        self.assertFieldError(doc, "network.nodes")

    def test_disconnected_network(self):
        doc = scenario_doc(users=THREE_USERS)
        doc["network"]["edges"] = doc["network"]["edges"][:2]
        self.assertFieldError(doc, "network.edges")

    def test_malformed_json(self):
        with self.assertRaises(ScenarioError):
            load_config('{"users": [')

    def test_document_must_be_an_object(self):
        with self.assertRaises(ScenarioError):
            parse_config([1, 2, 3])


class NetworkTests(SimpleTestCase):

    def test_shortest_parallel_road_kept(self):
        network = build_network({"a": [0, 0], "b": [1, 0]}, [["a", "b", 50], ["a", "b", 30]])
        self.assertEqual(distance(network, "a", "b"), 30)

    def test_unknown_node(self):
        network = build_network({"a": [0, 0], "b": [1, 0]}, [["a", "b", 50]])
        with self.assertRaises(NetworkError):
            distance(network, "a", "c")

    def test_unreachable_pair(self):
        network = build_network({"a": [0, 0], "b": [1, 0], "c": [2, 0]}, [["a", "b", 50]])
        with self.assertRaises(NetworkError):
            distance(network, "a", "c")

    def test_nonpositive_length(self):
        with self.assertRaises(ScenarioError):
            build_network({"a": [0, 0], "b": [1, 0]}, [["a", "b", 0]])

    def test_travel_times_are_symmetric_and_obey_the_triangle_inequality(self):
        rng = np.random.default_rng(11)
        names = [f"n{i}" for i in range(8)]
        nodes = {name: rng.uniform(0, 1000, 2).tolist() for name in names}
        # a ring keeps the graph connected, chords add shortcuts
        edges = [[a, b, float(rng.uniform(200, 1500))] for a, b in zip(names, names[1:] + names[:1])]
        edges += [[names[i], names[j], float(rng.uniform(200, 1500))] for i, j in ((0, 4), (2, 6), (1, 5))]
        network = build_network(nodes, edges, required=names)
        for a, b in itertools.permutations(names, 2):
            self.assertAlmostEqual(travel_time(network, a, b, 15), travel_time(network, b, a, 15), places=9)
            for c in names:
                self.assertLessEqual(
                    travel_time(network, a, c, 15),
                    travel_time(network, a, b, 15) + travel_time(network, b, c, 15) + 1e-9,
                )
        self.assertEqual(travel_time(network, "n3", "n3", 15), 0.0)

    def test_speed_must_be_positive(self):
        network = build_network({"a": [0, 0], "b": [1, 0]}, [["a", "b", 50]])
        with self.assertRaises(NetworkError):
            travel_time(network, "a", "b", 0)


class FleetStateTests(SimpleTestCase):

    def setUp(self):
        self.config = make_config(users=THREE_USERS)

    def test_state_document(self):
        state = load_state(
            '{"clock_s": 12, "user_levels": [100, 200, 300], "replenisher_level": 4000}',
            self.config,
        )
        self.assertEqual(state.clock, 12)
        self.assertEqual(state.user_levels, (100, 200, 300))
        self.assertEqual(state.replenisher_location, "depot")

    def test_level_count_must_match(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_state('{"user_levels": [100], "replenisher_level": 10}', self.config)
        self.assertIn("user_levels", ctx.exception.fields)

    def test_level_above_capacity(self):
        with self.assertRaises(ScenarioError):
            load_state('{"user_levels": [100, 900, 300], "replenisher_level": 10}', self.config)

    def test_replenisher_above_capacity(self):
        with self.assertRaises(ScenarioError) as ctx:
            load_state('{"user_levels": [1, 2, 3], "replenisher_level": 6000}', self.config)
        self.assertIn("replenisher_level", ctx.exception.fields)


class ScheduleTokenTests(SimpleTestCase):

    def test_parse_and_label(self):
        schedule = parse_schedule("(0,2,r)")
        self.assertEqual(schedule, (Task(0), Task(2), DEPOT))
        self.assertEqual(schedule_label(schedule), "(0,2,r)")

    def test_depot_sorts_after_users(self):
        self.assertLess(Task(5).sort_key, DEPOT.sort_key)

    def test_invalid_token(self):
        with self.assertRaises(ValueError):
            Task.parse("x")


class ErrorPathTests(SimpleTestCase):

    def test_list_errors(self):
        errors = {"users": [{}, {}, {"capacity": ["Capacity must be positive."]}]}
        self.assertEqual(flatten_errors(errors), {"users[2].capacity": ["Capacity must be positive."]})

    def test_list_errors_keyed_by_index(self):
        errors = {"users": {2: {"capacity": ["Capacity must be positive."]}}}
        self.assertEqual(flatten_errors(errors), {"users[2].capacity": ["Capacity must be positive."]})

    def test_nested_fields(self):
        errors = {"replenisher": {"speed": {"std_dev": ["Must be non-negative."]}}}
        self.assertEqual(
            flatten_errors(errors), {"replenisher.speed.std_dev": ["Must be non-negative."]}
        )
